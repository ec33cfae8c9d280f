//! Trace ingestion: JSON-Lines records to interned trace groups.
//!
//! One record per line:
//!
//! ```text
//! {"id": "t1", "events": ["open", {"name": "mem", "value": 300.0}], "meta": {"os": "14"}}
//! ```
//!
//! Metadata pairs become `key=value` events prepended to the trace in record
//! order. Numeric events are replaced by their bin label.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::discretize::{apply_binning, BinningSpec};
use crate::error::{Error, Result};

/// Interned event: a dense index into a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventToken(pub u32);

impl EventToken {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    lookup: HashMap<String, EventToken>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the token for `label`, assigning the next dense id if unseen.
    pub fn intern(&mut self, label: &str) -> Result<EventToken> {
        if label.is_empty() {
            return Err(Error::EmptyLabel);
        }
        if let Some(&tok) = self.lookup.get(label) {
            return Ok(tok);
        }
        let tok = EventToken(self.entries.len() as u32);
        self.entries.push(label.to_string());
        self.lookup.insert(label.to_string(), tok);
        Ok(tok)
    }

    pub fn get(&self, label: &str) -> Option<EventToken> {
        self.lookup.get(label).copied()
    }

    pub fn label(&self, tok: EventToken) -> &str {
        &self.entries[tok.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub id: String,
    pub events: Vec<EventToken>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupRole {
    Test,
    Control,
}

/// Traces of one role. Token ids refer to a vocabulary shared with the
/// opposite group; the group does not own it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceGroup {
    pub role: GroupRole,
    pub traces: Vec<Trace>,
}

impl TraceGroup {
    pub fn new(role: GroupRole) -> Self {
        Self {
            role,
            traces: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Builds a group from label sequences, interning into `vocab`. Handy for
    /// fixtures; ids must be unique.
    pub fn from_labels<I, S, E, L>(role: GroupRole, vocab: &mut Vocabulary, traces: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, E)>,
        S: Into<String>,
        E: IntoIterator<Item = L>,
        L: AsRef<str>,
    {
        let mut group = TraceGroup::new(role);
        let mut seen = HashSet::new();
        for (id, events) in traces {
            let id = id.into();
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateTraceId(id));
            }
            let events = events
                .into_iter()
                .map(|l| vocab.intern(l.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            group.traces.push(Trace { id, events });
        }
        Ok(group)
    }

    /// Trace ids for a sorted list of trace indices.
    pub fn ids_of<'a>(&'a self, indices: &'a [u32]) -> impl Iterator<Item = &'a str> + 'a {
        indices.iter().map(|&i| self.traces[i as usize].id.as_str())
    }

    /// Serializes back to trace records; every event is written as a plain label.
    pub fn to_records(&self, vocab: &Vocabulary) -> Vec<TraceRecord> {
        self.traces
            .iter()
            .map(|t| TraceRecord {
                id: t.id.clone(),
                events: t
                    .events
                    .iter()
                    .map(|&e| RawEvent::Label(vocab.label(e).to_string()))
                    .collect(),
                meta: None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawEvent {
    Label(String),
    Numeric { name: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub id: String,
    pub events: Vec<RawEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<IndexMap<String, String>>,
}

impl TraceRecord {
    /// Numeric values per feature in this record, in event order.
    pub fn numeric_values(&self) -> impl Iterator<Item = (&str, f64)> {
        self.events.iter().filter_map(|e| match e {
            RawEvent::Numeric { name, value } => Some((name.as_str(), *value)),
            RawEvent::Label(_) => None,
        })
    }
}

/// Parses JSON-Lines trace records. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_records<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
        out.push(record);
    }
    Ok(out)
}

/// Result of ingesting one stream.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub group: TraceGroup,
    /// Records dropped because they carried no events.
    pub rejected: usize,
}

/// Interns `records` into a [`TraceGroup`].
///
/// Numeric events need a spec in `numeric_specs` keyed by feature name.
/// Records whose `events` list is empty are rejected and counted.
pub fn ingest_records(
    records: &[TraceRecord],
    role: GroupRole,
    vocab: &mut Vocabulary,
    numeric_specs: Option<&HashMap<String, BinningSpec>>,
) -> Result<Ingested> {
    let mut group = TraceGroup::new(role);
    let mut seen = HashSet::with_capacity(records.len());
    let mut rejected = 0;
    for record in records {
        if record.events.is_empty() {
            rejected += 1;
            continue;
        }
        if !seen.insert(record.id.as_str()) {
            return Err(Error::DuplicateTraceId(record.id.clone()));
        }
        let meta_len = record.meta.as_ref().map_or(0, IndexMap::len);
        let mut events = Vec::with_capacity(meta_len + record.events.len());
        if let Some(meta) = &record.meta {
            for (k, v) in meta {
                events.push(vocab.intern(&format!("{k}={v}"))?);
            }
        }
        for raw in &record.events {
            let tok = match raw {
                RawEvent::Label(label) => vocab.intern(label)?,
                RawEvent::Numeric { name, value } => {
                    let spec = numeric_specs
                        .and_then(|m| m.get(name))
                        .ok_or_else(|| Error::MissingBinning(name.clone()))?;
                    vocab.intern(&apply_binning(*value, spec)?)?
                }
            };
            events.push(tok);
        }
        group.traces.push(Trace {
            id: record.id.clone(),
            events,
        });
    }
    Ok(Ingested { group, rejected })
}
