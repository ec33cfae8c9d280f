//! Prefix-projected sequential pattern mining.
//!
//! Patterns are grown one event at a time from the empty prefix. Each node of
//! the search tree keeps its projected database: for every trace containing the
//! prefix, the maximal suffix left after the first embedding of the prefix.
//! Support of a child `prefix·e` is the number of projected suffixes that
//! contain `e`, so the search never revisits the full database below the root
//! and a child that misses `min_support` prunes its whole subtree.
//!
//! Projected databases are pseudo-projections: `(trace index, offset)` pairs
//! into the immutable group.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace_store::{EventToken, TraceGroup, Vocabulary};

/// A sequential pattern. Ordering is canonical: shorter first, then
/// lexicographic by token id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Pattern(pub Vec<EventToken>);

impl Pattern {
    pub fn new(events: impl Into<Vec<EventToken>>) -> Self {
        Pattern(events.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn events(&self) -> &[EventToken] {
        &self.0
    }

    pub fn labels<'a>(&self, vocab: &'a Vocabulary) -> Vec<&'a str> {
        self.0.iter().map(|&e| vocab.label(e)).collect()
    }

    /// `self ⊑ seq`: the events occur in `seq` in order, gaps allowed.
    pub fn is_subsequence_of(&self, seq: &[EventToken]) -> bool {
        let mut it = seq.iter();
        self.0.iter().all(|e| it.any(|x| x == e))
    }
}

impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e.0)?;
        }
        write!(f, ")")
    }
}

/// Minimum support, either as an absolute trace count or a fraction of the
/// group size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinSupport {
    Absolute(usize),
    Fraction(f64),
}

impl MinSupport {
    /// Values below 1 are fractions; values from 1 up must be whole counts.
    /// Exactly `1.0` means an absolute count of one trace.
    pub fn from_value(v: f64) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::param("min_support", format!("must be positive, got {v}")));
        }
        if v < 1.0 {
            return Ok(MinSupport::Fraction(v));
        }
        if v.fract() != 0.0 {
            return Err(Error::param(
                "min_support",
                format!("values >= 1 are absolute counts and must be whole, got {v}"),
            ));
        }
        Ok(MinSupport::Absolute(v as usize))
    }

    /// Absolute threshold for a group of `group_size` traces.
    pub fn resolve(self, group_size: usize) -> usize {
        match self {
            MinSupport::Absolute(n) => n.max(1),
            MinSupport::Fraction(f) => ((f * group_size as f64).ceil() as usize).max(1),
        }
    }

    pub fn as_value(self) -> f64 {
        match self {
            MinSupport::Absolute(n) => n as f64,
            MinSupport::Fraction(f) => f,
        }
    }
}

pub const DEFAULT_MAX_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningParams {
    pub min_support: MinSupport,
    pub max_len: usize,
}

impl MiningParams {
    pub fn new(min_support: MinSupport, max_len: usize) -> Result<Self> {
        let p = MiningParams {
            min_support,
            max_len,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len == 0 {
            return Err(Error::param("max_len", "must be at least 1"));
        }
        match self.min_support {
            MinSupport::Absolute(0) => Err(Error::param("min_support", "absolute count must be >= 1")),
            MinSupport::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                Err(Error::param("min_support", format!("fraction must be in (0, 1], got {f}")))
            }
            _ => Ok(()),
        }
    }
}

/// A frequent pattern with the ascending indices of its supporting traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedPattern {
    pub pattern: Pattern,
    pub supporting: Vec<u32>,
}

impl MinedPattern {
    pub fn support(&self) -> usize {
        self.supporting.len()
    }
}

/// One projected suffix: `traces[trace].events[offset..]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectedEntry {
    pub trace: u32,
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedDatabase {
    pub prefix: Pattern,
    pub entries: Vec<ProjectedEntry>,
}

impl ProjectedDatabase {
    /// The database projected on the empty prefix: every trace, whole.
    pub fn root(group: &TraceGroup) -> Self {
        ProjectedDatabase {
            prefix: Pattern::default(),
            entries: (0..group.len() as u32)
                .map(|trace| ProjectedEntry { trace, offset: 0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn suffix<'g>(&self, group: &'g TraceGroup, entry: ProjectedEntry) -> &'g [EventToken] {
        &group.traces[entry.trace as usize].events[entry.offset as usize..]
    }

    /// Number of suffixes containing `pattern` as a subsequence.
    pub fn support_of(&self, group: &TraceGroup, pattern: &Pattern) -> usize {
        self.entries
            .iter()
            .filter(|&&en| pattern.is_subsequence_of(self.suffix(group, en)))
            .count()
    }
}

/// Projects `db` on one more event: each suffix containing `next` is cut just
/// after its first occurrence; the others are dropped.
pub fn project_database(group: &TraceGroup, db: &ProjectedDatabase, next: EventToken) -> ProjectedDatabase {
    let entries = db
        .entries
        .iter()
        .filter_map(|&en| {
            db.suffix(group, en)
                .iter()
                .position(|&e| e == next)
                .map(|p| ProjectedEntry {
                    trace: en.trace,
                    offset: en.offset + p as u32 + 1,
                })
        })
        .collect();
    let mut prefix = db.prefix.clone();
    prefix.0.push(next);
    ProjectedDatabase { prefix, entries }
}

/// Support of `pattern` in `group`, with the ascending indices of the
/// traces that contain it. Each trace counts once.
pub fn support_of(pattern: &Pattern, group: &TraceGroup) -> (usize, Vec<u32>) {
    let ids: Vec<u32> = group
        .traces
        .iter()
        .enumerate()
        .filter(|(_, t)| pattern.is_subsequence_of(&t.events))
        .map(|(i, _)| i as u32)
        .collect();
    (ids.len(), ids)
}

fn vocab_bound(group: &TraceGroup) -> usize {
    group
        .traces
        .iter()
        .flat_map(|t| t.events.iter())
        .map(|e| e.index() + 1)
        .max()
        .unwrap_or(0)
}

/// Per-worker counters sized to the vocabulary. Every routine leaves them
/// zeroed on return.
struct Scratch {
    counts: Vec<u32>,
    stamp: Vec<u32>,
    slot: Vec<u32>,
    touched: Vec<EventToken>,
}

const NO_SLOT: u32 = u32::MAX;

impl Scratch {
    fn new(vocab: usize) -> Self {
        Scratch {
            counts: vec![0; vocab],
            stamp: vec![0; vocab],
            slot: vec![NO_SLOT; vocab],
            touched: Vec::new(),
        }
    }

    /// Events whose support across `entries` reaches `min_support`, ascending.
    fn frequent_events(&mut self, group: &TraceGroup, entries: &[ProjectedEntry], min_support: usize) -> Vec<EventToken> {
        for en in entries {
            let mark = en.trace + 1;
            for &e in &group.traces[en.trace as usize].events[en.offset as usize..] {
                let i = e.index();
                if self.stamp[i] != mark {
                    self.stamp[i] = mark;
                    if self.counts[i] == 0 {
                        self.touched.push(e);
                    }
                    self.counts[i] += 1;
                }
            }
        }
        let mut frequent: Vec<EventToken> = self
            .touched
            .iter()
            .copied()
            .filter(|e| self.counts[e.index()] as usize >= min_support)
            .collect();
        for e in self.touched.drain(..) {
            self.counts[e.index()] = 0;
            self.stamp[e.index()] = 0;
        }
        frequent.sort_unstable();
        frequent
    }

    /// Projects `entries` on each of `events` in a single pass. Output `k`
    /// corresponds to `events[k]`.
    fn project_many(
        &mut self,
        group: &TraceGroup,
        entries: &[ProjectedEntry],
        events: &[EventToken],
    ) -> Vec<Vec<ProjectedEntry>> {
        let mut out: Vec<Vec<ProjectedEntry>> = vec![Vec::new(); events.len()];
        for (k, e) in events.iter().enumerate() {
            self.slot[e.index()] = k as u32;
        }
        for en in entries {
            let mark = en.trace + 1;
            let suffix = &group.traces[en.trace as usize].events[en.offset as usize..];
            for (pos, &e) in suffix.iter().enumerate() {
                let i = e.index();
                let k = self.slot[i];
                if k != NO_SLOT && self.stamp[i] != mark {
                    self.stamp[i] = mark;
                    out[k as usize].push(ProjectedEntry {
                        trace: en.trace,
                        offset: en.offset + pos as u32 + 1,
                    });
                }
            }
        }
        for e in events {
            self.slot[e.index()] = NO_SLOT;
            self.stamp[e.index()] = 0;
        }
        out
    }
}

fn grow(
    group: &TraceGroup,
    prefix: &mut Vec<EventToken>,
    entries: &[ProjectedEntry],
    min_support: usize,
    max_len: usize,
    scratch: &mut Scratch,
    out: &mut Vec<MinedPattern>,
) {
    if prefix.len() >= max_len {
        return;
    }
    let frequent = scratch.frequent_events(group, entries, min_support);
    if frequent.is_empty() {
        return;
    }
    let children = scratch.project_many(group, entries, &frequent);
    for (e, child) in frequent.into_iter().zip(children) {
        prefix.push(e);
        out.push(MinedPattern {
            pattern: Pattern(prefix.clone()),
            supporting: child.iter().map(|en| en.trace).collect(),
        });
        grow(group, prefix, &child, min_support, max_len, scratch, out);
        prefix.pop();
    }
}

/// Every pattern of length `1..=max_len` whose support reaches the resolved
/// threshold, in canonical order.
///
/// First-level subtrees are mined in parallel on the current rayon pool; the
/// merged output is sorted, so the result does not depend on the pool size.
pub fn extract_patterns(group: &TraceGroup, params: &MiningParams) -> Vec<MinedPattern> {
    let min_support = params.min_support.resolve(group.len());
    if group.is_empty() || min_support > group.len() || params.max_len == 0 {
        return Vec::new();
    }
    let vocab = vocab_bound(group);
    let root = ProjectedDatabase::root(group);
    let mut scratch = Scratch::new(vocab);
    let firsts = scratch.frequent_events(group, &root.entries, min_support);
    let projections = scratch.project_many(group, &root.entries, &firsts);
    drop(scratch);

    let mut mined: Vec<MinedPattern> = firsts
        .into_par_iter()
        .zip(projections)
        .map_init(
            || Scratch::new(vocab),
            |scratch, (e, child)| {
                let mut out = vec![MinedPattern {
                    pattern: Pattern(vec![e]),
                    supporting: child.iter().map(|en| en.trace).collect(),
                }];
                let mut prefix = vec![e];
                grow(group, &mut prefix, &child, min_support, params.max_len, scratch, &mut out);
                out
            },
        )
        .flatten()
        .collect();
    mined.sort_unstable_by(|a, b| a.pattern.cmp(&b.pattern));
    mined
}

const ENUMERATION_GUARD: f64 = 1e6;

/// Reference enumeration: every sequence over `vocab_size` tokens up to
/// `max_len`, kept when its directly counted support meets the threshold.
/// Refuses to run when `vocab_size^max_len` exceeds 10^6.
pub fn brute_force_patterns(
    group: &TraceGroup,
    vocab_size: usize,
    params: &MiningParams,
) -> Result<Vec<MinedPattern>> {
    params.validate()?;
    if (vocab_size as f64).powi(params.max_len as i32) > ENUMERATION_GUARD {
        return Err(Error::EnumerationGuard {
            vocab: vocab_size,
            max_len: params.max_len,
        });
    }
    let min_support = params.min_support.resolve(group.len());
    let mut out = Vec::new();
    if vocab_size == 0 {
        return Ok(out);
    }
    for len in 1..=params.max_len {
        let mut digits = vec![0usize; len];
        loop {
            let pattern = Pattern(digits.iter().map(|&d| EventToken(d as u32)).collect());
            let (count, ids) = support_of(&pattern, group);
            if count >= min_support && count > 0 {
                out.push(MinedPattern {
                    pattern,
                    supporting: ids,
                });
            }
            // odometer increment, last position fastest
            let mut i = len;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < vocab_size {
                    break;
                }
                digits[i] = 0;
            }
            if digits.iter().all(|&d| d == 0) {
                break;
            }
        }
    }
    out.sort_unstable_by(|a, b| a.pattern.cmp(&b.pattern));
    Ok(out)
}

struct TrieNode {
    children: Vec<(EventToken, usize)>,
    /// Indices of the input patterns ending here; duplicates share a node.
    patterns: Vec<usize>,
}

/// Supporting trace indices in `group` for each of `patterns`, without any
/// support threshold. Output `k` belongs to `patterns[k]`.
///
/// Walks a trie of the patterns over projected databases, so shared prefixes
/// are projected once.
pub fn support_of_many(patterns: &[Pattern], group: &TraceGroup) -> Vec<Vec<u32>> {
    let mut nodes = vec![TrieNode {
        children: Vec::new(),
        patterns: Vec::new(),
    }];
    for (k, p) in patterns.iter().enumerate() {
        let mut at = 0;
        for &e in p.events() {
            at = match nodes[at].children.iter().find(|(c, _)| *c == e) {
                Some(&(_, n)) => n,
                None => {
                    nodes.push(TrieNode {
                        children: Vec::new(),
                        patterns: Vec::new(),
                    });
                    let n = nodes.len() - 1;
                    nodes[at].children.push((e, n));
                    n
                }
            };
        }
        nodes[at].patterns.push(k);
    }

    let mut result = vec![Vec::new(); patterns.len()];
    if group.is_empty() || patterns.is_empty() {
        return result;
    }
    let vocab = vocab_bound(group).max(
        patterns
            .iter()
            .flat_map(|p| p.events())
            .map(|e| e.index() + 1)
            .max()
            .unwrap_or(0),
    );

    fn record(node: &TrieNode, proj: &[ProjectedEntry], found: &mut Vec<(usize, Vec<u32>)>) {
        for &k in &node.patterns {
            found.push((k, proj.iter().map(|en| en.trace).collect()));
        }
    }

    fn walk(
        group: &TraceGroup,
        nodes: &[TrieNode],
        node: usize,
        entries: &[ProjectedEntry],
        scratch: &mut Scratch,
        found: &mut Vec<(usize, Vec<u32>)>,
    ) {
        let events: Vec<EventToken> = nodes[node].children.iter().map(|&(e, _)| e).collect();
        if events.is_empty() {
            return;
        }
        let projections = scratch.project_many(group, entries, &events);
        for (&(_, child), proj) in nodes[node].children.iter().zip(projections) {
            record(&nodes[child], &proj, found);
            walk(group, nodes, child, &proj, scratch, found);
        }
    }

    let root = ProjectedDatabase::root(group);
    let firsts: Vec<(EventToken, usize)> = nodes[0].children.clone();
    let mut scratch = Scratch::new(vocab);
    let first_events: Vec<EventToken> = firsts.iter().map(|&(e, _)| e).collect();
    let projections = scratch.project_many(group, &root.entries, &first_events);
    drop(scratch);

    let found: Vec<(usize, Vec<u32>)> = firsts
        .into_par_iter()
        .zip(projections)
        .map_init(
            || Scratch::new(vocab),
            |scratch, ((_, child), proj)| {
                let mut found = Vec::new();
                record(&nodes[child], &proj, &mut found);
                walk(group, &nodes, child, &proj, scratch, &mut found);
                found
            },
        )
        .flatten()
        .collect();
    for (k, ids) in found {
        result[k] = ids;
    }
    result
}
