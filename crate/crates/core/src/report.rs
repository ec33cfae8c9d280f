//! Serialized forms of analysis results.
//!
//! The canonical report is pretty-printed JSON with no timestamps, so equal
//! inputs and configuration produce byte-identical files.

use serde::{Deserialize, Serialize};

use crate::discretize::{BinRule, BinStrategy, BinningSpec};
use crate::error::{Error, Result};
use crate::pattern_miner::{MinSupport, MinedPattern};
use crate::rca_ranker::{AnalysisMeta, ControlMode, PatternStats};
use crate::redundancy_filter::Deduped;
use crate::regression_linker::{LabeledStats, RegressionAnalysis};
use crate::trace_store::{TraceGroup, Vocabulary};

pub const REPORT_SCHEMA: &str = "rca-report/1";

/// A mined pattern with its supporting trace ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedPatternRecord {
    pub pattern: Vec<String>,
    pub support: usize,
    pub trace_ids: Vec<String>,
}

impl MinedPatternRecord {
    pub fn new(mined: &MinedPattern, vocab: &Vocabulary, group: &TraceGroup) -> Self {
        MinedPatternRecord {
            pattern: labels(mined.pattern.events(), vocab),
            support: mined.support(),
            trace_ids: group.ids_of(&mined.supporting).map(String::from).collect(),
        }
    }
}

fn labels(events: &[crate::trace_store::EventToken], vocab: &Vocabulary) -> Vec<String> {
    events.iter().map(|&e| vocab.label(e).to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern: Vec<String>,
    pub test_support: usize,
    pub control_support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_trace_ids: Option<Vec<String>>,
}

impl PatternRow {
    pub fn new(stats: &PatternStats, vocab: &Vocabulary, test: Option<&TraceGroup>) -> Self {
        PatternRow {
            pattern: labels(stats.pattern.events(), vocab),
            test_support: stats.test_support(),
            control_support: stats.control_support(),
            precision: stats.precision,
            recall: stats.recall,
            f1: stats.f1,
            test_trace_ids: test.map(|g| g.ids_of(&stats.test_ids).map(String::from).collect()),
        }
    }
}

/// A surviving row after redundancy filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupedRow {
    #[serde(flatten)]
    pub row: PatternRow,
    pub cluster_size: usize,
    pub cluster_members: Vec<Vec<String>>,
}

/// Rows for every cluster of `deduped`, representative first in each member list.
pub fn deduped_rows(
    ranked: &[PatternStats],
    deduped: &Deduped,
    vocab: &Vocabulary,
    test: &TraceGroup,
) -> Vec<DedupedRow> {
    deduped
        .clusters
        .iter()
        .map(|c| DedupedRow {
            row: PatternRow::new(&ranked[c.representative], vocab, Some(test)),
            cluster_size: c.members.len(),
            cluster_members: c
                .members
                .iter()
                .map(|&m| labels(ranked[m].pattern.events(), vocab))
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    pub min_support: MinSupport,
    pub max_len: usize,
    pub similarity: f64,
    pub control_mode: ControlMode,
    pub binning: BinStrategy,
    pub bins: BinRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub min_support_test: usize,
    pub min_support_control: usize,
    pub test_size: usize,
    pub control_size: usize,
    pub rejected_test_records: usize,
    pub rejected_control_records: usize,
    pub bins: Vec<BinningSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: ConfigEcho,
    pub resolved: Resolved,
    pub analysis: AnalysisMeta,
    /// Ranked representatives after redundancy filtering.
    pub patterns: Vec<DedupedRow>,
    /// The full ranked list before filtering, without trace ids.
    pub ranked: Vec<PatternRow>,
}

impl Report {
    pub fn to_canonical_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses a report and checks its schema tag.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(REPORT_SCHEMA) => {}
            Some(other) => return Err(Error::Schema(other.to_string())),
            None => return Err(Error::Schema("<missing>".to_string())),
        }
        Ok(serde_json::from_value(value)?)
    }

    /// The pre-filter ranked statistics as a regression for linking.
    pub fn to_regression(&self, regression_id: impl Into<String>) -> RegressionAnalysis {
        RegressionAnalysis {
            regression_id: regression_id.into(),
            rows: self.ranked.iter().map(PatternRow::to_labeled).collect(),
        }
    }
}

impl PatternRow {
    pub fn to_labeled(&self) -> LabeledStats {
        LabeledStats {
            pattern: self.pattern.clone(),
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
        }
    }
}

/// Fixed-width text table of rows, two decimals.
pub fn format_table(rows: &[PatternRow], top_k: usize) -> String {
    let shown: Vec<&PatternRow> = rows.iter().take(top_k).collect();
    let pats: Vec<String> = shown.iter().map(|r| format!("({})", r.pattern.join(", "))).collect();
    let width = pats.iter().map(|p| p.chars().count()).max().unwrap_or(0).max(7);
    let mut out = format!(
        "{:<width$}  {:>6}  {:>7}  {:>9}  {:>6}  {:>5}\n",
        "pattern", "test", "control", "precision", "recall", "f1"
    );
    for (r, p) in shown.iter().zip(&pats) {
        let pad = width - p.chars().count();
        out.push_str(&format!(
            "{p}{}  {:>6}  {:>7}  {:>9.2}  {:>6.2}  {:>5.2}\n",
            " ".repeat(pad),
            r.test_support,
            r.control_support,
            r.precision,
            r.recall,
            r.f1
        ));
    }
    out
}
