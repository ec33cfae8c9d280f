//! End-to-end analysis: discretize, ingest, mine and rank, filter redundancy.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::discretize::{compute_bins, BinRule, BinStrategy, BinningSpec};
use crate::error::{Error, Result};
use crate::pattern_miner::{MinSupport, MiningParams, DEFAULT_MAX_LEN};
use crate::rca_ranker::{analyze, Analysis, ControlMode};
use crate::redundancy_filter::{dedupe, Deduped, DEFAULT_SIMILARITY};
use crate::report::{deduped_rows, ConfigEcho, PatternRow, Report, Resolved, REPORT_SCHEMA};
use crate::trace_store::{ingest_records, GroupRole, TraceGroup, TraceRecord, Vocabulary};

/// Analysis parameters shared by the CLI and the service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub min_support: MinSupport,
    pub max_len: usize,
    pub similarity: f64,
    pub control_mode: ControlMode,
    pub binning: BinStrategy,
    pub bins: BinRule,
}

impl RunConfig {
    pub fn new(min_support: MinSupport) -> Self {
        RunConfig {
            min_support,
            max_len: DEFAULT_MAX_LEN,
            similarity: DEFAULT_SIMILARITY,
            control_mode: ControlMode::default(),
            binning: BinStrategy::default(),
            bins: BinRule::default(),
        }
    }

    pub fn mining_params(&self) -> Result<MiningParams> {
        MiningParams::new(self.min_support, self.max_len)
    }

    pub fn validate(&self) -> Result<()> {
        self.mining_params()?;
        if !(0.0..=1.0).contains(&self.similarity) {
            return Err(Error::param(
                "similarity",
                format!("must be in [0, 1], got {}", self.similarity),
            ));
        }
        if let BinRule::Explicit(0) = self.bins {
            return Err(Error::param("bins", "bin count must be positive"));
        }
        Ok(())
    }
}

/// Both groups interned over one vocabulary.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub vocab: Vocabulary,
    pub test: TraceGroup,
    pub control: TraceGroup,
    pub bins: Vec<BinningSpec>,
    pub rejected_test: usize,
    pub rejected_control: usize,
}

/// Fits one binning spec per numeric feature over the union of both groups,
/// then ingests test and control into a shared vocabulary.
pub fn prepare(
    test: &[TraceRecord],
    control: &[TraceRecord],
    strategy: BinStrategy,
    rule: BinRule,
) -> Result<Prepared> {
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for record in test.iter().chain(control) {
        for (name, v) in record.numeric_values() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    feature: name.to_string(),
                    value: v,
                });
            }
            values.entry(name).or_default().push(v);
        }
    }
    let bins = values
        .iter()
        .map(|(name, vals)| compute_bins(name, vals, strategy, rule))
        .collect::<Result<Vec<_>>>()?;
    let specs: HashMap<String, BinningSpec> =
        bins.iter().map(|b| (b.feature.clone(), b.clone())).collect();

    let mut vocab = Vocabulary::new();
    let t = ingest_records(test, GroupRole::Test, &mut vocab, Some(&specs))?;
    let c = ingest_records(control, GroupRole::Control, &mut vocab, Some(&specs))?;
    Ok(Prepared {
        vocab,
        test: t.group,
        control: c.group,
        bins,
        rejected_test: t.rejected,
        rejected_control: c.rejected,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub ingest_ms: f64,
    pub analyze_ms: f64,
    pub dedupe_ms: f64,
    pub total_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub prepared: Prepared,
    pub analysis: Analysis,
    pub deduped: Deduped,
    pub timings: StageTimings,
}

impl Outcome {
    /// The canonical report; `inputs` are echoed as given.
    pub fn report(&self, config: &RunConfig, inputs: (Option<String>, Option<String>)) -> Report {
        let p = &self.prepared;
        Report {
            schema: REPORT_SCHEMA.to_string(),
            config: ConfigEcho {
                test: inputs.0,
                control: inputs.1,
                min_support: config.min_support,
                max_len: config.max_len,
                similarity: config.similarity,
                control_mode: config.control_mode,
                binning: config.binning,
                bins: config.bins,
            },
            resolved: Resolved {
                min_support_test: self.analysis.meta.resolved_min_support,
                min_support_control: self.analysis.meta.resolved_min_support_control,
                test_size: p.test.len(),
                control_size: p.control.len(),
                rejected_test_records: p.rejected_test,
                rejected_control_records: p.rejected_control,
                bins: p.bins.clone(),
            },
            analysis: self.analysis.meta.clone(),
            patterns: deduped_rows(&self.analysis.rows, &self.deduped, &p.vocab, &p.test),
            ranked: self
                .analysis
                .rows
                .iter()
                .map(|r| PatternRow::new(r, &p.vocab, None))
                .collect(),
        }
    }
}

/// Runs every stage over parsed records.
pub fn run(test: &[TraceRecord], control: &[TraceRecord], config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    let params = config.mining_params()?;
    let start = Instant::now();
    let prepared = prepare(test, control, config.binning, config.bins)?;
    let ingest = start.elapsed();

    let t = Instant::now();
    let analysis = analyze(&prepared.test, &prepared.control, &params, config.control_mode)?;
    let analyze_time = t.elapsed();

    let t = Instant::now();
    let deduped = dedupe(&analysis.rows, config.similarity)?;
    let dedupe_time = t.elapsed();

    Ok(Outcome {
        prepared,
        analysis,
        deduped,
        timings: StageTimings {
            ingest_ms: ms(ingest),
            analyze_ms: ms(analyze_time),
            dedupe_ms: ms(dedupe_time),
            total_ms: ms(start.elapsed()),
        },
    })
}
