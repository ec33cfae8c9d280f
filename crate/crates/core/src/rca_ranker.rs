//! Statistical isolation: score test-group patterns against a control group.
//!
//! For a pattern with test support `ts`, control support `cs` and a test
//! group of `N` traces:
//!
//! - precision = `ts / (ts + cs)`
//! - recall = `ts / N`
//! - F1 = harmonic mean of the two, which reduces to `2 ts / (N + ts + cs)`
//!
//! Ranking compares the reduced rationals exactly, so equal scores tie
//! regardless of floating-point rounding.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern_miner::{extract_patterns, support_of_many, MiningParams, Pattern};
use crate::trace_store::TraceGroup;

/// Where control support comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Count every test pattern directly in the control group.
    #[default]
    Exact,
    /// Mine the control group with the same threshold and join; patterns
    /// below the control threshold get an empty control set.
    AlgorithmFaithful,
}

impl std::str::FromStr for ControlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "algorithm_faithful" | "faithful" => Ok(Self::AlgorithmFaithful),
            other => Err(Error::param(
                "control_mode",
                format!("unknown mode `{other}` (exact, algorithm_faithful)"),
            )),
        }
    }
}

pub fn precision(ts_count: usize, cs_count: usize) -> Result<f64> {
    if ts_count == 0 {
        return Err(Error::ZeroTestSupport);
    }
    Ok(ts_count as f64 / (ts_count + cs_count) as f64)
}

pub fn recall(ts_count: usize, test_size: usize) -> Result<f64> {
    if test_size == 0 {
        return Err(Error::EmptyTestGroup);
    }
    if ts_count == 0 || ts_count > test_size {
        return Err(Error::param(
            "ts_count",
            format!("must be in 1..={test_size}, got {ts_count}"),
        ));
    }
    Ok(ts_count as f64 / test_size as f64)
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    2.0 * precision * recall / (precision + recall)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternStats {
    pub pattern: Pattern,
    /// Ascending indices into the test group.
    pub test_ids: Vec<u32>,
    /// Ascending indices into the control group.
    pub control_ids: Vec<u32>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PatternStats {
    pub fn new(pattern: Pattern, test_ids: Vec<u32>, control_ids: Vec<u32>, test_size: usize) -> Result<Self> {
        let p = precision(test_ids.len(), control_ids.len())?;
        let r = recall(test_ids.len(), test_size)?;
        Ok(PatternStats {
            pattern,
            test_ids,
            control_ids,
            precision: p,
            recall: r,
            f1: f1(p, r),
        })
    }

    pub fn test_support(&self) -> usize {
        self.test_ids.len()
    }

    pub fn control_support(&self) -> usize {
        self.control_ids.len()
    }
}

/// Compares F1 of two rows as exact rationals; `Greater` means `a` scores higher.
pub fn cmp_f1(a: &PatternStats, b: &PatternStats, test_size: usize) -> Ordering {
    let n = test_size as u128;
    let (ta, ca) = (a.test_support() as u128, a.control_support() as u128);
    let (tb, cb) = (b.test_support() as u128, b.control_support() as u128);
    (ta * (n + tb + cb)).cmp(&(tb * (n + ta + ca)))
}

fn cmp_precision(a: &PatternStats, b: &PatternStats) -> Ordering {
    let (ta, ca) = (a.test_support() as u128, a.control_support() as u128);
    let (tb, cb) = (b.test_support() as u128, b.control_support() as u128);
    (ta * (tb + cb)).cmp(&(tb * (ta + ca)))
}

/// Rank order: F1 descending, then precision descending, then longer
/// pattern, then canonical pattern order.
pub fn rank_order(a: &PatternStats, b: &PatternStats, test_size: usize) -> Ordering {
    cmp_f1(b, a, test_size)
        .then_with(|| cmp_precision(b, a))
        .then_with(|| b.pattern.len().cmp(&a.pattern.len()))
        .then_with(|| a.pattern.cmp(&b.pattern))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisMeta {
    pub control_mode: ControlMode,
    /// Absolute threshold applied to the test group.
    pub resolved_min_support: usize,
    /// Absolute threshold applied to the control group (faithful mode only mines it).
    pub resolved_min_support_control: usize,
    pub test_size: usize,
    pub control_size: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub rows: Vec<PatternStats>,
    pub meta: AnalysisMeta,
}

pub const EMPTY_CONTROL_WARNING: &str =
    "control group is empty: every precision is 1.0 and rankings reflect recall only";

/// Mines `test`, scores every pattern against `control`, and ranks.
pub fn analyze(
    test: &TraceGroup,
    control: &TraceGroup,
    params: &MiningParams,
    mode: ControlMode,
) -> Result<Analysis> {
    params.validate()?;
    if test.is_empty() {
        return Err(Error::EmptyTestGroup);
    }
    let mut warnings = Vec::new();
    if control.is_empty() {
        warnings.push(EMPTY_CONTROL_WARNING.to_string());
    }

    let (mined, control_ids): (_, Vec<Vec<u32>>) = match mode {
        ControlMode::Exact => {
            let mined = extract_patterns(test, params);
            let patterns: Vec<Pattern> = mined.iter().map(|m| m.pattern.clone()).collect();
            let cs = support_of_many(&patterns, control);
            (mined, cs)
        }
        ControlMode::AlgorithmFaithful => {
            let (mined, mined_control) =
                rayon::join(|| extract_patterns(test, params), || extract_patterns(control, params));
            let mut by_pattern: HashMap<Pattern, Vec<u32>> = mined_control
                .into_iter()
                .map(|m| (m.pattern, m.supporting))
                .collect();
            let cs = mined
                .iter()
                .map(|m| by_pattern.remove(&m.pattern).unwrap_or_default())
                .collect();
            (mined, cs)
        }
    };

    let n = test.len();
    let mut rows = mined
        .into_iter()
        .zip(control_ids)
        .map(|(m, cs)| PatternStats::new(m.pattern, m.supporting, cs, n))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| rank_order(a, b, n));

    Ok(Analysis {
        rows,
        meta: AnalysisMeta {
            control_mode: mode,
            resolved_min_support: params.min_support.resolve(test.len()),
            resolved_min_support_control: params.min_support.resolve(control.len()),
            test_size: test.len(),
            control_size: control.len(),
            warnings,
        },
    })
}
