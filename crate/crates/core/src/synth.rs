//! Synthetic trace corpora for benchmarks and end-to-end tests.
//!
//! Background events are drawn uniformly from `ev0..ev{V-1}`. Each
//! [`PlantedSignal`] is inserted, in order and at random positions, into a
//! configurable fraction of test traces and a smaller fraction of control
//! traces. Trace lengths are uniform on `[L/2, 3L/2]`, so the median is `L`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::trace_store::{RawEvent, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub events: Vec<String>,
    /// Fraction of test traces carrying the signal.
    pub test_rate: f64,
    /// Fraction of control traces carrying the signal.
    pub control_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub traces_per_group: usize,
    pub median_len: usize,
    pub vocab_size: usize,
    pub signals: Vec<PlantedSignal>,
    pub seed: u64,
}

/// Named workload sizes with a matching minimum support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Easy,
    Medium,
    Hard,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "easy" => Ok(Preset::Easy),
            "medium" => Ok(Preset::Medium),
            "hard" => Ok(Preset::Hard),
            other => Err(format!("unknown preset `{other}` (easy, medium, hard)")),
        }
    }
}

impl Preset {
    /// `(traces per group, median length, min support fraction)`
    pub fn shape(self) -> (usize, usize, f64) {
        match self {
            Preset::Easy => (3_000, 20, 0.05),
            Preset::Medium => (10_000, 40, 0.0275),
            Preset::Hard => (20_000, 70, 0.01),
        }
    }

    pub fn corpus(self, seed: u64) -> CorpusSpec {
        let (traces, len, _) = self.shape();
        CorpusSpec::new(traces, len, DEFAULT_VOCAB, seed)
    }

    pub fn min_support(self) -> f64 {
        self.shape().2
    }
}

pub const DEFAULT_VOCAB: usize = 200;

impl CorpusSpec {
    /// A corpus with one planted three-event signal in 30% of test traces
    /// and 2% of control traces.
    pub fn new(traces_per_group: usize, median_len: usize, vocab_size: usize, seed: u64) -> Self {
        CorpusSpec {
            traces_per_group,
            median_len,
            vocab_size,
            signals: vec![PlantedSignal {
                events: vec!["sig_a".into(), "sig_b".into(), "sig_c".into()],
                test_rate: 0.3,
                control_rate: 0.02,
            }],
            seed,
        }
    }
}

/// `(test, control)` record lists; ids are `t{i}` and `c{i}`.
pub fn generate(spec: &CorpusSpec) -> (Vec<TraceRecord>, Vec<TraceRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let test = group(spec, &mut rng, "t", |s| s.test_rate);
    let control = group(spec, &mut rng, "c", |s| s.control_rate);
    (test, control)
}

fn group(
    spec: &CorpusSpec,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    rate: impl Fn(&PlantedSignal) -> f64,
) -> Vec<TraceRecord> {
    let lo = (spec.median_len / 2).max(1);
    let hi = (spec.median_len * 3 / 2).max(lo);
    (0..spec.traces_per_group)
        .map(|i| {
            let len = rng.gen_range(lo..=hi);
            let mut events: Vec<String> = (0..len)
                .map(|_| format!("ev{}", rng.gen_range(0..spec.vocab_size.max(1))))
                .collect();
            for signal in &spec.signals {
                if rng.gen_bool(rate(signal).clamp(0.0, 1.0)) {
                    plant(&mut events, &signal.events, rng);
                }
            }
            TraceRecord {
                id: format!("{prefix}{i}"),
                events: events.into_iter().map(RawEvent::Label).collect(),
                meta: None,
            }
        })
        .collect()
}

/// Overwrites randomly chosen positions with `signal`, in order. Traces
/// shorter than the signal grow to fit it.
fn plant(events: &mut Vec<String>, signal: &[String], rng: &mut ChaCha8Rng) {
    while events.len() < signal.len() {
        events.push(signal[0].clone());
    }
    let mut slots = sample(rng, events.len(), signal.len()).into_vec();
    slots.sort_unstable();
    for (slot, e) in slots.into_iter().zip(signal) {
        events[slot] = e.clone();
    }
}

/// One synthetic regression with its ground-truth root-cause group.
#[derive(Debug, Clone)]
pub struct SyntheticRegression {
    pub id: String,
    pub root_cause: usize,
    pub test: Vec<TraceRecord>,
    pub control: Vec<TraceRecord>,
}

/// `groups * per_group` regressions. Regressions of one group share a
/// planted three-event pattern present in `planted_rate` of their test traces
/// and 5% of control traces; background noise is drawn independently for
/// each regression from a 100-event vocabulary.
pub fn planted_regressions(groups: usize, per_group: usize, planted_rate: f64, seed: u64) -> Vec<SyntheticRegression> {
    let mut out = Vec::with_capacity(groups * per_group);
    for g in 0..groups {
        let signal = PlantedSignal {
            events: ["a", "b", "c"].iter().map(|s| format!("cause{g}_{s}")).collect(),
            test_rate: planted_rate,
            control_rate: 0.05,
        };
        for k in 0..per_group {
            let idx = g * per_group + k;
            let spec = CorpusSpec {
                traces_per_group: 200,
                median_len: 12,
                vocab_size: 100,
                signals: vec![signal.clone()],
                seed: seed.wrapping_mul(1_000_003).wrapping_add(idx as u64),
            };
            let (test, control) = generate(&spec);
            out.push(SyntheticRegression {
                id: format!("reg{idx:02}"),
                root_cause: g,
                test,
                control,
            });
        }
    }
    out
}
