#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rca_core::pipeline::{prepare, Prepared};
use rca_core::trace_store::{EventToken, GroupRole, Trace, TraceGroup};
use rca_core::{parse_records, BinRule, BinStrategy, Pattern};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// The five-trace test and control groups of the worked example.
pub fn example() -> Prepared {
    let read = |n| parse_records(std::fs::read_to_string(fixture(n)).unwrap().as_bytes()).unwrap();
    prepare(
        &read("example_test.jsonl"),
        &read("example_control.jsonl"),
        BinStrategy::EqualProportion,
        BinRule::Sturges,
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random group over tokens `0..vocab`: up to `max_traces` traces of length
/// `1..=max_len`.
pub fn random_group(rng: &mut ChaCha8Rng, role: GroupRole, vocab: usize, max_traces: usize, max_len: usize) -> TraceGroup {
    let n = rng.gen_range(0..=max_traces);
    TraceGroup {
        role,
        traces: (0..n)
            .map(|i| Trace {
                id: format!("{}{i}", if role == GroupRole::Test { "t" } else { "c" }),
                events: (0..rng.gen_range(1..=max_len))
                    .map(|_| EventToken(rng.gen_range(0..vocab) as u32))
                    .collect(),
            })
            .collect(),
    }
}

/// `alpha ⊑ seq`, scanning with explicit indices.
pub fn contains(seq: &[EventToken], alpha: &[EventToken]) -> bool {
    let mut k = 0;
    for &e in seq {
        if k < alpha.len() && e == alpha[k] {
            k += 1;
        }
    }
    k == alpha.len()
}

/// Maximal suffix of `t` w.r.t. `alpha`: the longest `gamma` with
/// `t = t'·gamma` and `alpha ⊑ t'`, found by trying every split point.
pub fn maximal_suffix(t: &[EventToken], alpha: &[EventToken]) -> Option<Vec<EventToken>> {
    (0..=t.len()).find(|&k| contains(&t[..k], alpha)).map(|k| t[k..].to_vec())
}

/// `S|alpha` as a set of `(trace index, suffix)` computed from scratch.
pub fn projected_oracle(group: &TraceGroup, alpha: &[EventToken]) -> BTreeSet<(u32, Vec<EventToken>)> {
    group
        .traces
        .iter()
        .enumerate()
        .filter_map(|(i, t)| maximal_suffix(&t.events, alpha).map(|s| (i as u32, s)))
        .collect()
}

pub fn direct_support(group: &TraceGroup, alpha: &[EventToken]) -> Vec<u32> {
    group
        .traces
        .iter()
        .enumerate()
        .filter(|(_, t)| contains(&t.events, alpha))
        .map(|(i, _)| i as u32)
        .collect()
}

pub fn jaccard_sets(a: &[u32], b: &[u32]) -> f64 {
    let a: HashSet<u32> = a.iter().copied().collect();
    let b: HashSet<u32> = b.iter().copied().collect();
    a.intersection(&b).count() as f64 / a.union(&b).count() as f64
}

pub fn labels(p: &Pattern, prepared: &Prepared) -> Vec<String> {
    p.labels(&prepared.vocab).into_iter().map(String::from).collect()
}

/// Rand index between two labelings of the same items.
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        agree as f64 / total as f64
    }
}

/// Every distinct subsequence of every trace up to `max_len`, with the
/// ascending indices of the traces that contain it.
pub fn enumerate_subsequences(group: &TraceGroup, max_len: usize) -> std::collections::BTreeMap<Vec<EventToken>, Vec<u32>> {
    fn walk(t: &[EventToken], from: usize, cur: &mut Vec<EventToken>, max_len: usize, out: &mut BTreeSet<Vec<EventToken>>) {
        if !cur.is_empty() {
            out.insert(cur.clone());
        }
        if cur.len() == max_len {
            return;
        }
        for k in from..t.len() {
            cur.push(t[k]);
            walk(t, k + 1, cur, max_len, out);
            cur.pop();
        }
    }
    let mut found: std::collections::BTreeMap<Vec<EventToken>, Vec<u32>> = Default::default();
    for (i, t) in group.traces.iter().enumerate() {
        let mut seen = BTreeSet::new();
        walk(&t.events, 0, &mut Vec::new(), max_len, &mut seen);
        for s in seen {
            found.entry(s).or_default().push(i as u32);
        }
    }
    found
}

/// Mining oracle: subsequence enumeration filtered by the threshold, in
/// length-then-lexicographic order.
pub fn mine_oracle(group: &TraceGroup, min_support: usize, max_len: usize) -> Vec<(Vec<EventToken>, Vec<u32>)> {
    let mut out: Vec<_> = enumerate_subsequences(group, max_len)
        .into_iter()
        .filter(|(_, ids)| ids.len() >= min_support.max(1))
        .collect();
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}
