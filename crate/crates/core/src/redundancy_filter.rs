//! Collapses patterns whose test-group supporting traces nearly coincide.
//!
//! Clustering is greedy leader clustering. Patterns are visited by F1
//! descending, longer pattern first among equal F1, then input rank. A
//! pattern joins the first cluster whose leader's supporting set has Jaccard
//! similarity `>= threshold` with its own, otherwise it leads a new cluster.
//! The leader of each cluster is therefore its highest-F1 member.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rca_ranker::PatternStats;

pub const DEFAULT_SIMILARITY: f64 = 0.9;

/// Scores closer than this are treated as equal F1 when ordering leaders.
const F1_TIE_EPS: f64 = 1e-12;

/// `|a ∩ b| / |a ∪ b|` over ascending, duplicate-free id lists.
pub fn jaccard(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyJaccard);
    }
    let inter = intersection_size(a, b);
    Ok(inter as f64 / (a.len() + b.len() - inter) as f64)
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// One cluster; indices point into the ranked list given to [`dedupe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCluster {
    pub representative: usize,
    /// Members in visiting order; the representative comes first.
    pub members: Vec<usize>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deduped {
    /// Representatives, in the rank order of the input.
    pub rows: Vec<PatternStats>,
    /// `clusters[k]` is the cluster led by `rows[k]`.
    pub clusters: Vec<PatternCluster>,
}

/// Greedy redundancy filter over a ranked list.
pub fn dedupe(ranked: &[PatternStats], threshold: f64) -> Result<Deduped> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::param(
            "similarity",
            format!("threshold must be in [0, 1], got {threshold}"),
        ));
    }

    let order = leader_order(ranked);
    let mut clusters: Vec<PatternCluster> = Vec::new();
    for i in order {
        let ids = &ranked[i].test_ids;
        let home = clusters.iter_mut().find(|c| {
            let rep = &ranked[c.representative].test_ids;
            let (small, large) = if rep.len() < ids.len() {
                (rep.len(), ids.len())
            } else {
                (ids.len(), rep.len())
            };
            // jaccard <= small / large; skip the merge when that cannot reach the threshold
            if large > 0 && (small as f64) < threshold * large as f64 {
                return false;
            }
            jaccard(rep, ids).is_ok_and(|s| s >= threshold)
        });
        match home {
            Some(c) => c.members.push(i),
            None => clusters.push(PatternCluster {
                representative: i,
                members: vec![i],
                threshold,
            }),
        }
    }
    clusters.sort_by_key(|c| c.representative);
    let rows = clusters
        .iter()
        .map(|c| ranked[c.representative].clone())
        .collect();
    Ok(Deduped { rows, clusters })
}

/// Input is in rank order, so equal-F1 rows are adjacent; within each run of
/// equal F1 the longer pattern goes first.
fn leader_order(ranked: &[PatternStats]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(ranked.len());
    let mut start = 0;
    while start < ranked.len() {
        let mut end = start + 1;
        while end < ranked.len() && (ranked[end].f1 - ranked[start].f1).abs() <= F1_TIE_EPS {
            end += 1;
        }
        let mut run: Vec<usize> = (start..end).collect();
        run.sort_by(|&a, &b| ranked[b].pattern.len().cmp(&ranked[a].pattern.len()));
        order.extend(run);
        start = end;
    }
    order
}
