//! Regression linking in a pattern-statistics vector space.
//!
//! Every analyzed regression contributes its patterns to a global index
//! `P = {p1, …, pn}`. A regression becomes a vector of dimension `3n` where
//! pattern `p_i` (1-based) owns coordinates `3i-2, 3i-1, 3i` holding its
//! precision, recall and F1; patterns the regression lacks stay zero.
//! Regressions within a cosine-distance threshold of each other are joined,
//! and clusters are the connected components of that graph.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LINK_THRESHOLD: f64 = 0.1;

/// Pattern statistics keyed by event labels, so analyses built over
/// different vocabularies can share one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledStats {
    pub pattern: Vec<String>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionAnalysis {
    pub regression_id: String,
    pub rows: Vec<LabeledStats>,
}

fn canonical_cmp(a: &[String], b: &[String]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPatternIndex {
    patterns: Vec<Vec<String>>,
    position: HashMap<Vec<String>, usize>,
}

impl GlobalPatternIndex {
    pub fn patterns(&self) -> &[Vec<String>] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn dimension(&self) -> usize {
        3 * self.patterns.len()
    }

    /// 1-based position `i` of a pattern in the index.
    pub fn position(&self, pattern: &[String]) -> Option<usize> {
        self.position.get(pattern).map(|&i| i + 1)
    }
}

/// Union of all patterns across `analyses`, ordered by length then labels.
pub fn build_index(analyses: &[RegressionAnalysis]) -> Result<GlobalPatternIndex> {
    if analyses.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut patterns: Vec<Vec<String>> = analyses
        .iter()
        .flat_map(|a| a.rows.iter().map(|r| r.pattern.clone()))
        .collect();
    patterns.sort_by(|a, b| canonical_cmp(a, b));
    patterns.dedup();
    let position = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    Ok(GlobalPatternIndex { patterns, position })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionVector {
    pub regression_id: String,
    pub dimension: usize,
    /// Sparse coordinates, 1-based.
    pub coords: BTreeMap<usize, f64>,
}

impl RegressionVector {
    pub fn is_zero(&self) -> bool {
        self.coords.values().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.coords.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        RegressionVector {
            regression_id: self.regression_id.clone(),
            dimension: self.dimension,
            coords: self.coords.iter().map(|(&k, &v)| (k, v * c)).collect(),
        }
    }
}

pub fn encode_regression(analysis: &RegressionAnalysis, index: &GlobalPatternIndex) -> Result<RegressionVector> {
    let mut coords = BTreeMap::new();
    for row in &analysis.rows {
        let i = index
            .position(&row.pattern)
            .ok_or_else(|| Error::StaleIndex(row.pattern.clone()))?;
        let j = 3 * i;
        coords.insert(j - 2, row.precision);
        coords.insert(j - 1, row.recall);
        coords.insert(j, row.f1);
    }
    Ok(RegressionVector {
        regression_id: analysis.regression_id.clone(),
        dimension: index.dimension(),
        coords,
    })
}

/// `1 - a·b / (|a| |b|)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &RegressionVector, b: &RegressionVector) -> Result<f64> {
    if a.dimension != b.dimension {
        return Err(Error::DimensionMismatch(a.dimension, b.dimension));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (small, large) = if a.coords.len() <= b.coords.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .coords
        .iter()
        .filter_map(|(k, v)| large.coords.get(k).map(|w| v * w))
        .sum();
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCluster {
    pub members: Vec<String>,
    /// Largest pairwise distance inside the cluster; 0 for singletons.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub threshold: f64,
    pub clusters: Vec<LinkCluster>,
    pub excluded_zero_vectors: Vec<String>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clusters at `threshold`: an edge joins every pair with
/// distance `<= threshold`. Zero vectors are reported separately.
pub fn link_regressions(vectors: &[RegressionVector], threshold: f64) -> Result<LinkReport> {
    let (zero, live): (Vec<&RegressionVector>, Vec<&RegressionVector>) =
        vectors.iter().partition(|v| v.is_zero());
    let mut excluded: Vec<String> = zero.iter().map(|v| v.regression_id.clone()).collect();
    excluded.sort();

    let n = live.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| cosine_distance(live[i], live[j]))
        .collect::<Result<_>>()?;

    let mut set = DisjointSet::new(n);
    for (&(i, j), &d) in pairs.iter().zip(&dists) {
        if d <= threshold {
            set.union(i, j);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = set.find(i);
        groups.entry(r).or_default().push(i);
    }
    let mut diameter = vec![0.0f64; n];
    for (&(i, j), &d) in pairs.iter().zip(&dists) {
        let r = set.find(i);
        if r == set.find(j) {
            diameter[r] = diameter[r].max(d);
        }
    }
    let mut clusters: Vec<LinkCluster> = groups
        .into_iter()
        .map(|(root, members)| {
            let mut ids: Vec<String> = members.iter().map(|&m| live[m].regression_id.clone()).collect();
            ids.sort();
            LinkCluster {
                members: ids,
                diameter: diameter[root],
            }
        })
        .collect();
    clusters.sort_by(|a, b| a.members[0].cmp(&b.members[0]));
    Ok(LinkReport {
        threshold,
        clusters,
        excluded_zero_vectors: excluded,
    })
}
