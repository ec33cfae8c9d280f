//! Discretization of continuous telemetry into labeled bins.
//!
//! A [`BinningSpec`] splits `[lo, hi]` at strictly increasing endpoints
//! `x1 < … < xn` into the bins `[lo,x1], (x1,x2], …, (xn,hi]`. A value `v`
//! falls into the bin `(xi, xi+1]` with `xi < v <= xi+1`; values outside the
//! fitted range clamp to the first or last bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How endpoints are placed once the bin count is known.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    /// Rank-based quantile cut points; each bin receives the same share of values.
    #[default]
    EqualProportion,
    /// Endpoints spaced uniformly on `[lo, hi]`.
    EqualWidth,
    /// 1-D k-means; endpoints at midpoints between adjacent centers.
    Kbins,
}

/// How many bins to request.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinRule {
    Explicit(usize),
    /// `ceil(log2 N) + 1`
    #[default]
    Sturges,
    /// `ceil((hi - lo) / (2 * IQR * N^(-1/3)))`, clamped to `[1, N]`.
    FreedmanDiaconis,
}

impl std::str::FromStr for BinStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal_proportion" => Ok(Self::EqualProportion),
            "equal_width" => Ok(Self::EqualWidth),
            "kbins" => Ok(Self::Kbins),
            other => Err(Error::param(
                "binning",
                format!("unknown strategy `{other}` (equal_proportion, equal_width, kbins)"),
            )),
        }
    }
}

impl std::str::FromStr for BinRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sturges" => Ok(Self::Sturges),
            "fd" | "freedman_diaconis" => Ok(Self::FreedmanDiaconis),
            n => match n.parse::<usize>() {
                Ok(0) | Err(_) => Err(Error::param(
                    "bins",
                    format!("expected sturges, fd or a positive integer, got `{n}`"),
                )),
                Ok(k) => Ok(Self::Explicit(k)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub feature: String,
    pub lo: f64,
    pub hi: f64,
    pub endpoints: Vec<f64>,
    pub strategy: BinStrategy,
    pub bin_rule: BinRule,
    /// Set when Freedman-Diaconis hit a zero IQR and Sturges was used instead.
    pub fallback_applied: bool,
    pub requested_bins: usize,
    pub realized_bins: usize,
}

impl BinningSpec {
    /// Checks the endpoint invariants. Specs read from disk or the wire should
    /// pass through here before use.
    pub fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::param("binning", format!("invalid range [{}, {}]", self.lo, self.hi)));
        }
        let mut prev = self.lo;
        for &x in &self.endpoints {
            if !x.is_finite() || x <= prev || x >= self.hi {
                return Err(Error::param(
                    "binning",
                    format!("endpoints must be strictly increasing inside ({}, {})", self.lo, self.hi),
                ));
            }
            prev = x;
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        self.endpoints.len() + 1
    }

    /// Index of the bin holding `value`. Out-of-range values clamp.
    pub fn bin_index(&self, value: f64) -> Result<usize> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                feature: self.feature.clone(),
                value,
            });
        }
        Ok(self.endpoints.partition_point(|&x| x < value))
    }

    /// Interval text for bin `index`, e.g. `[1,25]` or `(25,50]`.
    pub fn interval(&self, index: usize) -> String {
        let n = self.endpoints.len();
        let left = if index == 0 { self.lo } else { self.endpoints[index - 1] };
        let right = if index >= n { self.hi } else { self.endpoints[index] };
        let open = if index == 0 { '[' } else { '(' };
        format!("{open}{left},{right}]")
    }
}

/// Bin label for `value`: `feature∈(xi,xi+1]`.
pub fn apply_binning(value: f64, spec: &BinningSpec) -> Result<String> {
    let idx = spec.bin_index(value)?;
    Ok(format!("{}∈{}", spec.feature, spec.interval(idx)))
}

pub fn sturges_bins(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    (n as f64).log2().ceil() as usize + 1
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let below = pos.floor() as usize;
    let above = pos.ceil() as usize;
    let frac = pos - below as f64;
    sorted[below] + (sorted[above] - sorted[below]) * frac
}

fn freedman_diaconis_bins(sorted: &[f64]) -> Option<usize> {
    let n = sorted.len();
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    if iqr <= 0.0 {
        return None;
    }
    let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
    let range = sorted[n - 1] - sorted[0];
    let bins = (range / width).ceil() as usize;
    Some(bins.clamp(1, n))
}

/// Fits a [`BinningSpec`] to `values`.
pub fn compute_bins(
    feature: &str,
    values: &[f64],
    strategy: BinStrategy,
    rule: BinRule,
) -> Result<BinningSpec> {
    if values.is_empty() {
        return Err(Error::EmptyValues);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            feature: feature.to_string(),
            value: bad,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);

    let mut fallback_applied = false;
    let requested = match rule {
        BinRule::Explicit(0) => return Err(Error::param("bins", "bin count must be positive")),
        BinRule::Explicit(k) => k,
        BinRule::Sturges => sturges_bins(n),
        BinRule::FreedmanDiaconis => match freedman_diaconis_bins(&sorted) {
            Some(k) => k,
            None => {
                fallback_applied = true;
                sturges_bins(n)
            }
        },
    };

    let raw = if lo == hi || requested == 1 {
        Vec::new()
    } else {
        match strategy {
            BinStrategy::EqualProportion => (1..requested)
                .map(|k| {
                    let rank = (k * n).div_ceil(requested);
                    sorted[rank.max(1) - 1]
                })
                .collect(),
            BinStrategy::EqualWidth => {
                let width = (hi - lo) / requested as f64;
                (1..requested).map(|k| lo + width * k as f64).collect()
            }
            BinStrategy::Kbins => {
                let centers = kmeans_centers(&sorted, requested);
                centers.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            }
        }
    };

    let mut endpoints: Vec<f64> = Vec::with_capacity(raw.len());
    for x in raw {
        let above_prev = endpoints.last().map_or(x > lo, |&p| x > p);
        if above_prev && x < hi {
            endpoints.push(x);
        }
    }

    Ok(BinningSpec {
        feature: feature.to_string(),
        lo,
        hi,
        realized_bins: endpoints.len() + 1,
        endpoints,
        strategy,
        bin_rule: rule,
        fallback_applied,
        requested_bins: requested,
    })
}

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-6;

/// Final 1-D k-means centers for `values`, ascending and de-duplicated.
///
/// Centers are seeded at the values of rank `floor((i + 0.5) * N / k)`. Ties
/// in assignment go to the lower center; a center that loses all its values
/// keeps its previous position.
pub fn kmeans_centers(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let mut centers: Vec<f64> = (0..k)
        .map(|i| sorted[(((2 * i + 1) * n) / (2 * k)).min(n - 1)])
        .collect();
    centers.dedup();

    let mut sums = vec![0.0; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for _ in 0..KMEANS_MAX_ITER {
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for &v in &sorted {
            let c = nearest_center(&centers, v);
            sums[c] += v;
            counts[c] += 1;
        }
        let mut shift: f64 = 0.0;
        for (i, c) in centers.iter_mut().enumerate() {
            if counts[i] > 0 {
                let next = sums[i] / counts[i] as f64;
                shift = shift.max((next - *c).abs());
                *c = next;
            }
        }
        centers.sort_by(f64::total_cmp);
        if shift < KMEANS_TOL {
            break;
        }
    }
    centers.dedup();
    centers
}

/// Nearest center to `v` over an ascending center list, ties toward the lower one.
pub(crate) fn nearest_center(centers: &[f64], v: f64) -> usize {
    let mut best = 0;
    let mut best_dist = (v - centers[0]).abs();
    for (i, &c) in centers.iter().enumerate().skip(1) {
        let d = (v - c).abs();
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_to_hundred() -> Vec<f64> {
        (1..=100).map(f64::from).collect()
    }

    #[test]
    fn constant_input_gives_single_bin() {
        for strategy in [BinStrategy::EqualProportion, BinStrategy::EqualWidth, BinStrategy::Kbins] {
            let spec = compute_bins("x", &[5.0; 10], strategy, BinRule::Sturges).unwrap();
            assert!(spec.endpoints.is_empty());
            assert_eq!((spec.lo, spec.hi), (5.0, 5.0));
            assert_eq!(apply_binning(5.0, &spec).unwrap(), "x∈[5,5]");
        }
    }

    #[test]
    fn equal_proportion_quartiles() {
        let values = one_to_hundred();
        let spec =
            compute_bins("x", &values, BinStrategy::EqualProportion, BinRule::Explicit(4)).unwrap();
        assert_eq!(spec.endpoints, vec![25.0, 50.0, 75.0]);
        let mut counts = [0; 4];
        for v in &values {
            counts[spec.bin_index(*v).unwrap()] += 1;
        }
        assert_eq!(counts, [25; 4]);
    }

    #[test]
    fn sturges_for_64_values() {
        assert_eq!(sturges_bins(64), 7);
        let values: Vec<f64> = (0..64).map(f64::from).collect();
        let spec = compute_bins("x", &values, BinStrategy::EqualWidth, BinRule::Sturges).unwrap();
        assert_eq!(spec.requested_bins, 7);
        assert_eq!(spec.realized_bins, 7);
    }

    #[test]
    fn freedman_diaconis_falls_back_on_zero_iqr() {
        let mut values = vec![3.0; 20];
        values.push(10.0);
        let spec =
            compute_bins("x", &values, BinStrategy::EqualWidth, BinRule::FreedmanDiaconis).unwrap();
        assert!(spec.fallback_applied);
        assert_eq!(spec.requested_bins, sturges_bins(21));

        let spec = compute_bins(
            "x",
            &one_to_hundred(),
            BinStrategy::EqualWidth,
            BinRule::FreedmanDiaconis,
        )
        .unwrap();
        assert!(!spec.fallback_applied);
        // IQR 49.5, width 2*49.5*100^(-1/3) = 21.33.., range 99 -> 5 bins
        assert_eq!(spec.requested_bins, 5);
    }

    #[test]
    fn apply_boundaries() {
        let spec =
            compute_bins("x", &one_to_hundred(), BinStrategy::EqualProportion, BinRule::Explicit(4))
                .unwrap();
        assert_eq!(apply_binning(50.0, &spec).unwrap(), "x∈(25,50]");
        assert_eq!(apply_binning(1.0, &spec).unwrap(), "x∈[1,25]");
        assert_eq!(apply_binning(100.0, &spec).unwrap(), "x∈(75,100]");
        assert_eq!(apply_binning(-7.0, &spec).unwrap(), "x∈[1,25]");
        assert_eq!(apply_binning(1e9, &spec).unwrap(), "x∈(75,100]");
        assert!(apply_binning(f64::NAN, &spec).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compute_bins("x", &[], BinStrategy::EqualWidth, BinRule::Sturges),
            Err(Error::EmptyValues)
        ));
        assert!(compute_bins("x", &[1.0, f64::INFINITY], BinStrategy::EqualWidth, BinRule::Sturges)
            .is_err());
        assert!(compute_bins("x", &[1.0, 2.0], BinStrategy::EqualWidth, BinRule::Explicit(0)).is_err());
    }

    #[test]
    fn duplicate_cut_points_merge() {
        let values = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        let spec =
            compute_bins("x", &values, BinStrategy::EqualProportion, BinRule::Explicit(4)).unwrap();
        assert_eq!(spec.requested_bins, 4);
        assert!(spec.realized_bins < 4);
        spec.validate().unwrap();
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("sturges".parse::<BinRule>().unwrap(), BinRule::Sturges);
        assert_eq!("fd".parse::<BinRule>().unwrap(), BinRule::FreedmanDiaconis);
        assert_eq!("6".parse::<BinRule>().unwrap(), BinRule::Explicit(6));
        assert!("0".parse::<BinRule>().is_err());
        assert!("kbins".parse::<BinStrategy>().is_ok());
    }

    #[test]
    fn spec_json_shape() {
        let spec = compute_bins("mem", &[0.0, 512.0], BinStrategy::EqualWidth, BinRule::Explicit(2))
            .unwrap();
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["feature"], "mem");
        assert_eq!(v["endpoints"], serde_json::json!([256.0]));
        assert_eq!(v["strategy"], "equal_width");
        assert_eq!(v["bin_rule"], serde_json::json!({"explicit": 2}));
        assert_eq!(v["fallback_applied"], false);
    }

    fn strategy() -> impl Strategy<Value = BinStrategy> {
        prop_oneof![
            Just(BinStrategy::EqualProportion),
            Just(BinStrategy::EqualWidth),
            Just(BinStrategy::Kbins)
        ]
    }

    fn rule() -> impl Strategy<Value = BinRule> {
        prop_oneof![
            (1usize..12).prop_map(BinRule::Explicit),
            Just(BinRule::Sturges),
            Just(BinRule::FreedmanDiaconis)
        ]
    }

    #[test]
    fn single_value_bins_cannot_isolate_the_minimum() {
        // The first endpoint must exceed lo, so a cut at the minimum is dropped.
        let spec = compute_bins("x", &[0.0, 1.0, 2.0, 3.0], BinStrategy::EqualProportion, BinRule::Explicit(4))
            .unwrap();
        assert_eq!(spec.endpoints, vec![1.0, 2.0]);
        assert_eq!(spec.realized_bins, 3);
    }

    proptest! {
        #[test]
        fn partition_and_monotonicity(
            values in prop::collection::vec(-1e3f64..1e3, 1..80),
            probes in prop::collection::vec(-1.5e3f64..1.5e3, 1..40),
            strategy in strategy(),
            rule in rule(),
        ) {
            let spec = compute_bins("f", &values, strategy, rule).unwrap();
            spec.validate().unwrap();
            prop_assert_eq!(spec.realized_bins, spec.bin_count());
            let mut probes = probes;
            probes.extend_from_slice(&values);
            for &v in &probes {
                // exactly one bin contains v (after clamping into range)
                let c = v.clamp(spec.lo, spec.hi);
                let bounds: Vec<f64> = std::iter::once(spec.lo)
                    .chain(spec.endpoints.iter().copied())
                    .chain(std::iter::once(spec.hi))
                    .collect();
                let hits = (0..spec.bin_count())
                    .filter(|&i| {
                        let (l, r) = (bounds[i], bounds[i + 1]);
                        if i == 0 { l <= c && c <= r } else { l < c && c <= r }
                    })
                    .count();
                prop_assert_eq!(hits, 1);
                prop_assert_eq!(
                    (0..spec.bin_count()).find(|&i| {
                        let (l, r) = (bounds[i], bounds[i + 1]);
                        if i == 0 { l <= c && c <= r } else { l < c && c <= r }
                    }).unwrap(),
                    spec.bin_index(v).unwrap()
                );
            }
            probes.sort_by(f64::total_cmp);
            for w in probes.windows(2) {
                prop_assert!(spec.bin_index(w[0]).unwrap() <= spec.bin_index(w[1]).unwrap());
            }
        }

        #[test]
        fn equal_proportion_exact_counts(n_bins in 1usize..10, per_bin in 2usize..15, offset in -50i32..50) {
            let n = n_bins * per_bin;
            let values: Vec<f64> = (0..n).map(|i| f64::from(offset) + i as f64 * 0.5).collect();
            let spec = compute_bins("f", &values, BinStrategy::EqualProportion, BinRule::Explicit(n_bins)).unwrap();
            let mut counts = vec![0usize; spec.bin_count()];
            for &v in &values {
                counts[spec.bin_index(v).unwrap()] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c == per_bin), "{:?}", counts);
        }

        #[test]
        fn equal_proportion_ties_bounded(values in prop::collection::vec(0u8..12, 2..90), n_bins in 2usize..8) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            let spec = compute_bins("f", &values, BinStrategy::EqualProportion, BinRule::Explicit(n_bins)).unwrap();
            let n = values.len();
            let max_mult = (0u8..12).map(|k| values.iter().filter(|&&v| v == f64::from(k)).count()).max().unwrap();
            let mut counts = vec![0usize; spec.bin_count()];
            for &v in &values {
                counts[spec.bin_index(v).unwrap()] += 1;
            }
            if spec.realized_bins == n_bins {
                let target = n as f64 / n_bins as f64;
                for &c in &counts {
                    prop_assert!((c as f64 - target).abs() <= max_mult as f64, "{:?} target {}", counts, target);
                }
            }
        }

        #[test]
        fn equal_width_uniform(values in prop::collection::vec(-1e4f64..1e4, 2..50), k in 2usize..20) {
            let spec = compute_bins("f", &values, BinStrategy::EqualWidth, BinRule::Explicit(k)).unwrap();
            if spec.hi > spec.lo {
                let bounds: Vec<f64> = std::iter::once(spec.lo)
                    .chain(spec.endpoints.iter().copied())
                    .chain(std::iter::once(spec.hi))
                    .collect();
                let widths: Vec<f64> = bounds.windows(2).map(|w| w[1] - w[0]).collect();
                let expected = (spec.hi - spec.lo) / k as f64;
                for w in &widths {
                    prop_assert!(((w - expected) / expected).abs() < 1e-9, "{:?}", widths);
                }
            }
        }

        #[test]
        fn kbins_is_voronoi(values in prop::collection::vec(-1e3f64..1e3, 1..60), k in 1usize..8) {
            let spec = compute_bins("f", &values, BinStrategy::Kbins, BinRule::Explicit(k)).unwrap();
            let centers = kmeans_centers(&values, k);
            prop_assert_eq!(spec.bin_count(), centers.len().max(1));
            for &v in &values {
                let own = spec.bin_index(v).unwrap();
                let d_own = (v - centers[own]).abs();
                for (j, c) in centers.iter().enumerate() {
                    let d = (v - c).abs();
                    prop_assert!(d_own <= d + 1e-9 * (1.0 + v.abs()), "v={} own={} j={}", v, own, j);
                    if j < own {
                        // ties break toward the lower bin
                        prop_assert!(d > d_own - 1e-9 * (1.0 + v.abs()));
                    }
                }
            }
        }
    }
}
