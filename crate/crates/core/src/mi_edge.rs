//! Hash-based dependence estimator over an ensemble of grid bandwidths.
//!
//! Each sample is a time-aligned pair of 2-D positions. For every bandwidth
//! `eps` the positions are quantized to integer cells `floor((p - p0) / eps)`,
//! where `p0` is the first sample of the same stream, and three count tables
//! are kept: X cells, Y cells and joint cells. Anchoring the grid at the
//! first sample makes the estimate independent of where the pair sits in the
//! scene. The
//! per-bandwidth estimate is
//!
//! ```text
//! sum over occupied joint cells (i, j) of  (N_ij / n) * g(N_ij * n / (N_i * M_j))
//! ```
//!
//! with `g(t) = (t - 1)^2 / (2 (t + 1))`, and the final value is the weighted
//! sum over bandwidths. Counting is incremental, so evaluating the estimate
//! after every new sample costs one pass over the occupied cells.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(t - 1)^2 / (2 (t + 1))` for `t >= 0`.
pub fn g_divergence(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("g(t) requires t >= 0, got {t}")));
    }
    Ok(g_unchecked(t))
}

#[inline]
fn g_unchecked(t: f64) -> f64 {
    let d = t - 1.0;
    d * d / (2.0 * (t + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePair {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl SamplePair {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> Self {
        SamplePair { x, y }
    }

    pub fn swapped(self) -> Self {
        SamplePair { x: self.y, y: self.x }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiConfig {
    /// Grid widths in pixels.
    pub bandwidths: Vec<f64>,
    /// Ensemble weights; uniform when empty. Normalized to sum to 1.
    pub weights: Vec<f64>,
    pub min_samples: usize,
}

impl Default for MiConfig {
    fn default() -> Self {
        MiConfig {
            bandwidths: vec![64.0, 128.0, 256.0, 512.0],
            weights: Vec::new(),
            min_samples: 10,
        }
    }
}

impl MiConfig {
    pub fn validate(&self) -> Result<()> {
        self.normalized_weights().map(|_| ())
    }

    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        if self.bandwidths.is_empty() {
            return Err(Error::Config("at least one bandwidth is required".into()));
        }
        if let Some(b) = self.bandwidths.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Config(format!(
                "bandwidths must be positive and finite, got {b}"
            )));
        }
        if self.weights.is_empty() {
            let m = self.bandwidths.len() as f64;
            return Ok(vec![1.0 / m; self.bandwidths.len()]);
        }
        if self.weights.len() != self.bandwidths.len() {
            return Err(Error::Config(format!(
                "{} weights for {} bandwidths",
                self.weights.len(),
                self.bandwidths.len()
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("weights must be non-negative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Config("weights must not all be zero".into()));
        }
        Ok(self.weights.iter().map(|w| w / total).collect())
    }
}

type Cell = [i64; 2];

/// Count tables for one bandwidth.
#[derive(Debug, Clone)]
struct CellCounts {
    eps: f64,
    x_index: HashMap<Cell, usize>,
    x_counts: Vec<u64>,
    y_index: HashMap<Cell, usize>,
    y_counts: Vec<u64>,
    joint_index: HashMap<(usize, usize), usize>,
    /// `(x cell, y cell, count)` in first-seen order.
    joint: Vec<(usize, usize, u64)>,
}

impl CellCounts {
    fn new(eps: f64) -> Self {
        CellCounts {
            eps,
            x_index: HashMap::new(),
            x_counts: Vec::new(),
            y_index: HashMap::new(),
            y_counts: Vec::new(),
            joint_index: HashMap::new(),
            joint: Vec::new(),
        }
    }

    fn quantize(&self, p: [f64; 2], origin: [f64; 2]) -> Cell {
        [
            ((p[0] - origin[0]) / self.eps).floor() as i64,
            ((p[1] - origin[1]) / self.eps).floor() as i64,
        ]
    }

    fn bump(index: &mut HashMap<Cell, usize>, counts: &mut Vec<u64>, cell: Cell) -> usize {
        let i = *index.entry(cell).or_insert_with(|| {
            counts.push(0);
            counts.len() - 1
        });
        counts[i] += 1;
        i
    }

    fn push(&mut self, pair: &SamplePair, origin: &SamplePair) {
        let xc = self.quantize(pair.x, origin.x);
        let yc = self.quantize(pair.y, origin.y);
        let i = Self::bump(&mut self.x_index, &mut self.x_counts, xc);
        let j = Self::bump(&mut self.y_index, &mut self.y_counts, yc);
        let joint = &mut self.joint;
        let k = *self.joint_index.entry((i, j)).or_insert_with(|| {
            joint.push((i, j, 0));
            joint.len() - 1
        });
        self.joint[k].2 += 1;
    }

    fn estimate(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.joint
            .iter()
            .map(|&(i, j, nij)| {
                // Integer products keep the ratio identical when X and Y swap.
                let num = (nij as u128 * n as u128) as f64;
                let den = (self.x_counts[i] as u128 * self.y_counts[j] as u128) as f64;
                (nij as f64 / nf) * g_unchecked(num / den)
            })
            .sum()
    }
}

/// Incremental estimator state. Single writer.
#[derive(Debug, Clone)]
pub struct HashMiState {
    tables: Vec<CellCounts>,
    weights: Vec<f64>,
    min_samples: usize,
    origin: Option<SamplePair>,
    n: u64,
}

impl HashMiState {
    pub fn new(cfg: &MiConfig) -> Result<Self> {
        let weights = cfg.normalized_weights()?;
        Ok(HashMiState {
            tables: cfg.bandwidths.iter().map(|&e| CellCounts::new(e)).collect(),
            weights,
            min_samples: cfg.min_samples,
            origin: None,
            n: 0,
        })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn push(&mut self, pair: SamplePair) -> Result<()> {
        if !pair.x.iter().chain(pair.y.iter()).all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample {pair:?}")));
        }
        let origin = *self.origin.get_or_insert(pair);
        for t in &mut self.tables {
            t.push(&pair, &origin);
        }
        self.n += 1;
        Ok(())
    }

    fn check_ready(&self) -> Result<()> {
        if (self.n as usize) < self.min_samples.max(1) {
            return Err(Error::InsufficientData {
                needed: self.min_samples.max(1),
                have: self.n as usize,
            });
        }
        Ok(())
    }

    /// Estimate for each bandwidth, in configuration order.
    pub fn per_bandwidth(&self) -> Result<Vec<f64>> {
        self.check_ready()?;
        Ok(self.tables.iter().map(|t| t.estimate(self.n)).collect())
    }

    pub fn estimate(&self) -> Result<f64> {
        Ok(self
            .per_bandwidth()?
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum())
    }

    /// Number of occupied `(x, y, joint)` cells per bandwidth.
    pub fn occupancy(&self) -> Vec<(usize, usize, usize)> {
        self.tables
            .iter()
            .map(|t| (t.x_counts.len(), t.y_counts.len(), t.joint.len()))
            .collect()
    }

    /// Checks that every table's marginals and joint sum to `n`.
    pub fn marginals_consistent(&self) -> bool {
        self.tables.iter().all(|t| {
            t.x_counts.iter().sum::<u64>() == self.n
                && t.y_counts.iter().sum::<u64>() == self.n
                && t.joint.iter().map(|c| c.2).sum::<u64>() == self.n
        })
    }

    /// Count of the joint cell holding `pair` at bandwidth index `k`.
    pub fn joint_count(&self, k: usize, pair: &SamplePair) -> u64 {
        let (t, Some(o)) = (&self.tables[k], self.origin) else {
            return 0;
        };
        let (Some(&i), Some(&j)) = (
            t.x_index.get(&t.quantize(pair.x, o.x)),
            t.y_index.get(&t.quantize(pair.y, o.y)),
        ) else {
            return 0;
        };
        t.joint_index.get(&(i, j)).map_or(0, |&c| t.joint[c].2)
    }
}

/// Counts every pair afresh and returns the estimate.
pub fn estimate_batch(cfg: &MiConfig, pairs: &[SamplePair]) -> Result<f64> {
    let mut state = HashMiState::new(cfg)?;
    for p in pairs {
        state.push(*p)?;
    }
    state.estimate()
}

/// Estimate after each prefix length in `eval_at`, in one pass.
///
/// `eval_at` holds prefix lengths (number of pairs), strictly increasing,
/// each at most `pairs.len()`.
pub fn mi_prefix_series(cfg: &MiConfig, pairs: &[SamplePair], eval_at: &[usize]) -> Result<Vec<(usize, f64)>> {
    if eval_at.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("evaluation points must be strictly increasing".into()));
    }
    if let Some(&last) = eval_at.last() {
        if last > pairs.len() {
            return Err(Error::Range(format!("prefix {last} exceeds {} samples", pairs.len())));
        }
    }
    let mut state = HashMiState::new(cfg)?;
    let mut out = Vec::with_capacity(eval_at.len());
    let mut pushed = 0;
    for &t in eval_at {
        while pushed < t {
            state.push(pairs[pushed])?;
            pushed += 1;
        }
        out.push((t, state.estimate()?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> MiConfig {
        MiConfig::default()
    }

    #[test]
    fn g_values() {
        assert_eq!(g_divergence(1.0).unwrap(), 0.0);
        assert_eq!(g_divergence(0.0).unwrap(), 0.5);
        assert_eq!(g_divergence(3.0).unwrap(), 0.5);
        assert!(g_divergence(-1e-12).is_err());
        assert!(g_divergence(f64::NAN).is_err());
    }

    #[test]
    fn push_counts() {
        let mut s = HashMiState::new(&cfg()).unwrap();
        let p = SamplePair::new([1.0, 2.0], [3.0, 4.0]);
        s.push(p).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.occupancy().iter().all(|&(x, y, j)| (x, y, j) == (1, 1, 1)));
        assert_eq!(s.joint_count(0, &p), 1);
        s.push(p).unwrap();
        assert_eq!(s.joint_count(0, &p), 2);
        assert!(s.marginals_consistent());
        assert!(s.push(SamplePair::new([f64::INFINITY, 0.0], [0.0, 0.0])).is_err());
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn insufficient_data() {
        let mut s = HashMiState::new(&cfg()).unwrap();
        for _ in 0..9 {
            s.push(SamplePair::new([0.0, 0.0], [0.0, 0.0])).unwrap();
        }
        assert!(matches!(
            s.estimate(),
            Err(Error::InsufficientData { needed: 10, have: 9 })
        ));
        s.push(SamplePair::new([0.0, 0.0], [0.0, 0.0])).unwrap();
        assert_eq!(s.estimate().unwrap(), 0.0);
    }

    #[test]
    fn constant_streams_give_zero() {
        let pairs = vec![SamplePair::new([10.0, 20.0], [300.0, 40.0]); 50];
        let series = mi_prefix_series(&cfg(), &pairs, &[10, 25, 50]).unwrap();
        assert!(series.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(MiConfig {
            bandwidths: vec![],
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(MiConfig {
            bandwidths: vec![0.0],
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(MiConfig {
            weights: vec![1.0],
            ..cfg()
        }
        .validate()
        .is_err());
        let w = MiConfig {
            bandwidths: vec![1.0, 2.0],
            weights: vec![1.0, 3.0],
            min_samples: 10,
        };
        assert_eq!(w.normalized_weights().unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn prefix_series_rejects_bad_eval_points() {
        let pairs = vec![SamplePair::new([0.0, 0.0], [0.0, 0.0]); 20];
        assert!(mi_prefix_series(&cfg(), &pairs, &[12, 11]).is_err());
        assert!(mi_prefix_series(&cfg(), &pairs, &[21]).is_err());
        assert!(mi_prefix_series(&cfg(), &pairs, &[5]).is_err());
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<SamplePair>> {
        prop::collection::vec(
            (prop::array::uniform4(-2000.0f64..2000.0)).prop_map(|a| SamplePair::new([a[0], a[1]], [a[2], a[3]])),
            10..200,
        )
    }

    proptest! {
        #[test]
        fn non_negative_and_symmetric(pairs in arb_pairs()) {
            let a = estimate_batch(&cfg(), &pairs).unwrap();
            let swapped: Vec<_> = pairs.iter().map(|p| p.swapped()).collect();
            let b = estimate_batch(&cfg(), &swapped).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }

        #[test]
        fn incremental_equals_batch(pairs in arb_pairs()) {
            let eval: Vec<usize> = (10..=pairs.len()).collect();
            let series = mi_prefix_series(&cfg(), &pairs, &eval).unwrap();
            for (t, v) in series {
                let batch = estimate_batch(&cfg(), &pairs[..t]).unwrap();
                prop_assert_eq!(v.to_bits(), batch.to_bits());
            }
        }

        #[test]
        fn marginals_sum_to_n(pairs in arb_pairs()) {
            let mut s = HashMiState::new(&cfg()).unwrap();
            for p in pairs {
                s.push(p).unwrap();
                prop_assert!(s.marginals_consistent());
            }
        }

        #[test]
        fn translation_is_exact_on_representable_shifts(pairs in arb_pairs(), kx in -4000i32..4000, ky in -4000i32..4000) {
            // Inputs and shifts on a 1/64 px grid keep every subtraction exact.
            let snap = |v: f64| (v * 64.0).round() / 64.0;
            let pairs: Vec<_> = pairs.iter().map(|p| SamplePair::new(
                [snap(p.x[0]), snap(p.x[1])], [snap(p.y[0]), snap(p.y[1])])).collect();
            let (dx, dy) = (kx as f64 / 4.0, ky as f64 / 16.0);
            let shifted: Vec<_> = pairs.iter().map(|p| SamplePair::new([p.x[0] + dx, p.x[1] + dy], p.y)).collect();
            let a = estimate_batch(&cfg(), &pairs).unwrap();
            let b = estimate_batch(&cfg(), &shifted).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
