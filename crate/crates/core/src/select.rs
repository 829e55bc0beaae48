//! Diversity-aware greedy selection with adaptive stopping.
//!
//! The objective combines two diminishing-returns terms for each candidate
//! `j` given the current selection `S`:
//!
//! * the facility-location gain `F(S + j) - F(S)` with
//!   `F(S) = sum_u v_u max_{s in S} k(u, s)`, and
//! * the region gain `r / ((c + t)(c + t + 1))` of the region `j` falls in,
//!   where `c` is the region's real coverage and `t` the number of picks it
//!   has already received.
//!
//! Selection stops once the best remaining combined gain drops below the
//! threshold `eta`, so the number of picks is decided by the pool.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::geometry::{squared_euclidean, SimilarityMatrix};
use crate::rng::{self, stream};

pub const KMEANS_ITERATIONS: usize = 50;

/// Regions of candidate space with their real coverage and pick counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    /// Region index of every candidate.
    pub assignment: Vec<usize>,
    /// Real points per region plus one.
    pub coverage: Vec<f64>,
    /// Picks made so far per region.
    pub picks: Vec<usize>,
    /// Mean candidate importance per region (0 for a region with no candidates).
    pub importance: Vec<f64>,
}

impl RegionTable {
    pub fn n_regions(&self) -> usize {
        self.coverage.len()
    }

    /// Region gain of candidate `j` at the current pick counts.
    pub fn gain_for(&self, j: usize) -> f64 {
        let g = self.assignment[j];
        marginal_gain(self.importance[g], self.coverage[g], self.picks[g])
    }
}

/// Gain of one more pick in a region: `r / ((c + t)(c + t + 1))`.
pub fn marginal_gain(r: f64, c: f64, t: usize) -> f64 {
    let base = c + t as f64;
    r / (base * (base + 1.0))
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_euclidean(c, x);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// k-means on candidate features (k-means++ seeding, fixed Lloyd iterations).
/// Returns the centroids. Empty clusters keep their previous centroid.
pub fn kmeans(features: &FeatureMatrix, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = features.n_rows();
    if k == 0 || k > n {
        return Err(Error::Precondition(format!(
            "number of regions must lie in 1..={n}, got {k}"
        )));
    }
    let mut rng = rng::seeded(seed, stream::KMEANS);
    let first = ((rng::uniform(&mut rng) * n as f64) as usize).min(n - 1);
    let mut centroids = vec![features.row(first).to_vec()];
    let mut d2: Vec<f64> = features
        .rows()
        .map(|x| squared_euclidean(x, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng::uniform(&mut rng) * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All points coincide with existing centroids.
            centroids.len() % n
        };
        centroids.push(features.row(next).to_vec());
        let c = centroids.last().unwrap();
        for (x, d) in features.rows().zip(d2.iter_mut()) {
            *d = d.min(squared_euclidean(x, c));
        }
    }

    let dim = features.n_cols();
    let mut assignment = vec![0usize; n];
    for iteration in 0..KMEANS_ITERATIONS {
        let mut changed = false;
        for (i, x) in features.rows().enumerate() {
            let a = nearest(&centroids, x);
            changed |= a != assignment[i];
            assignment[i] = a;
        }
        if iteration > 0 && !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &a) in features.rows().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(x) {
                *s += v;
            }
        }
        for ((c, s), &cnt) in centroids.iter_mut().zip(sums).zip(&counts) {
            if cnt > 0 {
                *c = s.into_iter().map(|v| v / cnt as f64).collect();
            }
        }
    }
    Ok(centroids)
}

/// Partitions candidate space with k-means and tallies real coverage.
pub fn build_regions(
    real: &FeatureMatrix,
    candidates: &FeatureMatrix,
    importance: &[f64],
    n_regions: usize,
    seed: u64,
) -> Result<RegionTable> {
    if importance.len() != candidates.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: candidates.n_rows(),
            actual: importance.len(),
            context: "importance per candidate",
        });
    }
    if real.n_cols() != candidates.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: candidates.n_cols(),
            actual: real.n_cols(),
            context: "real feature dimension",
        });
    }
    let centroids = kmeans(candidates, n_regions, seed)?;
    let assignment: Vec<usize> = candidates.rows().map(|x| nearest(&centroids, x)).collect();
    let mut coverage = vec![1.0; n_regions];
    for x in real.rows() {
        coverage[nearest(&centroids, x)] += 1.0;
    }
    let mut sums = vec![0.0; n_regions];
    let mut counts = vec![0usize; n_regions];
    for (&a, &r) in assignment.iter().zip(importance) {
        sums[a] += r;
        counts[a] += 1;
    }
    let importance = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(RegionTable {
        assignment,
        coverage,
        picks: vec![0; n_regions],
        importance,
    })
}

/// Stopping threshold from the knee of a gain curve sorted in descending
/// order. Both axes are rescaled to [0, 1] and the knee is the interior point
/// lying furthest below the chord joining the first and last points (earliest
/// index on ties). A flat curve gives its common value; curves shorter than
/// three points give zero, which accepts every positive gain.
pub fn select_eta(sorted_gains_desc: &[f64]) -> f64 {
    let g = sorted_gains_desc;
    if g.len() < 3 {
        return 0.0;
    }
    let (first, last) = (g[0], g[g.len() - 1]);
    let span = first - last;
    if !(span > 0.0) {
        return g[1].max(0.0);
    }
    let steps = (g.len() - 1) as f64;
    let mut best = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for (i, &gi) in g.iter().enumerate().take(g.len() - 1).skip(1) {
        let chord = 1.0 - i as f64 / steps;
        let gap = chord - (gi - last) / span;
        if gap > best_gap {
            best_gap = gap;
            best = i;
        }
    }
    g[best].max(0.0)
}

/// `F(S) = sum_u v_u max_{s in S} k(u, s)`, zero for the empty set.
pub fn facility_value(values: &[f64], sim: &SimilarityMatrix, selected: &[usize]) -> f64 {
    if selected.is_empty() {
        return 0.0;
    }
    values
        .iter()
        .enumerate()
        .map(|(u, v)| {
            v * selected
                .iter()
                .map(|&s| sim.get(u, s))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

/// `F(S + j) - F(S)` given the current per-candidate cover `max_{s in S} k(u, s)`.
pub fn facility_gain(values: &[f64], sim: &SimilarityMatrix, cover: &[f64], j: usize) -> f64 {
    sim.row(j)
        .iter()
        .zip(values)
        .zip(cover)
        .map(|((k, v), c)| v * (k - c).max(0.0))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParts {
    pub facility: f64,
    pub region: f64,
}

impl GainParts {
    pub fn combined(&self) -> f64 {
        self.facility + self.region
    }
}

/// Gains of every candidate against the empty selection.
pub fn initial_gains(values: &[f64], sim: &SimilarityMatrix, regions: &RegionTable) -> Vec<GainParts> {
    let cover = vec![0.0; values.len()];
    (0..values.len())
        .map(|j| GainParts {
            facility: facility_gain(values, sim, &cover, j),
            region: regions.gain_for(j),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainStep {
    pub step: usize,
    pub candidate: usize,
    pub facility_gain: f64,
    pub region_gain: f64,
    pub combined_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Best remaining gain fell below the threshold (or was not positive).
    Threshold,
    Budget,
    /// Every candidate was picked.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    pub selected: Vec<usize>,
    /// `max_{s in S} k(u, s)` for every candidate `u`.
    pub cover: Vec<f64>,
    pub gains_log: Vec<GainStep>,
    pub eta: f64,
    pub stop_reason: StopReason,
    /// Best gain at the moment selection stopped on the threshold.
    pub rejected_gain: Option<f64>,
    /// Final pick counts per region.
    pub region_picks: Vec<usize>,
}

fn accepts(gain: f64, eta: f64) -> bool {
    gain >= eta && gain > 0.0
}

fn check_inputs(values: &[f64], sim: &SimilarityMatrix, regions: &RegionTable) -> Result<()> {
    if sim.len() != values.len() || regions.assignment.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            actual: sim.len().min(regions.assignment.len()),
            context: "candidates in similarity matrix / region table",
        });
    }
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Precondition("candidate values must be finite and >= 0".into()));
    }
    Ok(())
}

struct Bound {
    gain: f64,
    candidate: usize,
    stamp: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    // Max-heap on gain; lower candidate index first on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.candidate.cmp(&self.candidate))
    }
}

struct Progress {
    selected: Vec<usize>,
    cover: Vec<f64>,
    log: Vec<GainStep>,
    regions: RegionTable,
}

impl Progress {
    fn new(n: usize, regions: &RegionTable) -> Self {
        let mut regions = regions.clone();
        regions.picks.iter_mut().for_each(|t| *t = 0);
        Self {
            selected: Vec::new(),
            cover: vec![0.0; n],
            log: Vec::new(),
            regions,
        }
    }

    fn gain(&self, values: &[f64], sim: &SimilarityMatrix, j: usize) -> GainParts {
        GainParts {
            facility: facility_gain(values, sim, &self.cover, j),
            region: self.regions.gain_for(j),
        }
    }

    fn take(&mut self, sim: &SimilarityMatrix, j: usize, parts: GainParts) {
        self.log.push(GainStep {
            step: self.selected.len(),
            candidate: j,
            facility_gain: parts.facility,
            region_gain: parts.region,
            combined_gain: parts.combined(),
        });
        self.selected.push(j);
        for (c, k) in self.cover.iter_mut().zip(sim.row(j)) {
            *c = c.max(*k);
        }
        self.regions.picks[self.regions.assignment[j]] += 1;
    }

    fn finish(self, eta: f64, stop_reason: StopReason, rejected_gain: Option<f64>) -> SelectionState {
        SelectionState {
            selected: self.selected,
            cover: self.cover,
            gains_log: self.log,
            eta,
            stop_reason,
            rejected_gain,
            region_picks: self.regions.picks,
        }
    }
}

/// Lazy greedy: stale gains stay in a max-heap as upper bounds and are only
/// re-evaluated when they reach the top. Both gain terms only shrink as the
/// selection grows, so the result matches [`naive_greedy_select`] exactly.
pub fn greedy_select(
    values: &[f64],
    sim: &SimilarityMatrix,
    regions: &RegionTable,
    eta: f64,
    max_budget: Option<usize>,
) -> Result<SelectionState> {
    check_inputs(values, sim, regions)?;
    let n = values.len();
    let budget = max_budget.unwrap_or(n).min(n);
    let mut state = Progress::new(n, regions);
    let mut heap: BinaryHeap<Bound> = (0..n)
        .map(|j| Bound {
            gain: state.gain(values, sim, j).combined(),
            candidate: j,
            stamp: 0,
        })
        .collect();

    loop {
        if state.selected.len() >= budget {
            let reason = if budget == n { StopReason::Exhausted } else { StopReason::Budget };
            return Ok(state.finish(eta, reason, None));
        }
        let Some(top) = heap.pop() else {
            return Ok(state.finish(eta, StopReason::Exhausted, None));
        };
        let step = state.selected.len();
        if top.stamp == step {
            if !accepts(top.gain, eta) {
                return Ok(state.finish(eta, StopReason::Threshold, Some(top.gain)));
            }
            let parts = state.gain(values, sim, top.candidate);
            state.take(sim, top.candidate, parts);
        } else {
            heap.push(Bound {
                gain: state.gain(values, sim, top.candidate).combined(),
                candidate: top.candidate,
                stamp: step,
            });
        }
    }
}

/// Reference greedy that re-evaluates every remaining candidate each step.
pub fn naive_greedy_select(
    values: &[f64],
    sim: &SimilarityMatrix,
    regions: &RegionTable,
    eta: f64,
    max_budget: Option<usize>,
) -> Result<SelectionState> {
    check_inputs(values, sim, regions)?;
    let n = values.len();
    let budget = max_budget.unwrap_or(n).min(n);
    let mut state = Progress::new(n, regions);
    let mut taken = vec![false; n];
    while state.selected.len() < budget {
        let mut best: Option<(usize, GainParts)> = None;
        for j in (0..n).filter(|&j| !taken[j]) {
            let parts = state.gain(values, sim, j);
            if best.is_none_or(|(_, b)| parts.combined() > b.combined()) {
                best = Some((j, parts));
            }
        }
        let Some((j, parts)) = best else { break };
        if !accepts(parts.combined(), eta) {
            return Ok(state.finish(eta, StopReason::Threshold, Some(parts.combined())));
        }
        taken[j] = true;
        state.take(sim, j, parts);
    }
    let reason = if budget == n { StopReason::Exhausted } else { StopReason::Budget };
    Ok(state.finish(eta, reason, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::KernelSpec;

    fn one_region(n: usize, r: f64) -> RegionTable {
        RegionTable {
            assignment: vec![0; n],
            coverage: vec![1.0],
            picks: vec![0],
            importance: vec![r],
        }
    }

    #[test]
    fn marginal_gain_values() {
        assert!((marginal_gain(1.0, 1.0, 0) - 0.5).abs() < 1e-15);
        assert!((marginal_gain(1.0, 1.0, 1) - 1.0 / 6.0).abs() < 1e-15);
        for t in 0..20 {
            assert!(marginal_gain(0.3, 2.5, t + 1) < marginal_gain(0.3, 2.5, t));
        }
    }

    #[test]
    fn eta_from_knee() {
        assert_eq!(select_eta(&[1.0, 0.9, 0.1, 0.09, 0.08]), 0.1);
        assert_eq!(select_eta(&[0.4; 6]), 0.4);
        assert_eq!(select_eta(&[3.0, 1.0]), 0.0);
        assert_eq!(select_eta(&[]), 0.0);
    }

    #[test]
    fn zero_values_select_nothing() {
        let f = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let sim = KernelSpec::new(1.0).unwrap().matrix(&f);
        let regions = one_region(3, 0.0);
        let eta = select_eta(&[0.0, 0.0, 0.0]);
        let s = greedy_select(&[0.0; 3], &sim, &regions, eta, None).unwrap();
        assert!(s.selected.is_empty());
        assert_eq!(s.stop_reason, StopReason::Threshold);
    }

    #[test]
    fn duplicates_only_add_region_term() {
        let f = FeatureMatrix::from_rows(&[vec![0.0], vec![0.0], vec![10.0]]).unwrap();
        let sim = KernelSpec::new(1.0).unwrap().matrix(&f);
        let regions = one_region(3, 0.2);
        let v = [1.0, 1.0, 0.0];
        let s = greedy_select(&v, &sim, &regions, 0.0, Some(2)).unwrap();
        assert_eq!(s.selected[0], 0);
        assert_eq!(s.selected[1], 1);
        assert_eq!(s.gains_log[1].facility_gain, 0.0);
        assert!((s.gains_log[1].region_gain - marginal_gain(0.2, 1.0, 1)).abs() < 1e-15);
    }

    #[test]
    fn budget_caps_selection() {
        let f = FeatureMatrix::from_rows(&[vec![0.0], vec![5.0], vec![10.0]]).unwrap();
        let sim = KernelSpec::new(1.0).unwrap().matrix(&f);
        let s = greedy_select(&[1.0, 2.0, 3.0], &sim, &one_region(3, 0.0), 0.0, Some(2)).unwrap();
        assert_eq!(s.selected, vec![2, 1]);
        assert_eq!(s.stop_reason, StopReason::Budget);
    }

    #[test]
    fn regions_for_two_blobs() {
        let mut rows = Vec::new();
        for i in 0..20 {
            let jitter = (i as f64 * 0.37).sin() * 0.1;
            rows.push(vec![jitter, jitter * 0.5]);
            rows.push(vec![10.0 + jitter, 10.0 - jitter]);
        }
        let cand = FeatureMatrix::from_rows(&rows).unwrap();
        let real = FeatureMatrix::from_rows(&[vec![0.1, 0.0], vec![9.9, 10.0], vec![10.2, 9.8]]).unwrap();
        let r: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let t = build_regions(&real, &cand, &r, 2, 3).unwrap();
        let a0 = t.assignment[0];
        let a1 = t.assignment[1];
        assert_ne!(a0, a1);
        for i in 0..40 {
            assert_eq!(t.assignment[i], if i % 2 == 0 { a0 } else { a1 });
        }
        assert_eq!(t.coverage[a0], 2.0);
        assert_eq!(t.coverage[a1], 3.0);
        assert_eq!(t.importance[a0], 1.0);
        assert_eq!(t.importance[a1], 0.0);
        assert_eq!(t, build_regions(&real, &cand, &r, 2, 3).unwrap());
    }

    #[test]
    fn single_region_coverage() {
        let cand = FeatureMatrix::from_rows(&[vec![0.0], vec![3.0], vec![7.0]]).unwrap();
        let real = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let t = build_regions(&real, &cand, &[0.1, 0.2, 0.3], 1, 0).unwrap();
        assert_eq!(t.assignment, vec![0, 0, 0]);
        assert_eq!(t.coverage, vec![3.0]);
        assert!((t.importance[0] - 0.2).abs() < 1e-15);
    }
}
