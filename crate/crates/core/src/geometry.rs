//! Neighbourhood machinery: brute-force kNN, kNN density, support validity
//! and the Gaussian similarity kernel between candidates.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::score::linear_quantile;

/// Smallest spread allowed in the support-validity calibration.
pub const SUPPORT_SIGMA_FLOOR: f64 = 1e-9;

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Whether a query batch is the reference set itself, in which case each
/// query skips the reference row with the same index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfMatch {
    Include,
    Exclude,
}

/// Exact Euclidean neighbour search over a fixed reference set.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    reference: FeatureMatrix,
}

impl NeighborIndex {
    pub fn new(reference: FeatureMatrix) -> Self {
        Self { reference }
    }

    pub fn len(&self) -> usize {
        self.reference.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.n_rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.reference.n_cols()
    }

    pub fn reference(&self) -> &FeatureMatrix {
        &self.reference
    }

    /// The `k` smallest distances from each query row, ascending. Ties go to
    /// the lower reference index.
    pub fn knn_distances(
        &self,
        query: &FeatureMatrix,
        k: usize,
        self_match: SelfMatch,
    ) -> Result<Vec<Vec<f64>>> {
        if query.n_cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: query.n_cols(),
                context: "neighbour query",
            });
        }
        if self_match == SelfMatch::Exclude && query.n_rows() != self.len() {
            return Err(Error::Precondition(
                "self-excluded queries must be the reference set itself".into(),
            ));
        }
        let available = match self_match {
            SelfMatch::Include => self.len(),
            SelfMatch::Exclude => self.len() - 1,
        };
        if k == 0 || k > available {
            return Err(Error::Precondition(format!(
                "k={k} must lie in 1..={available} (reference points available)"
            )));
        }
        let by_distance_then_index = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(self.len());
        let mut out = Vec::with_capacity(query.n_rows());
        for (qi, q) in query.rows().enumerate() {
            scratch.clear();
            scratch.extend(
                self.reference
                    .rows()
                    .enumerate()
                    .filter(|(ri, _)| self_match == SelfMatch::Include || *ri != qi)
                    .map(|(ri, r)| (euclidean(q, r), ri)),
            );
            if k < scratch.len() {
                scratch.select_nth_unstable_by(k - 1, by_distance_then_index);
                scratch.truncate(k);
            }
            scratch.sort_by(by_distance_then_index);
            out.push(scratch.iter().map(|(d, _)| *d).collect());
        }
        Ok(out)
    }

    /// k-th neighbour distance of every reference point among the others.
    pub fn calibration_distances(&self, k: usize) -> Result<Vec<f64>> {
        Ok(self
            .knn_distances(&self.reference, k, SelfMatch::Exclude)?
            .into_iter()
            .map(|row| row[k - 1])
            .collect())
    }
}

/// Natural log of the volume of the unit ball in `dim` dimensions,
/// `(d/2) ln(pi) - ln Gamma(d/2 + 1)`.
pub fn log_unit_ball_volume(dim: usize) -> f64 {
    // Gamma(d/2 + 1) by the recurrence Gamma(x + 1) = x Gamma(x), starting
    // from Gamma(1) = 1 for even d or Gamma(1/2) = sqrt(pi) for odd d.
    let mut log_gamma = if dim.is_multiple_of(2) {
        0.0
    } else {
        0.5 * std::f64::consts::PI.ln()
    };
    let mut x = if dim.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = dim as f64 / 2.0 + 1.0;
    while x < target - 0.25 {
        log_gamma += x.ln();
        x += 1.0;
    }
    0.5 * dim as f64 * std::f64::consts::PI.ln() - log_gamma
}

/// kNN density `k / (n V_d R_k^d)` of the reference set at each query row,
/// with `n` the reference count and `dim` the exponent `d`.
///
/// A zero k-th distance is replaced by the smallest positive neighbour
/// distance in the batch; values are evaluated in log space and capped at
/// `f64::MAX` so the result is always finite.
pub fn knn_density(
    index: &NeighborIndex,
    query: &FeatureMatrix,
    k: usize,
    dim: usize,
    self_match: SelfMatch,
) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::Precondition("density dimension must be >= 1".into()));
    }
    let dists = index.knn_distances(query, k, self_match)?;
    let smallest_positive = dists
        .iter()
        .flatten()
        .copied()
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let log_norm = (k as f64).ln() - (index.len() as f64).ln() - log_unit_ball_volume(dim);
    Ok(dists
        .iter()
        .map(|row| {
            let mut r = row[k - 1];
            if r <= 0.0 {
                r = smallest_positive;
            }
            if !r.is_finite() {
                return f64::MAX;
            }
            let log_p = log_norm - dim as f64 * r.ln();
            log_p.exp().min(f64::MAX)
        })
        .collect())
}

/// Calibration of the support score from real-to-real k-th distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportCalibration {
    /// Median k-th distance among real points.
    pub rho: f64,
    /// `max(q90 - rho, SUPPORT_SIGMA_FLOOR)`.
    pub sigma: f64,
}

impl SupportCalibration {
    pub fn from_distances(calibration: &[f64]) -> Result<Self> {
        if calibration.is_empty() {
            return Err(Error::Precondition("empty support calibration".into()));
        }
        let rho = linear_quantile(calibration, 0.5)?;
        let q90 = linear_quantile(calibration, 0.9)?;
        Ok(Self {
            rho,
            sigma: (q90 - rho).max(SUPPORT_SIGMA_FLOOR),
        })
    }

    /// `exp(-max(0, d - rho)^2 / (2 sigma^2))`.
    pub fn score(&self, kth_distance: f64) -> f64 {
        let excess = (kth_distance - self.rho).max(0.0);
        (-(excess * excess) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Support validity in `[0, 1]` of each query row: one while the query is as
/// close to the real data as a typical real point, decaying beyond that.
pub fn support_validity(
    index: &NeighborIndex,
    query: &FeatureMatrix,
    k: usize,
    calibration: &[f64],
) -> Result<Vec<f64>> {
    let cal = SupportCalibration::from_distances(calibration)?;
    Ok(index
        .knn_distances(query, k, SelfMatch::Include)?
        .iter()
        .map(|row| cal.score(row[k - 1]))
        .collect())
}

/// Gaussian similarity kernel between candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Precondition(format!(
                "kernel bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Self { bandwidth })
    }

    /// Bandwidth set to the median pairwise distance among `features`.
    /// Falls back to 1 when every pair coincides.
    pub fn median_heuristic(features: &FeatureMatrix) -> Self {
        let n = features.n_rows();
        let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                dists.push(euclidean(features.row(i), features.row(j)));
            }
        }
        let median = if dists.is_empty() {
            0.0
        } else {
            linear_quantile(&dists, 0.5).unwrap_or(0.0)
        };
        let bandwidth = if median > 0.0 {
            median
        } else {
            let positive: Vec<f64> = dists.into_iter().filter(|d| *d > 0.0).collect();
            if positive.is_empty() {
                1.0
            } else {
                positive.iter().sum::<f64>() / positive.len() as f64
            }
        };
        Self { bandwidth }
    }

    pub fn similarity(&self, u: &[f64], j: &[f64]) -> Result<f64> {
        if u.len() != j.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                actual: j.len(),
                context: "kernel arguments",
            });
        }
        Ok(self.at_squared_distance(squared_euclidean(u, j)))
    }

    fn at_squared_distance(&self, sq: f64) -> f64 {
        (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }

    /// Dense symmetric `M x M` similarity matrix, row-major.
    pub fn matrix(&self, features: &FeatureMatrix) -> SimilarityMatrix {
        let n = features.n_rows();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            let ri = features.row(i);
            for j in i + 1..n {
                let s = self.at_squared_distance(squared_euclidean(ri, features.row(j)));
                values[i * n + j] = s;
                values[j * n + i] = s;
            }
        }
        SimilarityMatrix { values, n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Vec<f64>,
    n: usize,
}

impl SimilarityMatrix {
    /// Builds from explicit entries; they must be symmetric and in `[0, 1]`.
    pub fn from_values(values: Vec<f64>, n: usize) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Validation(format!(
                "{} similarity entries for a {n}x{n} matrix",
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let s = values[i * n + j];
                if !(0.0..=1.0).contains(&s) || s != values[j * n + i] {
                    return Err(Error::Validation(format!(
                        "similarity ({i}, {j}) = {s} is not symmetric in [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { values, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}
