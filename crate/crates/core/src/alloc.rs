//! Boundary-gap allocation: per-candidate gap scores
//! `G_j = [sqrt(r_j / lambda) - n p_j]_+` with `lambda` fixed by a total-mass
//! constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LAMBDA_REL_TOL: f64 = 1e-6;
pub const LAMBDA_MAX_ITER: usize = 200;

/// `max(0, sqrt(r / lambda) - coverage)`.
pub fn gap_score(r: f64, coverage: f64, lambda: f64) -> f64 {
    ((r / lambda).sqrt() - coverage).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationSolution {
    pub lambda: f64,
    pub gap_scores: Vec<f64>,
    pub total_mass: f64,
    pub target_mass: f64,
    pub iterations: usize,
}

fn allocated_mass(r: &[f64], coverage: &[f64], lambda: f64) -> f64 {
    r.iter()
        .zip(coverage)
        .map(|(&r, &c)| gap_score(r, c, lambda))
        .sum()
}

/// Finds `lambda` with `sum_j [sqrt(r_j / lambda) - coverage_j]_+ = target_mass`.
///
/// The allocated mass is continuous and strictly decreasing in `lambda`
/// wherever some candidate is active, so bisection on `ln(lambda)` over a
/// bracket that provably straddles the target converges.
pub fn solve_lambda(r: &[f64], coverage: &[f64], target_mass: f64) -> Result<AllocationSolution> {
    if r.len() != coverage.len() {
        return Err(Error::DimensionMismatch {
            expected: r.len(),
            actual: coverage.len(),
            context: "coverage per candidate",
        });
    }
    if !(target_mass > 0.0 && target_mass.is_finite()) {
        return Err(Error::Precondition(format!(
            "target mass must be positive, got {target_mass}"
        )));
    }
    if r.iter().chain(coverage).any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Precondition(
            "importance and coverage must be finite and non-negative".into(),
        ));
    }
    let max_r = r.iter().copied().fold(0.0, f64::max);
    if max_r <= 0.0 {
        return Err(Error::NoPositiveImportance);
    }
    let min_pos_r = r
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let max_c = coverage.iter().copied().fold(0.0, f64::max);

    // At lambda_lo the weakest positive candidate alone already reaches the
    // target. At lambda_hi every sqrt term is at most target / M.
    let lo = min_pos_r / (max_c + target_mass).powi(2);
    let m = r.len() as f64;
    let hi = (max_r * 1e6).max(max_r * (m / target_mass).powi(2));
    let (mut log_lo, mut log_hi) = (lo.ln(), hi.ln());

    let mut lambda = lo;
    let mut mass = allocated_mass(r, coverage, lambda);
    let mut iterations = 0;
    while iterations < LAMBDA_MAX_ITER {
        iterations += 1;
        lambda = (0.5 * (log_lo + log_hi)).exp();
        mass = allocated_mass(r, coverage, lambda);
        if (mass - target_mass).abs() <= 1e-12 * target_mass {
            break;
        }
        if mass > target_mass {
            log_lo = lambda.ln();
        } else {
            log_hi = lambda.ln();
        }
        if log_hi - log_lo <= f64::EPSILON * log_hi.abs().max(1.0) {
            break;
        }
    }

    // Polish with the exact solution for the active set found by bisection.
    let active: Vec<usize> = (0..r.len())
        .filter(|&j| gap_score(r[j], coverage[j], lambda) > 0.0)
        .collect();
    if !active.is_empty() {
        let sqrt_sum: f64 = active.iter().map(|&j| r[j].sqrt()).sum();
        let c_sum: f64 = active.iter().map(|&j| coverage[j]).sum();
        let exact = (sqrt_sum / (target_mass + c_sum)).powi(2);
        let exact_mass = allocated_mass(r, coverage, exact);
        if (exact_mass - target_mass).abs() < (mass - target_mass).abs() {
            lambda = exact;
            mass = exact_mass;
        }
    }

    if (mass - target_mass).abs() > LAMBDA_REL_TOL * target_mass {
        return Err(Error::Precondition(format!(
            "lambda bisection stalled: mass {mass} vs target {target_mass}"
        )));
    }
    Ok(AllocationSolution {
        lambda,
        gap_scores: r
            .iter()
            .zip(coverage)
            .map(|(&r, &c)| gap_score(r, c, lambda))
            .collect(),
        total_mass: mass,
        target_mass,
        iterations,
    })
}

/// Independent check of the closed-form allocation: direct numerical
/// minimisation of the discretised inverse-evidence risk.
pub mod oracle {
    use crate::error::{Error, Result};

    pub const KKT_TOL: f64 = 1e-6;
    pub const MAX_ITER: usize = 1_000_000;

    /// Discretised risk `sum_i w r_i / (n p_i + m q_i)` with `w = 1 / grid`.
    pub fn risk(r: &[f64], p: &[f64], n: f64, m: f64, q: &[f64]) -> f64 {
        let w = 1.0 / r.len() as f64;
        r.iter()
            .zip(p)
            .zip(q)
            .map(|((r, p), q)| w * r / (n * p + m * q))
            .sum()
    }

    /// Euclidean projection onto `{x >= 0, sum x = 1}`.
    pub fn project_simplex(v: &[f64]) -> Vec<f64> {
        let mut u = v.to_vec();
        u.sort_by(|a, b| b.total_cmp(a));
        let mut cum = 0.0;
        let mut theta = 0.0;
        for (i, ui) in u.iter().enumerate() {
            cum += ui;
            let t = (cum - 1.0) / (i + 1) as f64;
            if ui - t > 0.0 {
                theta = t;
            }
        }
        v.iter().map(|x| (x - theta).max(0.0)).collect()
    }

    /// Minimises the discretised risk over allocation densities on `grid`
    /// equal-width bins of the unit interval (`sum_i q_i / grid = 1`).
    ///
    /// Projected gradient descent on the bin masses `x_i = q_i / grid` with a
    /// backtracking (sufficient-decrease) step; stops once the scale-free
    /// stationarity residual `||x - P(x - g / ||g||_inf)||_1` drops below
    /// [`KKT_TOL`]. Returns the density `q`.
    pub fn continuous_allocation(
        r_bins: &[f64],
        p_bins: &[f64],
        n: usize,
        m: usize,
        grid: usize,
    ) -> Result<Vec<f64>> {
        if r_bins.len() != grid || p_bins.len() != grid || grid == 0 {
            return Err(Error::OracleFailure(format!(
                "expected {grid} bins, got r={} p={}",
                r_bins.len(),
                p_bins.len()
            )));
        }
        if m == 0 {
            return Err(Error::OracleFailure("synthetic budget m must be > 0".into()));
        }
        let w = 1.0 / grid as f64;
        let (nf, mf) = (n as f64, m as f64);
        let to_q = |x: &[f64]| x.iter().map(|xi| xi / w).collect::<Vec<f64>>();
        let objective = |x: &[f64]| risk(r_bins, p_bins, nf, mf, &to_q(x));
        let gradient = |x: &[f64]| -> Vec<f64> {
            // d/dx_i of w r_i / (n p_i + m x_i / w)
            x.iter()
                .zip(r_bins)
                .zip(p_bins)
                .map(|((xi, r), p)| {
                    let evidence = nf * p + mf * xi / w;
                    -mf * r / (evidence * evidence)
                })
                .collect()
        };

        let mut x = vec![w; grid];
        let mut f = objective(&x);
        let mut step = 1.0;
        for _ in 0..MAX_ITER {
            let g = gradient(&x);
            let g_scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if g_scale == 0.0 {
                return Ok(to_q(&x));
            }
            let probe: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / g_scale).collect();
            let residual: f64 = x
                .iter()
                .zip(project_simplex(&probe))
                .map(|(a, b)| (a - b).abs())
                .sum();
            if residual < KKT_TOL {
                return Ok(to_q(&x));
            }
            loop {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
                let next = project_simplex(&trial);
                let f_next = objective(&next);
                let lin: f64 = g.iter().zip(&next).zip(&x).map(|((gi, a), b)| gi * (a - b)).sum();
                let sq: f64 = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                if f_next <= f + lin + sq / (2.0 * step) || step < 1e-300 {
                    x = next;
                    f = f_next;
                    break;
                }
                step *= 0.5;
            }
            step *= 2.0;
        }
        Err(Error::OracleFailure(format!(
            "no stationary point within {MAX_ITER} iterations"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_candidate_inversion() {
        let s = solve_lambda(&[1.0], &[0.0], 2.0).unwrap();
        assert!((s.lambda - 0.25).abs() < 1e-9);
        assert!((s.gap_scores[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_pair() {
        let s = solve_lambda(&[1.0, 1.0], &[0.0, 0.0], 2.0).unwrap();
        assert!((s.lambda - 1.0).abs() < 1e-9);
        for g in &s.gap_scores {
            assert!((g - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_importance_candidate_gets_nothing() {
        let s = solve_lambda(&[0.0, 0.5, 2.0], &[0.0, 0.1, 0.3], 3.0).unwrap();
        assert_eq!(s.gap_scores[0], 0.0);
    }

    #[test]
    fn all_zero_importance() {
        assert!(matches!(
            solve_lambda(&[0.0, 0.0], &[1.0, 0.0], 1.0),
            Err(Error::NoPositiveImportance)
        ));
    }

    #[test]
    fn gap_score_arithmetic() {
        assert!((gap_score(1.0, 0.5, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(gap_score(0.04, 0.5, 1.0), 0.0);
        assert!(gap_score(0.3, 0.0, 2.0) < gap_score(0.4, 0.0, 2.0));
    }

    #[test]
    fn oracle_symmetric_cases() {
        let q = oracle::continuous_allocation(&[0.5; 8], &[1.0; 8], 100, 50, 8).unwrap();
        for v in &q {
            assert!((v - 1.0).abs() < 1e-6, "{q:?}");
        }
        let mut r = vec![0.0; 6];
        r[3] = 0.7;
        let q = oracle::continuous_allocation(&r, &[1.0; 6], 100, 50, 6).unwrap();
        assert!((q[3] - 6.0).abs() < 1e-6, "{q:?}");
        assert!(q.iter().enumerate().all(|(i, v)| i == 3 || *v < 1e-9));
    }

    #[test]
    fn simplex_projection() {
        let p = oracle::project_simplex(&[0.2, 0.9, -0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| *v >= 0.0));
        assert_eq!(oracle::project_simplex(&[0.25, 0.75]), vec![0.25, 0.75]);
    }

    proptest! {
        #[test]
        fn gap_score_monotone(r in 0.0f64..5.0, c in 0.0f64..5.0, lambda in 0.01f64..10.0, bump in 0.0f64..1.0) {
            prop_assert!(gap_score(r, c + bump, lambda) <= gap_score(r, c, lambda));
            prop_assert!(gap_score(r + bump, c, lambda) >= gap_score(r, c, lambda));
        }

        #[test]
        fn mass_matches_target(
            items in prop::collection::vec((0.0f64..1.0, 0.0f64..50.0), 1..200),
            target in 0.1f64..500.0,
        ) {
            let mut r: Vec<f64> = items.iter().map(|x| x.0).collect();
            r[0] = r[0].max(1e-3);
            let c: Vec<f64> = items.iter().map(|x| x.1).collect();
            let s = solve_lambda(&r, &c, target).unwrap();
            prop_assert!((s.total_mass - target).abs() <= 1e-6 * target);
            for (j, g) in s.gap_scores.iter().enumerate() {
                prop_assert!((g - gap_score(r[j], c[j], s.lambda)).abs() <= 1e-9);
            }
        }
    }
}
