//! Per-candidate boundary and uncertainty scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on the boundary-neighbourhood width.
pub const TAU_FLOOR: f64 = 1e-3;

/// Everything computed about one candidate on its way to selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    /// Top-two probability margin.
    pub margin: f64,
    pub boundary_weight: f64,
    /// Predictive entropy in nats.
    pub entropy: f64,
    /// kNN estimate of the real-data density at the candidate.
    pub density: f64,
    pub support: f64,
    /// `boundary_weight * entropy * support`.
    pub importance: f64,
    pub gap_score: f64,
    /// `gap_score * support`.
    pub value: f64,
}

pub fn top_two_margin(pi: &[f64]) -> Result<f64> {
    if pi.len() < 2 {
        return Err(Error::Precondition(format!(
            "margin needs at least 2 classes, got {}",
            pi.len()
        )));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &p in pi {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    Ok((first - second).clamp(0.0, 1.0))
}

/// Linear-interpolation quantile (the "type 7" definition): with the values
/// sorted ascending, position `h = (n - 1) q` is interpolated between its
/// neighbours.
pub fn linear_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Precondition("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Precondition(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Boundary-neighbourhood width from the lower `quantile` of the margins,
/// floored at [`TAU_FLOOR`].
pub fn select_tau(margins: &[f64], quantile: f64) -> Result<f64> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Precondition(format!(
            "tau quantile must lie in (0, 1), got {quantile}"
        )));
    }
    Ok(linear_quantile(margins, quantile)?.max(TAU_FLOOR))
}

/// `exp(-delta^2 / (2 tau^2))`.
pub fn boundary_weight(delta: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Precondition(format!("tau must be positive, got {tau}")));
    }
    Ok((-(delta * delta) / (2.0 * tau * tau)).exp())
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(pi: &[f64]) -> f64 {
    -pi.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn importance(a_tau: f64, u: f64, b: f64) -> f64 {
    a_tau * u * b
}
