//! Soft labels for selected candidates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability distribution over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SoftLabel(pub Vec<f64>);

impl SoftLabel {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `(1 - a) e_c + a pi`: trust the generator's class far from the boundary
/// and the scoring model close to it.
pub fn soft_label(proposed_class: usize, pi: &[f64], a_tau: f64) -> Result<SoftLabel> {
    if proposed_class >= pi.len() {
        return Err(Error::Validation(format!(
            "proposed class {proposed_class} out of range for {} classes",
            pi.len()
        )));
    }
    if !(0.0..=1.0).contains(&a_tau) {
        return Err(Error::Precondition(format!(
            "boundary weight {a_tau} outside [0, 1]"
        )));
    }
    Ok(SoftLabel(
        pi.iter()
            .enumerate()
            .map(|(k, p)| {
                let e = if k == proposed_class { 1.0 } else { 0.0 };
                (1.0 - a_tau) * e + a_tau * p
            })
            .collect(),
    ))
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Both sides of the soft-label stability bound against a reference
/// distribution `rho`:
/// `||y - rho||_1 <= (1 - a) ||e_c - rho||_1 + a ||pi - rho||_1`.
pub fn soft_label_bound_check(
    e_c: &[f64],
    pi: &[f64],
    rho: &[f64],
    a_tau: f64,
) -> (f64, f64) {
    let blended: Vec<f64> = e_c
        .iter()
        .zip(pi)
        .map(|(e, p)| (1.0 - a_tau) * e + a_tau * p)
        .collect();
    let lhs = l1_distance(&blended, rho);
    let rhs = (1.0 - a_tau) * l1_distance(e_c, rho) + a_tau * l1_distance(pi, rho);
    (lhs, rhs)
}
