//! Structural dimension selection with a BIC-type criterion on the
//! generalized eigenvalue spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, OsirError, Result};
use crate::estimators::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicCurve {
    /// `G(k)` for `k = 1..=p`, stored at index `k - 1`.
    pub values: Vec<f64>,
    /// Selected dimension (1-based).
    pub argmax: usize,
    pub penalty: f64,
}

/// Default penalty `C_n`.
///
/// Slicing methods use `2 n^{3/4} / (p (L + 1) sqrt(H))` with `L = 0` for SIR;
/// CUME uses `2 n^{3/4} / p`.
pub fn penalty_constant(n: usize, p: usize, slices: usize, method: Method) -> f64 {
    let base = 2.0 * (n as f64).powf(0.75) / p as f64;
    match method {
        Method::Cume | Method::CumeMean => base,
        Method::Sir => base / (slices as f64).sqrt(),
        Method::Osir { level } => base / ((level + 1) as f64 * (slices as f64).sqrt()),
    }
}

/// `G(k) = n Σ_{i<=k} λ_i² / Σ_{i<=p} λ_i² − C_n k (k + 1) / 2`.
///
/// Negative eigenvalues are treated as zero. Ties in the maximum resolve to
/// the smallest `k`.
pub fn modified_bic(eigenvalues: &[f64], penalty: f64, n: usize) -> Result<BicCurve> {
    if eigenvalues.is_empty() {
        return invalid("empty spectrum");
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return invalid("eigenvalues must be sorted in descending order");
    }
    let squares: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0).powi(2)).collect();
    let total: f64 = squares.iter().sum();
    if !(total > 0.0) {
        return Err(OsirError::DegenerateSpectrum);
    }
    let n = n as f64;
    let mut cumulative = 0.0;
    let values: Vec<f64> = squares
        .iter()
        .enumerate()
        .map(|(i, sq)| {
            cumulative += sq;
            let k = (i + 1) as f64;
            n * cumulative / total - penalty * k * (k + 1.0) / 2.0
        })
        .collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    Ok(BicCurve {
        values,
        argmax: best + 1,
        penalty,
    })
}
