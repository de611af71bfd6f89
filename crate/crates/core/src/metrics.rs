//! Subspace accuracy and direction relevance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, OsirError, Result};
use crate::estimators::EdrEstimate;
use crate::linalg::SymmetricMatrix;

/// Smallest singular value must be at least this fraction of the largest.
pub const RANK_TOL: f64 = 1e-10;

/// `K` linearly independent columns in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis(DMatrix<f64>);

impl SubspaceBasis {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        let (p, k) = columns.shape();
        if k == 0 || p == 0 || k > p {
            return Err(OsirError::InvalidBasis(format!("{p}x{k} basis")));
        }
        if columns.iter().any(|v| !v.is_finite()) {
            return Err(OsirError::InvalidBasis("non-finite entries".into()));
        }
        let sv = columns.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if !(max > 0.0) || min < RANK_TOL * max {
            return Err(OsirError::InvalidBasis(format!(
                "rank deficient (singular values {min:.3e} .. {max:.3e})"
            )));
        }
        Ok(Self(columns))
    }

    /// Basis of coordinate axes `e_i` for the given zero-based indices.
    pub fn axes(p: usize, indices: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(p, indices.len());
        for (k, &i) in indices.iter().enumerate() {
            if i >= p {
                return Err(OsirError::InvalidBasis(format!("axis {i} outside R^{p}")));
            }
            m[(i, k)] = 1.0;
        }
        Self::new(m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Orthogonal projector `B (BᵀB)⁻¹ Bᵀ` onto the span of the basis.
pub fn projection_matrix(basis: &SubspaceBasis) -> Result<SymmetricMatrix> {
    // Orthonormalise first; cheaper and better conditioned than inverting BᵀB.
    let q = basis.0.clone().qr().q();
    Ok(SymmetricMatrix::symmetrized(&q * q.transpose()))
}

/// `trace(P_B P_B̂) / K`, in `[0, 1]`.
pub fn trace_correlation(truth: &SubspaceBasis, estimate: &SubspaceBasis) -> Result<f64> {
    if truth.ambient_dim() != estimate.ambient_dim() || truth.dim() != estimate.dim() {
        return invalid(format!(
            "trace correlation needs equal shapes, got {}x{} and {}x{}",
            truth.ambient_dim(),
            truth.dim(),
            estimate.ambient_dim(),
            estimate.dim()
        ));
    }
    let p1 = projection_matrix(truth)?;
    let p2 = projection_matrix(estimate)?;
    // trace(AB) for symmetric A, B is the Frobenius inner product.
    let tr = p1.as_matrix().dot(p2.as_matrix());
    Ok((tr / truth.dim() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionCorrelations {
    /// `|corr(β_kᵀ x, y)|` for each retained direction.
    pub per_direction: Vec<f64>,
    /// Average weighted by the retained eigenvalues normalised to sum to one.
    pub weighted_average: f64,
}

fn abs_pearson(a: &DVector<f64>, b: &DVector<f64>) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).abs().min(1.0))
}

pub fn direction_response_correlations(
    estimate: &EdrEstimate,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<DirectionCorrelations> {
    let k = estimate.k_hat;
    if k == 0 || estimate.basis.ncols() < k {
        return invalid("estimate has no retained directions");
    }
    if x.ncols() != estimate.basis.nrows() || x.nrows() != y.len() {
        return invalid("data shape does not match the estimate");
    }
    let projected = x * &estimate.basis;
    let mut per_direction = Vec::with_capacity(k);
    for j in 0..k {
        let proj = projected.column(j).into_owned();
        let r = abs_pearson(&proj, y).ok_or_else(|| {
            OsirError::UndefinedCorrelation(format!("direction {} or the response has zero variance", j + 1))
        })?;
        per_direction.push(r);
    }
    let weights: Vec<f64> = estimate.eigenvalues[..k].iter().map(|l| l.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(OsirError::UndefinedCorrelation(
            "retained eigenvalues are all zero".into(),
        ));
    }
    let weighted_average = weights
        .iter()
        .zip(&per_direction)
        .map(|(w, r)| w * r)
        .sum::<f64>()
        / total;
    Ok(DirectionCorrelations {
        per_direction,
        weighted_average,
    })
}
