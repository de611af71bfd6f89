//! Dense symmetric linear algebra: sample moments and the symmetric-definite
//! generalized eigenproblem every estimator reduces to.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, OsirError, Result};

/// Relative asymmetry tolerated by [`SymmetricMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Pivots of the covariance factor below `PIVOT_TOL * trace / p` are singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// A finite, symmetric, square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Validates symmetry (relative to the largest entry) and finiteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return invalid(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return invalid("matrix has non-finite entries");
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return invalid(format!("matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Averages `m` with its transpose. Used for matrices that are symmetric in
    /// exact arithmetic but were accumulated in floating point.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        (&self.0 - &other.0).amax()
    }
}

impl std::ops::Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl Serialize for SymmetricMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rows_of(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetricMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let m = from_rows(&rows).map_err(serde::de::Error::custom)?;
        SymmetricMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Row-major nested vectors, the serialized form of every matrix in reports.
pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return invalid("ragged rows");
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Serde adapter for `DMatrix<f64>` fields as row-major nested arrays.
pub mod serde_rows {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        rows_of(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `DVector<f64>` fields as plain arrays.
pub mod serde_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

fn check_data(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return invalid(format!("empty data matrix ({}x{})", x.nrows(), x.ncols()));
    }
    Ok(())
}

/// Column means of an `n x p` data matrix.
pub fn sample_mean(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_data(x)?;
    let n = x.nrows() as f64;
    Ok(DVector::from_iterator(
        x.ncols(),
        x.column_iter().map(|c| c.sum() / n),
    ))
}

/// Covariance with divisor `n`.
pub fn sample_covariance(x: &DMatrix<f64>) -> Result<SymmetricMatrix> {
    let mean = sample_mean(x)?;
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.tr_mul(&centered) / x.nrows() as f64;
    Ok(SymmetricMatrix::symmetrized(cov))
}

/// Eigenpairs of the pencil `(Γ, Σ + ridge·I)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralizedEigenResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`; columns are Σ-orthonormal.
    #[serde(with = "serde_rows")]
    pub eigenvectors: DMatrix<f64>,
}

/// Flips `v` so that its first entry of largest magnitude is nonnegative.
pub fn apply_sign_convention(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Solves `Γ v = λ (Σ + ridge·I) v`.
///
/// `Σ + ridge·I = L Lᵀ` is factored, the whitened matrix `L⁻¹ Γ L⁻ᵀ` is
/// diagonalised, and eigenvectors are mapped back through `L⁻ᵀ`, which makes
/// them orthonormal in the `Σ + ridge·I` inner product.
pub fn generalized_eigen(
    gamma: &SymmetricMatrix,
    sigma: &SymmetricMatrix,
    ridge: f64,
) -> Result<GeneralizedEigenResult> {
    let p = gamma.dim();
    if sigma.dim() != p {
        return invalid(format!(
            "pencil dimension mismatch: gamma is {p}x{p}, sigma is {0}x{0}",
            sigma.dim()
        ));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return invalid(format!("ridge must be finite and >= 0, got {ridge}"));
    }

    let mut s = sigma.as_matrix().clone();
    for i in 0..p {
        s[(i, i)] += ridge;
    }
    let threshold = PIVOT_TOL * (s.trace() / p as f64).abs();
    let chol = nalgebra::Cholesky::new(s.clone()).ok_or(OsirError::SingularCovariance {
        pivot: 0.0,
        threshold,
    })?;
    let l = chol.l();
    let pivot = l.diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    if !(pivot >= threshold) || threshold == 0.0 {
        return Err(OsirError::SingularCovariance { pivot, threshold });
    }

    // W = L⁻¹ Γ L⁻ᵀ via two triangular solves.
    let left = l
        .solve_lower_triangular(gamma.as_matrix())
        .expect("nonzero pivots checked above");
    let whitened = l
        .solve_lower_triangular(&left.transpose())
        .expect("nonzero pivots checked above");
    let eig = SymmetricEigen::new(SymmetricMatrix::symmetrized(whitened).into_matrix());

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(p);
    let mut eigenvectors = DMatrix::zeros(p, p);
    for (k, &idx) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[idx]);
        let w = eig.eigenvectors.column(idx).into_owned();
        let mut v = lt
            .solve_upper_triangular(&w)
            .expect("nonzero pivots checked above");
        apply_sign_convention(&mut v);
        eigenvectors.set_column(k, &v);
    }
    Ok(GeneralizedEigenResult {
        eigenvalues,
        eigenvectors,
    })
}
