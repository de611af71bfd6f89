//! Candidate kernel matrices for SIR, overlapping SIR and cumulative slicing,
//! and the full fit that pairs a kernel with the sample covariance.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dimension::{modified_bic, penalty_constant, BicCurve};
use crate::error::{invalid, OsirError, Result};
use crate::linalg::{
    generalized_eigen, sample_covariance, sample_mean, serde_rows, GeneralizedEigenResult,
    SymmetricMatrix,
};
use crate::slicing::{assign_slices, slice_stats, SliceStats};

/// Estimation method. `Osir { level: 0 }` is accepted and behaves as SIR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Sir,
    Osir { level: usize },
    /// Cumulative slicing on the cumulative moment `(1/n) Σ_{y_j <= y} (x_j − x̄)`.
    Cume,
    /// Cumulative slicing on the normalised cumulative mean, see [`cume_kernel`].
    CumeMean,
}

impl Method {
    /// Overlap level, with SIR as level 0. `None` for the cumulative methods.
    pub fn level(self) -> Option<usize> {
        match self {
            Method::Sir => Some(0),
            Method::Osir { level } => Some(level),
            Method::Cume | Method::CumeMean => None,
        }
    }

    pub fn uses_slices(self) -> bool {
        self.level().is_some()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sir => write!(f, "SIR"),
            Method::Osir { level } => write!(f, "OSIR_{level}"),
            Method::Cume => write!(f, "CUME"),
            Method::CumeMean => write!(f, "CUME_MEAN"),
        }
    }
}

impl FromStr for Method {
    type Err = OsirError;

    /// Accepts `sir`, `cume`, `cume-mean`, `osir` (level 1), `osirL`, `osir_L`
    /// and `osir:L`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "sir" => return Ok(Method::Sir),
            "cume" => return Ok(Method::Cume),
            "cume-mean" | "cume_mean" => return Ok(Method::CumeMean),
            "osir" => return Ok(Method::Osir { level: 1 }),
            _ => {}
        }
        if let Some(rest) = lower.strip_prefix("osir") {
            let digits = rest.trim_start_matches(['_', ':']);
            if let Ok(level) = digits.parse() {
                return Ok(Method::Osir { level });
            }
        }
        invalid(format!("unknown method '{s}' (expected sir, osir, osirL or cume)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    pub matrix: SymmetricMatrix,
    pub method: Method,
    /// Number of slices, absent for CUME.
    pub slices: Option<usize>,
}

/// `v vᵀ · w` added in place.
fn add_outer(acc: &mut DMatrix<f64>, v: &DVector<f64>, w: f64) {
    acc.ger(w, v, v, 1.0);
}

fn centered_means(stats: &SliceStats, xbar: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    if stats.num_slices() == 0 {
        return invalid("no slices");
    }
    if stats.dim() != xbar.len() {
        return invalid(format!(
            "slice means have dimension {} but the overall mean has {}",
            stats.dim(),
            xbar.len()
        ));
    }
    Ok(stats.means.iter().map(|m| m - xbar).collect())
}

/// `Σ_h p_h (m_h − x̄)(m_h − x̄)ᵀ`.
pub fn sir_kernel(stats: &SliceStats, xbar: &DVector<f64>) -> Result<KernelMatrix> {
    let centered = centered_means(stats, xbar)?;
    let p = xbar.len();
    let mut acc = DMatrix::zeros(p, p);
    for (prob, d) in stats.probs.iter().zip(&centered) {
        add_outer(&mut acc, d, *prob);
    }
    Ok(KernelMatrix {
        matrix: SymmetricMatrix::symmetrized(acc),
        method: Method::Sir,
        slices: Some(stats.num_slices()),
    })
}

/// Start indices (0-based, possibly negative) of the level-`L` bundles,
/// running over the ghost-padded range so every slice appears in exactly
/// `L + 1` bundles.
fn bundle_starts(num_slices: usize, level: usize) -> std::ops::RangeInclusive<isize> {
    -(level as isize)..=(num_slices as isize - 1)
}

fn bundle_members(start: isize, level: usize, num_slices: usize) -> std::ops::Range<usize> {
    let lo = start.max(0) as usize;
    let hi = ((start + level as isize + 1).max(0) as usize).min(num_slices);
    lo..hi.max(lo)
}

/// Bundle probabilities `(p_h + … + p_{h+L}) / (L + 1)` over the ghost-padded
/// range. They sum to one.
pub fn bundle_probabilities(stats: &SliceStats, level: usize) -> Vec<f64> {
    let h = stats.num_slices();
    bundle_starts(h, level)
        .map(|s| {
            bundle_members(s, level, h)
                .map(|j| stats.probs[j])
                .sum::<f64>()
                / (level + 1) as f64
        })
        .collect()
}

/// Level-`L` overlapping SIR kernel.
///
/// Each bundle of `L + 1` adjacent slices contributes its averaged probability
/// times the outer product of its probability-weighted mean. Slices outside
/// `1..=H` are ghosts with zero probability, so boundary bundles are partial.
/// Level 0 returns [`sir_kernel`].
pub fn osir_kernel(stats: &SliceStats, xbar: &DVector<f64>, level: usize) -> Result<KernelMatrix> {
    let h = stats.num_slices();
    if level == 0 {
        return sir_kernel(stats, xbar);
    }
    if level >= h {
        return invalid(format!("overlap level {level} must be below the number of slices {h}"));
    }
    let centered = centered_means(stats, xbar)?;
    let p = xbar.len();
    let mut acc = DMatrix::zeros(p, p);
    let mut bundle_mean = DVector::zeros(p);
    for start in bundle_starts(h, level) {
        let members = bundle_members(start, level, h);
        let mass: f64 = members.clone().map(|j| stats.probs[j]).sum();
        if mass <= 0.0 {
            continue;
        }
        bundle_mean.fill(0.0);
        for j in members {
            bundle_mean.axpy(stats.probs[j] / mass, &centered[j], 1.0);
        }
        add_outer(&mut acc, &bundle_mean, mass / (level + 1) as f64);
    }
    Ok(KernelMatrix {
        matrix: SymmetricMatrix::symmetrized(acc),
        method: Method::Osir { level },
        slices: Some(h),
    })
}

/// Overlapping SIR kernel computed as SIR minus weighted first differences
/// of the slice means (level 1), or minus first and plus second differences
/// (level 2). Independent of [`osir_kernel`]'s bundle construction and used
/// to cross-check it.
pub fn osir_difference_form(
    stats: &SliceStats,
    xbar: &DVector<f64>,
    level: usize,
) -> Result<KernelMatrix> {
    if !(level == 1 || level == 2) {
        return Err(OsirError::UnsupportedLevel(level));
    }
    let h = stats.num_slices();
    if level >= h {
        return invalid(format!("overlap level {level} must be below the number of slices {h}"));
    }
    let centered = centered_means(stats, xbar)?;
    let p = xbar.len();
    let zero = DVector::zeros(p);
    // Ghost slices: zero probability, zero (centred) mean.
    let prob = |i: isize| -> f64 {
        if i < 0 || i >= h as isize {
            0.0
        } else {
            stats.probs[i as usize]
        }
    };
    let mean = |i: isize| -> &DVector<f64> {
        if i < 0 || i >= h as isize {
            &zero
        } else {
            &centered[i as usize]
        }
    };

    let mut acc = sir_kernel(stats, xbar)?.matrix.into_matrix();
    if level == 1 {
        for i in -1..h as isize {
            let (a, b) = (prob(i), prob(i + 1));
            if a * b == 0.0 {
                continue;
            }
            let diff = mean(i + 1) - mean(i);
            add_outer(&mut acc, &diff, -0.5 * a * b / (a + b));
        }
    } else {
        for i in -2..h as isize {
            let (a, b, c) = (prob(i), prob(i + 1), prob(i + 2));
            let total = a + b + c;
            if total == 0.0 {
                continue;
            }
            let first = mean(i + 1) - mean(i);
            let second = mean(i + 2) - mean(i + 1);
            let curvature = &second - &first;
            let w_first = (a * b + 2.0 * a * c) / total;
            let w_second = (b * c + 2.0 * a * c) / total;
            let w_curv = a * c / total;
            if w_first != 0.0 {
                add_outer(&mut acc, &first, -w_first / 3.0);
            }
            if w_second != 0.0 {
                add_outer(&mut acc, &second, -w_second / 3.0);
            }
            if w_curv != 0.0 {
                add_outer(&mut acc, &curvature, w_curv / 3.0);
            }
        }
    }
    Ok(KernelMatrix {
        matrix: SymmetricMatrix::symmetrized(acc),
        method: Method::Osir { level },
        slices: Some(h),
    })
}

/// Difference form specialised to equal slice counts (`p_h = 1/H`).
///
/// Level 1: `Γ_H − (1/4H) Σ Δ_h Δ_hᵀ`. Level 2:
/// `Γ_H − (2/3H) Σ Δ_h Δ_hᵀ + (1/9H) Σ Δ²_h Δ²_hᵀ + (1/6H)(Δ_1 Δ_1ᵀ + Δ_{H−1} Δ_{H−1}ᵀ)`,
/// where the edge coefficient `1/6H` follows from the general form with
/// `p_h = 1/H` at the two partial boundary bundles.
pub fn equal_count_difference_form(
    stats: &SliceStats,
    xbar: &DVector<f64>,
    level: usize,
) -> Result<SymmetricMatrix> {
    equal_count_form_with_edge(stats, xbar, level, 1.0 / 6.0)
}

/// As [`equal_count_difference_form`] with the level-2 edge coefficient given
/// as a multiple of `1/H`.
pub fn equal_count_form_with_edge(
    stats: &SliceStats,
    xbar: &DVector<f64>,
    level: usize,
    edge: f64,
) -> Result<SymmetricMatrix> {
    if !(level == 1 || level == 2) {
        return Err(OsirError::UnsupportedLevel(level));
    }
    let h = stats.num_slices();
    if level >= h {
        return invalid(format!("overlap level {level} must be below the number of slices {h}"));
    }
    let hf = h as f64;
    let m = &stats.means;
    let diffs: Vec<DVector<f64>> = (0..h - 1).map(|i| &m[i + 1] - &m[i]).collect();
    let mut acc = sir_kernel(stats, xbar)?.matrix.into_matrix();
    if level == 1 {
        for d in &diffs {
            add_outer(&mut acc, d, -1.0 / (4.0 * hf));
        }
    } else {
        for d in &diffs {
            add_outer(&mut acc, d, -2.0 / (3.0 * hf));
        }
        for w in diffs.windows(2) {
            add_outer(&mut acc, &(&w[1] - &w[0]), 1.0 / (9.0 * hf));
        }
        add_outer(&mut acc, &diffs[0], edge / hf);
        add_outer(&mut acc, &diffs[h - 2], edge / hf);
    }
    Ok(SymmetricMatrix::symmetrized(acc))
}

/// Cumulative slicing kernel `(1/n) Σ_i (M(y_i) − x̄)(M(y_i) − x̄)ᵀ`, where
/// `M(y_i)` averages the predictors of every observation with `y_j <= y_i`.
/// Tied responses share the same `M`.
pub fn cume_kernel(x: &DMatrix<f64>, y: &[f64]) -> Result<KernelMatrix> {
    let n = x.nrows();
    if n == 0 || y.len() != n {
        return invalid(format!("cume needs matching non-empty data (n = {n}, y = {})", y.len()));
    }
    let xbar = sample_mean(x)?;
    let p = x.ncols();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    let mut acc = DMatrix::zeros(p, p);
    let mut running = DVector::zeros(p);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && y[order[j]] == y[order[i]] {
            running += x.row(order[j]).transpose() - &xbar;
            j += 1;
        }
        // Every member of the tie group sees the same cumulative mean.
        let cum_mean = &running / j as f64;
        add_outer(&mut acc, &cum_mean, (j - i) as f64 / n as f64);
        i = j;
    }
    Ok(KernelMatrix {
        matrix: SymmetricMatrix::symmetrized(acc),
        method: Method::CumeMean,
        slices: None,
    })
}

/// `(1/n) Σ_i m(y_i) m(y_i)ᵀ` with the unnormalised cumulative moment
/// `m(y_i) = (1/n) Σ_{y_j <= y_i} (x_j − x̄)`. Tied responses share `m`.
pub fn cumulative_moment_kernel(x: &DMatrix<f64>, y: &[f64]) -> Result<KernelMatrix> {
    let n = x.nrows();
    if n == 0 || y.len() != n {
        return invalid(format!("cume needs matching non-empty data (n = {n}, y = {})", y.len()));
    }
    let xbar = sample_mean(x)?;
    let p = x.ncols();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    let nf = n as f64;
    let mut acc = DMatrix::zeros(p, p);
    let mut running = DVector::zeros(p);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && y[order[j]] == y[order[i]] {
            running += x.row(order[j]).transpose() - &xbar;
            j += 1;
        }
        add_outer(&mut acc, &(&running / nf), (j - i) as f64 / nf);
        i = j;
    }
    Ok(KernelMatrix {
        matrix: SymmetricMatrix::symmetrized(acc),
        method: Method::Cume,
        slices: None,
    })
}

/// Kernel for `method` computed from raw data.
pub fn kernel_for(ds: &Dataset, method: Method, slices: usize) -> Result<KernelMatrix> {
    match method {
        Method::Cume => cumulative_moment_kernel(&ds.x, ds.y.as_slice()),
        Method::CumeMean => cume_kernel(&ds.x, ds.y.as_slice()),
        Method::Sir | Method::Osir { .. } => {
            let level = method.level().unwrap_or(0);
            if level >= slices.max(1) {
                return invalid(format!(
                    "overlap level {level} must be below the number of slices {slices}"
                ));
            }
            let assignment = assign_slices(ds.y.as_slice(), slices)?;
            let stats = slice_stats(&ds.x, &assignment)?;
            let xbar = sample_mean(&ds.x)?;
            let mut k = osir_kernel(&stats, &xbar, level)?;
            k.method = method;
            Ok(k)
        }
    }
}

/// How many directions to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimChoice {
    Auto,
    Fixed(usize),
}

impl FromStr for DimChoice {
    type Err = OsirError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(DimChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(DimChoice::Fixed(k)),
            _ => invalid(format!("dimension must be 'auto' or a positive integer, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub method: Method,
    /// Ignored for CUME.
    pub slices: usize,
    pub dim: DimChoice,
    pub ridge: f64,
    /// Overrides the default BIC penalty.
    pub penalty: Option<f64>,
}

impl FitOptions {
    pub fn new(method: Method, slices: usize, dim: DimChoice) -> Self {
        Self {
            method,
            slices,
            dim,
            ridge: 0.0,
            penalty: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdrEstimate {
    pub method: Method,
    pub slices: Option<usize>,
    pub n: usize,
    pub p: usize,
    /// All `p` generalized eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Leading `k_hat` eigenvectors as columns.
    #[serde(with = "serde_rows")]
    pub basis: DMatrix<f64>,
    pub k_hat: usize,
    pub bic_curve: Option<BicCurve>,
}

impl EdrEstimate {
    /// Projects rows of `x` onto the retained directions.
    pub fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.basis
    }
}

/// Kernel and covariance pencil solved for `ds`. The mean and covariance are
/// always taken from the full sample.
pub fn solve_pencil(
    ds: &Dataset,
    method: Method,
    slices: usize,
    ridge: f64,
) -> Result<GeneralizedEigenResult> {
    let kernel = kernel_for(ds, method, slices)?;
    let sigma = sample_covariance(&ds.x)?;
    generalized_eigen(&kernel.matrix, &sigma, ridge)
}

pub fn fit_edr(ds: &Dataset, opts: &FitOptions) -> Result<EdrEstimate> {
    let (n, p) = (ds.n(), ds.p());
    if let DimChoice::Fixed(k) = opts.dim {
        if k == 0 || k > p {
            return invalid(format!("dimension {k} must be in 1..={p}"));
        }
    }
    let eig = solve_pencil(ds, opts.method, opts.slices, opts.ridge)?;
    let (k_hat, bic_curve) = match opts.dim {
        DimChoice::Fixed(k) => (k, None),
        DimChoice::Auto => {
            let penalty = opts
                .penalty
                .unwrap_or_else(|| penalty_constant(n, p, opts.slices, opts.method));
            let curve = modified_bic(&eig.eigenvalues, penalty, n)?;
            (curve.argmax, Some(curve))
        }
    };
    Ok(EdrEstimate {
        method: opts.method,
        slices: opts.method.uses_slices().then_some(opts.slices),
        n,
        p,
        basis: eig.eigenvectors.columns(0, k_hat).into_owned(),
        eigenvalues: eig.eigenvalues,
        k_hat,
        bic_curve,
    })
}
