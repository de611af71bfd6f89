//! Nearest-neighbour and least-squares prediction, and the housing-price
//! evaluation pipeline built on them.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{require_columns, Dataset};
use crate::error::{invalid, OsirError, Result};
use crate::estimators::{fit_edr, DimChoice, FitOptions, Method};
use crate::metrics::{direction_response_correlations, DirectionCorrelations};
use crate::stats::{sign_test, summarize, SignTest, Summary};

/// Mean response of the `k` nearest training rows (Euclidean), per query row.
/// Equal distances are broken by the lower training index.
pub fn knn_predict(
    train_x: &DMatrix<f64>,
    train_y: &DVector<f64>,
    queries: &DMatrix<f64>,
    k: usize,
) -> Result<DVector<f64>> {
    let n = train_x.nrows();
    if train_y.len() != n {
        return invalid("training predictors and responses differ in length");
    }
    if k == 0 || k > n {
        return invalid(format!("k must be in 1..={n}, got {k}"));
    }
    if queries.ncols() != train_x.ncols() {
        return invalid("query dimension does not match training data");
    }
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    let preds = queries.row_iter().map(|q| {
        dist.clear();
        dist.extend(train_x.row_iter().enumerate().map(|(i, t)| ((t - q).norm_squared(), i)));
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < n {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        dist[..k].iter().map(|&(_, i)| train_y[i]).sum::<f64>() / k as f64
    });
    Ok(DVector::from_iterator(queries.nrows(), preds))
}

pub fn mean_squared_error(pred: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    (pred - truth).norm_squared() / truth.len() as f64
}

/// Ordinary least squares with intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// True when the centred design was singular and a small ridge was used.
    pub ridge_fallback: bool,
}

impl LinearFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let beta = DVector::from_column_slice(&self.coefficients);
        (x * beta).add_scalar(self.intercept)
    }
}

/// Least squares via SVD of the centred design. Falls back to a ridge of
/// `1e-8 · trace(XᵀX)` when the design is numerically singular.
pub fn fit_linear(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearFit> {
    let n = x.nrows();
    if n == 0 || y.len() != n {
        return invalid("linear fit needs matching non-empty data");
    }
    let xm = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()));
    let ym = y.mean();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= xm.transpose();
    }
    let yc = y.add_scalar(-ym);

    let svd = xc.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let singular = x.ncols() > n || !(smax > 0.0) || smin < 1e-10 * smax;
    let (beta, ridge_fallback) = if singular {
        let gram = xc.tr_mul(&xc);
        let ridge = 1e-8 * gram.trace().max(f64::MIN_POSITIVE);
        let lhs = gram + DMatrix::identity(x.ncols(), x.ncols()) * ridge;
        let rhs = xc.tr_mul(&yc);
        let beta = lhs
            .cholesky()
            .ok_or_else(|| OsirError::InvalidInput("ridge-regularised design is not positive definite".into()))?
            .solve(&rhs);
        (beta, true)
    } else {
        let beta = svd
            .solve(&yc, 0.0)
            .map_err(|e| OsirError::InvalidInput(format!("least squares failed: {e}")))?;
        (beta, false)
    };
    Ok(LinearFit {
        intercept: ym - xm.dot(&beta),
        coefficients: beta.iter().copied().collect(),
        ridge_fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearBaseline {
    pub mse: f64,
    pub ridge_fallback: bool,
}

/// Fits OLS on `train` and reports the test mean squared error.
pub fn linear_regression_baseline(train: &Dataset, test: &Dataset) -> Result<LinearBaseline> {
    let fit = fit_linear(&train.x, &train.y)?;
    Ok(LinearBaseline {
        mse: mean_squared_error(&fit.predict(&test.x), &test.y),
        ridge_fallback: fit.ridge_fallback,
    })
}

/// OLS on `log(y)`, predictions mapped back with `exp`, error on the
/// original scale.
pub fn log_linear_baseline(train: &Dataset, test: &Dataset) -> Result<LinearBaseline> {
    if train.y.iter().any(|&v| !(v > 0.0)) {
        return invalid("log-scale regression needs a strictly positive response");
    }
    let fit = fit_linear(&train.x, &train.y.map(f64::ln))?;
    Ok(LinearBaseline {
        mse: mean_squared_error(&fit.predict(&test.x).map(f64::exp), &test.y),
        ridge_fallback: fit.ridge_fallback,
    })
}

/// Per-column centring and scaling learnt on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: DVector<f64>,
    scale: DVector<f64>,
}

impl Standardizer {
    /// Zero-variance columns keep unit scale.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
        let scale = DVector::from_iterator(
            x.ncols(),
            x.column_iter().zip(mean.iter()).map(|(c, m)| {
                let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            }),
        );
        Self { mean, scale }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.scale[j])
    }
}

/// The fourteen canonical housing attributes; `medv` is the response.
pub const HOUSING_COLUMNS: [&str; 14] = [
    "crim", "zn", "indus", "chas", "nox", "rm", "age", "dis", "rad", "tax", "ptratio", "b",
    "lstat", "medv",
];

/// Log of `crim`, `nox`, `dis`; `log(1 + zn)` since `zn` has zeros; square of
/// `ptratio`. The response stays on its original scale: slicing depends only
/// on its ranks, and errors are reported in original units.
pub fn transform_housing(raw: &Dataset) -> Result<Dataset> {
    require_columns(raw, &HOUSING_COLUMNS)?;
    if raw.response != "medv" {
        return Err(OsirError::Ingest(format!(
            "housing response must be 'medv', got '{}'",
            raw.response
        )));
    }
    let mut out = raw.clone();
    for (j, name) in raw.columns.iter().enumerate() {
        let f: fn(f64) -> f64 = match name.as_str() {
            "crim" | "nox" | "dis" => f64::ln,
            "zn" => f64::ln_1p,
            "ptratio" => |v| v * v,
            _ => continue,
        };
        for i in 0..out.n() {
            let v = f(raw.x[(i, j)]);
            if !v.is_finite() {
                return Err(OsirError::Ingest(format!(
                    "transform of column '{name}' is undefined at row {}",
                    i + 1
                )));
            }
            out.x[(i, j)] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HousingOptions {
    pub reps: usize,
    pub train_size: usize,
    pub slices: usize,
    pub dim: usize,
    pub knn_k: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub ridge: f64,
}

impl Default for HousingOptions {
    fn default() -> Self {
        Self {
            reps: 100,
            train_size: 200,
            slices: 20,
            dim: 4,
            knn_k: 5,
            methods: [0, 1, 2, 3, 5, 10, 15, 19]
                .into_iter()
                .map(|l| if l == 0 { Method::Sir } else { Method::Osir { level: l } })
                .collect(),
            seed: 0,
            ridge: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HousingMethodResult {
    pub method: Method,
    pub mse: Summary,
    /// Test MSE of each split, in split order.
    pub split_mse: Vec<f64>,
    /// Direction–response correlations of the fit on all observations.
    pub correlations: DirectionCorrelations,
    /// Sign test of `MSE_SIR − MSE_method > 0` over matched splits, when SIR
    /// is among the methods.
    pub improvement_over_sir: Option<SignTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HousingReport {
    pub options: HousingOptions,
    /// Response scale of the reported MSE and the correlations.
    pub mse_response: String,
    pub correlation_response: String,
    /// Scale on which the linear baseline is fitted before back-transforming.
    pub mlr_response: String,
    pub projected_features_standardized: bool,
    pub methods: Vec<HousingMethodResult>,
    pub mlr: Summary,
    pub mlr_ridge_fallbacks: usize,
    pub raw_knn: Summary,
}

struct SplitResult {
    method_mse: Vec<f64>,
    mlr: LinearBaseline,
    raw_knn: f64,
}

/// Random train/test partition of `train_size + test_size` observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(n: usize, train_size: usize, seed: u64) -> Result<Self> {
        if train_size == 0 || train_size >= n {
            return invalid(format!("train size must be in 1..{n}, got {train_size}"));
        }
        Ok(Self {
            train_size,
            test_size: n - train_size,
            seed,
        })
    }

    /// Training and test indices of repetition `rep`.
    pub fn split(&self, rep: u64) -> (Vec<usize>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep);
        let mut idx: Vec<usize> = (0..self.train_size + self.test_size).collect();
        idx.shuffle(&mut rng);
        let test = idx.split_off(self.train_size);
        (idx, test)
    }
}

fn run_split(
    raw: &Dataset,
    data: &Dataset,
    opts: &HousingOptions,
    split: &SplitSpec,
    rep: u64,
) -> Result<SplitResult> {
    let (train_idx, test_idx) = split.split(rep);
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);

    let method_mse = opts
        .methods
        .iter()
        .map(|&method| {
            let mut fit_opts = FitOptions::new(method, opts.slices, DimChoice::Fixed(opts.dim));
            fit_opts.ridge = opts.ridge;
            let est = fit_edr(&train, &fit_opts)?;
            let ztrain = est.project(&train.x);
            let ztest = est.project(&test.x);
            let scaler = Standardizer::fit(&ztrain);
            let pred = knn_predict(&scaler.apply(&ztrain), &train.y, &scaler.apply(&ztest), opts.knn_k)?;
            Ok(mean_squared_error(&pred, &test.y))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mlr = log_linear_baseline(&train, &test)?;

    let raw_train = raw.subset(&train_idx);
    let raw_test = raw.subset(&test_idx);
    let raw_pred = knn_predict(&raw_train.x, &raw_train.y, &raw_test.x, opts.knn_k)?;
    Ok(SplitResult {
        method_mse,
        mlr,
        raw_knn: mean_squared_error(&raw_pred, &raw_test.y),
    })
}

/// Repeated random train/test evaluation of dimension reduction followed by
/// kNN regression, with linear-regression and raw-kNN baselines.
pub fn housing_pipeline(raw: &Dataset, opts: &HousingOptions) -> Result<HousingReport> {
    let data = transform_housing(raw)?;
    let split = SplitSpec::new(data.n(), opts.train_size, opts.seed)?;
    if opts.reps == 0 || opts.methods.is_empty() {
        return invalid("housing pipeline needs at least one repetition and one method");
    }
    if opts.knn_k == 0 || opts.knn_k > opts.train_size {
        return invalid(format!("knn k must be in 1..={}", opts.train_size));
    }
    for m in &opts.methods {
        if let Some(level) = m.level() {
            if level >= opts.slices {
                return invalid(format!("{m} needs fewer than {} slices overlap", opts.slices));
            }
        }
    }

    let splits: Vec<SplitResult> = (0..opts.reps as u64)
        .into_par_iter()
        .map(|rep| run_split(raw, &data, opts, &split, rep))
        .collect::<Result<_>>()?;

    let sir_idx = opts.methods.iter().position(|m| *m == Method::Sir);
    let mut methods = Vec::with_capacity(opts.methods.len());
    for (mi, &method) in opts.methods.iter().enumerate() {
        let split_mse: Vec<f64> = splits.iter().map(|s| s.method_mse[mi]).collect();
        let mut fit_opts = FitOptions::new(method, opts.slices, DimChoice::Fixed(opts.dim));
        fit_opts.ridge = opts.ridge;
        let full = fit_edr(&data, &fit_opts)?;
        let correlations = direction_response_correlations(&full, &data.x, &data.y)?;
        let improvement_over_sir = sir_idx.filter(|&s| s != mi).map(|s| {
            let sir: Vec<f64> = splits.iter().map(|r| r.method_mse[s]).collect();
            sign_test(&sir, &split_mse)
        });
        methods.push(HousingMethodResult {
            method,
            mse: summarize(&split_mse),
            split_mse,
            correlations,
            improvement_over_sir,
        });
    }
    let mlr: Vec<f64> = splits.iter().map(|s| s.mlr.mse).collect();
    let raw_knn: Vec<f64> = splits.iter().map(|s| s.raw_knn).collect();
    Ok(HousingReport {
        options: opts.clone(),
        mse_response: "medv".into(),
        correlation_response: "medv".into(),
        mlr_response: "log(medv)".into(),
        projected_features_standardized: true,
        methods,
        mlr: summarize(&mlr),
        mlr_ridge_fallbacks: splits.iter().filter(|s| s.mlr.ridge_fallback).count(),
        raw_knn: summarize(&raw_knn),
    })
}
