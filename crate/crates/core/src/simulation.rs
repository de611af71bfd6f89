//! Benchmark regression models and the replicated Monte Carlo harness.
//!
//! Every replicate draws its data from a ChaCha stream keyed by
//! `(seed, model)` with the replicate index as stream id, so replicates are
//! independent of scheduling and all estimator configurations for a model see
//! the same data (paired comparisons).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dimension::{modified_bic, penalty_constant};
use crate::error::{invalid, Result};
use crate::estimators::{solve_pencil, Method};
use crate::metrics::{trace_correlation, SubspaceBasis};
use crate::stats::summarize;

/// One of the four benchmark models at a given size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// 1: `y = x1 + x2 + x3 + x4 + ε`; 2: `y = exp(x1 + 2ε)`;
    /// 3: `y = x1 (x1 + x2 + 1) + ε`; 4: `y = x1 / (0.5 + (x2 + 1.5)²) + ε`.
    pub id: u8,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    /// Stream index within the `(seed, id)` family.
    #[serde(default)]
    pub replicate: u64,
}

impl ModelSpec {
    /// Published sizes: models 1–2 at `n = 100, p = 5`; 3–4 at `n = 400, p = 10`.
    pub fn benchmark(id: u8) -> Self {
        let (n, p) = if id <= 2 { (100, 5) } else { (400, 10) };
        Self {
            id,
            n,
            p,
            seed: 0,
            replicate: 0,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_p(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn true_dim(&self) -> usize {
        if self.id <= 2 {
            1
        } else {
            2
        }
    }

    /// Predictors the response depends on; model 1 uses `x1..x4`.
    pub fn min_p(&self) -> usize {
        match self.id {
            1 => 4,
            2 => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.id) {
            return invalid(format!("model id must be 1..=4, got {}", self.id));
        }
        if self.p < self.min_p() {
            return invalid(format!("model {} needs p >= {}, got {}", self.id, self.min_p(), self.p));
        }
        if self.n < 2 {
            return invalid("sample size must be at least 2");
        }
        Ok(())
    }

    pub fn true_basis(&self) -> Result<SubspaceBasis> {
        self.validate()?;
        match self.id {
            1 => {
                let mut b = DMatrix::zeros(self.p, 1);
                for i in 0..4 {
                    b[(i, 0)] = 0.5;
                }
                SubspaceBasis::new(b)
            }
            2 => SubspaceBasis::axes(self.p, &[0]),
            _ => SubspaceBasis::axes(self.p, &[0, 1]),
        }
    }
}

/// Model response for one observation with noise draw `eps`.
pub fn model_response(id: u8, x: &[f64], eps: f64) -> f64 {
    match id {
        1 => x[0] + x[1] + x[2] + x[3] + eps,
        2 => (x[0] + 2.0 * eps).exp(),
        3 => x[0] * (x[0] + x[1] + 1.0) + eps,
        4 => x[0] / (0.5 + (x[1] + 1.5).powi(2)) + eps,
        _ => f64::NAN,
    }
}

fn replicate_rng(seed: u64, id: u8, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = id;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}

/// Draws `x ~ N(0, I_p)`, `ε ~ N(0, 1)` row by row and applies the model.
pub fn generate_model(spec: &ModelSpec) -> Result<(Dataset, SubspaceBasis)> {
    let basis = spec.true_basis()?;
    let mut rng = replicate_rng(spec.seed, spec.id, spec.replicate);
    let mut x = DMatrix::zeros(spec.n, spec.p);
    let mut y = DVector::zeros(spec.n);
    let mut row = vec![0.0; spec.p];
    for i in 0..spec.n {
        for (j, v) in row.iter_mut().enumerate() {
            *v = StandardNormal.sample(&mut rng);
            x[(i, j)] = *v;
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        y[i] = model_response(spec.id, &row, eps);
    }
    Ok((Dataset::new(x, y)?, basis))
}

/// An estimator configuration compared in a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Ignored for CUME.
    pub slices: usize,
}

impl EstimatorConfig {
    pub fn new(method: Method, slices: usize) -> Self {
        Self { method, slices }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub models: Vec<ModelSpec>,
    pub configs: Vec<EstimatorConfig>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub ridge: f64,
}

impl SimulationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return invalid("reps must be at least 1");
        }
        if self.models.is_empty() || self.configs.is_empty() {
            return invalid("simulation needs at least one model and one configuration");
        }
        for m in &self.models {
            m.validate()?;
            for c in &self.configs {
                if c.method.uses_slices() {
                    let level = c.method.level().unwrap_or(0);
                    if c.slices == 0 || c.slices > m.n || level >= c.slices {
                        return invalid(format!(
                            "{} with {} slices is invalid for model {} (n = {})",
                            c.method, c.slices, m.id, m.n
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-replicate results for one (model, configuration) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigOutcomes {
    pub model: ModelSpec,
    pub config: EstimatorConfig,
    /// Trace correlation with `K` fixed at the truth.
    pub trace_corr: Vec<f64>,
    /// BIC-selected dimension.
    pub k_hat: Vec<usize>,
}

/// Fits every configuration on every replicate. Replicates run in parallel;
/// the output order is deterministic.
pub fn simulate_outcomes(plan: &SimulationPlan) -> Result<Vec<ConfigOutcomes>> {
    plan.validate()?;
    let mut out = Vec::new();
    for model in &plan.models {
        let k_true = model.true_dim();
        let per_rep: Vec<Vec<(f64, usize)>> = (0..plan.reps as u64)
            .into_par_iter()
            .map(|rep| -> Result<Vec<(f64, usize)>> {
                let spec = model.with_seed(plan.seed).with_replicate(rep);
                let (ds, truth) = generate_model(&spec)?;
                plan.configs
                    .iter()
                    .map(|c| {
                        let eig = solve_pencil(&ds, c.method, c.slices, plan.ridge)?;
                        let est = SubspaceBasis::new(eig.eigenvectors.columns(0, k_true).into_owned())?;
                        let r = trace_correlation(&truth, &est)?;
                        let penalty = penalty_constant(ds.n(), ds.p(), c.slices, c.method);
                        let k_hat = modified_bic(&eig.eigenvalues, penalty, ds.n())?.argmax;
                        Ok((r, k_hat))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (ci, config) in plan.configs.iter().enumerate() {
            out.push(ConfigOutcomes {
                model: model.with_seed(plan.seed),
                config: *config,
                trace_corr: per_rep.iter().map(|r| r[ci].0).collect(),
                k_hat: per_rep.iter().map(|r| r[ci].1).collect(),
            });
        }
    }
    Ok(out)
}

/// Aggregated results for one (model, configuration) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub model: u8,
    pub n: usize,
    pub p: usize,
    pub true_dim: usize,
    pub method: Method,
    pub slices: Option<usize>,
    pub level: Option<usize>,
    pub mean_r: f64,
    pub sd_r: f64,
    pub se_r: f64,
    pub freq_under: f64,
    pub freq_exact: f64,
    pub freq_over: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rows: Vec<SimulationRow>,
}

impl SimulationReport {
    pub fn find(&self, model: u8, method: Method, slices: usize) -> Option<&SimulationRow> {
        self.rows.iter().find(|r| {
            r.model == model && r.method == method && (r.slices.is_none() || r.slices == Some(slices))
        })
    }
}

pub fn summarize_outcomes(outcomes: &[ConfigOutcomes]) -> SimulationReport {
    let rows = outcomes
        .iter()
        .map(|o| {
            let s = summarize(&o.trace_corr);
            let k = o.model.true_dim();
            let reps = o.k_hat.len();
            let frac = |pred: &dyn Fn(usize) -> bool| {
                o.k_hat.iter().filter(|&&v| pred(v)).count() as f64 / reps as f64
            };
            SimulationRow {
                model: o.model.id,
                n: o.model.n,
                p: o.model.p,
                true_dim: k,
                method: o.config.method,
                slices: o.config.method.uses_slices().then_some(o.config.slices),
                level: o.config.method.level(),
                mean_r: s.mean,
                sd_r: s.sd,
                se_r: s.se,
                freq_under: frac(&|v| v < k),
                freq_exact: frac(&|v| v == k),
                freq_over: frac(&|v| v > k),
                reps,
                seed: o.model.seed,
            }
        })
        .collect();
    SimulationReport { rows }
}

pub fn run_monte_carlo(plan: &SimulationPlan) -> Result<SimulationReport> {
    Ok(summarize_outcomes(&simulate_outcomes(plan)?))
}
