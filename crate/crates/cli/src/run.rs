use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use osir_core::bench::{run_bench, Suite, DEFAULT_BENCH_REPS, REFERENCE_REPS};
use osir_core::estimators::{fit_edr, DimChoice, FitOptions, Method};
use osir_core::regression::{housing_pipeline, HousingOptions};
use osir_core::report::{Payload, ReportEnvelope, Timing};
use osir_core::simulation::{run_monte_carlo, EstimatorConfig, ModelSpec, SimulationPlan};
use osir_core::{ingest_csv, OsirError};
use serde::Serialize;

use crate::args::{resolve_method, BenchArgs, Command, FitArgs, Format, GlobalArgs, HousingArgs, SimulateArgs};

#[derive(Debug)]
pub enum Failure {
    /// Invalid flag combination; exit code 2.
    Usage(String),
    /// Ingestion or numerical failure; exit code 1.
    Compute(anyhow::Error),
}

impl From<OsirError> for Failure {
    fn from(e: OsirError) -> Self {
        match e {
            OsirError::InvalidInput(msg) => Failure::Usage(msg),
            other => Failure::Compute(other.into()),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// Fully resolved configuration recorded in every report.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub methods: Vec<Method>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub slices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<DimChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    pub ridge: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_size: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    fn base(command: &'static str, g: &GlobalArgs) -> Self {
        Self {
            command,
            methods: Vec::new(),
            slices: Vec::new(),
            dim: None,
            penalty: None,
            ridge: g.ridge,
            seed: g.seed,
            reps: None,
            input: None,
            response: None,
            models: Vec::new(),
            suite: None,
            knn_k: None,
            train_size: None,
            output: g.output.clone(),
            format: g.format,
        }
    }
}

pub struct Outcome {
    pub envelope: ReportEnvelope,
    /// False when a bench band failed.
    pub passed: bool,
}

pub fn execute(command: &Command, g: &GlobalArgs) -> Result<Outcome, Failure> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let clock = Instant::now();
    let (config, payload, passed) = match command {
        Command::Fit(a) => fit(a, g)?,
        Command::Simulate(a) => simulate(a, g)?,
        Command::Bench(a) => bench(a, g)?,
        Command::Housing(a) => housing(a, g)?,
    };
    let timing = Timing {
        started_unix_ms: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
    };
    let config = serde_json::to_value(&config).map_err(|e| Failure::Compute(e.into()))?;
    Ok(Outcome {
        envelope: ReportEnvelope::new(config, timing, payload),
        passed,
    })
}

type Run = (RunConfig, Payload, bool);

fn check_level(method: Method, slices: usize) -> Result<(), Failure> {
    if slices == 0 {
        return usage("--slices must be at least 1");
    }
    match method.level() {
        Some(l) if l >= slices => usage(format!("overlap level {l} must be below the number of slices {slices}")),
        _ => Ok(()),
    }
}

fn fit(a: &FitArgs, g: &GlobalArgs) -> Result<Run, Failure> {
    let method = resolve_method(a.method, a.level, a.slices);
    if method.uses_slices() {
        check_level(method, a.slices)?;
    }
    let ds = ingest_csv(&a.input, &a.response).map_err(|e| Failure::Compute(e.into()))?;
    if let DimChoice::Fixed(k) = a.dim {
        if k > ds.p() {
            return usage(format!("--dim {k} exceeds the number of predictors {}", ds.p()));
        }
    }
    if method.uses_slices() && a.slices > ds.n() {
        return usage(format!("--slices {} exceeds the number of observations {}", a.slices, ds.n()));
    }
    let opts = FitOptions {
        method,
        slices: a.slices,
        dim: a.dim,
        ridge: g.ridge,
        penalty: a.penalty,
    };
    let est = fit_edr(&ds, &opts).map_err(|e| Failure::Compute(e.into()))?;
    let mut cfg = RunConfig::base("fit", g);
    cfg.methods = vec![method];
    if method.uses_slices() {
        cfg.slices = vec![a.slices];
    }
    cfg.dim = Some(a.dim);
    cfg.penalty = est.bic_curve.as_ref().map(|c| c.penalty).or(a.penalty);
    cfg.input = Some(a.input.clone());
    cfg.response = Some(a.response.clone());
    Ok((cfg, Payload::Fit(est), true))
}

fn simulate(a: &SimulateArgs, g: &GlobalArgs) -> Result<Run, Failure> {
    if a.reps == 0 {
        return usage("--reps must be at least 1");
    }
    let mut models = Vec::new();
    for &id in &a.model {
        if !(1..=4).contains(&id) {
            return usage(format!("unknown model {id} (expected 1-4)"));
        }
        let mut spec = ModelSpec::benchmark(id).with_seed(g.seed);
        if let Some(n) = a.n {
            spec = spec.with_n(n);
        }
        if let Some(p) = a.p {
            spec = spec.with_p(p);
        }
        spec.validate()?;
        models.push(spec);
    }
    let mut configs: Vec<EstimatorConfig> = Vec::new();
    let mut methods = Vec::new();
    for &m in &a.method {
        for &h in &a.slices {
            let method = resolve_method(m, a.level, h);
            let cfg = if method.uses_slices() {
                check_level(method, h)?;
                EstimatorConfig::new(method, h)
            } else {
                EstimatorConfig::new(method, 0)
            };
            if !configs.contains(&cfg) {
                configs.push(cfg);
                if !methods.contains(&method) {
                    methods.push(method);
                }
            }
        }
    }
    let plan = SimulationPlan {
        models: models.clone(),
        configs,
        reps: a.reps,
        seed: g.seed,
        ridge: g.ridge,
    };
    plan.validate()?;
    let report = run_monte_carlo(&plan).map_err(|e| Failure::Compute(e.into()))?;
    let mut cfg = RunConfig::base("simulate", g);
    cfg.methods = methods;
    cfg.slices = a.slices.clone();
    cfg.reps = Some(a.reps);
    cfg.models = models;
    Ok((cfg, Payload::Simulation(report), true))
}

fn bench(a: &BenchArgs, g: &GlobalArgs) -> Result<Run, Failure> {
    let suite: Suite = a.suite.parse()?;
    let reps = if a.full { REFERENCE_REPS } else { a.reps.unwrap_or(DEFAULT_BENCH_REPS) };
    if reps == 0 {
        return usage("--reps must be at least 1");
    }
    let report = run_bench(suite, reps, g.seed).map_err(|e| Failure::Compute(e.into()))?;
    let passed = report.all_pass();
    let mut cfg = RunConfig::base("bench", g);
    cfg.suite = Some(suite);
    cfg.reps = Some(reps);
    cfg.methods = {
        let mut m: Vec<Method> = Vec::new();
        for c in osir_core::bench::reference_cells(suite) {
            if !m.contains(&c.method) {
                m.push(c.method);
            }
        }
        m
    };
    cfg.models = osir_core::bench::bench_plan(suite, reps, g.seed).models;
    Ok((cfg, Payload::Bench(report), passed))
}

fn housing(a: &HousingArgs, g: &GlobalArgs) -> Result<Run, Failure> {
    let mut opts = HousingOptions {
        reps: a.reps,
        train_size: a.train_size,
        slices: a.slices,
        dim: a.dim,
        knn_k: a.knn_k,
        seed: g.seed,
        ridge: g.ridge,
        ..HousingOptions::default()
    };
    if !a.method.is_empty() {
        opts.methods = a.method.iter().map(|&m| resolve_method(m, None, a.slices)).collect();
    }
    for &m in &opts.methods {
        if m.uses_slices() {
            check_level(m, a.slices)?;
        }
    }
    if a.dim == 0 || a.dim > 13 {
        return usage("--dim must be in 1..=13");
    }
    if a.knn_k == 0 || a.knn_k > a.train_size {
        return usage(format!("--knn-k must be in 1..={}", a.train_size));
    }
    if a.reps == 0 {
        return usage("--reps must be at least 1");
    }
    let raw = ingest_csv(&a.input, "medv").map_err(|e| Failure::Compute(e.into()))?;
    let report = housing_pipeline(&raw, &opts).map_err(|e| Failure::Compute(e.into()))?;
    let mut cfg = RunConfig::base("housing", g);
    cfg.methods = opts.methods.clone();
    cfg.slices = vec![a.slices];
    cfg.dim = Some(DimChoice::Fixed(a.dim));
    cfg.reps = Some(a.reps);
    cfg.input = Some(a.input.clone());
    cfg.response = Some("medv".into());
    cfg.knn_k = Some(a.knn_k);
    cfg.train_size = Some(a.train_size);
    Ok((cfg, Payload::Housing(report), true))
}
