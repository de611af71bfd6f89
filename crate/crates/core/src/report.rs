//! Versioned report envelope and its CSV and plain-text table views.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bench::BenchReport;
use crate::error::Result;
use crate::estimators::EdrEstimate;
use crate::regression::HousingReport;
use crate::simulation::SimulationReport;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum Payload {
    Fit(EdrEstimate),
    Simulation(SimulationReport),
    Housing(HousingReport),
    Bench(BenchReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub schema_version: u32,
    pub toolkit_version: String,
    /// Fully resolved run configuration, defaults included.
    pub config: serde_json::Value,
    pub timing: Timing,
    pub payload: Payload,
}

impl ReportEnvelope {
    pub fn new(config: serde_json::Value, timing: Timing, payload: Payload) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            toolkit_version: TOOLKIT_VERSION.to_string(),
            config,
            timing,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let (header, rows) = tabulate(&self.payload, true);
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&header)?;
        for r in rows {
            out.write_record(&r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn render_table(&self) -> String {
        let (header, rows) = tabulate(&self.payload, false);
        align(&header, &rows)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn num(v: f64, exact: bool) -> String {
    if exact {
        v.to_string()
    } else {
        format!("{v:.4}")
    }
}

/// Header and rows of the payload. `exact` keeps full precision.
fn tabulate(payload: &Payload, exact: bool) -> (Vec<String>, Vec<Vec<String>>) {
    let f = |v: f64| num(v, exact);
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match payload {
        Payload::Simulation(sim) => (
            strs(&[
                "model", "method", "H", "L", "mean_r", "sd_r", "se_r", "freq_under", "freq_exact",
                "freq_over", "reps", "seed",
            ]),
            sim.rows
                .iter()
                .map(|r| {
                    vec![
                        r.model.to_string(),
                        r.method.to_string(),
                        opt(r.slices),
                        opt(r.level),
                        f(r.mean_r),
                        f(r.sd_r),
                        f(r.se_r),
                        f(r.freq_under),
                        f(r.freq_exact),
                        f(r.freq_over),
                        r.reps.to_string(),
                        r.seed.to_string(),
                    ]
                })
                .collect(),
        ),
        Payload::Bench(b) => (
            strs(&[
                "table", "model", "method", "H", "metric", "reference", "observed", "lower", "upper", "status",
            ]),
            b.rows
                .iter()
                .map(|r| {
                    let c = &r.cell;
                    vec![
                        c.table.to_string(),
                        c.model.to_string(),
                        c.method.to_string(),
                        if c.method.uses_slices() { c.slices.to_string() } else { String::new() },
                        serde_json::to_value(c.metric)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default(),
                        f(c.value),
                        f(r.observed),
                        opt(r.band.map(|b| f(b.lower))),
                        opt(r.band.map(|b| f(b.upper))),
                        match r.pass {
                            Some(true) => "PASS".into(),
                            Some(false) => "FAIL".into(),
                            None => "-".into(),
                        },
                    ]
                })
                .collect(),
        ),
        Payload::Housing(h) => {
            let dims = h.options.dim;
            let mut header = strs(&["method", "mse_mean", "mse_se", "mse_sd"]);
            header.extend((1..=dims).map(|k| format!("corr_{k}")));
            header.push("corr_weighted".into());
            let mut rows: Vec<Vec<String>> = h
                .methods
                .iter()
                .map(|m| {
                    let mut row = vec![m.method.to_string(), f(m.mse.mean), f(m.mse.se), f(m.mse.sd)];
                    row.extend((0..dims).map(|k| opt(m.correlations.per_direction.get(k).map(|&v| f(v)))));
                    row.push(f(m.correlations.weighted_average));
                    row
                })
                .collect();
            for (name, s) in [("MLR", &h.mlr), ("kNN", &h.raw_knn)] {
                let mut row = vec![name.to_string(), f(s.mean), f(s.se), f(s.sd)];
                row.extend(std::iter::repeat_n(String::new(), dims + 1));
                rows.push(row);
            }
            (header, rows)
        }
        Payload::Fit(e) => {
            let mut header = strs(&["k", "eigenvalue", "bic", "selected"]);
            header.extend((1..=e.p).map(|j| format!("beta_{j}")));
            let rows = (0..e.p)
                .map(|k| {
                    let mut row = vec![
                        (k + 1).to_string(),
                        f(e.eigenvalues[k]),
                        opt(e.bic_curve.as_ref().map(|c| f(c.values[k]))),
                        (k < e.k_hat).to_string(),
                    ];
                    row.extend(e.basis.column(k).iter().map(|&v| f(v)));
                    row
                })
                .collect();
            (header, rows)
        }
    }
}

fn align(header: &[String], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * width.len().saturating_sub(1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}
