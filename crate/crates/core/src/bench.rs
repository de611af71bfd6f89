//! Fixed benchmark configurations with reference values and
//! tolerance bands.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, OsirError, Result};
use crate::estimators::Method;
use crate::simulation::{run_monte_carlo, EstimatorConfig, ModelSpec, SimulationPlan, SimulationReport, SimulationRow};

/// Replications behind the reference values; bands are stated at this count.
pub const REFERENCE_REPS: usize = 1000;
pub const DEFAULT_BENCH_REPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Table1,
    Table2,
    Table3,
    All,
}

impl FromStr for Suite {
    type Err = OsirError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Self::Table1),
            "table2" => Ok(Self::Table2),
            "table3" => Ok(Self::Table3),
            "all" => Ok(Self::All),
            other => invalid(format!("unknown suite '{other}' (expected table1, table2, table3 or all)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Table1 => "table1",
            Self::Table2 => "table2",
            Self::Table3 => "table3",
            Self::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanR,
    FreqUnder,
    FreqExact,
    FreqOver,
}

impl Metric {
    fn of(self, row: &SimulationRow) -> f64 {
        match self {
            Self::MeanR => row.mean_r,
            Self::FreqUnder => row.freq_under,
            Self::FreqExact => row.freq_exact,
            Self::FreqOver => row.freq_over,
        }
    }
}

/// Acceptance interval at the reference replication count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCell {
    pub table: u8,
    pub model: u8,
    pub method: Method,
    pub slices: usize,
    pub metric: Metric,
    pub value: f64,
    /// Cells without a band are reported but not gated.
    pub band: Option<Band>,
}

fn sym(value: f64, tol: f64) -> Option<Band> {
    Some(Band {
        lower: value - tol,
        upper: value + tol,
    })
}

fn level_method(level: usize) -> Method {
    if level == 0 {
        Method::Sir
    } else {
        Method::Osir { level }
    }
}

/// Mean trace correlations, `[model 1..4]` per row, rows `L = 0..`.
const TABLE1_H5: [[f64; 4]; 5] = [
    [0.9822, 0.8658, 0.7188, 0.6968],
    [0.9821, 0.8734, 0.7419, 0.7261],
    [0.9821, 0.8724, 0.7489, 0.7355],
    [0.9827, 0.8730, 0.7471, 0.7327],
    [0.9827, 0.8730, 0.7471, 0.7327],
];
const TABLE1_H10: [[f64; 4]; 10] = [
    [0.9855, 0.8689, 0.7296, 0.7288],
    [0.9862, 0.8916, 0.7709, 0.7658],
    [0.9859, 0.8921, 0.7775, 0.7726],
    [0.9855, 0.8902, 0.7813, 0.7762],
    [0.9853, 0.8888, 0.7855, 0.7813],
    [0.9854, 0.8879, 0.7894, 0.7862],
    [0.9856, 0.8878, 0.7920, 0.7900],
    [0.9859, 0.8881, 0.7924, 0.7903],
    [0.9861, 0.8885, 0.7908, 0.7879],
    [0.9861, 0.8885, 0.7908, 0.7879],
];
const TABLE1_CUME: [f64; 4] = [0.9844, 0.8781, 0.7802, 0.7760];

/// Dimension frequencies (under, exact, over) at `H = 10`, rows `L = 0..9`
/// then CUME; two models per row.
const TABLE2: [[[f64; 3]; 2]; 11] = [
    [[0.0, 0.698, 0.320], [0.0, 0.056, 0.944]],
    [[0.0, 0.896, 0.104], [0.0, 0.203, 0.797]],
    [[0.0, 0.938, 0.062], [0.0, 0.337, 0.663]],
    [[0.0, 0.958, 0.042], [0.0, 0.422, 0.578]],
    [[0.0, 0.972, 0.028], [0.0, 0.521, 0.479]],
    [[0.0, 0.986, 0.014], [0.0, 0.574, 0.426]],
    [[0.0, 0.993, 0.007], [0.0, 0.618, 0.382]],
    [[0.0, 0.994, 0.006], [0.0, 0.629, 0.371]],
    [[0.0, 0.994, 0.006], [0.0, 0.611, 0.389]],
    [[0.0, 0.991, 0.009], [0.0, 0.568, 0.432]],
    [[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
];
const TABLE3: [[[f64; 3]; 2]; 11] = [
    [[0.0, 0.194, 0.806], [0.0, 0.189, 0.811]],
    [[0.0, 0.473, 0.527], [0.0, 0.513, 0.487]],
    [[0.0, 0.702, 0.298], [0.0, 0.772, 0.228]],
    [[0.0, 0.886, 0.114], [0.002, 0.923, 0.075]],
    [[0.0, 0.956, 0.044], [0.004, 0.976, 0.020]],
    [[0.0, 0.975, 0.025], [0.008, 0.984, 0.008]],
    [[0.001, 0.982, 0.017], [0.012, 0.986, 0.002]],
    [[0.002, 0.977, 0.021], [0.016, 0.981, 0.003]],
    [[0.002, 0.965, 0.033], [0.018, 0.975, 0.007]],
    [[0.0, 0.958, 0.042], [0.013, 0.973, 0.014]],
    [[0.999, 0.001, 0.0], [1.0, 0.0, 0.0]],
];

fn table1_cells() -> Vec<ReferenceCell> {
    let mut cells = Vec::new();
    let gated = |model: u8, method: Method, slices: usize| match (model, method, slices) {
        (1, Method::Sir, 10) => Some(0.010),
        (3, Method::Osir { level: 1 }, 10) => Some(0.020),
        (4, Method::Osir { level: 5 }, 10) => Some(0.020),
        (3, Method::Cume, _) => Some(0.020),
        _ => None,
    };
    let mut push = |model: u8, method: Method, slices: usize, value: f64| {
        cells.push(ReferenceCell {
            table: 1,
            model,
            method,
            slices,
            metric: Metric::MeanR,
            value,
            band: gated(model, method, slices).and_then(|t| sym(value, t)),
        });
    };
    for (slices, rows) in [(5, &TABLE1_H5[..]), (10, &TABLE1_H10[..])] {
        for (level, row) in rows.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                push(m as u8 + 1, level_method(level), slices, v);
            }
        }
    }
    for (m, &v) in TABLE1_CUME.iter().enumerate() {
        push(m as u8 + 1, Method::Cume, 10, v);
    }
    cells
}

fn frequency_cells(table: u8, models: [u8; 2], data: &[[[f64; 3]; 2]; 11]) -> Vec<ReferenceCell> {
    let mut cells = Vec::new();
    for (row, entries) in data.iter().enumerate() {
        let method = if row == 10 { Method::Cume } else { level_method(row) };
        for (mi, triple) in entries.iter().enumerate() {
            let model = models[mi];
            for (metric, &value) in [Metric::FreqUnder, Metric::FreqExact, Metric::FreqOver]
                .into_iter()
                .zip(triple)
            {
                let band = match (model, method, metric) {
                    (1, Method::Sir, Metric::FreqExact) => sym(value, 0.06),
                    (1, Method::Osir { level: 5 }, Metric::FreqExact) => sym(value, 0.03),
                    (3, Method::Osir { level: 5 }, Metric::FreqExact) => sym(value, 0.03),
                    (3, Method::Cume, Metric::FreqUnder) => Some(Band { lower: 0.98, upper: 1.0 }),
                    _ => None,
                };
                cells.push(ReferenceCell {
                    table,
                    model,
                    method,
                    slices: 10,
                    metric,
                    value,
                    band,
                });
            }
        }
    }
    cells
}

/// All reference cells of a suite.
pub fn reference_cells(suite: Suite) -> Vec<ReferenceCell> {
    match suite {
        Suite::Table1 => table1_cells(),
        Suite::Table2 => frequency_cells(2, [1, 2], &TABLE2),
        Suite::Table3 => frequency_cells(3, [3, 4], &TABLE3),
        Suite::All => [Suite::Table1, Suite::Table2, Suite::Table3]
            .into_iter()
            .flat_map(reference_cells)
            .collect(),
    }
}

/// Widens a band about the reference value by `sqrt(REFERENCE_REPS / reps)`
/// when fewer replications are run, clipped to `[0, 1]`.
pub fn scaled_band(cell: &ReferenceCell, reps: usize) -> Option<Band> {
    let band = cell.band?;
    let factor = (REFERENCE_REPS as f64 / reps.max(1) as f64).sqrt().max(1.0);
    Some(Band {
        lower: (cell.value - (cell.value - band.lower) * factor).max(0.0),
        upper: (cell.value + (band.upper - cell.value) * factor).min(1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub cell: ReferenceCell,
    pub observed: f64,
    pub se: Option<f64>,
    pub band: Option<Band>,
    /// `None` for ungated cells.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub suite: Suite,
    pub reps: usize,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    pub simulation: SimulationReport,
}

impl BenchReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn gated(&self) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(|r| r.pass.is_some())
    }
}

/// Simulation plan covering every cell of the suite.
pub fn bench_plan(suite: Suite, reps: usize, seed: u64) -> SimulationPlan {
    let cells = reference_cells(suite);
    let mut models: Vec<u8> = cells.iter().map(|c| c.model).collect();
    models.sort_unstable();
    models.dedup();
    let mut configs: Vec<EstimatorConfig> = Vec::new();
    for c in &cells {
        let cfg = EstimatorConfig::new(c.method, c.slices);
        if !configs.contains(&cfg) {
            configs.push(cfg);
        }
    }
    SimulationPlan {
        models: models.into_iter().map(ModelSpec::benchmark).collect(),
        configs,
        reps,
        seed,
        ridge: 0.0,
    }
}

pub fn compare(suite: Suite, simulation: SimulationReport, reps: usize, seed: u64) -> Result<BenchReport> {
    let rows = reference_cells(suite)
        .into_iter()
        .map(|cell| {
            let row = simulation.find(cell.model, cell.method, cell.slices).ok_or_else(|| {
                OsirError::InvalidInput(format!(
                    "no simulation row for model {} {} H={}",
                    cell.model, cell.method, cell.slices
                ))
            })?;
            let observed = cell.metric.of(row);
            let band = scaled_band(&cell, reps);
            Ok(BenchRow {
                cell,
                observed,
                se: (cell.metric == Metric::MeanR).then_some(row.se_r),
                band,
                pass: band.map(|b| observed >= b.lower && observed <= b.upper),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        suite,
        reps,
        seed,
        rows,
        simulation,
    })
}

pub fn run_bench(suite: Suite, reps: usize, seed: u64) -> Result<BenchReport> {
    let plan = bench_plan(suite, reps, seed);
    let sim = run_monte_carlo(&plan)?;
    compare(suite, sim, reps, seed)
}
