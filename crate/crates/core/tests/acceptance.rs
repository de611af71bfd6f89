//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use osir_core::estimators::{bundle_probabilities, equal_count_difference_form, equal_count_form_with_edge, kernel_for};
use osir_core::linalg::SymmetricMatrix;
use osir_core::regression::{housing_pipeline, HousingOptions};
use osir_core::simulation::{simulate_outcomes, summarize_outcomes, ConfigOutcomes, EstimatorConfig};
use osir_core::stats::sign_test;
use osir_core::*;

use common::{gaussian, pick, random_regression, rng, stats_for};

const SEED: u64 = 20_240_601;
const REPS: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

/// One simulation shared by the table criteria: models 1–4 with SIR, OSIR_1,
/// OSIR_5 at H = 10 and CUME, 1000 replicates each.
fn table_run() -> &'static Vec<ConfigOutcomes> {
    static RUN: OnceLock<Vec<ConfigOutcomes>> = OnceLock::new();
    RUN.get_or_init(|| {
        simulate_outcomes(&SimulationPlan {
            models: (1..=4).map(ModelSpec::benchmark).collect(),
            configs: vec![
                EstimatorConfig::new(Method::Sir, 10),
                EstimatorConfig::new(Method::Osir { level: 1 }, 10),
                EstimatorConfig::new(Method::Osir { level: 5 }, 10),
                EstimatorConfig::new(Method::Cume, 10),
            ],
            reps: REPS,
            seed: SEED,
            ridge: 0.0,
        })
        .expect("table simulation")
    })
}

fn table_outcomes(model: u8, method: Method) -> &'static ConfigOutcomes {
    table_run()
        .iter()
        .find(|o| o.model.id == model && o.config.method == method)
        .expect("configuration present")
}

fn table_report() -> &'static SimulationReport {
    static REPORT: OnceLock<SimulationReport> = OnceLock::new();
    REPORT.get_or_init(|| summarize_outcomes(table_run()))
}

fn row(model: u8, method: Method) -> &'static osir_core::simulation::SimulationRow {
    table_report().find(model, method, 10).expect("row present")
}

fn criterion_1() -> Outcome {
    let checks = [
        (1, Method::Sir, 0.9855, 0.010),
        (3, Method::Osir { level: 1 }, 0.7709, 0.020),
        (4, Method::Osir { level: 5 }, 0.7862, 0.020),
        (3, Method::Cume, 0.7802, 0.020),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (model, method, target, tol) in checks {
        let r = row(model, method).mean_r;
        let ok = within(r, target, tol);
        pass &= ok;
        parts.push(format!("model {model} {method}: {r:.4} (target {target}±{tol}{})", if ok { "" } else { " MISS" }));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in 2..=4 {
        let sir = &table_outcomes(model, Method::Sir).trace_corr;
        let osir = &table_outcomes(model, Method::Osir { level: 1 }).trace_corr;
        let (ms, mo) = (row(model, Method::Sir).mean_r, row(model, Method::Osir { level: 1 }).mean_r);
        let t = sign_test(osir, sir);
        let ok = mo > ms && t.significant(0.05);
        pass &= ok;
        parts.push(format!(
            "model {model}: OSIR_1 {mo:.4} vs SIR {ms:.4}, wins {}/{} p={:.2e}",
            t.wins,
            t.wins + t.losses,
            t.p_value
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let sir = row(1, Method::Sir).freq_exact;
    let osir = row(1, Method::Osir { level: 5 }).freq_exact;
    outcome(
        within(sir, 0.698, 0.06) && within(osir, 0.986, 0.03),
        format!("model 1 exact-dimension frequency: SIR {sir:.3} (0.698±0.06), OSIR_5 {osir:.3} (0.986±0.03)"),
    )
}

fn criterion_4() -> Outcome {
    let cume = row(3, Method::Cume).freq_under;
    let osir = row(3, Method::Osir { level: 5 }).freq_exact;
    outcome(
        cume >= 0.98 && within(osir, 0.975, 0.03),
        format!("model 3: CUME under-estimation {cume:.3} (>=0.98), OSIR_5 exact {osir:.3} (0.975±0.03)"),
    )
}

/// `(n, p, H)` for the identity checks; every fourth case forces `H ∤ n`.
fn identity_cases(seed: u64, count: usize) -> Vec<(usize, usize, usize)> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let h = pick(&mut r, 3, 10);
            let p = pick(&mut r, 2, 8);
            let mut n = pick(&mut r, 20, 200);
            if i % 4 == 0 && n.is_multiple_of(h) {
                n += 1;
            }
            (n, p, h)
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let cases = identity_cases(SEED + 5, 100);
    let nondiv = cases.iter().filter(|(n, _, h)| n % h != 0).count();
    for (i, &(n, p, h)) in cases.iter().enumerate() {
        let (x, y) = random_regression(&mut rng(SEED + 500 + i as u64), n, p);
        let (stats, xbar) = stats_for(&x, &y, h);
        let bundle = osir_kernel(&stats, &xbar, 1).unwrap().matrix;
        let diff = osir_difference_form(&stats, &xbar, 1).unwrap().matrix;
        worst = worst.max(bundle.max_abs_diff(&diff));
    }
    outcome(
        worst <= 1e-10,
        format!("level 1 over 100 datasets ({nondiv} with H not dividing n): max |dev| = {worst:.2e} (<= 1e-10)"),
    )
}

fn criterion_6() -> Outcome {
    let mut general = 0.0f64;
    for (i, &(n, p, h)) in identity_cases(SEED + 6, 100).iter().enumerate() {
        let (x, y) = random_regression(&mut rng(SEED + 600 + i as u64), n, p);
        let (stats, xbar) = stats_for(&x, &y, h);
        let bundle = osir_kernel(&stats, &xbar, 2).unwrap().matrix;
        let diff = osir_difference_form(&stats, &xbar, 2).unwrap().matrix;
        general = general.max(bundle.max_abs_diff(&diff));
    }
    let mut equal = 0.0f64;
    let mut printed_edge = 0.0f64;
    let mut r = rng(SEED + 66);
    for i in 0..100 {
        let h = pick(&mut r, 3, 10);
        let n = h * pick(&mut r, 2, 20);
        let p = pick(&mut r, 2, 8);
        let (x, y) = random_regression(&mut rng(SEED + 700 + i), n, p);
        let (stats, xbar) = stats_for(&x, &y, h);
        let bundle = osir_kernel(&stats, &xbar, 2).unwrap().matrix;
        equal = equal.max(bundle.max_abs_diff(&equal_count_difference_form(&stats, &xbar, 2).unwrap()));
        printed_edge =
            printed_edge.max(bundle.max_abs_diff(&equal_count_form_with_edge(&stats, &xbar, 2, 0.5).unwrap()));
    }
    println!(
        "FLAG      criterion 6: equal-count display with edge coefficient 1/(2H) deviates by up to {printed_edge:.3e}; \
         the general form implies 1/(6H)"
    );
    outcome(
        general <= 1e-10 && equal <= 1e-10,
        format!("level 2 general form max |dev| = {general:.2e}; equal-count form (edge 1/(6H)) max |dev| = {equal:.2e} (<= 1e-10)"),
    )
}

fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    let mut r = rng(SEED + 7);
    for i in 0..50 {
        let n = pick(&mut r, 3, 30);
        let p = pick(&mut r, 2, 6);
        let (x, y) = random_regression(&mut rng(SEED + 800 + i), n, p);
        let (stats, xbar) = stats_for(&x, &y, n);
        let full = osir_kernel(&stats, &xbar, n - 1).unwrap().matrix;
        let cume = cume_kernel(&x, y.as_slice()).unwrap().matrix;
        let twice = SymmetricMatrix::symmetrized(cume.as_matrix() * 2.0);
        worst = worst.max(full.max_abs_diff(&twice));
    }
    outcome(
        worst <= 1e-10,
        format!("H = n, L = n-1 kernel vs 2 x cumulative kernel over 50 datasets: max |dev| = {worst:.3e} (<= 1e-10)"),
    )
}

fn criterion_8() -> Outcome {
    let mut r = rng(SEED + 8);
    let (mut resid, mut ortho) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let p = pick(&mut r, 1, 20);
        let rank = pick(&mut r, 1, p);
        let a = gaussian(&mut r, p, rank);
        let b = gaussian(&mut r, p, p + 3);
        let gamma = SymmetricMatrix::symmetrized(&a * a.transpose());
        let sigma = SymmetricMatrix::symmetrized(&b * b.transpose() / (p + 3) as f64);
        let eig = generalized_eigen(&gamma, &sigma, 0.0).unwrap();
        let (g, s) = (gamma.as_matrix(), sigma.as_matrix());
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let res = (g * v - s * v * lambda).norm();
            let scale = (g.norm() + lambda.abs() * s.norm()) * v.norm();
            resid = resid.max(res / scale);
        }
        let gram = eig.eigenvectors.transpose() * s * &eig.eigenvectors;
        ortho = ortho.max((gram - DMatrix::identity(p, p)).amax());
    }
    outcome(
        resid <= 1e-8 && ortho <= 1e-8,
        format!("200 pencils: max relative residual {resid:.2e}, max |VᵀΣV - I| {ortho:.2e} (<= 1e-8)"),
    )
}

fn criterion_9() -> Outcome {
    let errors: Vec<f64> = [100, 400, 1600]
        .iter()
        .map(|&n| {
            let report = run_monte_carlo(&SimulationPlan {
                models: vec![ModelSpec::benchmark(1).with_n(n)],
                configs: vec![EstimatorConfig::new(Method::Osir { level: 1 }, 10)],
                reps: 500,
                seed: SEED + 9,
                ridge: 0.0,
            })
            .unwrap();
            1.0 - report.rows[0].mean_r
        })
        .collect();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    outcome(
        ratios.iter().all(|f| (2.5..=6.5).contains(f)),
        format!(
            "mean 1-r at n=100/400/1600: {:.4}/{:.4}/{:.5}; shrink factors {:.2}, {:.2} (in [2.5, 6.5])",
            errors[0], errors[1], errors[2], ratios[0], ratios[1]
        ),
    )
}

fn criterion_10() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/boston.csv");
    let raw = ingest_csv(path, "medv").unwrap();
    let opts = HousingOptions {
        methods: vec![Method::Sir, Method::Osir { level: 10 }],
        ..HousingOptions::default()
    };
    let rep = housing_pipeline(&raw, &opts).unwrap();
    let sir = &rep.methods[0];
    let osir = &rep.methods[1];
    let test = osir.improvement_over_sir.expect("paired against SIR");
    let ok = within(sir.mse.mean, 21.66, 1.5)
        && within(rep.raw_knn.mean, 53.53, 5.0)
        && within(rep.mlr.mean, 21.21, 1.5)
        && osir.mse.mean < sir.mse.mean
        && test.significant(0.05);
    outcome(
        ok,
        format!(
            "SIR MSE {:.2} (21.66±1.5); raw kNN {:.2} (53.53±5); MLR {:.2} (21.21±1.5); OSIR_10 {:.2} < SIR in {}/{} splits, p={:.3}",
            sir.mse.mean,
            rep.raw_knn.mean,
            rep.mlr.mean,
            osir.mse.mean,
            test.wins,
            test.wins + test.losses,
            test.p_value
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut r = rng(SEED + 11);
    let (mut prob_dev, mut shift_dev, mut psd_viol, mut basis_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..50 {
        let n = pick(&mut r, 20, 150);
        let p = pick(&mut r, 2, 6);
        let h = pick(&mut r, 2, 12);
        let (x, y) = random_regression(&mut rng(SEED + 1100 + i), n, p);
        let (stats, xbar) = stats_for(&x, &y, h);
        for level in 1..h {
            let s: f64 = bundle_probabilities(&stats, level).iter().sum();
            prob_dev = prob_dev.max((s - 1.0).abs());
        }

        let shift = DVector::from_fn(p, |_, _| pick(&mut r, 0, 20) as f64 - 10.0);
        let mut moved = x.clone();
        for mut row in moved.row_iter_mut() {
            row += shift.transpose();
        }
        let ds = Dataset::new(x.clone(), y.clone()).unwrap();
        let ds_moved = Dataset::new(moved, y.clone()).unwrap();
        let methods = [
            Method::Sir,
            Method::Osir { level: 1 },
            Method::Osir { level: h - 1 },
            Method::Cume,
            Method::CumeMean,
        ];
        for m in methods {
            if m.level() == Some(0) || m.level().is_some_and(|l| l >= h) {
                continue;
            }
            let a = kernel_for(&ds, m, h).unwrap().matrix;
            let b = kernel_for(&ds_moved, m, h).unwrap().matrix;
            shift_dev = shift_dev.max(a.max_abs_diff(&b));
        }

        let sir = sir_kernel(&stats, &xbar).unwrap().matrix;
        let osir1 = osir_kernel(&stats, &xbar, 1).unwrap().matrix;
        let gap = SymmetricMatrix::symmetrized(sir.as_matrix() - osir1.as_matrix());
        let min_eig = gap.eigenvalues()[0];
        psd_viol = psd_viol.max((-min_eig - 1e-10 * sir.trace()).max(0.0));

        let k = pick(&mut r, 1, p);
        let b1 = gaussian(&mut r, p, k);
        let b2 = gaussian(&mut r, p, k);
        let mix = gaussian(&mut r, k, k) + DMatrix::identity(k, k) * 3.0;
        let (s1, s2, s1b) = (
            SubspaceBasis::new(b1.clone()).unwrap(),
            SubspaceBasis::new(b2).unwrap(),
            SubspaceBasis::new(&b1 * mix).unwrap(),
        );
        let r12 = trace_correlation(&s1, &s2).unwrap();
        basis_dev = basis_dev
            .max((r12 - trace_correlation(&s2, &s1).unwrap()).abs())
            .max((r12 - trace_correlation(&s1b, &s2).unwrap()).abs());
    }
    outcome(
        prob_dev <= 1e-12 && shift_dev <= 1e-10 && psd_viol == 0.0 && basis_dev <= 1e-10,
        format!(
            "bundle mass dev {prob_dev:.1e}; translation dev {shift_dev:.1e}; PSD-order violation {psd_viol:.1e}; \
             trace-correlation basis dev {basis_dev:.1e}"
        ),
    )
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        // Listing mode for test runners: this target is a single suite.
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, Criterion); 11] = [
        ("suite 1 accuracy bands", criterion_1),
        ("OSIR_1 beats SIR (paired sign test)", criterion_2),
        ("suite 2 dimension frequencies", criterion_3),
        ("suite 3 dimension frequencies", criterion_4),
        ("level-1 difference identity", criterion_5),
        ("level-2 difference identity", criterion_6),
        ("cumulative-slicing equivalence", criterion_7),
        ("generalized eigensolver contract", criterion_8),
        ("root-n error rate", criterion_9),
        ("housing pipeline", criterion_10),
        ("property suite", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
