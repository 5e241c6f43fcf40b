//! One PASS/FAIL line per acceptance criterion, run on the checked-in
//! configs. Run with
//! `cargo test -p pme-validation --test acceptance -- --nocapture` to see
//! the report.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use pme_core::harness::sweep::TimeIntegrals;
use pme_core::harness::{
    fund1_study, run_m_sweep, run_operator_suite, run_refinement_study, RunConfig,
};

const RUNTIME_PER_M: f64 = 60.0;
const MASS_GROWTH_SLACK: f64 = 1e-6;
const MASS_BALANCE_TOL: f64 = 1e-12;
const MIN_EXACT_ORDER: f64 = 1.0;
const FUND1_REL_ERR: f64 = 1e-3;
const FUND1_MIN_ORDER: f64 = 1.5;
const RESIDUAL_RATIO: (f64, f64) = (0.25, 0.9);
const PRESSURE_BOUND: f64 = 2.0 * (1.0 + 1e-3);
const UNIFORM_FACTOR: f64 = 3.0;
const SUITE_SECONDS: f64 = 300.0;

fn config(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.json"));
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

type Getter = fn(&TimeIntegrals) -> f64;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, name: &str, passed: bool, detail: String) {
        println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failed.push(name.to_string());
        }
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.len() >= 2 && v.windows(2).all(|w| w[1] < w[0])
}

/// Agreement to three significant digits of the reference `b`.
fn three_digits(a: f64, b: f64) -> bool {
    (a - b).abs() <= 0.5 * 10f64.powf(b.abs().log10().floor() - 2.0)
}

/// `∫_{R²} |∇p|² Δp` for `p = exp(-|x|²)` by composite Simpson in the radius.
fn fund1_quadrature() -> f64 {
    let (n, r_max) = (20_000, 8.0);
    let h = r_max / n as f64;
    let f = |r: f64| {
        let s = r * r;
        2.0 * PI * r * 4.0 * s * (4.0 * s - 4.0) * (-3.0 * s).exp()
    };
    let inner: f64 = (1..n)
        .map(|k| f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(0.0) + f(r_max) + inner) * h / 3.0
}

#[test]
fn acceptance() {
    println!();
    let mut report = Report { failed: Vec::new() };

    // Default sweep.
    let sweep_cfg = config("default_sweep");
    let sweep = run_m_sweep(&sweep_cfg, Some(1)).expect("default sweep");
    let g0 = sweep_cfg.growth_law().unwrap().eval(0.0);
    let mut bound_ok = true;
    let mut worst_ratio = f64::MIN;
    for run in &sweep.runs {
        let mass0 = run.records[0].mass;
        for r in &run.records {
            let ratio = r.mass / ((r.t * g0).exp() * mass0);
            worst_ratio = worst_ratio.max(ratio);
            bound_ok &= ratio <= 1.0 + MASS_GROWTH_SLACK;
        }
    }
    report.line(
        "mass_growth_bound",
        bound_ok,
        format!("max mass(t) / (e^(t G(0)) mass(0)) = {worst_ratio:.9}"),
    );
    let slowest = sweep
        .runs
        .iter()
        .map(|r| r.wall_seconds)
        .fold(0.0, f64::max);
    report.line(
        "runtime_per_m",
        slowest < RUNTIME_PER_M,
        format!("slowest m took {slowest:.1} s (limit {RUNTIME_PER_M} s)"),
    );

    // Growth off.
    let balance = run_m_sweep(&config("mass_balance"), Some(1)).expect("mass balance sweep");
    let drift = balance
        .runs
        .iter()
        .map(|run| {
            let (first, last) = (&run.records[0], run.records.last().unwrap());
            (last.mass - first.mass).abs() / first.mass
        })
        .fold(0.0, f64::max);
    report.line(
        "mass_balance",
        drift <= MASS_BALANCE_TOL,
        format!("max relative mass change {drift:.2e}"),
    );

    // Exact solution.
    for name in ["barenblatt_1d", "barenblatt_2d"] {
        let cfg = config(name);
        let study = run_refinement_study(&cfg, &cfg.refine_cells, Some(1)).expect("refinement");
        let errors: Vec<f64> = study.runs.iter().filter_map(|r| r.exact_l1_error).collect();
        let ok = study.exact_orders.len() == 2
            && study.exact_orders.iter().all(|&o| o >= MIN_EXACT_ORDER);
        report.line(
            name,
            ok,
            format!(
                "N {:?}: L1 errors {}, orders {:.2?}",
                study.cells,
                sci(&errors),
                study.exact_orders
            ),
        );
    }

    // Identity on the Gaussian.
    let oracle = fund1_quadrature();
    let f = fund1_study(2, &[64, 128]).expect("identity study");
    let order = (f[0].rel_err / f[1].rel_err).log2();
    report.line(
        "fund1_rel_err",
        f[1].rel_err <= FUND1_REL_ERR,
        format!("rel_err {:.2e} at N = 128", f[1].rel_err),
    );
    report.line(
        "fund1_order",
        order >= FUND1_MIN_ORDER,
        format!("order {order:.2} from N = 64 to 128"),
    );
    report.line(
        "fund1_oracle",
        three_digits(f[1].lhs, oracle) && three_digits(f[1].rhs, oracle),
        format!(
            "lhs {:.6}, rhs {:.6}, quadrature {oracle:.6}",
            f[1].lhs, f[1].rhs
        ),
    );

    // Incompressible-limit trends.
    let ratios_ok = sweep
        .residual_ratios
        .iter()
        .all(|r| (RESIDUAL_RATIO.0..=RESIDUAL_RATIO.1).contains(r));
    report.line(
        "residual_decay",
        strictly_decreasing(&sweep.residuals) && ratios_ok,
        format!(
            "R_m {}, ratios {:.3?}",
            sci(&sweep.residuals),
            sweep.residual_ratios
        ),
    );
    for (name, values) in [
        ("proxy_excess", &sweep.excess),
        ("proxy_p_times_one_minus_rho", &sweep.p_times_onemrho),
        ("proxy_rho_gradp_defect", &sweep.rho_gradp_defect),
    ] {
        report.line(name, strictly_decreasing(values), sci(values));
    }
    for (name, d) in [
        ("cauchy_grad_p_frac", &sweep.cauchy_frac),
        ("cauchy_grad_p", &sweep.cauchy_pressure),
    ] {
        let adjacent: Vec<f64> = (0..d.len().saturating_sub(1))
            .map(|k| d[k][k + 1])
            .collect();
        report.line(
            name,
            strictly_decreasing(&adjacent),
            format!("D(m, 2m) {}", sci(&adjacent)),
        );
    }
    let sup_p: Vec<f64> = sweep.runs.iter().map(|r| r.max_sup_p).collect();
    report.line(
        "maximum_principle",
        sup_p.iter().all(|&p| p <= PRESSURE_BOUND),
        format!("max_t sup p per m {sup_p:.4?}"),
    );
    let integrals: [(&str, Getter); 5] = [
        ("grad_p_sq", |t| t.grad_p_sq),
        ("grad_p_frac_sq", |t| t.grad_p_frac_sq),
        ("rho_pow_int", |t| t.rho_pow_int),
        ("stiff_energy", |t| t.stiff_energy),
        ("hess_energy", |t| t.hess_energy),
    ];
    let mut uniform_ok = true;
    let mut factors = Vec::new();
    for (name, get) in integrals {
        let v: Vec<f64> = sweep.runs.iter().map(|r| get(&r.time_integrals)).collect();
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        let factor = hi / lo;
        uniform_ok &= lo > 0.0 && factor < UNIFORM_FACTOR;
        factors.push(format!("{name} {factor:.3}"));
    }
    report.line(
        "uniform_in_m",
        uniform_ok,
        format!("max/min across m: {}", factors.join(", ")),
    );

    // Operators.
    let start = Instant::now();
    let checks = run_operator_suite().expect("operator suite");
    let seconds = start.elapsed().as_secs_f64();
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    report.line(
        "operator_suite",
        failed.is_empty() && seconds < SUITE_SECONDS,
        format!("{} checks, failed {failed:?}, {seconds:.1} s", checks.len()),
    );

    assert!(
        report.failed.is_empty(),
        "failed criteria: {:?}",
        report.failed
    );
}
