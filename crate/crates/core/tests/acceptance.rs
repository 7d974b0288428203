//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//!     cargo test -p sfde-core --test acceptance

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use sfde_core::contrast::{
    contrast, contrast_gradient, contrast_hessian_diagonal, ContrastWorkspace,
};
use sfde_core::delay_measure::{DelayMeasure, DensityPiece};
use sfde_core::estimate::{closed_form_from_workspace, minimize_contrast, NelderMeadOptions};
use sfde_core::model::{
    builtin_benchmark, Dims, FnCoefficients, History, ModelSpec, ParameterBox, BENCHMARK_THETA,
};
use sfde_core::montecarlo::diagnostics::{ks_distance, Reference};
use sfde_core::montecarlo::output::write_summary_csv;
use sfde_core::montecarlo::{
    run_experiment, run_experiment_with_workers, CellSummary, ExperimentPlan, MonteCarloSummary,
};
use sfde_core::rng::derive_seed;
use sfde_core::simulate::{path_to_ode_distance, simulate_path, solve_limit_ode, SimConfig};
use sfde_core::Cell;

const MASTER_SEED: u64 = 1;

type Criterion = (&'static str, fn() -> Check);

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            detail: String::new(),
        }
    }

    fn within(&mut self, label: &str, value: f64, lo: f64, hi: f64) {
        let good = value >= lo && value <= hi;
        self.ok &= good;
        self.note(format!(
            "{label}={value:.5} in [{lo:.4}, {hi:.4}]{}",
            if good { "" } else { " (violated)" }
        ));
    }

    fn below(&mut self, label: &str, value: f64, limit: f64) {
        let good = value < limit;
        self.ok &= good;
        self.note(format!(
            "{label}={value:.3e} < {limit:e}{}",
            if good { "" } else { " (violated)" }
        ));
    }

    fn at_most(&mut self, label: &str, value: f64, limit: f64) {
        let good = value <= limit;
        self.ok &= good;
        self.note(format!(
            "{label}={value:.3e} <= {limit:e}{}",
            if good { "" } else { " (violated)" }
        ));
    }

    fn holds(&mut self, label: &str, good: bool) {
        self.ok &= good;
        self.note(format!(
            "{label}: {}",
            if good { "holds" } else { "violated" }
        ));
    }

    fn note(&mut self, s: String) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&s);
    }
}

fn grid_plan() -> &'static MonteCarloSummary {
    static CELL: OnceLock<MonteCarloSummary> = OnceLock::new();
    CELL.get_or_init(|| {
        let plan = ExperimentPlan::new(
            builtin_benchmark(),
            BENCHMARK_THETA.to_vec(),
            vec![
                Cell::new(1000, 0.01),
                Cell::new(1000, 0.03),
                Cell::new(1000, 0.1),
                Cell::new(100, 0.01),
                Cell::new(10_000, 0.01).with_replications(200),
            ],
            1000,
            MASTER_SEED,
        );
        run_experiment(&plan).expect("experiment grid")
    })
}

fn coarse_plan() -> ExperimentPlan {
    ExperimentPlan::new(
        builtin_benchmark(),
        BENCHMARK_THETA.to_vec(),
        vec![Cell::new(100, 0.1)],
        1000,
        MASTER_SEED,
    )
}

fn coarse_summary() -> &'static MonteCarloSummary {
    static CELL: OnceLock<MonteCarloSummary> = OnceLock::new();
    CELL.get_or_init(|| run_experiment(&coarse_plan()).expect("coarse experiment"))
}

fn cell(s: &MonteCarloSummary, n: usize, eps: f64) -> &CellSummary {
    s.cell(n, eps)
        .unwrap_or_else(|| panic!("missing cell n={n} eps={eps}"))
}

fn stats(c: &CellSummary, name: &str) -> (f64, f64) {
    let s = c.coord(name).unwrap();
    (s.mean, s.sd)
}

fn fine_cell_moments() -> Check {
    let c = cell(grid_plan(), 1000, 0.01);
    let (ma, sa) = stats(c, "alpha1");
    let (mb, sb) = stats(c, "beta1");
    let mut k = Check::new();
    k.within("mean(alpha1)", ma, 0.997, 1.003);
    k.within("sd(alpha1)", sa, 0.028, 0.035);
    k.within("mean(beta1)", mb, 2.992, 3.006);
    k.within("sd(beta1)", sb, 0.060, 0.078);
    k
}

fn coarse_cell_moments() -> Check {
    let c = cell(coarse_summary(), 100, 0.1);
    let mut k = Check::new();
    k.within("mean(alpha2)", stats(c, "alpha2").0, 1.96, 2.05);
    k.within("sd(beta2)", stats(c, "beta2").1, 0.24, 0.33);
    k
}

fn rates() -> Check {
    let s = grid_plan();
    let sd_a = |eps| stats(cell(s, 1000, eps), "alpha1").1;
    let sd_b = |n| stats(cell(s, n, 0.01), "beta1").1;
    let mut k = Check::new();
    k.within("sd_a(0.1)/sd_a(0.01)", sd_a(0.1) / sd_a(0.01), 7.5, 12.5);
    k.within("sd_a(0.03)/sd_a(0.01)", sd_a(0.03) / sd_a(0.01), 2.25, 3.75);
    let root10 = 10f64.sqrt();
    k.within("sd_b(100)/sd_b(10000)", sd_b(100) / sd_b(10_000), 7.0, 13.0);
    k.within(
        "sd_b(1000)/sd_b(10000)",
        sd_b(1000) / sd_b(10_000),
        0.7 * root10,
        1.3 * root10,
    );
    k
}

fn normality() -> Check {
    let s = grid_plan();
    let c = cell(s, 1000, 0.01);
    let mut k = Check::new();
    for (i, name) in s.coord_names.iter().enumerate() {
        k.below(
            &format!("KS(z_{name})"),
            ks_distance(&c.z_column(i), Reference::StdNormal).unwrap(),
            0.06,
        );
    }
    let chi2 = c.chi2_samples();
    k.within(
        "mean(chi2)",
        chi2.iter().sum::<f64>() / chi2.len() as f64,
        3.6,
        4.4,
    );
    k.below(
        "KS(chi2)",
        ks_distance(&chi2, Reference::ChiSquare(4.0)).unwrap(),
        0.07,
    );
    k
}

fn optimizer_agreement() -> Check {
    let spec = builtin_benchmark();
    let ns = [100, 200, 500, 1000];
    let epss = [0.01, 0.03, 0.1];
    let mut worst_gap: f64 = 0.0;
    let mut worst_stationarity: f64 = 0.0;
    for i in 0..25u64 {
        let n = ns[i as usize % ns.len()];
        let eps = epss[i as usize % epss.len()];
        let path = simulate_path(
            &spec,
            &SimConfig::new(n, eps, derive_seed(MASTER_SEED, &[5, i])),
            &BENCHMARK_THETA,
        )
        .unwrap();
        let ws = ContrastWorkspace::new(&path, &spec.delay).unwrap();
        let cf = closed_form_from_workspace(&ws, eps).unwrap();
        let opt = minimize_contrast(
            &ws,
            &spec,
            eps,
            &spec.bounds.center(),
            &NelderMeadOptions::default(),
        )
        .unwrap();
        let gap = cf
            .iter()
            .zip(&opt.theta_hat)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
        let g = contrast_gradient(&ws, &spec, &cf, eps).unwrap();
        let h = contrast_hessian_diagonal(&ws, &spec, &cf, eps).unwrap();
        let rel = g
            .iter()
            .zip(&h)
            .map(|(g, h)| (g / h).abs())
            .fold(0.0, f64::max);
        worst_stationarity = worst_stationarity.max(rel);
    }
    let mut k = Check::new();
    k.at_most("max |closed_form - optimizer|inf", worst_gap, 1e-4);
    k.at_most("max |g_i/H_ii| at closed form", worst_stationarity, 1e-3);
    k
}

fn naive_contrast(spec: &ModelSpec, ws: &ContrastWorkspace, theta: &[f64], eps: f64) -> f64 {
    let n = ws.n();
    let beta = &theta[spec.dims().p..];
    let mut total = 0.0;
    for k in 1..=n {
        let (x, h, dx) = (ws.state(k), ws.delayed(k), ws.increment(k));
        let mut b = [0.0; 2];
        spec.drift(x, h, theta, &mut b);
        let p = [dx[0] - b[0] / n as f64, dx[1] - b[1] / n as f64];
        let mut s = [0.0; 4];
        spec.diffusion(x, h, beta, &mut s);
        let a = s[0] * s[0] + s[1] * s[1];
        let c = s[0] * s[2] + s[1] * s[3];
        let d = s[2] * s[2] + s[3] * s[3];
        let det = a * d - c * c;
        let quad = (d * p[0] * p[0] - 2.0 * c * p[0] * p[1] + a * p[1] * p[1]) / det;
        total += det.ln() + n as f64 / (eps * eps) * quad;
    }
    total
}

fn coupled_model() -> ModelSpec {
    ModelSpec::new(
        "coupled",
        Arc::new(FnCoefficients::new(
            Dims {
                d: 2,
                r: 2,
                p: 2,
                q: 2,
            },
            |x, h, t, out| {
                out[0] = t[0] * h[1] - x[0];
                out[1] = t[1] * h[0].sin();
            },
            |x, h, b, out| {
                out[0] = b[0];
                out[1] = 0.4 * x[1].cos();
                out[2] = 0.3 * h[0];
                out[3] = b[1] * (1.0 + h[1] * h[1]).sqrt();
            },
        )),
        ParameterBox::uniform(2, 2, 0.1, 10.0).unwrap(),
        DelayMeasure::new(
            0.2,
            vec![(0.05, 0.5)],
            vec![DensityPiece {
                start: 0.1,
                end: 0.2,
                height: 3.0,
            }],
        )
        .unwrap(),
        History::constant(vec![0.5, -0.3]),
    )
    .unwrap()
}

fn properties() -> Check {
    let mut k = Check::new();

    let measures = [
        DelayMeasure::dirac(0.1).unwrap(),
        DelayMeasure::new(0.3, vec![(0.0, 0.25), (0.17, 0.5), (0.3, 0.25)], vec![]).unwrap(),
        DelayMeasure::uniform(0.1, 10.0).unwrap(),
        DelayMeasure::new(
            0.2,
            vec![(0.05, 0.5)],
            vec![DensityPiece {
                start: 0.02,
                end: 0.13,
                height: 4.0,
            }],
        )
        .unwrap(),
    ];
    let mut worst_sum: f64 = 0.0;
    let mut atoms_exact = true;
    for (i, m) in measures.iter().enumerate() {
        for n in [3, 7, 10, 64, 100, 333, 1000, 4096] {
            let gap = (m.grid_weights(n).unwrap().total() - m.total_mass()).abs();
            if i < 2 {
                atoms_exact &= gap == 0.0;
            }
            worst_sum = worst_sum.max(gap / m.total_mass());
        }
    }
    k.holds("atomic weight sums exact", atoms_exact);
    k.below("weight-sum rel. gap with densities", worst_sum, 1e-12);

    let dirac = DelayMeasure::dirac(0.1).unwrap();
    let mut dirac_exact = true;
    for n in [10, 37, 100, 1000] {
        let lags = dirac.grid_weights(n).unwrap().lags();
        let window: Vec<f64> = (0..=lags)
            .flat_map(|j| [(j as f64).sin(), (j as f64 * 0.3).exp()])
            .collect();
        dirac_exact &= dirac.h_discrete(n, 2, &window).unwrap() == window[2 * lags..2 * lags + 2];
    }
    k.holds("Dirac H_n = lagged state", dirac_exact);

    let spec = builtin_benchmark();
    let mut ode_exact = true;
    for n in [100, 1000] {
        let sim = simulate_path(&spec, &SimConfig::new(n, 0.0, 11), &BENCHMARK_THETA).unwrap();
        let ode = solve_limit_ode(&spec, &BENCHMARK_THETA, n).unwrap();
        ode_exact &= sim.values() == ode.values();
    }
    k.holds("eps=0 simulation = limit ODE", ode_exact);

    let mut worst_rel: f64 = 0.0;
    for (model, theta) in [
        (spec.clone(), BENCHMARK_THETA.to_vec()),
        (coupled_model(), vec![1.5, 0.7, 2.0, 1.2]),
    ] {
        for seed in 0..5 {
            let path = simulate_path(&model, &SimConfig::new(200, 0.05, seed), &theta).unwrap();
            let ws = ContrastWorkspace::new(&path, &model.delay).unwrap();
            for probe in [theta.clone(), vec![0.8, 2.5, 1.1, 3.0]] {
                let fast = contrast(&ws, &model, &probe, 0.05).unwrap();
                let slow = naive_contrast(&model, &ws, &probe, 0.05);
                worst_rel = worst_rel.max((fast - slow).abs() / slow.abs().max(1e-300));
            }
        }
    }
    k.below("Cholesky vs naive contrast rel. error", worst_rel, 1e-10);

    let ode = solve_limit_ode(&spec, &BENCHMARK_THETA, 1000).unwrap();
    let median_distance = |eps: f64| {
        let mut ds: Vec<f64> = (0..50u64)
            .map(|s| {
                let p = simulate_path(
                    &spec,
                    &SimConfig::new(1000, eps, derive_seed(MASTER_SEED, &[6, s])),
                    &BENCHMARK_THETA,
                )
                .unwrap();
                path_to_ode_distance(&p, &ode).unwrap()
            })
            .collect();
        ds.sort_by(f64::total_cmp);
        0.5 * (ds[24] + ds[25])
    };
    let (d1, d2, d4) = (
        median_distance(0.04),
        median_distance(0.02),
        median_distance(0.01),
    );
    k.within("median dist ratio eps 0.04/0.02", d1 / d2, 1.2, 2.8);
    k.within("median dist ratio eps 0.02/0.01", d2 / d4, 1.2, 2.8);
    k
}

fn summary_bytes(s: &MonteCarloSummary) -> Vec<u8> {
    let mut buf = Vec::new();
    write_summary_csv(s, &mut buf).unwrap();
    buf
}

fn determinism() -> Check {
    let plan = coarse_plan();
    let first = summary_bytes(coarse_summary());
    let again = summary_bytes(&run_experiment(&plan).unwrap());
    let one = summary_bytes(&run_experiment_with_workers(&plan, 1).unwrap());
    let eight = summary_bytes(&run_experiment_with_workers(&plan, 8).unwrap());
    let mut k = Check::new();
    k.holds("rerun byte-identical", first == again);
    k.holds(
        "workers 1 vs 8 byte-identical",
        one == eight && one == first,
    );
    k
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("closed-form moments at n=1000, eps=0.01", fine_cell_moments),
        ("closed-form moments at n=100, eps=0.1", coarse_cell_moments),
        ("eps^-1 and sqrt(n) rates", rates),
        ("normality of standardised errors", normality),
        ("closed form = optimizer, stationarity", optimizer_agreement),
        ("property suites", properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(c) => (c.ok, c.detail),
            Err(e) => (
                false,
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()),
            ),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {}: {} [{name}] ({:.1}s) {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
