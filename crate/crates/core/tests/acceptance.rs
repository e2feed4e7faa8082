//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Reports from both runs are kept under
//! the cargo target tmp directory for inspection.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rvlab::asymptotics::Mode;
use rvlab::gaussian::{
    abs_moment, bipower_variance_constant, multipower_long_run_constant, multipower_variance_constant, rho,
    power_variance_constant, theta_constant, CustomFn, GHFunction, Parity, SpotCov,
};
use rvlab::mc::{
    moment_oracle_with, run_clt, run_covariation_clt, run_joint_bpv_rv, run_jump_experiment, run_lln, EstimatorSpec,
    ExperimentConfig, ExperimentReport, Gates, OracleEstimate, OracleKind,
};
use rvlab::sim::{JumpArrivals, ModelSpec, PriceJumps};

const ORACLE_DRAWS: usize = 10_000_000;
const LLN_N: [usize; 8] = [50, 100, 200, 400, 800, 1600, 3200, 6400];

struct Criterion {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
            failures: Vec::new(),
        }
    }

    fn from_gates(id: u32, name: &'static str, reports: &[&ExperimentReport], keep: impl Fn(&str) -> bool) -> Self {
        let gates: Vec<_> = reports
            .iter()
            .flat_map(|r| r.gates.iter())
            .filter(|g| keep(&g.name))
            .collect();
        let failures: Vec<String> = gates
            .iter()
            .filter(|g| !g.passed)
            .map(|g| format!("{} = {} not in [{}, {}]", g.name, g.value, g.lo, g.hi))
            .collect();
        Self {
            id,
            name,
            passed: !gates.is_empty() && failures.is_empty(),
            detail: format!("{}/{} gates passed", gates.len() - failures.len(), gates.len()),
            failures,
        }
    }
}

fn c1_constants() -> Criterion {
    let mu1 = abs_moment(1.0).unwrap();
    let theta = theta_constant();
    let checks = [
        ("mu_1", (mu1 - (2.0 / PI).sqrt()).abs() <= 1e-12),
        ("theta", (theta - (PI * PI / 4.0 + PI - 5.0)).abs() <= 1e-12),
        ("v_2", power_variance_constant(2.0).unwrap() == 2.0),
        ("omega_1^2", multipower_variance_constant(1).unwrap() == 2.0),
        (
            "bipower(1,1)",
            (bipower_variance_constant(1.0, 1.0).unwrap() - mu1.powi(4) * (2.0 + theta)).abs() <= 1e-12,
        ),
    ];
    let bad: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let mut c = Criterion::new(1, "constants", bad.is_empty(), format!("{}/{} exact checks", 5 - bad.len(), 5));
    c.failures = bad.iter().map(|b| format!("{b} mismatch")).collect();
    c
}

fn oracle_cases() -> Vec<(String, f64, OracleKind)> {
    let mut v = Vec::new();
    for r in [0.5, 1.0, 4.0 / 3.0, 2.0, 3.0, 4.0] {
        v.push((format!("mu_{r:.4}"), abs_moment(r).unwrap(), OracleKind::AbsMoment { r }));
    }
    for r in [1.0, 2.0] {
        v.push((format!("v_{r}"), power_variance_constant(r).unwrap(), OracleKind::PowerVariance { r }));
    }
    for (r, s) in [(1.0, 1.0), (0.5, 1.5)] {
        v.push((
            format!("bipower({r},{s})"),
            bipower_variance_constant(r, s).unwrap(),
            OracleKind::BipowerConst { r, s },
        ));
    }
    for i in 1..=4 {
        v.push((
            format!("omega_{i}^2"),
            multipower_variance_constant(i).unwrap(),
            OracleKind::Omega { terms: i },
        ));
    }
    for powers in [vec![1.0; 4], vec![4.0 / 3.0; 3]] {
        v.push((
            format!("multipower{powers:?}"),
            multipower_long_run_constant(&powers).unwrap(),
            OracleKind::Multipower { powers },
        ));
    }
    v
}

fn run_oracles(workers: Option<usize>) -> (Vec<OracleEstimate>, f64) {
    let started = Instant::now();
    let est = oracle_cases()
        .iter()
        .enumerate()
        .map(|(k, (_, _, kind))| moment_oracle_with(kind, ORACLE_DRAWS, 900 + k as u64, workers).unwrap())
        .collect();
    (est, started.elapsed().as_secs_f64())
}

fn c2_oracle(est: &[OracleEstimate], secs: f64) -> Criterion {
    let cases = oracle_cases();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for ((label, closed, _), o) in cases.iter().zip(est) {
        let z = (closed - o.estimate).abs() / o.std_error;
        worst = worst.max(z);
        if z > 4.0 {
            failures.push(format!("{label}: closed {closed} vs oracle {} (z = {z:.2})", o.estimate));
        }
    }
    if secs >= 60.0 {
        failures.push(format!("runtime {secs:.1} s exceeds 60 s"));
    }
    let mut c = Criterion::new(
        2,
        "oracle agreement",
        failures.is_empty(),
        format!("{} constants, worst |z| = {worst:.2}, {secs:.1} s", cases.len()),
    );
    c.failures = failures;
    c
}

fn c3_quadrature() -> Criterion {
    let mut worst: f64 = 0.0;
    for r in [0.7, 1.0, 1.5, 2.4] {
        let f = CustomFn::new("abs_pow", 1, Parity::Even, r, move |x: &[f64]| x[0].abs().powf(r));
        for sigma in [0.5, 1.0, 3.0] {
            let got = rho(&GHFunction::Custom(f.clone()), &SpotCov::scalar(sigma)).unwrap()[(0, 0)];
            let want = abs_moment(r).unwrap() * sigma.powf(r);
            worst = worst.max((got - want).abs());
        }
    }
    Criterion::new(3, "quadrature fidelity", worst <= 1e-8, format!("max abs error {worst:.2e} over 12 cases"))
}

fn bivariate(rho: f64) -> ModelSpec {
    ModelSpec {
        dim: 2,
        ..ModelSpec::constant_vol(1.0)
    }
    .with_correlation(vec![vec![1.0, rho], vec![rho, 1.0]])
}

type Runner = fn(&ExperimentConfig) -> rvlab::Result<ExperimentReport>;

struct Suite {
    reports: Vec<(&'static str, ExperimentReport)>,
}

impl Suite {
    fn get(&self, name: &str) -> &ExperimentReport {
        &self.reports.iter().find(|r| r.0 == name).expect("report").1
    }
}

fn run_suite(workers: Option<usize>) -> Suite {
    let hint = |c: ExperimentConfig| match workers {
        Some(w) => c.with_workers(w),
        None => c,
    };
    let lln_estimators = vec![
        EstimatorSpec::RealizedVariance,
        EstimatorSpec::Bipower { r: 1.0, s: 1.0 },
        EstimatorSpec::PowerVariation { r: 1.0 },
        EstimatorSpec::PowerVariation { r: 2.0 },
        EstimatorSpec::QuarticityQuadpower,
    ];
    let lln_gates = Gates {
        slope: Some([-0.6, -0.4]),
        ..Gates::default()
    };
    let clt_gates = Gates {
        z_mean_abs: Some(0.05),
        z_variance: Some([0.90, 1.10]),
        ks: Some(0.03),
        coverage95: Some([0.935, 0.965]),
        feasible_coverage95: Some([0.925, 0.97]),
        ..Gates::default()
    };
    let matrix_gates = Gates {
        matrix_rel: Some(0.10),
        ..Gates::default()
    };
    let n = 1000usize;
    let configs: Vec<(&'static str, ExperimentConfig, Runner)> = vec![
        (
            "lln_constant_vol",
            ExperimentConfig::new(ModelSpec::constant_vol(1.0), lln_estimators.clone(), LLN_N.to_vec(), 1000, 101)
                .with_gates(lln_gates.clone()),
            run_lln,
        ),
        (
            "lln_heston_leverage",
            ExperimentConfig::new(ModelSpec::heston_leverage(-0.7), lln_estimators, LLN_N.to_vec(), 1000, 102)
                .with_gates(lln_gates),
            run_lln,
        ),
        (
            "clt_rv_bm",
            ExperimentConfig::new(ModelSpec::constant_vol(1.0), vec![EstimatorSpec::RealizedVariance], vec![n], 5000, 103)
                .with_mode(Mode::Oracle)
                .with_gates(clt_gates.clone()),
            run_clt,
        ),
        (
            "clt_bipower_heston",
            ExperimentConfig::new(
                ModelSpec::heston_leverage(-0.7),
                vec![EstimatorSpec::Bipower { r: 1.0, s: 1.0 }],
                vec![n],
                5000,
                104,
            )
            .with_mode(Mode::Oracle)
            .with_gates(clt_gates),
            run_clt,
        ),
        (
            "covariation_clt",
            ExperimentConfig::new(bivariate(0.5), vec![], vec![n], 5000, 105).with_gates(matrix_gates.clone()),
            run_covariation_clt,
        ),
        (
            "joint_bpv_rv",
            ExperimentConfig::new(ModelSpec::constant_vol(1.0), vec![], vec![n], 5000, 106).with_gates(matrix_gates),
            run_joint_bpv_rv,
        ),
        (
            "jump_test",
            ExperimentConfig::new(ModelSpec::constant_vol(1.0), vec![], vec![n], 5000, 107)
                .with_alternative(ModelSpec::constant_vol(1.0).with_price_jumps(PriceJumps {
                    arrivals: JumpArrivals::Fixed { count: 1 },
                    jump_sd: 5.0 / (n as f64).sqrt(),
                }))
                .with_gates(Gates {
                    size5: Some([0.035, 0.065]),
                    power_margin: Some(0.20),
                    ..Gates::default()
                }),
            run_jump_experiment,
        ),
        (
            "det_rank",
            ExperimentConfig::new(bivariate(0.0), vec![EstimatorSpec::DetRank], vec![2000], 500, 108).with_gates(Gates {
                mean_rel: Some(0.05),
                ..Gates::default()
            }),
            run_lln,
        ),
    ];
    Suite {
        reports: configs
            .into_iter()
            .map(|(name, config, run)| (name, run(&hint(config)).unwrap()))
            .collect(),
    }
}

fn write_suite(suite: &Suite, dir: &Path) {
    for (name, report) in &suite.reports {
        report.write_files(dir, name).unwrap();
    }
}

fn without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# timestamp="))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c11_determinism(a: &Suite, b: &Suite, dirs: (&Path, &Path), oracles: (&[OracleEstimate], &[OracleEstimate])) -> Criterion {
    let mut failures = Vec::new();
    for (name, ra) in &a.reports {
        let rb = b.get(name);
        let csv_a = std::fs::read_to_string(dirs.0.join(format!("{name}.csv"))).unwrap();
        let csv_b = std::fs::read_to_string(dirs.1.join(format!("{name}.csv"))).unwrap();
        if without_timestamp(&csv_a) != without_timestamp(&csv_b) {
            failures.push(format!("{name}.csv differs"));
        }
        if ra.canonical_json().unwrap() != rb.canonical_json().unwrap() {
            failures.push(format!("{name}.json differs"));
        }
    }
    if oracles.0 != oracles.1 {
        failures.push("oracle estimates differ".into());
    }
    let mut c = Criterion::new(
        11,
        "determinism",
        failures.is_empty(),
        format!("{} reports and {} oracle estimates compared across worker hints", a.reports.len(), oracles.0.len()),
    );
    c.failures = failures;
    c
}

fn main() {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let dirs = (root.join("run1"), root.join("run2"));
    let started = Instant::now();

    let mut results = vec![c1_constants()];
    let (oracle_a, secs) = run_oracles(None);
    results.push(c2_oracle(&oracle_a, secs));
    results.push(c3_quadrature());

    let suite_a = run_suite(None);
    write_suite(&suite_a, &dirs.0);
    let lln = [suite_a.get("lln_constant_vol"), suite_a.get("lln_heston_leverage")];
    let clt = [suite_a.get("clt_rv_bm"), suite_a.get("clt_bipower_heston")];
    results.push(Criterion::from_gates(4, "LLN rates", &lln, |g| g.contains("slope")));
    results.push(Criterion::from_gates(5, "CLT oracle mode", &clt, |g| !g.contains("feasible")));
    results.push(Criterion::from_gates(6, "CLT feasible mode", &clt, |g| g.contains("feasible")));
    results.push(Criterion::from_gates(7, "covariation CLT", &[suite_a.get("covariation_clt")], |_| true));
    results.push(Criterion::from_gates(8, "joint BPV/RV covariance", &[suite_a.get("joint_bpv_rv")], |_| true));
    results.push(Criterion::from_gates(9, "jump test size and power", &[suite_a.get("jump_test")], |_| true));
    results.push(Criterion::from_gates(10, "det-rank statistic", &[suite_a.get("det_rank")], |_| true));

    let (oracle_b, _) = run_oracles(Some(3));
    let suite_b = run_suite(Some(3));
    write_suite(&suite_b, &dirs.1);
    results.push(c11_determinism(&suite_a, &suite_b, (&dirs.0, &dirs.1), (&oracle_a, &oracle_b)));

    println!();
    for c in &results {
        println!(
            "criterion {:>2} {} {}: {}",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        for f in &c.failures {
            println!("    {f}");
        }
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s (reports in {})",
        results.len() - failed,
        started.elapsed().as_secs_f64(),
        root.display()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
