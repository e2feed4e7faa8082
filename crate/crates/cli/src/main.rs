//! Command-line front end: Gaussian constants, realised statistics on CSV
//! price files, path simulation and Monte Carlo experiments.

mod error;
mod format;
mod ingest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rvlab::asymptotics::{ci_covariation, jump_test, CltResult, JumpStatistic};
use rvlab::gaussian::{
    abs_moment, bipower_variance_constant, multipower_variance_constant, power_variance_constant, theta_constant,
};
use rvlab::mc::{self, ExperimentConfig, ExperimentReport};
use rvlab::realized::{self, returns_from_path, ReturnSeries};
use rvlab::sim::{simulate, ModelSpec, SimPath};

use crate::error::CliError;
use crate::format::sig12;
use crate::ingest::{ingest_csv, IngestOptions, SPOT_VAR_PREFIX};

const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "RVLAB_SEED";

#[derive(Parser)]
#[command(name = "rvlab", version, about = "Realised multipower variation: estimators, limit theory and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print Gaussian moments and asymptotic variance constants.
    Constants(ConstantsArgs),
    /// Compute a realised statistic from a price CSV.
    Measures(MeasuresArgs),
    /// Simulate a path and write it as CSV.
    Simulate(SimulateArgs),
    /// Law-of-large-numbers experiment from a JSON config.
    Lln(ExperimentArgs),
    /// Central-limit experiment from a JSON config.
    Clt(ExperimentArgs),
    /// Jump-test size and power experiment from a JSON config.
    #[command(name = "jumptest-mc")]
    JumptestMc(ExperimentArgs),
    /// Covariation CLT experiment from a JSON config.
    #[command(name = "covariation-mc")]
    CovariationMc(ExperimentArgs),
    /// Joint bipower / realised variance experiment from a JSON config.
    #[command(name = "joint-mc")]
    JointMc(ExperimentArgs),
    /// Bipower-versus-variance jump test on a price CSV.
    Jumptest(JumptestArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    /// Orders r for mu_r and v_r; bipower constants use every pair.
    #[arg(long, num_args = 1.., default_values_t = [1.0, 2.0, 4.0])]
    r: Vec<f64>,
    /// Window lengths I for omega_I^2.
    #[arg(long, num_args = 1.., default_values_t = [1, 2, 3, 4])]
    terms: Vec<usize>,
}

#[derive(Args)]
struct InputArgs {
    /// Price file with a `time` column and one column per asset.
    #[arg(long)]
    csv: PathBuf,
    /// Values are log-prices already.
    #[arg(long)]
    log_input: bool,
    /// Comma-separated price columns (default: all but time and spot variance).
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    /// Number of returns on the normalised window.
    #[arg(long)]
    n: usize,
    /// Evaluation time in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Asset index for univariate statistics.
    #[arg(long, default_value_t = 0)]
    component: usize,
    /// Print values in shortest round-trip form instead of 12 significant digits.
    #[arg(long)]
    exact: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stat {
    Rv,
    Power,
    Bipower,
    Multipower,
    Covariation,
    QuarticityRv,
    QuarticityTripower,
    QuarticityQuadpower,
    DetRank,
}

#[derive(Args)]
struct MeasuresArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    stat: Stat,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, num_args = 1..)]
    powers: Vec<f64>,
    /// Also print a confidence interval at this level.
    #[arg(long)]
    ci: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model as JSON (see README).
    #[arg(long, conflicts_with_all = ["sigma", "heston"])]
    model: Option<PathBuf>,
    /// Constant volatility Brownian motion.
    #[arg(long, conflicts_with = "heston")]
    sigma: Option<f64>,
    /// Square-root variance with this leverage correlation.
    #[arg(long, allow_hyphen_values = true)]
    heston: Option<f64>,
    #[arg(long, default_value_t = 3000)]
    n_fine: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for the JSON and CSV reports.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (does not change results).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    Ratio,
    Linear,
}

#[derive(Args)]
struct JumptestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = StatisticArg::Ratio)]
    statistic: StatisticArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Constants(a) => constants(&a),
        Command::Measures(a) => measures(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Lln(a) => experiment(&a, "lln", mc::run_lln),
        Command::Clt(a) => experiment(&a, "clt", mc::run_clt),
        Command::JumptestMc(a) => experiment(&a, "jump_test", mc::run_jump_experiment),
        Command::CovariationMc(a) => experiment(&a, "covariation_clt", mc::run_covariation_clt),
        Command::JointMc(a) => experiment(&a, "joint_bpv_rv", mc::run_joint_bpv_rv),
        Command::Jumptest(a) => jumptest(&a),
    }
}

fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn constants(a: &ConstantsArgs) -> Result<(), CliError> {
    println!("r\tmu_r\tv_r");
    for &r in &a.r {
        println!("{r}\t{}\t{}", sig12(abs_moment(r)?), sig12(power_variance_constant(r)?));
    }
    println!();
    println!("theta\t{}", sig12(theta_constant()));
    println!();
    println!("I\tomega_I^2");
    for &i in &a.terms {
        println!("{i}\t{}", sig12(multipower_variance_constant(i)?));
    }
    println!();
    println!("r\ts\tbipower_constant");
    for (k, &r) in a.r.iter().enumerate() {
        for &s in &a.r[k..] {
            println!("{r}\t{s}\t{}", sig12(bipower_variance_constant(r, s)?));
        }
    }
    Ok(())
}

fn load_returns(input: &InputArgs) -> Result<ReturnSeries, CliError> {
    let opts = IngestOptions {
        log_input: input.log_input,
        columns: input.columns.clone(),
    };
    let data = ingest_csv(&input.csv, &opts)?;
    for w in &data.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "info: {} observations of [{}] over {} s, rescaled to [0, 1]",
        data.path.len(),
        data.columns.join(", "),
        data.duration_secs
    );
    let ret = returns_from_path(&data.path, input.n)?;
    if ret.is_sparse() {
        eprintln!(
            "warning: {} observations for n = {}; some returns are zero by previous-tick alignment",
            data.path.len(),
            input.n
        );
    }
    Ok(ret)
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this statistic")))
}

fn number(x: f64, exact: bool) -> String {
    if exact {
        x.to_string()
    } else {
        sig12(x)
    }
}

fn print_ci(ci: &CltResult, exact: bool) {
    let f = |x| number(x, exact);
    println!("estimate\t{}", f(ci.estimate));
    println!("avar\t{}", f(ci.avar_hat));
    println!("level\t{}", ci.level);
    println!("ci_lo\t{}", f(ci.ci.0));
    println!("ci_hi\t{}", f(ci.ci.1));
    println!("degenerate\t{}", ci.degenerate);
}

fn measures(a: &MeasuresArgs) -> Result<(), CliError> {
    let ret = load_returns(&a.input)?;
    let (j, t) = (a.input.component, a.input.t);
    let f = |x: f64| number(x, a.input.exact);
    if matches!(a.stat, Stat::Covariation) {
        let rc = realized::realized_covariation(&ret, t)?;
        for row in rc.row_iter() {
            println!("{}", row.iter().map(|v| f(*v)).collect::<Vec<_>>().join("\t"));
        }
        if let Some(level) = a.ci {
            let ci = ci_covariation(&ret, t, level)?;
            println!();
            println!("j\tk\tci_lo\tci_hi\tavar");
            for jj in 0..ci.d {
                for kk in 0..ci.d {
                    let c = ci.get(jj, kk);
                    println!("{jj}\t{kk}\t{}\t{}\t{}", f(c.ci.0), f(c.ci.1), f(c.avar_hat));
                }
            }
        }
        return Ok(());
    }
    let spec = match a.stat {
        Stat::Rv => mc::EstimatorSpec::RealizedVariance,
        Stat::Power => mc::EstimatorSpec::PowerVariation { r: need(a.r, "r")? },
        Stat::Bipower => mc::EstimatorSpec::Bipower {
            r: a.r.unwrap_or(1.0),
            s: a.s.unwrap_or(1.0),
        },
        Stat::Multipower => {
            if a.powers.is_empty() {
                return Err(CliError::Usage("--powers is required for multipower".into()));
            }
            mc::EstimatorSpec::Multipower {
                powers: a.powers.clone(),
            }
        }
        Stat::QuarticityRv => mc::EstimatorSpec::QuarticityRv,
        Stat::QuarticityTripower => mc::EstimatorSpec::QuarticityTripower,
        Stat::QuarticityQuadpower => mc::EstimatorSpec::QuarticityQuadpower,
        Stat::DetRank => mc::EstimatorSpec::DetRank,
        Stat::Covariation => unreachable!(),
    };
    match a.ci {
        Some(level) => print_ci(&spec.feasible(&ret, j, t, level)?, a.input.exact),
        None => println!("{}", f(spec.estimate(&ret, j, t)?)),
    }
    Ok(())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => Ok(mc::write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// CSV of a simulated path: `time`, one log-price column `y<j>` and one
/// `spot_var<j>` column per component. Values use shortest round-trip
/// formatting so that re-ingesting reproduces the path exactly.
fn path_csv(path: &SimPath) -> Result<String, CliError> {
    use std::fmt::Write as _;
    let d = path.dim();
    let mut s = String::new();
    let _ = writeln!(s, "# tool_version={}", rvlab::VERSION);
    let _ = writeln!(s, "# seed={}", path.seed());
    let _ = writeln!(s, "# n_fine={}", path.n_fine());
    let _ = writeln!(s, "# model={}", serde_json::to_string(path.model())?);
    if path.has_price_jumps() {
        let _ = writeln!(s, "# price_jumps={}", path.price_jumps().len());
    }
    let mut header = vec!["time".to_string()];
    header.extend((0..d).map(|j| format!("y{j}")));
    header.extend((0..d).map(|j| format!("{SPOT_VAR_PREFIX}{j}")));
    let _ = writeln!(s, "{}", header.join(","));
    let n = path.n_fine();
    for k in 0..=n {
        let _ = write!(s, "{}", k as f64 / n as f64);
        for v in path.y_row(k).iter().chain(path.spot_var_row(k)) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    Ok(s)
}

fn simulate_cmd(a: &SimulateArgs) -> Result<(), CliError> {
    let model = if let Some(file) = &a.model {
        serde_json::from_str::<ModelSpec>(&std::fs::read_to_string(file)?)?
    } else if let Some(rho) = a.heston {
        ModelSpec::heston_leverage(rho)
    } else {
        ModelSpec::constant_vol(a.sigma.unwrap_or(1.0))
    };
    let seed = match a.seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let path = simulate(&model, a.n_fine, seed)?;
    write_output(a.out.as_deref(), &path_csv(&path)?)
}

fn load_config(a: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", a.config.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Data("config must be a JSON object".into()))?;
    if let Some(seed) = a.seed {
        obj.insert("seed".into(), seed.into());
    } else if !obj.contains_key("seed") {
        obj.insert("seed".into(), default_seed()?.into());
    }
    let mut config: ExperimentConfig = serde_json::from_value(value)?;
    if a.workers.is_some() {
        config.workers = a.workers;
    }
    Ok(config)
}

fn experiment(
    a: &ExperimentArgs,
    stem: &str,
    run: fn(&ExperimentConfig) -> rvlab::Result<ExperimentReport>,
) -> Result<(), CliError> {
    let config = load_config(a)?;
    let report = run(&config)?;
    let (json, csv) = report.write_files(&a.out, stem)?;
    println!("wrote {} and {}", json.display(), csv.display());
    for g in &report.gates {
        println!(
            "{}\t{}\t[{}, {}]\t{}",
            if g.passed { "PASS" } else { "FAIL" },
            g.name,
            g.lo,
            g.hi,
            sig12(g.value)
        );
    }
    let failed = report.failed_gates().count();
    if failed > 0 {
        return Err(CliError::GatesFailed(failed));
    }
    Ok(())
}

fn jumptest(a: &JumptestArgs) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let ret = load_returns(&a.input)?;
    let r = jump_test(&ret, a.input.component, a.input.t)?;
    let which = match a.statistic {
        StatisticArg::Ratio => JumpStatistic::Ratio,
        StatisticArg::Linear => JumpStatistic::Linear,
    };
    let f = |x: f64| number(x, a.input.exact);
    println!("n\t{}", r.n);
    println!("rv\t{}", f(r.rv));
    println!("bpv_scaled\t{}", f(r.bpv_scaled));
    println!("iq_hat\t{}", f(r.iq_hat));
    println!("stat_linear\t{}", f(r.stat_linear));
    println!("stat_ratio\t{}", f(r.stat_ratio));
    println!("p_linear\t{}", f(r.p_linear));
    println!("p_ratio\t{}", f(r.p_ratio));
    println!("p_linear_two_sided\t{}", f(r.p_linear_two_sided));
    println!("p_ratio_two_sided\t{}", f(r.p_ratio_two_sided));
    println!("degenerate\t{}", r.degenerate);
    println!("reject\t{}", r.rejects(which, a.alpha));
    Ok(())
}
