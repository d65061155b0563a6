//! Commands behind the `vixprice` binary.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use vix_core::american::{convexity_witness, sig12, Boundary};
use vix_core::black::skew_curve;
use vix_core::config::{OutputFormat, RunConfig};
use vix_core::error::VixError;
use vix_core::mc::{mc_american_policy, mc_european, mc_futures};
use vix_core::models::{Branch, ModelClass};

#[derive(Debug, Parser)]
#[command(name = "vixprice", version, about = "VIX futures and option pricing under factor models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Bundled config name (fig1, fig2, ...) or path to a JSON config.
    #[arg(long)]
    pub config: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    European,
    Futures,
    American,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Futures term structure by quadrature and by the moment expansion.
    Futures {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,1,1.5,2")]
        t_grid: Vec<f64>,
        /// Factor preimage of the config's vix0 (mixtures). Both are emitted
        /// when omitted and vix0 is set.
        #[arg(long)]
        branch: Option<Branch>,
    },
    /// Early-exercise boundary on the solver grid.
    Boundary {
        #[command(flatten)]
        common: Common,
    },
    /// European, American and intrinsic values across states.
    Price {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, value_delimiter = ',')]
        state_grid: Option<Vec<f64>>,
    },
    /// Black implied volatilities of model call prices.
    Skew {
        #[command(flatten)]
        common: Common,
        /// Overrides the contract maturity.
        #[arg(long)]
        maturity: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        moneyness_grid: Option<Vec<f64>>,
        #[arg(long)]
        branch: Option<Branch>,
    },
    /// Compare a quadrature value with its Monte Carlo estimate.
    McCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "european")]
        target: Target,
        #[arg(long, default_value_t = 200_000)]
        paths: usize,
        #[arg(long, default_value_t = 250)]
        steps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    Core(VixError),
    Io(String),
    Verification(serde_json::Value),
}

impl From<VixError> for CliError {
    fn from(e: VixError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                VixError::Config(_)
                | VixError::UnknownEntry(_)
                | VixError::InvalidParameter(_)
                | VixError::FellerViolation { .. }
                | VixError::AssumptionViolation(_)
                | VixError::Unsupported(_) => 2,
                _ => 3,
            },
            CliError::Io(_) => 2,
            CliError::Verification(_) => 4,
        }
    }

    pub fn report(&self) -> serde_json::Value {
        match self {
            CliError::Core(e) => json!({ "error": kind(e), "message": e.to_string() }),
            CliError::Io(m) => json!({ "error": "io", "message": m }),
            CliError::Verification(r) => json!({ "error": "verification", "report": r }),
        }
    }
}

fn kind(e: &VixError) -> &'static str {
    match e {
        VixError::InvalidParameter(_) => "invalid_parameter",
        VixError::FellerViolation { .. } => "feller_violation",
        VixError::AssumptionViolation(_) => "assumption_violation",
        VixError::Unsupported(_) => "unsupported",
        VixError::NonFinite(_) => "non_finite",
        VixError::QuadratureNonConvergence { .. } => "quadrature_non_convergence",
        VixError::DivergentIntegral(_) => "divergent_integral",
        VixError::RootNotFound(_) => "root_not_found",
        VixError::SolverFailure { .. } => "solver_failure",
        VixError::InversionDomain { .. } => "inversion_domain",
        VixError::UnknownEntry(_) => "unknown_entry",
        VixError::Config(_) => "config",
    }
}

/// Rendered output of a command.
pub struct Output {
    pub csv: String,
    pub json: serde_json::Value,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (common, out) = match &cli.command {
        Command::Futures { common, t_grid, branch } => (common, futures(common, t_grid, *branch)?),
        Command::Boundary { common } => (common, boundary(common)?),
        Command::Price { common, t, state_grid } => (common, price(common, *t, state_grid.as_deref())?),
        Command::Skew { common, maturity, moneyness_grid, branch } => {
            (common, skew(common, *maturity, moneyness_grid.as_deref(), *branch)?)
        }
        Command::McCheck { common, target, paths, steps, seed } => {
            let (out, pass) = mc_check(common, *target, *paths, *steps, *seed)?;
            emit(common, &out)?;
            return if pass { Ok(()) } else { Err(CliError::Verification(out.json)) };
        }
    };
    emit(common, &out)
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    Ok(RunConfig::resolve(&common.config)?)
}

fn emit(common: &Common, out: &Output) -> Result<(), CliError> {
    let cfg = load(common)?;
    let format = match common.format {
        Some(Format::Csv) => OutputFormat::Csv,
        Some(Format::Json) => OutputFormat::Json,
        None => cfg.output.format,
    };
    let text = match format {
        OutputFormat::Csv => out.csv.clone(),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&out.json).expect("json values serialize");
            s.push('\n');
            s
        }
    };
    let path = common.out.clone().or(cfg.output.path.map(PathBuf::from));
    match path {
        Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct FuturesRow {
    branch: Option<Branch>,
    maturity: f64,
    f_quadrature: f64,
    f_taylor: f64,
    rel_gap: f64,
}

fn futures(common: &Common, t_grid: &[f64], branch: Option<Branch>) -> Result<Output, CliError> {
    let cfg = load(common)?;
    let m = cfg.market()?;
    let branches: Vec<Option<Branch>> = match (m.model.class(), branch, cfg.vix0) {
        (ModelClass::Mixture, None, Some(_)) => vec![Some(Branch::Lower), Some(Branch::Upper)],
        _ => vec![branch],
    };
    let mut rows = Vec::new();
    for b in branches {
        let state = cfg.initial_state(&m, b)?;
        for &t in t_grid {
            let fq = m.futures_price(t, state)?;
            let ft = m.futures_taylor(t, state)?;
            rows.push(FuturesRow { branch: b, maturity: t, f_quadrature: fq, f_taylor: ft, rel_gap: (ft - fq).abs() / fq });
        }
    }
    let with_branch = rows.iter().any(|r| r.branch.is_some());
    let mut csv = String::from(if with_branch { "branch,T,F_quadrature,F_taylor,rel_gap\n" } else { "T,F_quadrature,F_taylor,rel_gap\n" });
    for r in &rows {
        if let Some(b) = r.branch {
            let _ = write!(csv, "{},", if b == Branch::Lower { "lower" } else { "upper" });
        }
        let _ = writeln!(csv, "{},{},{},{}", sig12(r.maturity), sig12(r.f_quadrature), sig12(r.f_taylor), sig12(r.rel_gap));
    }
    Ok(Output { csv, json: json!({ "config": cfg.name, "rows": rows }) })
}

fn solve(cfg: &RunConfig) -> Result<(vix_core::contract::Problem, Boundary), CliError> {
    let p = cfg.problem()?;
    let b = p.solve_boundary(&cfg.solver)?;
    Ok((p, b))
}

fn boundary(common: &Common) -> Result<Output, CliError> {
    let cfg = load(common)?;
    let (_, b) = solve(&cfg)?;
    Ok(Output { csv: b.to_csv(), json: json!({ "config": cfg.name, "boundary": b }) })
}

/// 200 states spanning the interesting range of the contract.
fn default_states(cfg: &RunConfig) -> Vec<f64> {
    let k = cfg.contract.strike;
    let (a, b) = match cfg.model.class.as_str() {
        "mixture" => (0.2, 3.2),
        _ => (k / 3.0, 10.0 * k / 3.0),
    };
    (0..200).map(|i| a + (b - a) * i as f64 / 199.0).collect()
}

#[derive(Serialize)]
struct PriceRow {
    state: f64,
    european: f64,
    american: f64,
    intrinsic: f64,
}

fn price(common: &Common, t: f64, grid: Option<&[f64]>) -> Result<Output, CliError> {
    let cfg = load(common)?;
    let (p, b) = solve(&cfg)?;
    let states = grid.map_or_else(|| default_states(&cfg), <[f64]>::to_vec);
    let mut rows = Vec::new();
    for &s in &states {
        let y = p.market.to_factor(s)?;
        rows.push(PriceRow {
            state: s,
            european: p.european_factor(t, y)?,
            american: p.american_factor(&b, t, y)?,
            intrinsic: p.payoff(y),
        });
    }
    let mut sorted: Vec<(f64, f64)> = rows.iter().map(|r| (r.state, r.american)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let xs: Vec<f64> = sorted.iter().map(|r| r.0).collect();
    let vs: Vec<f64> = sorted.iter().map(|r| r.1).collect();
    let witness = convexity_witness(&xs, &vs, 1e-8);
    let mut csv = String::from("state,european,american,intrinsic\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{}", sig12(r.state), sig12(r.european), sig12(r.american), sig12(r.intrinsic));
    }
    let json = json!({
        "config": cfg.name,
        "t": t,
        "rows": rows,
        "metadata": { "convex_on_grid": witness.is_none(), "non_convexity_witness": witness },
    });
    if let Some(path) = &common.out {
        // CSV keeps one table per file; the shape result goes alongside
        let meta = path.with_extension("meta.json");
        let text = serde_json::to_string_pretty(&json["metadata"]).expect("json values serialize");
        std::fs::write(&meta, text).map_err(|e| CliError::Io(format!("{}: {e}", meta.display())))?;
    }
    Ok(Output { csv, json })
}

fn skew(common: &Common, maturity: Option<f64>, grid: Option<&[f64]>, branch: Option<Branch>) -> Result<Output, CliError> {
    let cfg = load(common)?;
    let m = cfg.market()?;
    let state = cfg.initial_state(&m, branch)?;
    let t = maturity.unwrap_or(cfg.contract.maturity);
    let default: Vec<f64> = (0..13).map(|i| -0.3 + 0.05 * i as f64).collect();
    let curve = skew_curve(&m, t, cfg.contract.rate, state, grid.unwrap_or(&default))?;
    let slope = curve.slope();
    Ok(Output { csv: curve.to_csv(), json: json!({ "config": cfg.name, "curve": curve, "slope": slope }) })
}

fn mc_check(common: &Common, target: Target, n: usize, steps: usize, seed: u64) -> Result<(Output, bool), CliError> {
    let cfg = load(common)?;
    let p = cfg.problem()?;
    let state = cfg.initial_state(&p.market, None)?;
    let t_mat = cfg.contract.maturity;
    let (name, analytic, est, bias) = match target {
        Target::European => ("european", p.european_price(0.0, state)?, mc_european(&p, 0.0, state, n, seed)?, 0.0),
        Target::Futures => ("futures", p.market.futures_price(t_mat, state)?, mc_futures(&p.market, t_mat, state, n, seed)?, 0.0),
        Target::American => {
            let b = p.solve_boundary(&cfg.solver)?;
            let pol = mc_american_policy(&p, &b, 0.0, state, n, steps, seed)?;
            ("american", p.american_price(&b, 0.0, state)?, pol.estimate, pol.bias_indicator)
        }
    };
    let z = est.z_score(analytic);
    let gap = (est.mean - analytic).abs();
    let pass = gap <= 4.0 * est.std_error + bias;
    let json = json!({
        "config": cfg.name,
        "target": name,
        "analytic": analytic,
        "mc_mean": est.mean,
        "std_error": est.std_error,
        "z": z,
        "bias_indicator": bias,
        "n_paths": est.n_paths,
        "seed": est.seed,
        "pass": pass,
    });
    let csv = format!(
        "target,analytic,mc_mean,std_error,z,bias_indicator,pass\n{name},{},{},{},{},{},{pass}\n",
        sig12(analytic),
        sig12(est.mean),
        sig12(est.std_error),
        sig12(z),
        sig12(bias)
    );
    Ok((Output { csv, json }, pass))
}
