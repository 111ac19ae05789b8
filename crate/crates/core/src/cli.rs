//! Command-line front end: `estimate`, `montecarlo`, `validate`, `oracle`.
//!
//! Exit codes: 0 ok, 2 parse / input error, 3 empty solution set,
//! 4 power flow did not converge, 5 internal error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::contractor::{ContractorConfig, QuadraticRelaxation};
use crate::equations::build_residuals;
use crate::error::{EstimationError, NetworkError, OracleError};
use crate::feeders;
use crate::icp::IcpConfig;
use crate::network::{load_measurements, MeasurementSet, ThreePhaseNetwork};
use crate::oracle::{
    credibility, monte_carlo, power_flow, power_mismatch, run_method, synthesize_trial,
    trial_coverage, width_metrics, Loading, MeasurementPlan, Method, MonteCarloConfig,
    NoiseConfig,
};
use crate::report::{
    write_atomic, EstimateReport, MethodReport, MonteCarloReport, OracleReport, ReportFormat,
    REPORT_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_EMPTY_SET: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "rdm-ise", version, about = "Interval state estimation for radial feeders")]
pub struct Cli {
    /// Worker threads for trials and LP solves (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate state intervals from one measurement set.
    Estimate(EstimateArgs),
    /// Credibility and width statistics over synthesized trials.
    Montecarlo(MonteCarloArgs),
    /// Check that a feeder and its measurements load.
    Validate(ValidateArgs),
    /// Solve the power flow at a scaled rated loading.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Rdm,
    Icp,
    Both,
}

impl MethodChoice {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Rdm => vec![Method::Rdm],
            MethodChoice::Icp => vec![Method::Icp],
            MethodChoice::Both => vec![Method::Rdm, Method::Icp],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Relaxation {
    #[value(name = "mv")]
    Mv,
    #[value(name = "mv+env")]
    MvEnv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatChoice {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodChoice,
    /// Width decrease below which iteration stops.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cap on contractor iterations (ICP sweeps).
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "mv+env")]
    pub relaxation: Relaxation,
}

impl SolverArgs {
    fn configs(&self) -> Result<(ContractorConfig, IcpConfig), CliError> {
        let mut rdm = ContractorConfig {
            quadratic_relaxation: match self.relaxation {
                Relaxation::Mv => QuadraticRelaxation::MeanValueOnly,
                Relaxation::MvEnv => QuadraticRelaxation::MeanValuePlusEnvelopes,
            },
            ..ContractorConfig::default()
        };
        let mut icp = IcpConfig::default();
        if let Some(t) = self.tol {
            rdm.width_tolerance = t;
            icp.width_tolerance = t;
        }
        if let Some(n) = self.max_iter {
            rdm.max_iterations = n;
            icp.max_sweeps = n;
        }
        rdm.validate().map_err(CliError::Input)?;
        Ok((rdm, icp))
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatChoice,
    /// Include wall-clock timings (makes reports non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Feeder JSON file or `builtin:<name>`.
    #[arg(long)]
    pub network: String,
    /// Measurement JSON; defaults to the measurements in the feeder file.
    #[arg(long, conflicts_with = "seed")]
    pub measurements: Option<PathBuf>,
    /// Synthesize the measurements from a power flow trial with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// With --seed: every n-th loaded bus has real meters.
    #[arg(long = "real-every", default_value_t = 3)]
    pub real_every: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub network: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Trial k uses seed + k.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long = "real-every", default_value_t = 3)]
    pub real_every: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub network: String,
    #[arg(long)]
    pub measurements: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub network: String,
    /// Multiplier on the rated loads.
    #[arg(long = "load-scale", default_value_t = 1.0)]
    pub load_scale: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Network(_) | CliError::Input(_) => EXIT_PARSE,
            CliError::Estimation(EstimationError::EmptySolutionSet { .. }) => EXIT_EMPTY_SET,
            CliError::Estimation(_) => EXIT_INTERNAL,
            CliError::Oracle(OracleError::NoConvergence { .. }) => EXIT_NO_CONVERGENCE,
            CliError::Oracle(_) => EXIT_INTERNAL,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

/// Parses `args`, runs the command and returns the exit code. Diagnostics
/// go to stderr; reports go to `--out` or stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rdm-ise: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Validate(a) => validate(a),
        Command::Oracle(a) => oracle(a),
    })
}

fn emit(out: &OutputArgs, bytes: &[u8]) -> Result<(), CliError> {
    match &out.out {
        Some(p) => write_atomic(p, bytes)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

fn format_of(out: &OutputArgs) -> ReportFormat {
    match out.format {
        FormatChoice::Json => ReportFormat::Json,
        FormatChoice::Csv => ReportFormat::Csv,
    }
}

fn measurements_for(
    a: &EstimateArgs,
    net: &ThreePhaseNetwork,
) -> Result<MeasurementSet, CliError> {
    let set = match &a.measurements {
        Some(p) => load_measurements(p, net)?,
        None if a.network.starts_with("builtin:") => MeasurementSet::default(),
        None => load_measurements(&a.network, net)?,
    };
    if set.is_empty() {
        return Err(CliError::Input(format!(
            "{} carries no measurements; pass --measurements or --seed",
            a.network
        )));
    }
    Ok(set)
}

fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let net = feeders::resolve(&a.network)?;
    let (rdm, icp) = a.solver.configs()?;
    let trial = match a.seed {
        Some(seed) => {
            let plan = MeasurementPlan::standard(&net, a.real_every);
            Some(synthesize_trial(&net, &plan, &NoiseConfig::default(), seed)?)
        }
        None => None,
    };
    let meas = match &trial {
        Some(t) => t.measurements.clone(),
        None => measurements_for(a, &net)?,
    };
    let sys = build_residuals(&net, &meas)?;
    let z0 = meas.intervals();
    let mut methods = Vec::new();
    for m in a.solver.method.methods() {
        let t0 = Instant::now();
        let res = run_method(m, &net, &sys, &meas, &rdm, &icp)?;
        let elapsed = t0.elapsed().as_secs_f64();
        info!("{}: {:?} after {} iterations", m.name(), res.status, res.iterations_used);
        let mut rep = MethodReport::new(m, &net, &meas, &res, width_metrics(&sys, &res, &z0));
        if let Some(t) = &trial {
            rep.coverage = Some(trial_coverage(&res, t));
            rep.credibility = Some(credibility(std::slice::from_ref(&res), std::slice::from_ref(t))?);
        }
        if a.output.timing {
            rep.elapsed_s = Some(elapsed);
        }
        methods.push(rep);
    }
    let report = EstimateReport {
        format_version: REPORT_VERSION,
        kind: "estimate".into(),
        network: net.name.clone(),
        seed: a.seed,
        methods,
    };
    emit(&a.output, &report.render(format_of(&a.output)))
}

fn montecarlo(a: &MonteCarloArgs) -> Result<(), CliError> {
    let net = feeders::resolve(&a.network)?;
    let (contractor, icp) = a.solver.configs()?;
    if a.real_every == 0 {
        return Err(CliError::Input("--real-every must be at least 1".into()));
    }
    let cfg = MonteCarloConfig {
        trials: a.trials,
        seed: a.seed,
        real_every: a.real_every,
        noise: NoiseConfig::default(),
        contractor,
        icp,
    };
    let t0 = Instant::now();
    let methods = monte_carlo(&net, &a.solver.method.methods(), &cfg)?;
    for m in &methods {
        info!(
            "{}: credibility {} wid_avr {:e} ratio {}",
            m.method.name(),
            m.credibility,
            m.mean_wid_avr,
            m.mean_ratio
        );
    }
    let report = MonteCarloReport {
        format_version: REPORT_VERSION,
        kind: "montecarlo".into(),
        network: net.name.clone(),
        trials: a.trials,
        seed: a.seed,
        elapsed_s: a.output.timing.then(|| t0.elapsed().as_secs_f64()),
        methods,
    };
    emit(&a.output, &report.render(format_of(&a.output)))
}

fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let net = feeders::resolve(&a.network)?;
    println!(
        "{}: {} buses, {} branches, {} bus phases, {} branch phases",
        net.name,
        net.buses().len(),
        net.branches().len(),
        net.bus_phases().len(),
        net.branch_phases().len()
    );
    let meas = match &a.measurements {
        Some(p) => Some(load_measurements(p, &net)?),
        None if !a.network.starts_with("builtin:") => {
            Some(load_measurements(&a.network, &net)?).filter(|m| !m.is_empty())
        }
        None => None,
    };
    if let Some(meas) = meas {
        let sys = build_residuals(&net, &meas)?;
        println!(
            "{} measurements, {} residuals over {} quantities",
            meas.len(),
            sys.len(),
            sys.num_quantities()
        );
    }
    Ok(())
}

fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    let net = feeders::resolve(&a.network)?;
    if !(a.load_scale.is_finite() && a.load_scale >= 0.0) {
        return Err(CliError::Input("--load-scale must be finite and >= 0".into()));
    }
    let load = Loading::scaled(&net, a.load_scale);
    let x = power_flow(&net, &load)?;
    let report = OracleReport::new(&net, a.load_scale, &x, power_mismatch(&net, &load, &x));
    emit(&a.output, &report.render(format_of(&a.output)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "rdm-ise", "--threads", "1", "estimate", "--network", "builtin:two-bus", "--seed",
            "3", "--method", "icp", "--relaxation", "mv", "--tol", "1e-5", "--max-iter", "7",
            "--format", "csv",
        ])
        .unwrap();
        let Command::Estimate(a) = &cli.command else { panic!() };
        assert_eq!(a.solver.method, MethodChoice::Icp);
        let (rdm, icp) = a.solver.configs().unwrap();
        assert_eq!(rdm.quadratic_relaxation, QuadraticRelaxation::MeanValueOnly);
        assert_eq!((rdm.max_iterations, icp.max_sweeps), (7, 7));
        assert_eq!(a.output.format, FormatChoice::Csv);
    }

    #[test]
    fn measurements_and_seed_conflict() {
        let r = Cli::try_parse_from([
            "rdm-ise", "estimate", "--network", "x.json", "--measurements", "m.json", "--seed",
            "1",
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn unknown_builtin_is_a_parse_error() {
        let code = main_with_args(["rdm-ise", "oracle", "--network", "builtin:nope"]);
        assert_eq!(code, EXIT_PARSE);
    }
}
