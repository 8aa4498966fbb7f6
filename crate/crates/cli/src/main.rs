use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zonal_opf::io::{emit_results, write_fitted_models};
use zonal_opf::market::DEFAULT_DELTA_RHO_INC;
use zonal_opf::nlp::{solve, IterationLog, SolverOptions, StartPoint};
use zonal_opf::opf::build_problem;
use zonal_opf::scenario::{fit_archive, fit_step_costs, run_loaded};
use zonal_opf::{parse_bid_curves, validate_network, Error, NetworkModel, RunConfig, RunInputs, ScenarioKind};

/// Market-coupled AC/DC optimal power flow over zonal price models.
#[derive(Parser, Debug)]
#[command(name = "zonal-opf", version)]
struct Cli {
    /// Debug logging and per-iteration solver output.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a timestep range and write the result tables.
    Run(RunArgs),
    /// Fit the per zone-hour cost models and write fitted_models.csv.
    FitCurves(FitArgs),
    /// Check the network and, when given, the data coverage of a range.
    Validate(ValidateArgs),
    /// Solve one timestep from a flat start and print the iteration log.
    SolveOne(SolveOneArgs),
}

#[derive(Args, Debug)]
struct Inputs {
    /// Network description (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Profile CSV: profile_id,timestep,value_mw.
    #[arg(long)]
    profiles: PathBuf,
    /// Curve CSV file or a directory of them.
    #[arg(long)]
    curves: PathBuf,
}

#[derive(Args, Debug)]
struct Tuning {
    /// Price window around the equilibrium bounding P_N, EUR/MWh.
    #[arg(long, default_value_t = DEFAULT_DELTA_RHO_INC)]
    delta_rho_inc: f64,
    /// Solver convergence tolerance on the scaled KKT residual.
    #[arg(long, default_value_t = SolverOptions::default().kkt_tol)]
    kkt_tol: f64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// SI, SII or SIII.
    #[arg(long)]
    scenario: ScenarioKind,
    /// First timestep.
    #[arg(long)]
    from: i64,
    /// End timestep, exclusive.
    #[arg(long)]
    to: i64,
    /// Output directory for the result tables.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
    /// Contiguous chunks solved in parallel, each from a flat start.
    #[arg(long, default_value_t = 1)]
    chunks: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Only fit timesteps in [from, to).
    #[arg(long, requires = "to")]
    from: Option<i64>,
    #[arg(long, requires = "from")]
    to: Option<i64>,
    #[arg(long, default_value_t = DEFAULT_DELTA_RHO_INC)]
    delta_rho_inc: f64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    network: PathBuf,
    /// With --curves, --from and --to: also check data coverage of [from, to).
    #[arg(long, requires_all = ["curves", "from", "to"])]
    profiles: Option<PathBuf>,
    #[arg(long, requires_all = ["profiles", "from", "to"])]
    curves: Option<PathBuf>,
    #[arg(long, requires = "profiles")]
    from: Option<i64>,
    #[arg(long, requires = "profiles")]
    to: Option<i64>,
}

#[derive(Args, Debug)]
struct SolveOneArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    scenario: ScenarioKind,
    /// The timestep to solve.
    #[arg(long)]
    from: i64,
    /// Also write the result tables of this step.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

/// Usage and configuration problems exit 2, bad data 3, runs where no step
/// converged 4.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::EmptyRun => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ZONAL_OPF_LOG", level)).init();
    let outcome = match cli.command {
        Command::Run(a) => run(a, cli.verbose),
        Command::FitCurves(a) => fit_curves(a),
        Command::Validate(a) => validate(a),
        Command::SolveOne(a) => solve_one(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn config(inputs: Inputs, scenario: ScenarioKind, from: i64, to: i64, tuning: &Tuning) -> RunConfig {
    let mut c = RunConfig::new(scenario, from..to, inputs.network, inputs.profiles, inputs.curves);
    c.delta_rho_inc = tuning.delta_rho_inc;
    c.solver.kkt_tol = tuning.kkt_tol;
    c
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(a: RunArgs, verbose: bool) -> Result<ExitCode, Error> {
    let mut c = config(a.inputs, a.scenario, a.from, a.to, &a.tuning);
    c.chunks = a.chunks;
    c.solver.verbose = verbose;
    c.out_dir = Some(a.out.clone());
    let summary = zonal_opf::run_range(&c)?;
    let ind = &summary.indicators;
    println!(
        "{}: {} of {} steps converged, median {:.3} s per step, {:.1} iterations on average",
        summary.scenario, ind.converged, ind.steps, ind.median_wall_time_s, ind.mean_iterations
    );
    print_files(&emit_results(&summary, &a.out)?);
    if ind.converged == 0 {
        eprintln!("error: {}", Error::EmptyRun);
        return Ok(ExitCode::from(exit_code(&Error::EmptyRun)));
    }
    Ok(ExitCode::SUCCESS)
}

fn fit_curves(a: FitArgs) -> Result<ExitCode, Error> {
    if !(a.delta_rho_inc > 0.0 && a.delta_rho_inc.is_finite()) {
        return Err(Error::Config(format!("delta_rho_inc must be positive, got {}", a.delta_rho_inc)));
    }
    let curves = parse_bid_curves(&a.curves)?;
    let range = a.from.zip(a.to).map(|(f, t)| f..t);
    let rows = fit_archive(&curves, a.delta_rho_inc, range);
    let failed = rows.iter().filter(|r| r.model.is_err()).count();
    println!("fitted {} zone-hours, {failed} failed", rows.len() - failed);
    print_files(&[write_fitted_models(&rows, &a.out)?]);
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> Result<ExitCode, Error> {
    let model = NetworkModel::load(&a.network)?;
    let report = validate_network(&model);
    if !report.is_empty() {
        println!("{report}");
        return Ok(ExitCode::from(3));
    }
    println!("network: ok");
    if let (Some(profiles), Some(curves), Some(from), Some(to)) = (a.profiles, a.curves, a.from, a.to) {
        let inputs =
            RunInputs { model, profiles: zonal_opf::load_profiles(&profiles)?, curves: parse_bid_curves(&curves)? };
        if from >= to {
            return Err(Error::Config(format!("empty timestep range {from}..{to}")));
        }
        inputs.check_coverage(from..to)?;
        println!("data: ok for {from}..{to}");
    }
    Ok(ExitCode::SUCCESS)
}

fn solve_one(a: SolveOneArgs) -> Result<ExitCode, Error> {
    let t = a.from;
    let c = config(a.inputs, a.scenario, t, t + 1, &a.tuning);
    c.validate()?;
    let inputs = RunInputs::load(&c)?;
    inputs.check_coverage(t..t + 1)?;
    let costs = fit_step_costs(&inputs.model, &inputs.curves, t, c.delta_rho_inc)?;
    let problem = build_problem(&inputs.model, &costs, &inputs.profiles.step_inputs(t), c.scenario)?;
    let outcome = solve(&problem, &StartPoint::flat(&problem), &c.solver);
    println!("{}", IterationLog::HEADER);
    for row in &outcome.trace {
        println!("{}", row.line());
    }
    println!("{} after {} iterations, KKT residual {:e}", outcome.status, outcome.iterations, outcome.kkt_residual);
    if let Some(out) = &a.out {
        let summary = run_loaded(&inputs, t..t + 1, &c.options())?;
        print_files(&emit_results(&summary, out)?);
    }
    Ok(if outcome.converged() { ExitCode::SUCCESS } else { ExitCode::from(4) })
}
