//! Command-line front end: validate and generate instances, run the three
//! market solves, and render reports.
//!
//! Exit codes: 0 success, 1 validation failure, 2 infeasible model,
//! 3 search limits reached.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use oligofair_core::builder::{build_nash_model, build_social_welfare_model};
use oligofair_core::game::{
    compute_status_quo, restrict_to_incumbents, solve_nash, solve_social_welfare, GameConfig,
    GameError,
};
use oligofair_core::generate::{generate_synthetic, Dims};
use oligofair_core::outcome::GameOutcome;
use oligofair_core::report;
use oligofair_core::schema::{parse_instance, serialize_instance};
use oligofair_core::verify::verify_outcome;
use oligofair_core::Instance;
use oligofair_solver::{import_solution, write_mps, SolverConfig};

#[derive(Parser)]
#[command(
    name = "oligofair",
    about = "Fair multi-period customer allocation for oligopoly markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance document against the schema and value invariants.
    Validate { instance: PathBuf },
    /// Generate a synthetic instance.
    Generate(GenerateArgs),
    /// Solve an instance under one of the fairness schemes.
    Solve(SolveArgs),
    /// Render reports from a solved outcome.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    /// Cardinalities as firms x customers x periods, e.g. 3x20x12.
    #[arg(long)]
    dims: String,
    #[arg(long, default_value_t = 1)]
    products: usize,
    #[arg(long, default_value_t = 2)]
    contracts: usize,
    #[arg(long, default_value_t = 1)]
    tiers: usize,
    /// Maximum tanks per customer.
    #[arg(long, default_value_t = 1)]
    tanks: usize,
    /// Explicit contract durations, comma separated.
    #[arg(long, value_delimiter = ',')]
    durations: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.25)]
    free_share: f64,
    #[arg(long, default_value_t = 0.15)]
    swap_fraction: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Status quo: incumbents pinned, free customers excluded.
    Sq,
    /// Social welfare: maximize the summed profit of all firms.
    Fsw,
    /// Linearized Nash bargaining over SOS2 profit grids.
    Flns,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Grid points per firm (flns).
    #[arg(long)]
    grid: Option<usize>,
    /// Grid refinement rounds (flns).
    #[arg(long)]
    refine: Option<usize>,
    /// Export the model as free-format MPS.
    #[arg(long)]
    mps_out: Option<PathBuf>,
    /// Import a `name value` solution file instead of solving.
    #[arg(long)]
    import_solution: Option<PathBuf>,
    /// Write the outcome document here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    mip_gap: Option<f64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Svg,
}

#[derive(Args)]
struct ReportArgs {
    outcome: PathBuf,
    /// Status-quo outcome for the profit-change columns.
    #[arg(long)]
    status_quo: Option<PathBuf>,
    /// How many top-demand customers the timeline shows.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Output directory for csv/svg files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_LIMITS: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { instance } => validate(&instance),
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Report(args) => report_cmd(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn validate(path: &Path) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = match parse_instance(&text) {
        Ok(inst) => inst,
        Err(err) => {
            eprintln!("parse error: {err}");
            return Ok(ExitCode::from(EXIT_VALIDATION));
        }
    };
    let violations = oligofair_core::validate_instance(&inst);
    if violations.is_empty() {
        println!(
            "ok: {} firms, {} customers, {} tanks, {} periods",
            inst.firms.len(),
            inst.customers.len(),
            inst.num_tanks(),
            inst.periods
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("{:?} at {}: {}", v.code, v.location, v.message);
        }
        eprintln!("{} violation(s)", violations.len());
        Ok(ExitCode::from(EXIT_VALIDATION))
    }
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let parts: Vec<usize> = args
        .dims
        .split('x')
        .map(|p| p.parse().context("dims must be firms x customers x periods"))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        bail!("dims must have exactly three components, e.g. 3x20x12");
    }
    let mut dims = Dims::new(parts[0], parts[1], parts[2]);
    dims.products = args.products;
    dims.contracts = args.contracts;
    dims.tiers = args.tiers;
    dims.max_tanks_per_customer = args.tanks;
    dims.free_share = args.free_share;
    dims.swap_fraction = args.swap_fraction;
    if let Some(durations) = args.durations {
        if durations.len() != dims.contracts {
            bail!("--durations needs one entry per contract");
        }
        dims.durations = Some(durations);
    }
    let inst = generate_synthetic(args.seed, &dims);
    std::fs::write(&args.out, serialize_instance(&inst))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn write_outcome(outcome: &GameOutcome, out: Option<&Path>) -> Result<()> {
    let json = outcome.to_json();
    match out {
        Some(path) => {
            std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn game_mode(mode: Mode) -> oligofair_core::outcome::GameMode {
    match mode {
        Mode::Sq => oligofair_core::outcome::GameMode::StatusQuo,
        Mode::Fsw => oligofair_core::outcome::GameMode::SocialWelfare,
        Mode::Flns => oligofair_core::outcome::GameMode::NashBargaining,
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let inst = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(err) => {
            eprintln!("{err:#}");
            return Ok(ExitCode::from(EXIT_VALIDATION));
        }
    };
    let violations = oligofair_core::validate_instance(&inst);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{:?} at {}: {}", v.code, v.location, v.message);
        }
        return Ok(ExitCode::from(EXIT_VALIDATION));
    }

    let cfg = GameConfig {
        grid_size: args.grid,
        refine_rounds: args.refine,
        solver: SolverConfig {
            node_limit: args.node_limit,
            mip_gap: args.mip_gap.unwrap_or(1e-6),
            ..SolverConfig::default()
        },
        ..GameConfig::default()
    };

    // MPS export and solution import both need the mode's built model.
    if args.mps_out.is_some() || args.import_solution.is_some() {
        let (model_inst, built) = match args.mode {
            Mode::Sq => {
                let restricted = restrict_to_incumbents(&inst);
                let built = build_social_welfare_model(&restricted, true)?;
                (restricted, built)
            }
            Mode::Fsw => (inst.clone(), build_social_welfare_model(&inst, false)?),
            Mode::Flns => {
                let sq = compute_status_quo(&inst, &cfg)?;
                let fsw = solve_social_welfare(&inst, &cfg)?;
                let nash = solve_nash(&inst, &sq, &fsw, &cfg)?;
                let grids = nash.grids.clone().expect("nash outcome carries grids");
                (inst.clone(), build_nash_model(&inst, &sq.profits, &grids)?)
            }
        };
        if let Some(path) = &args.mps_out {
            std::fs::write(path, write_mps(&built.model)?)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        if let Some(path) = &args.import_solution {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let sol = import_solution(&built.model, &text, &cfg.solver)?;
            let outcome =
                oligofair_core::outcome::decode_outcome(&model_inst, &built, &sol, game_mode(args.mode));
            let report = verify_outcome(&model_inst, &outcome);
            eprintln!(
                "imported solution verified: max violation {:.3e}",
                report.max_violation()
            );
            write_outcome(&outcome, args.out.as_deref())?;
            return Ok(ExitCode::SUCCESS);
        }
        if args.import_solution.is_none() {
            // Export-only invocation.
            return Ok(ExitCode::SUCCESS);
        }
    }

    let result = match args.mode {
        Mode::Sq => compute_status_quo(&inst, &cfg).map(|sq| sq.outcome),
        Mode::Fsw => solve_social_welfare(&inst, &cfg),
        Mode::Flns => compute_status_quo(&inst, &cfg).and_then(|sq| {
            let fsw = solve_social_welfare(&inst, &cfg)?;
            solve_nash(&inst, &sq, &fsw, &cfg)
        }),
    };
    match result {
        Ok(outcome) => {
            let verify_inst = match args.mode {
                Mode::Sq => restrict_to_incumbents(&inst),
                _ => inst.clone(),
            };
            let report = verify_outcome(&verify_inst, &outcome);
            eprintln!(
                "solved: objective {:.6e}, max constraint violation {:.3e}, {} nodes",
                outcome.objective,
                report.max_violation(),
                outcome.diagnostics.nodes
            );
            let limited = outcome.diagnostics.status.contains("Limit");
            write_outcome(&outcome, args.out.as_deref())?;
            if limited {
                Ok(ExitCode::from(EXIT_LIMITS))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Err(GameError::Infeasible { .. }) | Err(GameError::StatusQuoInfeasible(_)) => {
            eprintln!("model is infeasible");
            Ok(ExitCode::from(EXIT_INFEASIBLE))
        }
        Err(GameError::LimitReached { status }) => {
            eprintln!("search stopped at {status:?} without an incumbent");
            Ok(ExitCode::from(EXIT_LIMITS))
        }
        Err(err) => Err(err.into()),
    }
}

fn report_cmd(args: ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.outcome)
        .with_context(|| format!("reading {}", args.outcome.display()))?;
    let outcome = GameOutcome::from_json(&text).context("parsing outcome document")?;
    let sq_profits: Option<Vec<f64>> = match &args.status_quo {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(GameOutcome::from_json(&text)?.profits)
        }
        None => None,
    };
    let report = report::build_report(&outcome, sq_profits.as_deref(), args.top);
    match args.format {
        Format::Text => print!("{}", report::render_text(&report)),
        Format::Csv => {
            std::fs::create_dir_all(&args.out_dir)?;
            for (name, content) in report::render_csv(&report) {
                let path = args.out_dir.join(name);
                std::fs::write(&path, content)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
        }
        Format::Svg => {
            std::fs::create_dir_all(&args.out_dir)?;
            for (name, content) in report::render_svg(&report, outcome.periods) {
                let path = args.out_dir.join(name);
                std::fs::write(&path, content)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
