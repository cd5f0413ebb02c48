//! Command-line front end: single runs with optional tracing and SVG
//! snapshots, batch experiments from a JSON spec, trace replay under the
//! full checker suite, and the closed-form work lower bounds.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use amoebot_core::harness::experiment::{run_experiment, ExperimentSpec};
use amoebot_core::harness::trace::{header_for, read_trace, replay, with_events, write_trace};
use amoebot_core::harness::{
    build_simulation, default_max_rounds, gen_line, gen_random_connected, render, Algorithm,
    Generator, InitialConfig,
};
use amoebot_core::scheduler::{Policy, RunError, Schedule};
use amoebot_core::validation::{
    hex_lower_bound, tri_lower_bound, validate_hexagon, validate_triangle, Checker,
};
use amoebot_core::{Offset, ShapeReport};

#[derive(Parser)]
#[command(
    name = "amoebot",
    about = "Shape-formation simulator for self-organizing particle systems on the triangular grid",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and validate the final shape.
    Run(RunArgs),
    /// Run a batch of simulations described by a JSON spec and emit CSV.
    Experiment(ExperimentArgs),
    /// Replay a recorded trace under the full checker suite.
    Validate(ValidateArgs),
    /// Print the closed-form work lower bound for a line start.
    Lowerbound(LowerboundArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Snake rule to run.
    #[arg(long)]
    algorithm: Algorithm,
    /// Number of particles, including the seed.
    #[arg(long)]
    n: usize,
    /// Initial configuration generator.
    #[arg(long, default_value = "line")]
    init: Generator,
    /// Seed for the random generator.
    #[arg(long, default_value_t = 0)]
    init_seed: u64,
    /// Scheduler seed.
    #[arg(long, default_value_t = 0)]
    sched_seed: u64,
    /// Seed for the per-particle label offsets.
    #[arg(long, default_value_t = 0)]
    offset_seed: u64,
    /// Label offset of the seed particle (anchors the shape orientation).
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..6))]
    seed_offset: u8,
    /// Activation policy.
    #[arg(long, default_value = "uniform")]
    policy: Policy,
    /// Round budget; defaults to 50·n².
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Record the run to this trace file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write an SVG snapshot every K events (requires --svg-dir).
    #[arg(long, value_name = "K")]
    svg_every: Option<u64>,
    /// Directory for SVG snapshots.
    #[arg(long, default_value = "frames")]
    svg_dir: PathBuf,
    /// Evaluate every safety checker after every atomic action.
    #[arg(long)]
    check: bool,
    /// Print the final configuration as ASCII art.
    #[arg(long)]
    ascii: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Path to the JSON experiment spec.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Trace file to replay.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct LowerboundArgs {
    #[arg(long)]
    algorithm: Algorithm,
    #[arg(long)]
    n: u64,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Lowerbound(args) => {
            let value = match args.algorithm {
                Algorithm::Hex => hex_lower_bound(args.n),
                Algorithm::Tri => tri_lower_bound(args.n),
            };
            println!("{value}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    if args.n < 1 {
        bail!("--n must be at least 1");
    }
    if let Some(k) = args.svg_every {
        if k == 0 {
            bail!("--svg-every must be positive");
        }
    }
    let init: InitialConfig = match args.init {
        Generator::Line => gen_line(args.n),
        Generator::Random => gen_random_connected(args.n, args.init_seed),
    };
    let schedule = Schedule::new(args.policy, args.sched_seed);
    let mut sim = build_simulation(
        &init,
        args.algorithm,
        args.offset_seed,
        Offset::new(args.seed_offset),
        schedule,
    )
    .context("building the initial configuration")?;

    let trace_header = args
        .trace
        .as_ref()
        .map(|_| header_for(sim.configuration(), args.algorithm, schedule));
    if args.trace.is_some() {
        sim.enable_trace();
    }
    if args.svg_every.is_some() {
        std::fs::create_dir_all(&args.svg_dir).context("creating the snapshot directory")?;
    }

    let budget = args
        .max_rounds
        .unwrap_or_else(|| default_max_rounds(args.n));
    let checkers: &[Checker] = if args.check { Checker::ALL } else { &[] };

    // Step manually so snapshots can be written mid-run.
    let mut frame = 0u64;
    let mut snapshot = |sim: &amoebot_core::Simulation, step: u64| -> Result<()> {
        if let Some(every) = args.svg_every {
            if step.is_multiple_of(every) {
                let path = args.svg_dir.join(format!("frame_{:06}.svg", frame));
                render::write_svg(sim.configuration(), &path)
                    .with_context(|| format!("writing {}", path.display()))?;
                frame += 1;
            }
        }
        Ok(())
    };
    let check_all = |sim: &amoebot_core::Simulation, step: u64| -> Result<(), RunError> {
        for &checker in checkers {
            amoebot_core::validation::check(checker, sim.configuration()).map_err(|detail| {
                RunError::InvariantViolation {
                    checker,
                    step,
                    detail,
                }
            })?;
        }
        Ok(())
    };
    let mut run_result: Result<(), RunError> = check_all(&sim, 0);
    snapshot(&sim, 0)?;
    while run_result.is_ok() && !sim.is_terminated() {
        if sim.stats().rounds >= budget {
            run_result = Err(RunError::BudgetExhausted {
                max_rounds: budget,
                stats: Box::new(sim.stats()),
            });
            break;
        }
        match sim.step() {
            Ok(event) => {
                run_result = check_all(&sim, event.step);
                snapshot(&sim, event.step + 1)?;
            }
            Err(err) => run_result = Err(err),
        }
    }

    // Persist whatever trace exists, even for failed runs.
    if let (Some(path), Some(header)) = (&args.trace, trace_header) {
        if sim.is_terminated() {
            let _ = sim.step(); // records the termination marker
        }
        write_trace(&with_events(header, &sim), path).context("writing the trace")?;
    }

    let stats = sim.stats();
    println!(
        "algorithm={} n={} policy={} sched_seed={} init={} init_seed={}",
        args.algorithm, args.n, args.policy, args.sched_seed, init.generator, args.init_seed
    );
    println!(
        "terminated={} work={} rounds={} activations={} max_particle_movements={}",
        stats.terminated,
        stats.movements,
        stats.rounds,
        stats.activations,
        stats.max_particle_movements
    );

    if let Err(err) = run_result {
        eprintln!("run failed: {err}");
        return Ok(ExitCode::from(match err {
            RunError::BudgetExhausted { .. } => 4,
            RunError::InvariantViolation { .. } => 3,
            _ => 1,
        }));
    }

    let report: ShapeReport = match args.algorithm {
        Algorithm::Hex => validate_hexagon(sim.configuration()),
        Algorithm::Tri => validate_triangle(sim.configuration()),
    }
    .context("validating the final shape")?;
    println!(
        "shape_valid={} radius_or_side={} partial_layer={}",
        report.valid, report.radius_or_side, report.partial_layer_size
    );
    if args.ascii {
        print!("{}", render::render_ascii(sim.configuration()));
    }
    if !report.valid {
        eprintln!("invalid shape: {}", report.failure_reason);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading spec {}", args.spec.display()))?;
    let spec = ExperimentSpec::from_json(&text)?;
    let outcome = run_experiment(&spec)?;
    if spec.csv_out.is_none() {
        print!("{}", outcome.csv());
    }
    eprint!("{}", outcome.summary());
    if outcome.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let trace = read_trace(&args.trace)?;
    match replay(&trace) {
        Ok(report) => {
            println!(
                "replayed steps={} work={} rounds={} terminated={}",
                report.steps, report.stats.movements, report.stats.rounds, report.stats.terminated
            );
            println!("trace ok");
            Ok(ExitCode::SUCCESS)
        }
        Err(err) => {
            eprintln!("trace invalid: {err}");
            Ok(ExitCode::from(3))
        }
    }
}
