use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maslov::ambient::ModelKind;
use maslov::scenario::{list_scenarios, run_and_write, scenario_names, Format, ScenarioConfig};
use maslov::Error;

#[derive(Parser)]
#[command(name = "maslov", version, about = "Phase, Maslov class and mean curvature of discrete Lagrangians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a scenario and write its report.
    Run(RunArgs),
    /// List the available scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    scenario: String,
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $MASLOV_OUT, else ./maslov-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated list of json, csv, svg.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,
    /// Ambient model as JSON, e.g. '{"kind":"round-sphere","params":{"radius":2}}'.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Comma-separated resolutions for refinement studies.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    #[arg(long)]
    theta: Option<f64>,
    /// Flow step size.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Football amplitude or potential strength.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    functions: Option<usize>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario measured by `convergence`.
    #[arg(long = "scenario")]
    target: Option<String>,
}

fn config_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn overrides(args: &RunArgs) -> Result<ScenarioConfig, String> {
    let formats = match &args.format {
        Some(list) => {
            Some(list.iter().map(|s| s.parse::<Format>().map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?)
        }
        None => None,
    };
    let model = match &args.model {
        Some(text) => Some(serde_json::from_str::<ModelKind>(text).map_err(|e| format!("--model: {e}"))?),
        None => None,
    };
    Ok(ScenarioConfig {
        model,
        n: args.n,
        n1: args.n1,
        n2: args.n2,
        ladder: args.ladder.clone(),
        theta: args.theta,
        epsilon: args.epsilon,
        steps: args.steps,
        amplitude: args.amplitude,
        functions: args.functions,
        degree: args.degree,
        max_iterations: args.max_iterations,
        seed: args.seed,
        target: args.target.clone(),
        out: args.out.clone(),
        formats,
        threads: args.threads,
        ..ScenarioConfig::default()
    })
}

fn run(args: RunArgs) -> ExitCode {
    if !scenario_names().contains(&args.scenario.as_str()) {
        return config_error(format!(
            "unknown scenario {:?}; valid scenarios: {}",
            args.scenario,
            scenario_names().join(", ")
        ));
    }
    let base = match &args.config {
        Some(path) => match ScenarioConfig::load(path) {
            Ok(c) => c,
            Err(e) => return config_error(format!("{}: {e}", path.display())),
        },
        None => ScenarioConfig::default(),
    };
    let config = match overrides(&args) {
        Ok(o) => base.merged(o),
        Err(e) => return config_error(e),
    };
    if let Some(threads) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return config_error(e);
        }
    }
    match run_and_write(&args.scenario, &config) {
        Ok((report, paths)) => {
            for c in &report.checks {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            for p in &paths {
                println!("wrote {}", p.display());
            }
            let failures = report.failures();
            if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} check(s) failed:", failures.len());
                for c in failures {
                    eprintln!("  {}: {}", c.name, c.detail);
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if computation_failed(&e) { 1 } else { 2 })
        }
    }
}

/// Errors raised by the numerics themselves count as failed checks, not bad configuration.
fn computation_failed(e: &Error) -> bool {
    matches!(
        e,
        Error::Numerical { .. }
            | Error::Refinement(_)
            | Error::UnresolvedMesh { .. }
            | Error::HalfIntegerBoundary { .. }
            | Error::StepRejected { .. }
            | Error::DegenerateZeroSet(_)
            | Error::NotLagrangian { .. }
    )
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List { json } => {
            if json {
                match serde_json::to_string_pretty(list_scenarios()) {
                    Ok(text) => println!("{text}"),
                    Err(e) => return config_error(e),
                }
            } else {
                for s in list_scenarios() {
                    println!("{:<24}{}", s.name, s.description);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => run(args),
    }
}
