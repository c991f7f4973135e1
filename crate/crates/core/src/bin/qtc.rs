use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qtc_core::harness::{demo_config, emit_csv, emit_json, parse_config_with, run, RunOptions, TaskStatus, DEMOS};

#[derive(Parser)]
#[command(name = "qtc", version, about = "Quantum W1 and transportation-cost experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a JSON config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Parse and validate a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long)]
        allow_large: bool,
    },
    /// Run a shipped demo config.
    Demo {
        /// One of product-qubits, ising-chain-3, ising-ring-3.
        name: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report path; the CSV summary goes next to it. Defaults to the
    /// config's output field, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol_quadrature: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Accept registers above 2^12 dimensions.
    #[arg(long)]
    allow_large: bool,
    /// Sample trials concurrently with per-trial random streams.
    #[arg(long)]
    parallel_trials: bool,
}

fn execute(text: &str, flags: &Flags) -> Result<bool, String> {
    let cfg = parse_config_with(text, flags.allow_large).map_err(|e| e.to_string())?;
    let opts = RunOptions {
        seed: flags.seed,
        trials: flags.trials,
        tol_quadrature: flags.tol_quadrature,
        parallel_trials: flags.parallel_trials,
    };
    let report = run(&cfg, &opts);
    for r in &report.results {
        let status = match r.status {
            TaskStatus::Ok if r.passed() => "pass",
            TaskStatus::Ok => "FAIL",
            TaskStatus::Skipped => "skipped",
            TaskStatus::Error => "ERROR",
        };
        let note = r.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default();
        eprintln!("{:<14} beta={:<8} {:<8} {:>8.2}s{note}", r.task.name(), r.beta, status, r.elapsed.as_secs_f64());
    }
    let json = emit_json(&report);
    let out = flags.out.clone().or_else(|| cfg.spec.output.as_ref().map(PathBuf::from));
    match out {
        Some(path) => {
            std::fs::write(&path, &json).map_err(|e| format!("{}: {e}", path.display()))?;
            let csv = csv_path(&path);
            std::fs::write(&csv, emit_csv(&report)).map_err(|e| format!("{}: {e}", csv.display()))?;
        }
        None => print!("{json}"),
    }
    Ok(report.pass)
}

fn csv_path(json: &Path) -> PathBuf {
    json.with_extension("csv")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, flags } => std::fs::read_to_string(config)
            .map_err(|e| format!("{}: {e}", config.display()))
            .and_then(|text| execute(&text, flags)),
        Command::Validate { config, allow_large } => std::fs::read_to_string(config)
            .map_err(|e| format!("{}: {e}", config.display()))
            .and_then(|text| parse_config_with(&text, *allow_large).map_err(|e| e.to_string()))
            .map(|c| {
                let tasks: Vec<&str> = c.spec.tasks.iter().map(|t| t.name()).collect();
                eprintln!("valid: {} sites, {} beta values, tasks {}", c.hamiltonian.shape().num_sites(), c.betas.len(), tasks.join(","));
                true
            }),
        Command::Demo { name, flags } => match demo_config(name) {
            Some(text) => execute(text, flags),
            None => {
                let names: Vec<&str> = DEMOS.iter().map(|(n, _)| *n).collect();
                Err(format!("unknown demo `{name}`; available: {}", names.join(", ")))
            }
        },
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
