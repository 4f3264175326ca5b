use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fcw_cli::commands::{cmd_evaluate, cmd_generate, cmd_sweep, cmd_trace, parse_values};
use fcw_cli::{CliError, GenerateConfig, RunConfig};
use fcw_core::method::Method;

/// Attention-aware forward collision warning: generate episodes, evaluate
/// warning methods, sweep parameters and dump per-step traces.
#[derive(Debug, Parser)]
#[command(name = "fcw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Run config (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Episode directory; overrides `episode_dir`.
    #[arg(long)]
    episodes: Option<PathBuf>,
    /// Output file; overrides `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Warning method; overrides `method`.
    #[arg(long)]
    method: Option<String>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled synthetic suite.
    Generate {
        /// Suite description (`key = value` lines); defaults apply when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate one method over an episode directory.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate one method across values of a parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Per-step diagnostics for one episode.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        episode_id: String,
    },
}

fn run_config(a: RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = a.episodes {
        cfg.episode_dir = d;
    }
    if let Some(o) = a.out {
        cfg.output = o;
    }
    if let Some(m) = a.method {
        cfg.method = m.parse::<Method>().map_err(CliError::config)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let cfg = match config {
                Some(path) => GenerateConfig::load(&path)?,
                None => GenerateConfig::default(),
            };
            let n = cmd_generate(&cfg, &out, seed)?;
            println!("wrote {n} episodes to {}", out.display());
        }
        Command::Evaluate { run } => {
            let report = cmd_evaluate(&run_config(run)?)?;
            println!("{}", report.summary_line());
        }
        Command::Sweep { run, param, values } => {
            let cfg = run_config(run)?;
            let values = parse_values(&values)?;
            for row in cmd_sweep(&cfg, &param, &values)? {
                println!("{param}={}  {}", row.value, row.report.summary_line());
            }
        }
        Command::Trace { run, episode_id } => {
            let cfg = run_config(run)?;
            cmd_trace(&cfg, &episode_id)?;
            println!("wrote trace for {episode_id} to {}", cfg.output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fcw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
