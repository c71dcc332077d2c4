//! Subcommands of the `softbound` binary.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use softbound_core::metrics::emit_report;
use softbound_core::session::{replay, SessionLog};
use softbound_core::simulator::{run_experiment, write_run_directory, ExperimentConfig};

use crate::api::{router, AppState};

#[derive(Debug, Parser)]
#[command(name = "softbound", version, about = "Interactive multi-objective optimization with soft and hard bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment matrix with simulated decision makers.
    Simulate {
        /// Experiment config (JSON); omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run directory to create.
        #[arg(long)]
        out: PathBuf,
        /// Also write the report into the run directory.
        #[arg(long)]
        report: bool,
    },
    /// Serve the session API.
    Serve {
        /// Port on 127.0.0.1; 0 picks a free one.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory for session logs; nothing is persisted without it.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Write tables, charts and a summary for a run directory.
    Report { run_dir: PathBuf },
    /// Re-run a session log and compare every rebuilt query.
    Replay { log: PathBuf },
}

fn load_experiment(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

pub fn simulate(config: Option<&Path>, out: &Path, report: bool) -> Result<()> {
    let experiment = load_experiment(config)?;
    let runs = run_experiment(&experiment)?;
    write_run_directory(out, &experiment, &runs)?;
    for r in &runs {
        println!(
            "{} {} seed {}: final ratio {:.4}",
            r.record.problem,
            r.record.trace.mechanism,
            r.record.trace.seed,
            r.record.trace.value_at(experiment.base.budget.total_units)
        );
    }
    if report {
        report_dir(out)?;
    }
    Ok(())
}

pub fn report_dir(run_dir: &Path) -> Result<()> {
    let files = emit_report(run_dir)?;
    println!("{}", files.curves_csv.display());
    println!("{}", files.auc_csv.display());
    println!("{}", files.ise_csv.display());
    for c in &files.charts {
        println!("{}", c.display());
    }
    println!("{}", files.summary_json.display());
    Ok(())
}

/// Returns whether the log replayed cleanly.
pub fn replay_log(path: &Path) -> Result<bool> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let log = SessionLog::read_jsonl(BufReader::new(file))?;
    let report = replay(&log)?;
    println!("queries checked: {}", report.queries_checked);
    println!("mismatched rounds: {:?}", report.mismatched_rounds);
    if let Some(m) = report.finalization_matches {
        println!("finalization matches: {m}");
    }
    Ok(report.is_clean())
}

pub async fn serve(port: u16, data_dir: Option<PathBuf>) -> Result<()> {
    let state = Arc::new(AppState::new(data_dir)?);
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    let addr = listener.local_addr()?;
    println!("listening on http://{addr}");
    std::io::stdout().flush()?;
    axum::serve(listener, router(state)).await?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, report } => simulate(config.as_deref(), &out, report),
        Command::Report { run_dir } => report_dir(&run_dir),
        Command::Replay { log } => {
            if !replay_log(&log)? {
                bail!("replay diverged from {}", log.display());
            }
            Ok(())
        }
        Command::Serve { port, data_dir } => tokio::runtime::Runtime::new()?.block_on(serve(port, data_dir)),
    }
}
