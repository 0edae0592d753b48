use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use zoneopt::harness::{self, ExperimentConfig};

/// Thread count for trial-level parallelism; `--deterministic` overrides it.
const THREADS_ENV: &str = "ZONEOPT_THREADS";

/// Exit status of a run in which at least one trial aborted.
const ABORTED_STATUS: u8 = 2;

#[derive(Parser)]
#[command(name = "zoneopt", version, about = "Zeroth-order distributed optimization simulator")]
struct Cli {
    /// Run on a single thread. Output is identical either way.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a config and write its trace and summary CSVs.
    Run {
        config: PathBuf,
        /// Overrides `output` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Repeat a config over several network sizes.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        agents: Vec<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print graph spectra and theoretical mesh parameters for trial 0.
    Spectra { config: PathBuf },
    /// Run the fast invariant suite.
    Validate,
}

fn load(path: &PathBuf, output: Option<PathBuf>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = harness::load_config(&text).with_context(|| format!("in {}", path.display()))?;
    if output.is_some() {
        cfg.output = output;
    }
    Ok(cfg)
}

fn thread_count(deterministic: bool) -> Result<Option<usize>> {
    if deterministic {
        return Ok(Some(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => Ok(Some(
            v.parse().with_context(|| format!("{THREADS_ENV}={v} is not a count"))?,
        )),
        Err(_) => Ok(None),
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, output } => {
            let cfg = load(&config, output)?;
            print!("{}", cfg.to_toml());
            let report = harness::run_experiment(&cfg)?;
            for r in report.results.iter().filter(|r| r.aborted.is_some()) {
                eprintln!(
                    "trial {} aborted: {}",
                    r.trial,
                    r.aborted.as_deref().unwrap_or_default()
                );
            }
            if let Some(last) = report.summary.last() {
                let fmt = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
                println!(
                    "iter {} over {} trials: opt_gap {} cons_vio {} phi {} psi {}",
                    last.iter,
                    last.trials,
                    fmt(last.opt_gap),
                    fmt(last.cons_vio),
                    fmt(last.phi),
                    fmt(last.psi)
                );
            }
            if let (Some(csv), Some(summary)) = (&report.csv_path, &report.summary_path) {
                println!("wrote {} and {}", csv.display(), summary.display());
            }
            Ok(if report.aborted() > 0 {
                ExitCode::from(ABORTED_STATUS)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Sweep { config, agents, output } => {
            let cfg = load(&config, output)?;
            let rows = harness::sweep(&cfg, &agents)?;
            println!("agents,aborted,opt_gap,cons_vio,psi");
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            for r in &rows {
                let last = r.last.as_ref();
                println!(
                    "{},{},{},{},{}",
                    r.agents,
                    r.aborted,
                    fmt(last.and_then(|l| l.opt_gap)),
                    fmt(last.and_then(|l| l.cons_vio)),
                    fmt(last.and_then(|l| l.psi))
                );
            }
            let aborted = rows.iter().any(|r| r.aborted > 0);
            Ok(if aborted {
                ExitCode::from(ABORTED_STATUS)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Spectra { config } => {
            let s = harness::spectra(&load(&config, None)?)?;
            println!("agents      {}", s.n_agents);
            println!("edges       {}", s.n_edges);
            println!("resamples   {}", s.resamples);
            println!("sigma_min   {:.10}", s.sigma_min);
            println!("norm_lplus  {:.10}", s.norm_lplus);
            println!("l_hat       {:.10}", s.l_hat);
            println!("c           {:.10}", s.theory.c);
            println!("rho_min     {:.10}", s.theory.rho_min);
            println!("rho         {:.10}", s.theory.rho);
            println!("k           {:.10}", s.theory.k);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            let checks = harness::validate_suite();
            for c in &checks {
                println!("{c}");
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    if let Some(n) = thread_count(cli.deterministic)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    execute(cli.command)
}
