use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use jtrb_core::experiments::{
    run_convergence, run_sweep, run_trial, write_convergence_csv, write_records_csv, write_summary_csv,
    write_sweep_outputs, write_traces_jsonl, Method, RunOptions, SweepSpec, TrialRecord,
};
use jtrb_core::scenario::ScenarioConfig;
use jtrb_core::{ConfigError, ExperimentError};

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURES: u8 = 3;

/// Secure parameter estimation in IRS-aided sensor networks.
#[derive(Parser)]
#[command(name = "jtrb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Also emit optimizer traces as JSON lines.
    #[arg(long)]
    json_traces: bool,
    /// Exit with status 3 when more trials than this fail.
    #[arg(long)]
    max_failures: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One trial of one method; the CSV record goes to stdout.
    RunSingle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "jtrb")]
        method: String,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Monte Carlo sweep over N, P_T_dBm or eta.
    RunSweep {
        #[command(flatten)]
        common: Common,
        /// `VAR=v1,v2,...`
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        trials: usize,
        /// Comma-separated subset of no_irs, random_phase, brute_force_tiny.
        #[arg(long, value_delimiter = ',')]
        baselines: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-iteration γ traces of the alternating algorithm.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn options(common: &Common) -> RunOptions {
    RunOptions {
        jobs: common.jobs,
        keep_traces: common.json_traces,
    }
}

fn failures(records: &[TrialRecord]) -> usize {
    records.iter().filter(|r| !r.succeeded()).count()
}

fn check_failures(count: usize, limit: Option<usize>) -> ExitCode {
    if count > 0 {
        eprintln!("{count} trial(s) failed");
    }
    match limit {
        Some(max) if count > max => ExitCode::from(EXIT_FAILURES),
        _ => ExitCode::SUCCESS,
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(std::io::BufWriter::new(file))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::RunSingle { common, method, trial } => {
            let cfg = load(&common)?;
            let method: Method = method.parse()?;
            let outcome = run_trial(&cfg, trial, method)?;
            let stdout = std::io::stdout();
            if common.json_traces {
                if let Some(trace) = outcome.trace.clone() {
                    write_traces_jsonl(stdout.lock(), [(outcome.record.clone(), trace)])?;
                } else {
                    write_records_csv(stdout.lock(), std::slice::from_ref(&outcome.record))?;
                }
            } else {
                write_records_csv(stdout.lock(), std::slice::from_ref(&outcome.record))?;
            }
            stdout.lock().flush()?;
            Ok(check_failures(failures(std::slice::from_ref(&outcome.record)), common.max_failures))
        }
        Command::RunSweep {
            common,
            sweep,
            trials,
            baselines,
            out,
        } => {
            let cfg = load(&common)?;
            let (variable, values) = SweepSpec::parse_sweep(&sweep)?;
            let baselines = baselines
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse())
                .collect::<Result<Vec<Method>, _>>()?;
            if baselines.contains(&Method::Jtrb) {
                return Err(ExperimentError::Sweep("jtrb always runs; it is not a baseline".into()).into());
            }
            let spec = SweepSpec {
                variable,
                values,
                trials,
                base: cfg,
                baselines,
            };
            let output = run_sweep(&spec, options(&common))?;
            write_sweep_outputs(&out, &output)?;
            for row in &output.summary {
                eprintln!(
                    "{:<16} {}={:<8} mse_fc={:.4e} ± {:.2e}  failures={}/{}",
                    row.method.as_str(),
                    row.swept_var,
                    row.swept_value,
                    row.mean_mse_fc,
                    row.sem_mse_fc,
                    row.failures,
                    row.trials
                );
            }
            Ok(check_failures(failures(&output.records), common.max_failures))
        }
        Command::Convergence { common, trials, out } => {
            let cfg = load(&common)?;
            if trials == 0 {
                return Err(ExperimentError::Sweep("trials must be at least 1".into()).into());
            }
            let outcomes = run_convergence(&cfg, trials, options(&common))?;
            std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            write_convergence_csv(create(&out.join("convergence.csv"))?, &outcomes)?;
            let records: Vec<TrialRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
            write_records_csv(create(&out.join("trials.csv"))?, &records)?;
            write_summary_csv(create(&out.join("summary.csv"))?, &jtrb_core::experiments::summarize(&records))?;
            if common.json_traces {
                write_traces_jsonl(
                    create(&out.join("traces.jsonl"))?,
                    outcomes
                        .iter()
                        .filter_map(|o| o.trace.clone().map(|t| (o.record.clone(), t))),
                )?;
            }
            Ok(check_failures(failures(&records), common.max_failures))
        }
    }
}

fn is_config_error(err: &anyhow::Error) -> bool {
    if err.downcast_ref::<ConfigError>().is_some() {
        return true;
    }
    matches!(
        err.downcast_ref::<ExperimentError>(),
        Some(ExperimentError::Config(_) | ExperimentError::Sweep(_) | ExperimentError::SizeGuard { .. })
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_config_error(&err) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
