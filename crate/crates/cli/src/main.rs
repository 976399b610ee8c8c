mod config;
mod error;
mod report;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde_json::json;
use vardiff_core::presets::Preset;

use config::ExperimentConfig;
use error::CliError;
use report::{config_digest, RunReport, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "vardiff-lab", version, about = "Runs verification suites for variational differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `out`; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent cases.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, short)]
        verbose: bool,
    },
    /// List the analytic presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            print!("{}", presets_catalog());
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            jobs,
            verbose,
        } => {
            let level = if verbose { "info" } else { "warn" };
            env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
                .format_timestamp(None)
                .init();
            match run(&config, out, jobs) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("error: {e}");
                    // core errors already fold their own sources into the message
                    if let Some(s) = std::error::Error::source(&e) {
                        eprintln!("  caused by: {s}");
                    }
                    ExitCode::from(2)
                }
            }
        }
    }
}

fn presets_catalog() -> String {
    let mut s = String::new();
    for p in Preset::ALL {
        s.push_str(&format!("{}\n  definition: {}\n  exercises:  {}\n", p.name(), p.definition(), p.exercises()));
    }
    s
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Runs one config; returns whether every check passed.
fn run(config: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<bool, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let digest = config_digest(&cfg);
    info!("suite {:?}, config digest {digest}", cfg.suite);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::Pool(e.to_string()))?;

    let started = Instant::now();
    let output = pool.install(|| suites::run_suite(&cfg, &digest))?;
    let elapsed = started.elapsed().as_secs_f64();

    for r in &output.records {
        for c in &r.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            println!("{verdict} {} : {} = {:.3e}", r.case, c.name, c.measured);
        }
        if r.checks.is_empty() {
            info!("{} : no checks", r.case);
        }
    }
    for c in &output.convergence {
        let verdict = if c.check.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} convergence ({}) : order {:.3} [{:.3}, {:.3}]",
            c.quantity, c.order, c.ci95[0], c.ci95[1]
        );
    }

    let pass = output.records.iter().all(|r| r.pass) && output.convergence.iter().all(|c| c.check.pass);
    if !pass {
        warn!("some checks failed");
    }
    for a in &output.artifacts {
        write(&out.join(&a.name), &a.bytes)?;
    }
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        suite: cfg.suite,
        config_digest: digest.clone(),
        config: cfg,
        records: output.records,
        convergence: output.convergence,
        pass,
    };
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    write(&out.join("report.json"), &bytes)?;

    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "config_digest": digest,
        "config_path": config,
        "unix_time": now,
        "elapsed_seconds": elapsed,
        "threads": pool.current_num_threads(),
    });
    write(&out.join("metadata.json"), serde_json::to_string_pretty(&meta).expect("json").as_bytes())?;
    info!("wrote {} in {elapsed:.2} s", out.display());
    Ok(pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lists_every_preset() {
        let c = presets_catalog();
        for p in Preset::ALL {
            assert!(c.contains(p.name()));
        }
    }
}
