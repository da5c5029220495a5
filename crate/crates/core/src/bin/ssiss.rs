//! `ssiss <scenario> --config <file> [--set key=value ...] [--out dir]
//! [--formats json,csv,svg] [--seed N]`
//!
//! Exit code 0 when every verdict passes, 1 when some verdict fails and 2
//! on errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use ssiss::bounds::Verdict;
use ssiss::experiments::{emit_report, run_experiment_with_artifacts, ExperimentConfig, Format, Scenario};

#[derive(Debug, Parser)]
#[command(name = "ssiss", version, about = "Run a triggering-pulse experiment and certify its error bounds")]
struct Cli {
    /// Scenario: oracle-validate, imperfection-sweep, trotter-scaling,
    /// pulse-basic, ssiss-run or selective-excite.
    scenario: Scenario,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration value by dotted path, e.g. pulse.n=4.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (defaults to output_dir of the config, then ./out/<scenario>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats.
    #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
    formats: Vec<Format>,
    /// Seed of the randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> anyhow::Result<Verdict> {
    let mut cfg = ExperimentConfig::load(&cli.config, &cli.set)
        .with_context(|| format!("loading {}", cli.config.display()))?;
    cfg.scenario = cli.scenario;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let dir = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cli.scenario.name()));
    let start = Instant::now();
    let (report, artifacts) = run_experiment_with_artifacts(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let written = emit_report(&report, &artifacts, &cli.formats, &dir)?;
    std::fs::write(
        dir.join("timing.json"),
        serde_json::to_string_pretty(&serde_json::json!({ "wall_seconds": elapsed }))?,
    )?;
    for b in &report.bounds {
        if b.verdict != Verdict::Unmeasured {
            println!(
                "{:<44} bound {:>12.4e}  measured {:>12.4e}  {}",
                b.name,
                b.bound_value,
                b.measured_error.unwrap_or(f64::NAN),
                b.verdict
            );
        }
    }
    for f in &report.fits {
        println!("{:<44} slope {:>8.4} ± {:.4}  R² {:.5}  {}", f.name, f.slope, f.slope_stderr, f.r_squared, f.verdict);
    }
    for c in &report.checks {
        println!("{:<44} value {:>12.6e}  {}", c.name, c.value, c.verdict);
    }
    println!("{}: {} ({} files in {}, {:.1} s)", report.scenario, report.verdict, written.len(), dir.display(), elapsed);
    Ok(report.verdict)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
