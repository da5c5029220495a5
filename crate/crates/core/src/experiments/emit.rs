//! Report emitters: JSON, CSV tables and SVG plots.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{svg, Artifacts, ExperimentReport};
use crate::bounds::{reports_to_csv, reports_to_json};
use crate::error::{Result, SsissError};

/// Output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Full report, bound reports, pulse sequence and binary state with sidecar.
    Json,
    /// Summary row, bound table, sweep tables, trace and state samples.
    Csv,
    /// Static line plots of every sweep table.
    Svg,
}

impl FromStr for Format {
    type Err = SsissError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" | "svg-plots" => Ok(Format::Svg),
            other => Err(SsissError::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Writes the requested formats into `dir` and returns the written paths.
pub fn emit_report(report: &ExperimentReport, artifacts: &Artifacts, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str| -> PathBuf {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    if formats.contains(&Format::Json) {
        std::fs::write(put("report.json"), report.to_json()?)?;
        reports_to_json(&report.bounds, &put("bounds.json"))?;
        if let Some(seq) = &artifacts.sequence {
            std::fs::write(put("sequence.json"), seq.to_json()?)?;
        }
        if let Some(st) = &artifacts.final_state {
            st.to_binary(dir, "final_state")?;
            put("final_state.bin");
            put("final_state.json");
        }
    }
    if formats.contains(&Format::Csv) {
        write_summary(report, &put("summary.csv"))?;
        reports_to_csv(&report.bounds, &put("bounds.csv"))?;
        for s in &report.series {
            let mut w = csv::Writer::from_path(put(&format!("{}.csv", s.name)))?;
            w.write_record(&s.columns)?;
            for r in &s.rows {
                w.write_record(r.iter().map(|v| format!("{v:.9e}")))?;
            }
            w.flush()?;
        }
        if !report.trace.is_empty() {
            let mut w = csv::Writer::from_path(put("trace.csv"))?;
            for t in &report.trace {
                w.serialize(t)?;
            }
            w.flush()?;
        }
        if let Some(st) = &artifacts.final_state {
            st.to_csv(&put("final_state.csv"))?;
        }
    }
    if formats.contains(&Format::Svg) {
        for s in &report.series {
            std::fs::write(put(&format!("{}.svg", s.name)), svg::render(s))?;
        }
    }
    Ok(written)
}

/// One-row table: scenario, verdict and item counts.
fn write_summary(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "verdict", "bounds", "fits", "checks", "failures"])?;
    w.write_record([
        report.scenario.to_string(),
        report.verdict.to_string(),
        report.bounds.len().to_string(),
        report.fits.len().to_string(),
        report.checks.len().to_string(),
        report.failures().join("; "),
    ])?;
    w.flush()?;
    Ok(())
}
