//! Reproducible experiment runner behind the `ssiss` command.
//!
//! A scenario turns an [`ExperimentConfig`] into an [`ExperimentReport`]
//! holding the configuration echo, observable traces, swept series,
//! bound reports, scaling fits and threshold checks, each with a verdict.

mod config;
mod emit;
mod scenarios;
mod svg;

use serde::{Deserialize, Serialize};

pub use config::{
    BeamsConfig, ExperimentConfig, GridConfig, InitialConfig, OptionsConfig, PulseConfig, Scenario, SweepAxis,
};
pub use emit::{emit_report, Format};
pub use scenarios::{moment_gaussian_residual, run_experiment_with_artifacts};

use crate::bounds::{BoundReport, Verdict};
use crate::error::Result;
use crate::grid_oracle::{SpinorGrid, TraceEntry};
use crate::pulses::PulseSequence;
use crate::special::LinearFit;

/// Table of one swept quantity, emitted as CSV and SVG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    /// File stem.
    pub name: String,
    /// Column names; the first column is the abscissa.
    pub columns: Vec<String>,
    /// Rows.
    pub rows: Vec<Vec<f64>>,
    /// Columns drawn against the first one.
    pub plot: Vec<String>,
    /// Logarithmic abscissa.
    pub log_x: bool,
    /// Logarithmic ordinate.
    pub log_y: bool,
}

/// Least-squares fit with its acceptance window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Name.
    pub name: String,
    /// What was regressed on what.
    pub model: String,
    /// Slope.
    pub slope: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Intercept.
    pub intercept: f64,
    /// Coefficient of determination.
    pub r_squared: f64,
    /// Smallest accepted slope.
    pub slope_min: Option<f64>,
    /// Largest accepted slope.
    pub slope_max: Option<f64>,
    /// Smallest accepted R².
    pub r_squared_min: Option<f64>,
    /// Verdict.
    pub verdict: Verdict,
}

impl FitReport {
    /// Fit judged against the given window.
    pub fn new(
        name: &str,
        model: &str,
        fit: &LinearFit,
        slope_min: Option<f64>,
        slope_max: Option<f64>,
        r_squared_min: Option<f64>,
    ) -> Self {
        let ok = slope_min.map_or(true, |v| fit.slope >= v)
            && slope_max.map_or(true, |v| fit.slope <= v)
            && r_squared_min.map_or(true, |v| fit.r_squared >= v)
            && fit.slope.is_finite();
        Self {
            name: name.into(),
            model: model.into(),
            slope: fit.slope,
            slope_stderr: fit.slope_stderr,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            slope_min,
            slope_max,
            r_squared_min,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// Scalar compared against a threshold window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Name.
    pub name: String,
    /// Measured value.
    pub value: f64,
    /// Smallest accepted value.
    pub min: Option<f64>,
    /// Largest accepted value.
    pub max: Option<f64>,
    /// Verdict.
    pub verdict: Verdict,
}

impl Check {
    /// Value judged against [min, max].
    pub fn new(name: &str, value: f64, min: Option<f64>, max: Option<f64>) -> Self {
        let ok = value.is_finite() && min.map_or(true, |v| value >= v) && max.map_or(true, |v| value <= v);
        Self {
            name: name.into(),
            value,
            min,
            max,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    /// value < max.
    pub fn below(name: &str, value: f64, max: f64) -> Self {
        Self::new(name, value, None, Some(max))
    }

    /// value > min.
    pub fn above(name: &str, value: f64, min: f64) -> Self {
        Self::new(name, value, Some(min), None)
    }
}

/// Self-contained result of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Scenario.
    pub scenario: Scenario,
    /// Configuration as run.
    pub config: ExperimentConfig,
    /// Per-step observables of sequence runs.
    pub trace: Vec<TraceEntry>,
    /// Swept tables.
    pub series: Vec<Series>,
    /// Bound reports.
    pub bounds: Vec<BoundReport>,
    /// Scaling fits.
    pub fits: Vec<FitReport>,
    /// Threshold checks.
    pub checks: Vec<Check>,
    /// PASS iff every judged item passes.
    pub verdict: Verdict,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            scenario: config.scenario,
            config: config.clone(),
            trace: Vec::new(),
            series: Vec::new(),
            bounds: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            verdict: Verdict::Unmeasured,
        }
    }

    /// Aggregates the verdict; bound reports without a measurement are informational.
    fn finalize(mut self) -> Self {
        let verdicts: Vec<Verdict> = self
            .bounds
            .iter()
            .map(|b| b.verdict)
            .filter(|v| *v != Verdict::Unmeasured)
            .chain(self.fits.iter().map(|f| f.verdict))
            .chain(self.checks.iter().map(|c| c.verdict))
            .collect();
        self.verdict = if verdicts.is_empty() {
            Verdict::Unmeasured
        } else if verdicts.iter().all(|v| *v == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    /// Bound report by name.
    pub fn bound(&self, name: &str) -> Option<&BoundReport> {
        self.bounds.iter().find(|b| b.name == name)
    }

    /// Fit by name.
    pub fn fit(&self, name: &str) -> Option<&FitReport> {
        self.fits.iter().find(|f| f.name == name)
    }

    /// Check by name.
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Names and verdicts of every failing item.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for b in &self.bounds {
            if b.verdict == Verdict::Fail {
                out.push(format!("bound {}", b.name));
            }
        }
        for f in &self.fits {
            if f.verdict == Verdict::Fail {
                out.push(format!("fit {}", f.name));
            }
        }
        for c in &self.checks {
            if c.verdict == Verdict::Fail {
                out.push(format!("check {}", c.name));
            }
        }
        out
    }

    /// Pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses JSON.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Objects produced alongside a report.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// Pulse sequence that was run.
    pub sequence: Option<PulseSequence>,
    /// Final state.
    pub final_state: Option<SpinorGrid>,
}

/// Runs the configured scenario.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(run_experiment_with_artifacts(config)?.0)
}
