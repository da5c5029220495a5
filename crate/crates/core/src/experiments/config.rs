//! Experiment configuration: a TOML document with `--set key=value`
//! overrides applied on dotted paths before deserialization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SsissError};
use crate::gwp_core::PhysicalConstants;
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::pulses::{DrivePhase, PhamdownBeams, SequenceKind, Window};

/// Registered scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Harmonic recurrence, free spreading and conservation checks.
    OracleValidate,
    /// Double-well versus harmonic deviation over a sweep of x_L.
    ImperfectionSweep,
    /// Symmetric-splitting error over a decade of τ.
    TrotterScaling,
    /// One experimental basic sequence against the target propagator.
    PulseBasic,
    /// Full triggering pulse with momentum kick and Lamb-Dicke fidelity.
    SsissRun,
    /// Windowed Rabi pulse on a two-packet superposition.
    SelectiveExcite,
}

impl Scenario {
    /// Every scenario.
    pub const ALL: [Scenario; 6] = [
        Scenario::OracleValidate,
        Scenario::ImperfectionSweep,
        Scenario::TrotterScaling,
        Scenario::PulseBasic,
        Scenario::SsissRun,
        Scenario::SelectiveExcite,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::OracleValidate => "oracle-validate",
            Scenario::ImperfectionSweep => "imperfection-sweep",
            Scenario::TrotterScaling => "trotter-scaling",
            Scenario::PulseBasic => "pulse-basic",
            Scenario::SsissRun => "ssiss-run",
            Scenario::SelectiveExcite => "selective-excite",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = SsissError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| SsissError::UnknownScenario(s.to_string()))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Beam pair settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamsConfig {
    /// Rabi frequency Ω0.
    pub omega0: f64,
    /// k0 - k1.
    pub dk: f64,
    /// k0 + k1.
    pub ksum: f64,
    /// Use the window (-∞, x_L] with the potential's smoothing length.
    pub windowed: bool,
    /// Explicit window, overriding `windowed`.
    pub window: Option<Window>,
}

impl Default for BeamsConfig {
    fn default() -> Self {
        Self {
            omega0: 0.5,
            dk: 0.05,
            ksum: 0.2,
            windowed: true,
            window: None,
        }
    }
}

/// Pulse settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    /// Total pulse parameter δt.
    pub delta_t: f64,
    /// Number of repetitions n.
    pub n: usize,
    /// Sequence family.
    pub kind: SequenceKind,
    /// Integer k of the complementary field-free durations 2kπ/ω - τ.
    pub winding: u32,
    /// Drive phase used by the splitting scenario.
    pub gamma: DrivePhase,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            delta_t: 0.2,
            n: 16,
            kind: SequenceKind::ExperimentalA,
            winding: 1,
            gamma: DrivePhase::ThreeHalfPi,
        }
    }
}

/// Initial center of mass of the prepared packet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// x_c.
    pub x_c: f64,
    /// p_c.
    pub p_c: f64,
}

/// Grid overrides; unset fields use the scenario defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Number of points.
    pub n_points: Option<usize>,
    /// Left edge.
    pub x_min: Option<f64>,
    /// Right edge.
    pub x_max: Option<f64>,
    /// Time step.
    pub dt: Option<f64>,
}

/// Scenario-specific settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsConfig {
    /// Duration of the imperfection comparison, in periods 2π/ω.
    pub periods: f64,
    /// Lattice size for the commutator maxima.
    pub lattice: usize,
    /// Substeps per τ of the splitting reference.
    pub fine_steps: usize,
    /// Energy box factor relative to the initial energy.
    pub energy_margin: f64,
    /// Rabi frequency of the selective pulse.
    pub omega1: f64,
    /// Center of the packet inside the window.
    pub target_x: f64,
    /// Center of the packet outside the window.
    pub spectator_x: f64,
    /// Window edges of the selective pulse.
    pub window_lo: f64,
    /// Upper window edge.
    pub window_hi: f64,
    /// Window smoothing length.
    pub window_eps: f64,
    /// Number of random packets drawn by the oracle checks.
    pub random_packets: usize,
    /// Steps of the conservation runs.
    pub conservation_steps: usize,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        Self {
            periods: 1.0,
            lattice: 5,
            fine_steps: 1000,
            energy_margin: 1.1,
            omega1: 10.0,
            target_x: -6.0,
            spectator_x: 6.0,
            window_lo: -11.0,
            window_hi: -1.0,
            window_eps: 0.5,
            random_packets: 2,
            conservation_steps: 1000,
        }
    }
}

/// One swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Parameter path understood by the scenario.
    pub parameter: String,
    /// Values.
    pub values: Vec<f64>,
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario to run.
    pub scenario: Scenario,
    /// ħ, m, ω.
    pub physics: PhysicalConstants,
    /// Trap shape.
    pub potential: PotentialKind,
    /// Beam pair.
    pub beams: BeamsConfig,
    /// Pulse.
    pub pulse: PulseConfig,
    /// Initial packet.
    pub initial: InitialConfig,
    /// Grid overrides.
    pub grid: GridConfig,
    /// Scenario-specific settings.
    pub options: OptionsConfig,
    /// Sweeps.
    pub sweep: Vec<SweepAxis>,
    /// Seed of randomized checks.
    pub seed: u64,
    /// Output directory.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::OracleValidate,
            physics: PhysicalConstants::default(),
            potential: PotentialKind::SmoothDoubleWell {
                x_l: 8.0,
                l: 16.0,
                l_h: 32.0,
                eps_smooth: 0.05,
            },
            beams: BeamsConfig::default(),
            pulse: PulseConfig::default(),
            initial: InitialConfig::default(),
            grid: GridConfig::default(),
            options: OptionsConfig::default(),
            sweep: Vec::new(),
            seed: 0,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Default configuration for a scenario.
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            ..Self::default()
        }
    }

    /// Parses TOML text and applies `key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Value = toml::from_str(text).map_err(|e| SsissError::Config(e.to_string()))?;
        if !doc.is_table() {
            return Err(SsissError::Config("configuration must be a table".into()));
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ExperimentConfig = doc.try_into().map_err(|e: toml::de::Error| SsissError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file and applies overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    /// Serializes to TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SsissError::Serialization(e.to_string()))
    }

    /// Checks value ranges.
    pub fn validate(&self) -> Result<()> {
        self.potential_spec()?;
        self.beams()?.validate()?;
        if self.pulse.n == 0 || !(self.pulse.delta_t > 0.0) {
            return Err(invalid("pulse.n must be positive and pulse.delta_t positive"));
        }
        for s in &self.sweep {
            if s.values.is_empty() || s.values.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("sweep '{}' needs finite values", s.parameter)));
            }
        }
        let o = &self.options;
        if o.lattice < 2 || o.fine_steps == 0 {
            return Err(invalid("options.lattice must be >= 2 and options.fine_steps positive"));
        }
        if !(o.window_eps > 0.0 && o.window_lo < o.window_hi) {
            return Err(invalid("options.window_eps must be positive and window_lo < window_hi"));
        }
        if !(o.omega1 > 0.0 && o.periods > 0.0 && o.energy_margin >= 1.0) {
            return Err(invalid("options.omega1 and options.periods must be positive, energy_margin >= 1"));
        }
        Ok(())
    }

    /// Validated potential.
    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        PotentialSpec::new(self.potential, self.physics)
    }

    /// Beams with the configured window.
    pub fn beams(&self) -> Result<PhamdownBeams> {
        let b = PhamdownBeams::new(self.beams.omega0, self.beams.dk, self.beams.ksum)?;
        let window = match (self.beams.window, self.beams.windowed) {
            (Some(w), _) => Some(w),
            (None, true) => {
                let spec = self.potential_spec()?;
                spec.joint()
                    .map(|x_l| Window::below(x_l, spec.eps_smooth().unwrap_or(0.05)))
            }
            (None, false) => None,
        };
        Ok(b.with_window(window))
    }

    /// Values of the sweep over `parameter`, or `default` when none is configured.
    pub fn sweep_values(&self, parameter: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.sweep.as_slice() {
            [] => Ok(default),
            [axis] if axis.parameter == parameter => Ok(axis.values.clone()),
            _ => Err(SsissError::Config(format!(
                "scenario {} sweeps only '{parameter}'",
                self.scenario
            ))),
        }
    }
}

/// Sets `a.b.c = value`, parsing the value as a TOML literal and falling
/// back to a plain string.
fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| SsissError::Config(format!("override '{assignment}' is not key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(SsissError::Config(format!("bad key path '{path}'")));
    }
    let mut cur = doc;
    for k in &keys[..keys.len() - 1] {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| SsissError::Config(format!("'{path}' goes through a non-table value")))?;
        cur = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| SsissError::Config(format!("'{path}' goes through a non-table value")))?;
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = ExperimentConfig::from_toml_str(
            "scenario = \"pulse-basic\"\n",
            &["pulse.n=4".into(), "beams.omega0 = 0.25".into(), "pulse.kind=improved_b".into()],
        )
        .unwrap();
        assert_eq!(c.scenario, Scenario::PulseBasic);
        assert_eq!(c.pulse.n, 4);
        assert_eq!(c.beams.omega0, 0.25);
        assert_eq!(c.pulse.kind, SequenceKind::ImprovedB);
    }

    #[test]
    fn rejects_unknown_keys_and_scenarios() {
        assert!(ExperimentConfig::from_toml_str("bogus = 1", &[]).is_err());
        assert!(ExperimentConfig::from_toml_str("scenario = \"nope\"", &[]).is_err());
        assert!("nope".parse::<Scenario>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::for_scenario(Scenario::SsissRun);
        let back = ExperimentConfig::from_toml_str(&c.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(back, c);
    }
}
