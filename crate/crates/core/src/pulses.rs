//! Phase-modulated double-wave-number laser coupling, its exact space-only
//! propagator, the target propagator and the construction of the basic
//! pulse sequences.
//!
//! Basis order is (g0, e) with I_z = diag(-½, ½), I_x = [[0, ½], [½, 0]] and
//! I_y = [[0, i/2], [-i/2, 0]].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid_oracle::SpinorGrid;
use crate::gwp_core::C64;
use crate::potentials::{smooth_step, PotentialSpec};

/// Fixed beam phase offset α.
pub const ALPHA: f64 = FRAC_PI_4;

/// Smoothed spatial window Θ(x - lo, ε)Θ(hi - x, ε); a missing edge is open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// Lower edge, or None for -∞.
    pub lo: Option<f64>,
    /// Upper edge, or None for +∞.
    pub hi: Option<f64>,
    /// Edge smoothing length.
    pub eps: f64,
}

impl Window {
    /// Window (-∞, hi].
    pub fn below(hi: f64, eps: f64) -> Self {
        Self {
            lo: None,
            hi: Some(hi),
            eps,
        }
    }

    /// Window [lo, hi].
    pub fn between(lo: f64, hi: f64, eps: f64) -> Self {
        Self {
            lo: Some(lo),
            hi: Some(hi),
            eps,
        }
    }

    /// Mask value in [0, 1].
    pub fn mask(&self, x: f64) -> f64 {
        let lo = self.lo.map_or(1.0, |a| smooth_step(x - a, self.eps));
        let hi = self.hi.map_or(1.0, |b| smooth_step(b - x, self.eps));
        lo * hi
    }
}

/// Laser beam pair of wavenumbers k0, k1 with Rabi frequency Ω0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhamdownBeams {
    /// Rabi frequency Ω0.
    pub omega0: f64,
    /// First wavenumber.
    pub k0: f64,
    /// Second wavenumber.
    pub k1: f64,
    /// Optional spatial window applied as a multiplicative mask.
    pub window: Option<Window>,
}

impl PhamdownBeams {
    /// Beams from Ω0, Δk = k0 - k1 and k0 + k1.
    pub fn new(omega0: f64, dk: f64, ksum: f64) -> Result<Self> {
        let b = Self {
            omega0,
            k0: 0.5 * (ksum + dk),
            k1: 0.5 * (ksum - dk),
            window: None,
        };
        b.validate()?;
        Ok(b)
    }

    /// Same beams restricted to a window.
    pub fn with_window(mut self, window: Option<Window>) -> Self {
        self.window = window;
        self
    }

    /// Checks Ω0 > 0 and finiteness.
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(invalid(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.k0.is_finite() && self.k1.is_finite()) {
            return Err(invalid("wavenumbers must be finite"));
        }
        if let Some(w) = self.window {
            if !(w.eps > 0.0) {
                return Err(invalid("window smoothing must be positive"));
            }
        }
        Ok(())
    }

    /// Δk = k0 - k1.
    pub fn dk(&self) -> f64 {
        self.k0 - self.k1
    }

    /// k0 + k1.
    pub fn ksum(&self) -> f64 {
        self.k0 + self.k1
    }

    /// Window mask at x (1 when no window).
    pub fn mask(&self, x: f64) -> f64 {
        self.window.map_or(1.0, |w| w.mask(x))
    }
}

/// The four admissible drive phases γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivePhase {
    /// γ = 0.
    Zero,
    /// γ = π/2.
    HalfPi,
    /// γ = π.
    Pi,
    /// γ = 3π/2.
    ThreeHalfPi,
}

impl DrivePhase {
    /// All four phases.
    pub const ALL: [DrivePhase; 4] = [DrivePhase::Zero, DrivePhase::HalfPi, DrivePhase::Pi, DrivePhase::ThreeHalfPi];

    /// γ in radians.
    pub fn radians(self) -> f64 {
        match self {
            DrivePhase::Zero => 0.0,
            DrivePhase::HalfPi => FRAC_PI_2,
            DrivePhase::Pi => PI,
            DrivePhase::ThreeHalfPi => 3.0 * FRAC_PI_2,
        }
    }

    /// Parses one of the four allowed radian values.
    pub fn from_radians(gamma: f64) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| (p.radians() - gamma).abs() < 1e-12)
            .ok_or_else(|| invalid(format!("gamma = {gamma} is not one of 0, π/2, π, 3π/2")))
    }

    /// The phase shifted by π.
    pub fn opposite(self) -> Self {
        match self {
            DrivePhase::Zero => DrivePhase::Pi,
            DrivePhase::HalfPi => DrivePhase::ThreeHalfPi,
            DrivePhase::Pi => DrivePhase::Zero,
            DrivePhase::ThreeHalfPi => DrivePhase::HalfPi,
        }
    }
}

/// Coefficients of H_I = Q_x I_x + Q_y I_y at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    /// Q_x.
    pub qx: f64,
    /// Q_y.
    pub qy: f64,
}

impl Coupling {
    /// Dense 2×2 matrix in the (g0, e) basis.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let off = 0.5 * C64::new(self.qx, self.qy);
        [[C64::new(0.0, 0.0), off], [off.conj(), C64::new(0.0, 0.0)]]
    }

    /// Applies the matrix to (g0, e).
    pub fn apply(&self, g: C64, e: C64) -> (C64, C64) {
        let off = 0.5 * C64::new(self.qx, self.qy);
        (off * e, off.conj() * g)
    }
}

/// Q_x, Q_y of the coupling with window mask, for an already validated phase.
pub fn coupling(beams: &PhamdownBeams, gamma: DrivePhase, x: f64, hbar: f64) -> Coupling {
    let amp = 4.0 * hbar * beams.omega0 * (0.5 * beams.dk() * x - ALPHA).cos() * beams.mask(x);
    let phi = 0.5 * beams.ksum() * x - gamma.radians();
    let (s, c) = phi.sin_cos();
    Coupling {
        qx: amp * c,
        qy: -amp * s,
    }
}

/// H_I(x) for a drive phase given in radians; rejects phases outside the four allowed values.
pub fn interaction_hi(beams: &PhamdownBeams, gamma: f64, x: f64, hbar: f64) -> Result<Coupling> {
    Ok(coupling(beams, DrivePhase::from_radians(gamma)?, x, hbar))
}

/// exp(-i(V·1 + Q_x I_x + Q_y I_y)τ/ħ) in closed form.
pub fn local_propagator(v: f64, c: Coupling, tau: f64, hbar: f64) -> [[C64; 2]; 2] {
    let q = c.qx.hypot(c.qy);
    let half = q * tau / (2.0 * hbar);
    let cos = half.cos();
    // sin(|Q|τ/2ħ)/|Q| written through sinc so the Q → 0 limit is exact.
    let s_over_q = if half.abs() < 1e-8 {
        tau / (2.0 * hbar) * (1.0 - half * half / 6.0)
    } else {
        half.sin() / q
    };
    let ph = C64::from_polar(1.0, -v * tau / hbar);
    let off_up = C64::new(0.0, -1.0) * s_over_q * C64::new(c.qx, c.qy);
    let off_dn = C64::new(0.0, -1.0) * s_over_q * C64::new(c.qx, -c.qy);
    [[ph * cos, ph * off_up], [ph * off_dn, ph * cos]]
}

/// Space-only propagator exp(-iH_I τ/ħ) applied pointwise; g1 is untouched.
pub fn driven_rotation_exact(state: &SpinorGrid, beams: &PhamdownBeams, gamma: DrivePhase, tau: f64) -> SpinorGrid {
    let hbar = state.consts.hbar;
    let mut out = state.clone();
    for i in 0..state.grid.n_points {
        let x = state.grid.x(i);
        let u = local_propagator(0.0, coupling(beams, gamma, x, hbar), tau, hbar);
        let (g, e) = (state.g0[i], state.e[i]);
        out.g0[i] = u[0][0] * g + u[0][1] * e;
        out.e[i] = u[1][0] * g + u[1][1] * e;
    }
    out
}

/// Phase θ(x) with the target propagator acting as exp(-iθ(x) I_z).
pub fn target_angle(beams: &PhamdownBeams, delta_t: f64, x: f64) -> f64 {
    let a = 4.0 * beams.omega0 * delta_t;
    let c = (0.5 * beams.dk() * x - ALPHA).cos();
    a * a * c * c
}

/// Target propagator exp{-i(4Ω0δt)² I_z cos²(½Δk x - π/4)} applied pointwise.
pub fn target_propagator(state: &SpinorGrid, beams: &PhamdownBeams, delta_t: f64) -> SpinorGrid {
    let mut out = state.clone();
    for i in 0..state.grid.n_points {
        let th = target_angle(beams, delta_t, state.grid.x(i));
        out.g0[i] *= C64::from_polar(1.0, 0.5 * th);
        out.e[i] *= C64::from_polar(1.0, -0.5 * th);
    }
    out
}

/// Sequence families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// Nine propagators with inverse harmonic evolutions, ideal trap, no window.
    TheoreticalA,
    /// Nine propagators with inverse evolutions replaced by forward
    /// evolutions over the 2kπ/ω complement in the actual potential.
    ExperimentalA,
    /// The symmetric sixteen-rotation variant with commutator-cancelling
    /// phase order, realized like the experimental sequence.
    ImprovedB,
}

/// One evolution step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepKind {
    /// Forward evolution under the step potential, followed by the global
    /// phase factor e^{i·phase_correction} recorded by the complement rule.
    FieldFree {
        /// Duration.
        tau: f64,
        /// Global phase restoring the inverse evolution it replaces.
        phase_correction: f64,
    },
    /// Marker for the inverse harmonic evolution exp(+iH0τ/ħ).
    InverseFieldFree {
        /// Duration of the inverted evolution.
        tau: f64,
    },
    /// Evolution under the potential plus the laser coupling.
    Driven {
        /// Drive phase.
        gamma: DrivePhase,
        /// Duration.
        tau: f64,
    },
}

impl StepKind {
    /// Duration of the step.
    pub fn tau(&self) -> f64 {
        match *self {
            StepKind::FieldFree { tau, .. } | StepKind::InverseFieldFree { tau } | StepKind::Driven { tau, .. } => tau,
        }
    }
}

/// A step and the potential it runs in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceStep {
    /// What the step does.
    pub kind: StepKind,
    /// Potential active during the step.
    pub potential: PotentialSpec,
}

/// Steps in application order, repeated `repeats` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    /// Family.
    pub kind: SequenceKind,
    /// Total pulse duration δt.
    pub delta_t: f64,
    /// Repetition count n.
    pub repeats: usize,
    /// Winding integer k of the complement rule ωτ' = 2kπ - ωτ.
    pub winding: u32,
    /// Beams used by the driven steps.
    pub beams: PhamdownBeams,
    /// Steps of one basic sequence, first applied first.
    pub steps: Vec<SequenceStep>,
}

impl PulseSequence {
    /// JSON document of the sequence.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a JSON document produced by `to_json`.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Number of driven steps in one basic sequence.
    pub fn driven_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.kind, StepKind::Driven { .. }))
            .count()
    }
}

/// Builds a basic sequence; `repeats = n` encodes [P(δt/√n)]^n.
pub fn build_sequence(
    kind: SequenceKind,
    delta_t: f64,
    n: usize,
    potential: PotentialSpec,
    beams: PhamdownBeams,
    winding: u32,
) -> Result<PulseSequence> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !(delta_t > 0.0 && delta_t.is_finite()) {
        return Err(invalid(format!("delta_t must be positive, got {delta_t}")));
    }
    if winding == 0 {
        return Err(invalid("winding k must be at least 1"));
    }
    beams.validate()?;
    potential.validate()?;
    let omega = potential.consts.omega;
    let period = 2.0 * PI * winding as f64 / omega;
    let phase_k = PI * winding as f64;
    let harmonic = PotentialSpec::harmonic(potential.consts);
    let complement = |tau: f64| SequenceStep {
        kind: StepKind::FieldFree {
            tau: period - tau,
            phase_correction: phase_k,
        },
        potential,
    };
    let driven = |gamma: DrivePhase, tau: f64, pot: PotentialSpec| SequenceStep {
        kind: StepKind::Driven { gamma, tau },
        potential: pot,
    };
    let order = [DrivePhase::ThreeHalfPi, DrivePhase::Pi, DrivePhase::HalfPi, DrivePhase::Zero];
    let (steps, used_beams) = match kind {
        SequenceKind::TheoreticalA => {
            let tau = delta_t / (n as f64).sqrt();
            let inv = |t: f64| SequenceStep {
                kind: StepKind::InverseFieldFree { tau: t },
                potential: harmonic,
            };
            let mut steps = vec![inv(0.5 * tau)];
            for (i, g) in order.iter().enumerate() {
                steps.push(driven(*g, tau, harmonic));
                steps.push(inv(if i == 3 { 0.5 * tau } else { tau }));
            }
            (steps, beams.with_window(None))
        }
        SequenceKind::ExperimentalA => {
            let tau = delta_t / (n as f64).sqrt();
            let mut steps = vec![complement(0.5 * tau)];
            for (i, g) in order.iter().enumerate() {
                steps.push(driven(*g, tau, potential));
                steps.push(complement(if i == 3 { 0.5 * tau } else { tau }));
            }
            (steps, beams)
        }
        SequenceKind::ImprovedB => {
            let tau = delta_t / (2.0 * n as f64).sqrt();
            let phases = [
                DrivePhase::HalfPi,
                DrivePhase::Zero,
                DrivePhase::ThreeHalfPi,
                DrivePhase::Pi,
                DrivePhase::ThreeHalfPi,
                DrivePhase::Pi,
                DrivePhase::HalfPi,
                DrivePhase::Zero,
            ];
            let mut steps = vec![complement(0.5 * tau)];
            for (i, g) in phases.iter().enumerate() {
                steps.push(driven(*g, tau, potential));
                steps.push(complement(if i == phases.len() - 1 { 0.5 * tau } else { tau }));
            }
            (steps, beams)
        }
    };
    Ok(PulseSequence {
        kind,
        delta_t,
        repeats: n,
        winding,
        beams: used_beams,
        steps,
    })
}
