//! Trap potentials, the error-function step and Gaussian delta
//! regularizations, and the product identity for pairs of Gaussians.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gwp_core::PhysicalConstants;
use crate::special::erfc;

/// Shape of the trapping potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PotentialKind {
    /// V = 0 everywhere.
    Free,
    /// ½mω²x² everywhere.
    IdealHarmonic,
    /// Harmonic for x < x_L, flat barrier L_h on [x_L, x_L + L), zero beyond.
    DoubleWell {
        /// Joint position.
        x_l: f64,
        /// Barrier width.
        l: f64,
        /// Barrier height.
        l_h: f64,
    },
    /// Double well with both joints smoothed by the error-function step.
    SmoothDoubleWell {
        /// Joint position.
        x_l: f64,
        /// Barrier width.
        l: f64,
        /// Barrier height.
        l_h: f64,
        /// Smoothing length of the steps.
        eps_smooth: f64,
    },
    /// Double well with an additional finite step R_h on [-x_R - R, -x_R)
    /// and zero potential further left.
    RealWorldWindow {
        /// Left joint distance from the origin.
        x_r: f64,
        /// Left barrier width.
        r: f64,
        /// Left barrier height.
        r_h: f64,
        /// Right joint position.
        x_l: f64,
        /// Right barrier width.
        l: f64,
        /// Right barrier height.
        l_h: f64,
    },
}

/// Potential shape together with the constants it is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Shape.
    pub kind: PotentialKind,
    /// ħ, m, ω.
    pub consts: PhysicalConstants,
}

impl PotentialSpec {
    /// Validated potential.
    pub fn new(kind: PotentialKind, consts: PhysicalConstants) -> Result<Self> {
        let s = Self { kind, consts };
        s.validate()?;
        Ok(s)
    }

    /// Harmonic trap.
    pub fn harmonic(consts: PhysicalConstants) -> Self {
        Self {
            kind: PotentialKind::IdealHarmonic,
            consts,
        }
    }

    /// Zero potential.
    pub fn free(consts: PhysicalConstants) -> Self {
        Self {
            kind: PotentialKind::Free,
            consts,
        }
    }

    /// Smoothed double well with the default barrier L = 2x_L and
    /// height L_h = ½mω²x_L².
    pub fn default_smooth_double_well(x_l: f64, eps_smooth: f64, consts: PhysicalConstants) -> Result<Self> {
        let l_h = 0.5 * consts.stiffness() * x_l * x_l;
        Self::new(
            PotentialKind::SmoothDoubleWell {
                x_l,
                l: 2.0 * x_l,
                l_h,
                eps_smooth,
            },
            consts,
        )
    }

    /// Checks the parameter invariants of the chosen shape.
    pub fn validate(&self) -> Result<()> {
        self.consts.validate()?;
        let k = self.consts.stiffness();
        let check_well = |x_l: f64, l: f64, l_h: f64| -> Result<()> {
            if !(x_l > 0.0 && x_l.is_finite()) {
                return Err(invalid(format!("x_L must be positive, got {x_l}")));
            }
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid(format!("L must be positive, got {l}")));
            }
            let floor = 0.5 * k * x_l * x_l;
            if !(l_h >= floor * (1.0 - 1e-12)) {
                return Err(invalid(format!("L_h = {l_h} is below ½mω²x_L² = {floor}")));
            }
            Ok(())
        };
        match self.kind {
            PotentialKind::Free | PotentialKind::IdealHarmonic => Ok(()),
            PotentialKind::DoubleWell { x_l, l, l_h } => check_well(x_l, l, l_h),
            PotentialKind::SmoothDoubleWell {
                x_l,
                l,
                l_h,
                eps_smooth,
            } => {
                check_well(x_l, l, l_h)?;
                if !(eps_smooth > 0.0) {
                    return Err(invalid("eps_smooth must be positive"));
                }
                if eps_smooth > 0.1 * l {
                    return Err(invalid(format!("eps_smooth = {eps_smooth} is not small against L = {l}")));
                }
                Ok(())
            }
            PotentialKind::RealWorldWindow {
                x_r,
                r,
                r_h,
                x_l,
                l,
                l_h,
            } => {
                check_well(x_l, l, l_h)?;
                if !(x_r > x_l) {
                    return Err(invalid(format!("x_R = {x_r} must exceed x_L = {x_l}")));
                }
                if !(r > 0.0 && r_h >= 0.0) {
                    return Err(invalid("left barrier must have positive width and nonnegative height"));
                }
                Ok(())
            }
        }
    }

    /// Joint position x_L, if the shape has one.
    pub fn joint(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::DoubleWell { x_l, .. }
            | PotentialKind::SmoothDoubleWell { x_l, .. }
            | PotentialKind::RealWorldWindow { x_l, .. } => Some(x_l),
            _ => None,
        }
    }

    /// Right edge x_L + L of the barrier, if the shape has one.
    pub fn barrier_end(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::DoubleWell { x_l, l, .. }
            | PotentialKind::SmoothDoubleWell { x_l, l, .. }
            | PotentialKind::RealWorldWindow { x_l, l, .. } => Some(x_l + l),
            _ => None,
        }
    }

    /// Smoothing length, if any.
    pub fn eps_smooth(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::SmoothDoubleWell { eps_smooth, .. } => Some(eps_smooth),
            _ => None,
        }
    }

    /// V(x).
    pub fn eval(&self, x: f64) -> f64 {
        let harm = 0.5 * self.consts.stiffness() * x * x;
        match self.kind {
            PotentialKind::Free => 0.0,
            PotentialKind::IdealHarmonic => harm,
            PotentialKind::DoubleWell { x_l, l, l_h } => {
                if x < x_l {
                    harm
                } else if x < x_l + l {
                    l_h
                } else {
                    0.0
                }
            }
            PotentialKind::SmoothDoubleWell { .. } => harm + self.perturbation(x),
            PotentialKind::RealWorldWindow {
                x_r,
                r,
                r_h,
                x_l,
                l,
                l_h,
            } => {
                if x < -x_r - r {
                    0.0
                } else if x < -x_r {
                    r_h
                } else if x < x_l {
                    harm
                } else if x < x_l + l {
                    l_h
                } else {
                    0.0
                }
            }
        }
    }

    /// V(x) - ½mω²x², the departure from the ideal harmonic trap.
    ///
    /// For the smoothed well this is
    /// L_h Θ(x - x_L, ε)Θ(x_L + L - x, ε) - ½mω²x² Θ(x - x_L, ε),
    /// evaluated directly so that it stays accurate far left of the joint.
    pub fn perturbation(&self, x: f64) -> f64 {
        let harm = 0.5 * self.consts.stiffness() * x * x;
        match self.kind {
            PotentialKind::SmoothDoubleWell {
                x_l,
                l,
                l_h,
                eps_smooth,
            } => {
                let up = smooth_step(x - x_l, eps_smooth);
                l_h * up * smooth_step(x_l + l - x, eps_smooth) - harm * up
            }
            _ => self.eval(x) - harm,
        }
    }
}

/// Θ(x, ε) = (1/(ε√π)) ∫_{-∞}^{x} exp(-y²/ε²) dy = ½ erfc(-x/ε).
pub fn smooth_step(x: f64, eps: f64) -> f64 {
    0.5 * erfc(-x / eps)
}

/// δ(x, ε) = exp(-x²/ε²)/(ε√π), the derivative of Θ(x, ε).
pub fn smooth_delta(x: f64, eps: f64) -> f64 {
    (-(x * x) / (eps * eps)).exp() / (eps * PI.sqrt())
}

/// Parameters of exp(-(x - z1)²/ε1²) exp(-(x - z2)²/ε2²) written as
/// prefactor · exp(-(x - x0)²/ε0²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProduct {
    /// ε0².
    pub eps0_sq: f64,
    /// Combined center.
    pub x0: f64,
    /// Decay factor exp(-(z1 - z2)²/(ε1² + ε2²)).
    pub prefactor: f64,
}

/// Combines two real Gaussians of widths ε1, ε2 and centers z1, z2.
pub fn gaussian_product(z1: f64, eps1: f64, z2: f64, eps2: f64) -> Result<GaussianProduct> {
    if !(eps1 > 0.0 && eps2 > 0.0) {
        return Err(invalid("Gaussian widths must be positive"));
    }
    let (a, b) = (eps1 * eps1, eps2 * eps2);
    let s = a + b;
    Ok(GaussianProduct {
        eps0_sq: a * b / s,
        x0: (b * z1 + a * z2) / s,
        prefactor: (-(z1 - z2).powi(2) / s).exp(),
    })
}
