//! Gaussian wave-packet states in the standard form
//!
//! ψ(x) = A e^{iφ0} (Δx²/2π)^{1/4} W^{-1/2} P(x) exp(-(x - x_c)²/(4W)) exp(i p_c x/ħ),
//!
//! with complex linewidth W = Δx² + iħT0/(2m), together with their exact
//! evolution under quadratic Hamiltonians, closed-form overlaps and the
//! phase-space modulations used by the Lamb-Dicke and Bessel expansions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SsissError};
use crate::special::{binomial, double_factorial};

/// Complex double used throughout the crate.
pub type C64 = Complex64;

/// Largest polynomial prefactor degree a stored term may carry.
pub const MAX_PREFACTOR_DEGREE: usize = 6;

/// Physical constants ħ, m and the trap frequency ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant.
    pub hbar: f64,
    /// Atomic mass.
    pub mass: f64,
    /// Harmonic trap angular frequency.
    pub omega: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
        }
    }
}

impl PhysicalConstants {
    /// Builds a validated constant set.
    pub fn new(hbar: f64, mass: f64, omega: f64) -> Result<Self> {
        let c = Self { hbar, mass, omega };
        c.validate()?;
        Ok(c)
    }

    /// Checks that every constant is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("mass", self.mass), ("omega", self.omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Harmonic stiffness mω².
    pub fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }

    /// Ground-state Δx² = ħ/(2mω) of the harmonic trap.
    pub fn ground_dx2(&self) -> f64 {
        self.hbar / (2.0 * self.mass * self.omega)
    }
}

/// Quadratic Hamiltonians with exactly known Gaussian propagators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticHamiltonian {
    /// p²/2m + ½mω²x².
    Harmonic,
    /// p²/2m.
    Free,
}

/// One Gaussian wave-packet term, optionally multiplied by a polynomial in x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwpTerm {
    /// Complex amplitude A.
    pub amplitude: C64,
    /// Tracked global phase φ0 in radians.
    pub global_phase: f64,
    /// Center-of-mass position.
    pub x_c: f64,
    /// Center-of-mass momentum.
    pub p_c: f64,
    /// Δx², the real part of the complex linewidth.
    pub dx2: f64,
    /// T0, fixing the imaginary part ħT0/(2m) of the linewidth.
    pub t0_param: f64,
    /// Coefficients of P(x) in powers of x; empty means P = 1.
    pub prefactor: Vec<C64>,
    /// Constants the linewidth and momentum phase refer to.
    pub consts: PhysicalConstants,
}

impl GwpTerm {
    /// Normalized pure term with unit amplitude and zero phase.
    pub fn new(x_c: f64, p_c: f64, dx2: f64, t0_param: f64, consts: PhysicalConstants) -> Result<Self> {
        consts.validate()?;
        if !(dx2.is_finite() && dx2 > 0.0) {
            return Err(SsissError::NonNormalizable(format!("dx2 must be positive, got {dx2}")));
        }
        if !(x_c.is_finite() && p_c.is_finite() && t0_param.is_finite()) {
            return Err(invalid("term parameters must be finite"));
        }
        Ok(Self {
            amplitude: C64::new(1.0, 0.0),
            global_phase: 0.0,
            x_c,
            p_c,
            dx2,
            t0_param,
            prefactor: Vec::new(),
            consts,
        })
    }

    /// Harmonic ground state displaced to (x_c, p_c).
    pub fn coherent(x_c: f64, p_c: f64, consts: PhysicalConstants) -> Result<Self> {
        Self::new(x_c, p_c, consts.ground_dx2(), 0.0, consts)
    }

    /// Builds a term from a complex linewidth; Re W must be positive.
    pub fn from_linewidth(x_c: f64, p_c: f64, w: C64, consts: PhysicalConstants) -> Result<Self> {
        if !(w.re > 0.0) {
            return Err(SsissError::NonNormalizable(format!("Re W = {} is not positive", w.re)));
        }
        Self::new(x_c, p_c, w.re, 2.0 * consts.mass * w.im / consts.hbar, consts)
    }

    /// Replaces the amplitude.
    pub fn with_amplitude(mut self, amplitude: C64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Replaces the tracked global phase.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.global_phase = phase;
        self
    }

    /// Attaches a polynomial prefactor (coefficients in powers of x).
    pub fn with_prefactor(mut self, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() > MAX_PREFACTOR_DEGREE + 1 {
            return Err(invalid(format!(
                "prefactor degree {} exceeds {MAX_PREFACTOR_DEGREE}",
                coeffs.len() - 1
            )));
        }
        self.prefactor = coeffs;
        Ok(self)
    }

    /// True when the term carries no polynomial prefactor.
    pub fn is_pure(&self) -> bool {
        self.prefactor.is_empty()
    }

    /// Complex linewidth W = Δx² + iħT0/(2m).
    pub fn linewidth(&self) -> C64 {
        C64::new(self.dx2, self.consts.hbar * self.t0_param / (2.0 * self.consts.mass))
    }

    /// Wave-packet spread ε with ε² = 2|W|²/Δx², twice the position variance.
    pub fn spread(&self) -> f64 {
        let s = self.consts.hbar * self.t0_param / (2.0 * self.consts.mass * self.dx2.sqrt());
        (2.0 * (self.dx2 + s * s)).sqrt()
    }

    /// Normalization factor (Δx²/2π)^{1/4} W^{-1/2} on the principal branch.
    pub fn norm_factor(&self) -> C64 {
        (self.dx2 / (2.0 * PI)).powf(0.25) / self.linewidth().sqrt()
    }

    /// Evaluates P(x); equals 1 for pure terms.
    pub fn prefactor_at(&self, x: f64) -> C64 {
        if self.prefactor.is_empty() {
            C64::new(1.0, 0.0)
        } else {
            poly_eval(&self.prefactor, x)
        }
    }

    /// Evaluates ψ(x).
    pub fn eval(&self, x: f64) -> C64 {
        let y = x - self.x_c;
        let expo = -y * y / (4.0 * self.linewidth())
            + C64::new(0.0, self.p_c * x / self.consts.hbar + self.global_phase);
        self.amplitude * self.norm_factor() * self.prefactor_at(x) * expo.exp()
    }

    /// Motional energy p²/2m + ½mω²x_c² + ¼mω²ε² + ħ²/(8mΔx²) of a pure term.
    pub fn energy(&self) -> Result<f64> {
        if !self.is_pure() {
            return Err(invalid("energy is defined for pure terms only"));
        }
        let c = &self.consts;
        let eps = self.spread();
        let e = self.p_c * self.p_c / (2.0 * c.mass)
            + 0.5 * c.stiffness() * self.x_c * self.x_c
            + 0.25 * c.stiffness() * eps * eps
            + c.hbar * c.hbar / (8.0 * c.mass * self.dx2);
        Ok(e)
    }

    /// Exact image of a pure term under exp(-iHτ/ħ) for a quadratic H.
    ///
    /// Uses the linear canonical (ABCD) form of the classical flow. The
    /// Gaussian width parameter Z = iħ/(2W) maps as Z' = (C + DZ)/(A + BZ),
    /// and the prefactor (A + BZ)^{-1/2} is taken on the branch continuous in
    /// τ so that phases accumulate correctly over many periods.
    pub fn evolve_quadratic(&self, ham: QuadraticHamiltonian, tau: f64) -> Result<GwpTerm> {
        if !self.is_pure() {
            return Err(invalid("exact quadratic evolution needs a pure term"));
        }
        if !tau.is_finite() {
            return Err(invalid("tau must be finite"));
        }
        let c = self.consts;
        let (h, m, w) = (c.hbar, c.mass, c.omega);
        let theta = w * tau;
        let (a, b, cc, d) = match ham {
            QuadraticHamiltonian::Harmonic => {
                let (s, co) = theta.sin_cos();
                (co, s / (m * w), -m * w * s, co)
            }
            QuadraticHamiltonian::Free => (1.0, tau / m, 0.0, 1.0),
        };
        let w0 = self.linewidth();
        let z0 = C64::new(0.0, h) / (2.0 * w0);
        let den = a + b * z0;
        let zt = (cc + d * z0) / den;
        let wt = C64::new(0.0, h) / (2.0 * zt);
        let q0 = self.x_c;
        let p0 = self.p_c;
        let qt = a * q0 + b * p0;
        let pt = cc * q0 + d * p0;
        let arg_den = match ham {
            QuadraticHamiltonian::Harmonic => {
                let k = (theta / PI).floor();
                let r = theta - k * PI;
                let zr = z0 / (m * w);
                let (s, co) = r.sin_cos();
                k * PI + (zr.im * s).atan2(co + zr.re * s)
            }
            QuadraticHamiltonian::Free => den.arg(),
        };
        let mut out = GwpTerm::from_linewidth(qt, pt, wt, c)?;
        let n0 = self.norm_factor();
        let nt = out.norm_factor();
        out.amplitude = self.amplitude * (n0.norm() / (nt.norm() * den.norm().sqrt()));
        out.global_phase = self.global_phase + n0.arg() - 0.5 * arg_den - (pt * qt - p0 * q0) / (2.0 * h)
            - nt.arg();
        Ok(out)
    }

    /// Multiplies the wavefunction by exp(i k (x - x_c)) exp(-c (x - x_c)²).
    ///
    /// The momentum grows by ħk, the linewidth obeys 1/(4W') = 1/(4W) + c,
    /// and amplitude and phase absorb the change of normalization factor so
    /// that the represented function is exactly the product.
    pub fn modulate(&self, k_lin: f64, c_quad: C64) -> Result<GwpTerm> {
        let w = self.linewidth();
        let inv = 1.0 / (4.0 * w) + c_quad;
        if !(inv.re > 0.0) {
            return Err(SsissError::NonNormalizable(format!(
                "quadratic phase {c_quad} removes the Gaussian decay"
            )));
        }
        let w_new = 1.0 / (4.0 * inv);
        let mut out = GwpTerm::from_linewidth(self.x_c, self.p_c + self.consts.hbar * k_lin, w_new, self.consts)?;
        out.prefactor = self.prefactor.clone();
        let n_old = self.norm_factor();
        let n_new = out.norm_factor();
        out.amplitude = self.amplitude * (n_old.norm() / n_new.norm());
        out.global_phase = self.global_phase - k_lin * self.x_c + n_old.arg() - n_new.arg();
        Ok(out)
    }

    /// Polynomial R_j with d^jψ/dx^j = R_j(x) G(x), where G is the term with
    /// its prefactor removed; for pure terms R_j is the usual Q_j with Q_0 = 1.
    pub fn derivative_polynomial(&self, j: usize) -> Result<Vec<C64>> {
        if j > MAX_PREFACTOR_DEGREE {
            return Err(invalid(format!("derivative order {j} exceeds {MAX_PREFACTOR_DEGREE}")));
        }
        let w = self.linewidth();
        let lin = vec![
            self.x_c / (2.0 * w) + C64::new(0.0, self.p_c / self.consts.hbar),
            -1.0 / (2.0 * w),
        ];
        let mut q = if self.prefactor.is_empty() {
            vec![C64::new(1.0, 0.0)]
        } else {
            self.prefactor.clone()
        };
        for _ in 0..j {
            q = poly_add(&poly_deriv(&q), &poly_mul(&q, &lin));
        }
        Ok(q)
    }

    /// Quadratic-exponent coefficients (c, a, b, d) with ψ = c P(x) exp(-a x² + b x + d).
    fn gaussian_coeffs(&self) -> (C64, C64, C64, C64) {
        let w = self.linewidth();
        let coef = self.amplitude * C64::from_polar(1.0, self.global_phase) * self.norm_factor();
        let a = 1.0 / (4.0 * w);
        let b = self.x_c / (2.0 * w) + C64::new(0.0, self.p_c / self.consts.hbar);
        let d = -self.x_c * self.x_c / (4.0 * w);
        (coef, a, b, d)
    }
}

/// Internal atomic state a term is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InternalLabel {
    /// Ground state addressed by the laser pair.
    G0,
    /// Excited state addressed by the laser pair.
    E,
    /// Ground state untouched by the laser pair.
    G1,
}

/// A term together with its internal label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTerm {
    /// Internal state.
    pub label: InternalLabel,
    /// Motional wave packet.
    pub term: GwpTerm,
}

/// Finite superposition of labeled Gaussian terms; empty means the zero state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GaussianSuperposition {
    /// Terms of the superposition.
    pub terms: Vec<LabeledTerm>,
}

impl GaussianSuperposition {
    /// Single-term superposition.
    pub fn single(label: InternalLabel, term: GwpTerm) -> Self {
        Self {
            terms: vec![LabeledTerm { label, term }],
        }
    }

    /// Appends a term.
    pub fn push(&mut self, label: InternalLabel, term: GwpTerm) {
        self.terms.push(LabeledTerm { label, term });
    }

    /// Number of terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True for the zero state.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Amplitude of one internal component at x.
    pub fn eval(&self, label: InternalLabel, x: f64) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.label == label)
            .map(|t| t.term.eval(x))
            .sum()
    }

    /// Squared norm from the closed-form overlap.
    pub fn norm_sqr(&self) -> f64 {
        overlap(self, self).re
    }
}

/// Closed-form ⟨a|b⟩ of two single terms on the same internal state.
pub fn overlap_terms(a: &GwpTerm, b: &GwpTerm) -> C64 {
    let (ca, aa, ba, da) = a.gaussian_coeffs();
    let (cb, ab, bb, db) = b.gaussian_coeffs();
    let big_a = aa.conj() + ab;
    let big_b = ba.conj() + bb;
    let big_d = da.conj() + db;
    let pa: Vec<C64> = if a.prefactor.is_empty() {
        vec![C64::new(1.0, 0.0)]
    } else {
        a.prefactor.iter().map(|c| c.conj()).collect()
    };
    let pb: Vec<C64> = if b.prefactor.is_empty() {
        vec![C64::new(1.0, 0.0)]
    } else {
        b.prefactor.clone()
    };
    let poly = poly_mul(&pa, &pb);
    let base = (big_d + big_b * big_b / (4.0 * big_a)).exp() * (PI / big_a).sqrt();
    let mu = big_b / (2.0 * big_a);
    let sum: C64 = poly
        .iter()
        .enumerate()
        .map(|(k, c)| c * shifted_moment(k, mu, big_a))
        .sum();
    ca.conj() * cb * base * sum
}

/// Σ_{j even} C(k,j) μ^{k-j} (j-1)!!/(2A)^{j/2}: the k-th moment of
/// exp(-A x² + B x) relative to its zeroth moment, with μ = B/(2A).
fn shifted_moment(k: usize, mu: C64, a: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let two_a = 2.0 * a;
    for j in (0..=k).step_by(2) {
        acc += binomial(k, j) * mu.powu((k - j) as u32) * double_factorial(j as i64 - 1)
            / two_a.powu((j / 2) as u32);
    }
    acc
}

/// ⟨a|b⟩ summed over term pairs; different internal labels are orthogonal.
pub fn overlap(a: &GaussianSuperposition, b: &GaussianSuperposition) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for ta in &a.terms {
        for tb in &b.terms {
            if ta.label == tb.label {
                acc += overlap_terms(&ta.term, &tb.term);
            }
        }
    }
    acc
}

/// Evaluates a polynomial with coefficients in increasing powers.
pub fn poly_eval(c: &[C64], x: f64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, ci| acc * x + ci)
}

/// Product of two coefficient vectors.
pub fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Sum of two coefficient vectors.
pub fn poly_add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, v) in a.iter().enumerate() {
        out[i] += v;
    }
    for (i, v) in b.iter().enumerate() {
        out[i] += v;
    }
    out
}

/// Derivative of a coefficient vector.
pub fn poly_deriv(a: &[C64]) -> Vec<C64> {
    a.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}
