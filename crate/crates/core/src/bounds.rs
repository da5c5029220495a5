//! Closed-form error upper bounds, the two basic norms and the Gaussian
//! integrals they reduce to. Every evaluator is a pure function and returns
//! a [`BoundReport`] that can later be paired with an oracle measurement.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::gwp_core::{GwpTerm, PhysicalConstants};
use crate::potentials::{gaussian_product, smooth_delta, smooth_step};
use crate::special::{binomial, double_factorial, factorial, integrate_panels};

/// Outcome of comparing a bound with a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    /// Measurement present and dominated.
    Pass,
    /// Measurement present and not dominated, or a check failed.
    Fail,
    /// No measurement attached.
    Unmeasured,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unmeasured => "UNMEASURED",
        })
    }
}

/// A named bound, its inputs and value, and optionally the measured error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Identifier of the bound.
    pub name: String,
    /// Closed form that was evaluated.
    pub formula: String,
    /// Named scalar inputs.
    pub inputs: BTreeMap<String, f64>,
    /// Value of the bound.
    pub bound_value: f64,
    /// Oracle-measured error, if any.
    pub measured_error: Option<f64>,
    /// bound_value - measured_error.
    pub margin: Option<f64>,
    /// Verdict.
    pub verdict: Verdict,
}

impl BoundReport {
    /// Report without measurement.
    pub fn new(name: &str, formula: &str, inputs: &[(&str, f64)], bound_value: f64) -> Self {
        Self {
            name: name.to_string(),
            formula: formula.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            bound_value,
            measured_error: None,
            margin: None,
            verdict: Verdict::Unmeasured,
        }
    }

    /// Attaches a measurement; PASS iff the margin is nonnegative.
    pub fn with_measured(mut self, measured: f64) -> Self {
        let margin = self.bound_value - measured;
        self.measured_error = Some(measured);
        self.margin = Some(margin);
        self.verdict = if margin >= 0.0 && measured.is_finite() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    /// Renames the report (used when one evaluator serves several roles).
    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Short SHA-256 hex digest of the canonical JSON of the inputs.
    pub fn inputs_hash(&self) -> String {
        let text = serde_json::to_string(&self.inputs).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Writes reports as a JSON array.
pub fn reports_to_json(reports: &[BoundReport], path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(reports)?)?;
    Ok(())
}

/// Writes the summary table name, inputs_hash, bound, measured, margin, verdict.
pub fn reports_to_csv(reports: &[BoundReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "inputs_hash", "bound", "measured", "margin", "verdict"])?;
    for r in reports {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6e}"));
        w.write_record([
            r.name.clone(),
            r.inputs_hash(),
            format!("{:.6e}", r.bound_value),
            opt(r.measured_error),
            opt(r.margin),
            r.verdict.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// I_k = ∫ x^k exp(-(x - x0)²/ε0²) dx
///     = ε0√π Σ_{j even} C(k,j) (j-1)!!/√(2^j) x0^{k-j} ε0^j.
pub fn gaussian_integral_ik(k: usize, x0: f64, eps0: f64) -> Result<f64> {
    if !(eps0 > 0.0) {
        return Err(invalid("eps0 must be positive"));
    }
    let mut s = 0.0;
    for j in (0..=k).step_by(2) {
        s += binomial(k, j) * double_factorial(j as i64 - 1) / 2f64.powi(j as i32).sqrt()
            * x0.powi((k - j) as i32)
            * eps0.powi(j as i32);
    }
    Ok(eps0 * PI.sqrt() * s)
}

/// exp(-y²)/(y + √(y² + 4/π)), an upper bound on ∫_y^∞ e^{-t²} dt for y ≥ 0.
pub fn erfc_tail_bound(y_m: f64) -> Result<f64> {
    if !(y_m >= 0.0) {
        return Err(invalid("y_m must be nonnegative"));
    }
    Ok((-y_m * y_m).exp() / (y_m + (y_m * y_m + 4.0 / PI).sqrt()))
}

/// The two basic norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasicNorm {
    /// ‖x^l δ(x - c, ε) ψ‖.
    DeltaWeighted,
    /// ‖x^l Θ(x - c, ε) ψ‖.
    StepWeighted,
}

/// Evaluates a basic norm. The delta-weighted norm of a pure term uses the
/// Gaussian product and I_k in closed form; all other cases use quadrature.
pub fn basic_norm(kind: BasicNorm, l: usize, g: &GwpTerm, center: f64, eps: f64) -> Result<f64> {
    if l > 6 {
        return Err(invalid(format!("order l = {l} exceeds 6")));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let spread = g.spread();
    if kind == BasicNorm::DeltaWeighted && g.is_pure() {
        // δ² is a Gaussian of width ε/√2 with weight 1/(ε²π); |ψ|² is a
        // Gaussian of width spread with weight |A|²/(spread √π).
        let p = gaussian_product(center, eps / 2f64.sqrt(), g.x_c, spread)?;
        let ik = gaussian_integral_ik(2 * l, p.x0, p.eps0_sq.sqrt())?;
        let v = g.amplitude.norm_sqr() / (eps * eps * PI) / (spread * PI.sqrt()) * p.prefactor * ik;
        return Ok(v.max(0.0).sqrt());
    }
    let weight = |x: f64| match kind {
        BasicNorm::DeltaWeighted => smooth_delta(x - center, eps),
        BasicNorm::StepWeighted => smooth_step(x - center, eps),
    };
    let lo = (g.x_c - 14.0 * spread).max(match kind {
        BasicNorm::DeltaWeighted => center - 14.0 * eps,
        BasicNorm::StepWeighted => center - 14.0 * eps,
    });
    let hi = match kind {
        BasicNorm::DeltaWeighted => (g.x_c + 14.0 * spread).min(center + 14.0 * eps),
        BasicNorm::StepWeighted => g.x_c + 14.0 * spread,
    };
    if lo >= hi {
        return Ok(0.0);
    }
    let f = |x: f64| {
        let w = weight(x);
        x.powi(2 * l as i32) * w * w * g.eval(x).norm_sqr()
    };
    let mut pts = vec![lo, hi];
    let panel = 0.5 * spread.min(eps.max(spread / 8.0));
    let mut x = lo;
    while x < hi {
        pts.push(x);
        x += panel;
    }
    for j in -8..=8 {
        let v = center + j as f64 * eps;
        if v > lo && v < hi {
            pts.push(v);
        }
    }
    let v = integrate_panels(f, &pts, 1e-16);
    Ok(v.max(0.0).sqrt())
}

/// Worst-case trajectory parameters entering the imperfection bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    /// Largest COM position reached.
    pub x_m: f64,
    /// Largest spread reached.
    pub eps_m: f64,
    /// Smallest deviation-to-spread ratio (x_L - x_c)/ε.
    pub y_m_min: f64,
    /// Largest value of the polynomial factor P.
    pub p_max: f64,
}

/// Polynomial factor P(x_L, ε, x_c) with y = (x_L - x_c)/ε, bounding
/// ∫_{x_L}^∞ x⁴|ψ|² dx by P·exp(-y²).
pub fn p_factor(x_l: f64, eps: f64, x_c: f64) -> f64 {
    let y = (x_l - x_c) / eps;
    let c = 1.0 / (4.0 * PI.sqrt());
    let first = (3.0 * eps.powi(4) + 12.0 * eps * eps * x_c * x_c + 4.0 * x_c.powi(4))
        / (y + (y * y + 4.0 / PI).sqrt());
    let second = y * (3.0 + 2.0 * y * y) * eps.powi(4)
        + 8.0 * (1.0 + y * y) * eps.powi(3) * x_c
        + 12.0 * y * eps * eps * x_c * x_c
        + 8.0 * eps * x_c.powi(3);
    c * (first + second)
}

impl TrajectorySummary {
    /// Summary from sampled (x_c, ε) pairs along a trajectory.
    pub fn from_samples(samples: &[(f64, f64)], x_l: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("no trajectory samples"));
        }
        let mut s = Self {
            x_m: f64::NEG_INFINITY,
            eps_m: 0.0,
            y_m_min: f64::INFINITY,
            p_max: 0.0,
        };
        for &(x, e) in samples {
            s.x_m = s.x_m.max(x);
            s.eps_m = s.eps_m.max(e);
            s.y_m_min = s.y_m_min.min((x_l - x) / e);
            s.p_max = s.p_max.max(p_factor(x_l, e, x));
        }
        Ok(s)
    }

    /// Summary from the energy box: |x_c| < √(2E/mω²), ε < √(4E/mω²).
    ///
    /// P is bounded by writing every term through d = x_L - x_c, which makes
    /// each term monotone in d, ε and |x_c|, and then inserting the box edges.
    pub fn from_energy(energy: f64, consts: &PhysicalConstants, x_l: f64) -> Result<Self> {
        let b = energy_param_bounds(energy, consts)?;
        let x_m = b.x_c_max;
        let eps_m = b.eps2_max.sqrt();
        let y_min = (x_l - x_m) / eps_m;
        let d = x_l + x_m;
        let c = 1.0 / (4.0 * PI.sqrt());
        let first = (3.0 * eps_m.powi(4) + 12.0 * eps_m * eps_m * x_m * x_m + 4.0 * x_m.powi(4))
            / (y_min.max(0.0) + (y_min * y_min + 4.0 / PI).sqrt());
        let second = 3.0 * d * eps_m.powi(3)
            + 2.0 * d.powi(3) * eps_m
            + 8.0 * eps_m.powi(3) * x_m
            + 8.0 * d * d * eps_m * x_m
            + 12.0 * d * eps_m * x_m * x_m
            + 8.0 * eps_m * x_m.powi(3);
        Ok(Self {
            x_m,
            eps_m,
            y_m_min: y_min,
            p_max: c * (first + second),
        })
    }
}

/// Bound (T/ħ)(½mω²)√P exp(-y²/2) on the deviation between evolution in
/// the double well and in the ideal harmonic trap over a time T.
pub fn imperfection_bound(s: &TrajectorySummary, x_l: f64, consts: &PhysicalConstants, t: f64) -> Result<BoundReport> {
    if !(s.y_m_min > 0.0) {
        return Err(invalid(format!("y_M_min = {} must be positive", s.y_m_min)));
    }
    if !(t >= 0.0) {
        return Err(invalid("duration must be nonnegative"));
    }
    let v = t.abs() / consts.hbar * 0.5 * consts.stiffness() * s.p_max.sqrt() * (-0.5 * s.y_m_min * s.y_m_min).exp();
    Ok(BoundReport::new(
        "imperfection",
        "(T/hbar)(m w^2/2) sqrt(P) exp(-y_M^2/2)",
        &[
            ("x_L", x_l),
            ("T", t),
            ("x_M", s.x_m),
            ("eps_M", s.eps_m),
            ("y_M_min", s.y_m_min),
            ("P_max", s.p_max),
        ],
        v,
    ))
}

/// Symmetric-splitting bound (1/12)(τ³/ħ³)(M1 + M2/2).
pub fn trotter_bound(m1_max: f64, m2_max: f64, tau: f64, consts: &PhysicalConstants) -> Result<BoundReport> {
    if !(m1_max >= 0.0 && m2_max >= 0.0) {
        return Err(invalid("commutator norms must be nonnegative"));
    }
    let v = (tau.abs() / consts.hbar).powi(3) / 12.0 * (m1_max + 0.5 * m2_max);
    Ok(BoundReport::new(
        "trotter",
        "(1/12)(tau/hbar)^3 (M1 + M2/2)",
        &[("M1", m1_max), ("M2", m2_max), ("tau", tau)],
        v,
    ))
}

/// Parameter box implied by conservation of the motional energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBox {
    /// Energy.
    pub energy: f64,
    /// |x_c| < √(2E/mω²).
    pub x_c_max: f64,
    /// |p_c| < √(2mE).
    pub p_c_max: f64,
    /// ε² > ħ²/(4mE).
    pub eps2_min: f64,
    /// ε² < 4E/(mω²).
    pub eps2_max: f64,
    /// |W| > ħ²/(8mE).
    pub w_min: f64,
    /// |W| < 2E/(mω²).
    pub w_max: f64,
}

impl EnergyBox {
    /// Lower bound (x_L - x_c,max)/ε_max of the deviation-to-spread ratio.
    pub fn dev_ratio_lower(&self, x_l: f64) -> f64 {
        (x_l - self.x_c_max) / self.eps2_max.sqrt()
    }
}

/// Energy box for a harmonic-trap wave packet of energy E.
pub fn energy_param_bounds(energy: f64, consts: &PhysicalConstants) -> Result<EnergyBox> {
    if !(energy > 0.0) {
        return Err(invalid("energy must be positive"));
    }
    let k = consts.stiffness();
    let m = consts.mass;
    let h = consts.hbar;
    Ok(EnergyBox {
        energy,
        x_c_max: (2.0 * energy / k).sqrt(),
        p_c_max: (2.0 * m * energy).sqrt(),
        eps2_min: h * h / (4.0 * m * energy),
        eps2_max: 4.0 * energy / k,
        w_min: h * h / (8.0 * m * energy),
        w_max: 2.0 * energy / k,
    })
}

/// Closed-form expansion and sequence bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionBound {
    /// Second-order Lamb-Dicke residual in terms of the transferred momentum.
    LdSecondOrder,
    /// First-order Lamb-Dicke residual in terms of the transferred momentum.
    LdFirstOrder,
    /// Ten-term truncation of the singly driven state, from β_c, β_s.
    TenTerm,
    /// Ten-term truncation of the half-mixed variant state.
    TenTermVariant,
    /// Ten-term truncation after the first driven step of a basic sequence.
    SeqStep1,
    /// Ten-term truncation after the second driven step.
    SeqStep2,
    /// Ten-term truncation after the third driven step.
    SeqStep3,
    /// Ten-term truncation after the fourth driven step.
    SeqStep4,
    /// Four exact rotations against the target exp(iQτ²).
    PropagatorReduction,
    /// Lamb-Dicke residual of one repetition of the basic sequence.
    LdStep,
}

impl ExpansionBound {
    /// All variants.
    pub const ALL: [ExpansionBound; 10] = [
        ExpansionBound::LdSecondOrder,
        ExpansionBound::LdFirstOrder,
        ExpansionBound::TenTerm,
        ExpansionBound::TenTermVariant,
        ExpansionBound::SeqStep1,
        ExpansionBound::SeqStep2,
        ExpansionBound::SeqStep3,
        ExpansionBound::SeqStep4,
        ExpansionBound::PropagatorReduction,
        ExpansionBound::LdStep,
    ];

    /// Identifier used in reports.
    pub fn id(self) -> &'static str {
        match self {
            ExpansionBound::LdSecondOrder => "ld_second_order",
            ExpansionBound::LdFirstOrder => "ld_first_order",
            ExpansionBound::TenTerm => "ten_term",
            ExpansionBound::TenTermVariant => "ten_term_variant",
            ExpansionBound::SeqStep1 => "seq_step1",
            ExpansionBound::SeqStep2 => "seq_step2",
            ExpansionBound::SeqStep3 => "seq_step3",
            ExpansionBound::SeqStep4 => "seq_step4",
            ExpansionBound::PropagatorReduction => "propagator_reduction",
            ExpansionBound::LdStep => "ld_step",
        }
    }

    /// The closed form, as text.
    pub fn formula(self) -> &'static str {
        match self {
            ExpansionBound::LdSecondOrder => {
                "|p_tr/hbar| dk^2 sqrt(sum_l C(2,l) (1/6)^l (1/24)^(2-l) |dk|^(2-l) I_(8-l))"
            }
            ExpansionBound::LdFirstOrder => "|p_tr/hbar| |dk| sqrt(sum_l C(2,l) (1/2)^l (1/6)^(2-l) |dk|^(2-l) I_(6-l))",
            ExpansionBound::TenTerm => {
                "sqrt(5/6144 bs^6 eps^6 dk^6 + |bc bs^5| eps^7 |dk|^7/(256 sqrt(pi)))"
            }
            ExpansionBound::TenTermVariant => {
                "sqrt(5/12288 bs^6 eps^6 dk^6 + |bc bs^5| eps^7 |dk|^7/(512 sqrt(pi)))"
            }
            ExpansionBound::SeqStep1 => "b^3 eps^3 |dk|^3 sqrt(5/6144 + eps|dk|/(256 sqrt(pi))), b = 2 W0 dt/sqrt(n)",
            ExpansionBound::SeqStep2 => "b^3 eps^3 |dk|^3 sqrt(5/12288 + eps|dk|/(512 sqrt(pi)))",
            ExpansionBound::SeqStep3 => "b^3 eps^3 |dk|^3 sqrt(245/1536 + (49/64) eps|dk|/sqrt(pi))",
            ExpansionBound::SeqStep4 => "b^3 eps^3 |dk|^3 sqrt(125/192 + (25/8) eps|dk|/sqrt(pi))",
            ExpansionBound::PropagatorReduction => "(5/6)|a|^3 + a^4/2 + a^6/48, a = 4 W0 dt/sqrt(n)",
            ExpansionBound::LdStep => "((2 W0 dt)^2/n) eps^3 |dk|^3 sqrt(15/288 + eps|dk|/(12 sqrt(pi)))",
        }
    }
}

/// Inputs of the expansion bounds; each formula reads the fields it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    /// Rabi frequency Ω0.
    pub omega0: f64,
    /// Total pulse duration δt.
    pub delta_t: f64,
    /// Repetition count n.
    pub n: usize,
    /// Wavenumber difference Δk.
    pub dk: f64,
    /// Spread ε0 of the wave packet.
    pub eps0: f64,
    /// β_c = Ω cos(½Δk x_c - π/4).
    pub beta_c: f64,
    /// β_s = Ω sin(½Δk x_c - π/4).
    pub beta_s: f64,
    /// Transferred momentum p_tr.
    pub p_tr: f64,
    /// ħ.
    pub hbar: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self {
            omega0: 0.0,
            delta_t: 0.0,
            n: 1,
            dk: 0.0,
            eps0: 1.0,
            beta_c: 0.0,
            beta_s: 0.0,
            p_tr: 0.0,
            hbar: 1.0,
        }
    }
}

/// I^LD_m(ε) = ∫|ψ|²|y|^m dy for a normalized Gaussian of spread ε.
pub fn ld_moment(m: usize, eps: f64) -> f64 {
    if m % 2 == 0 {
        double_factorial(m as i64 - 1) / 2f64.powi(m as i32).sqrt() * eps.powi(m as i32)
    } else {
        factorial((m - 1) / 2) / PI.sqrt() * eps.powi(m as i32)
    }
}

/// Evaluates one of the closed-form expansion bounds.
pub fn expansion_bound(which: ExpansionBound, p: &ExpansionParams) -> Result<BoundReport> {
    if p.omega0 < 0.0 || p.delta_t < 0.0 || p.eps0 < 0.0 || p.hbar <= 0.0 {
        return Err(invalid("omega0, delta_t and eps0 must be nonnegative and hbar positive"));
    }
    if p.n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let n = p.n as f64;
    let dk = p.dk.abs();
    let e = p.eps0;
    let sp = PI.sqrt();
    let b = 2.0 * p.omega0 * p.delta_t / n.sqrt();
    let seq = |c1: f64, c2: f64| b.powi(3) * e.powi(3) * dk.powi(3) * (c1 + c2 * e * dk / sp).sqrt();
    let value = match which {
        ExpansionBound::LdSecondOrder => {
            let s: f64 = (0..=2)
                .map(|l| {
                    binomial(2, l) * (1.0f64 / 6.0).powi(l as i32) * (1.0f64 / 24.0).powi(2 - l as i32)
                        * dk.powi(2 - l as i32)
                        * ld_moment(8 - l, e)
                })
                .sum();
            (p.p_tr / p.hbar).abs() * dk * dk * s.sqrt()
        }
        ExpansionBound::LdFirstOrder => {
            let s: f64 = (0..=2)
                .map(|l| {
                    binomial(2, l) * 0.5f64.powi(l as i32) * (1.0f64 / 6.0).powi(2 - l as i32)
                        * dk.powi(2 - l as i32)
                        * ld_moment(6 - l, e)
                })
                .sum();
            (p.p_tr / p.hbar).abs() * dk * s.sqrt()
        }
        ExpansionBound::TenTerm | ExpansionBound::TenTermVariant => {
            let (c1, c2) = if which == ExpansionBound::TenTerm {
                (5.0 / 6144.0, 1.0 / 256.0)
            } else {
                (5.0 / 12288.0, 1.0 / 512.0)
            };
            let bs = p.beta_s.abs();
            let bc = p.beta_c.abs();
            (c1 * bs.powi(6) * e.powi(6) * dk.powi(6) + c2 * bc * bs.powi(5) * e.powi(7) * dk.powi(7) / sp).sqrt()
        }
        ExpansionBound::SeqStep1 => seq(5.0 / 6144.0, 1.0 / 256.0),
        ExpansionBound::SeqStep2 => seq(5.0 / 12288.0, 1.0 / 512.0),
        ExpansionBound::SeqStep3 => seq(245.0 / 1536.0, 49.0 / 64.0),
        ExpansionBound::SeqStep4 => seq(125.0 / 192.0, 25.0 / 8.0),
        ExpansionBound::PropagatorReduction => {
            let a = 2.0 * b;
            5.0 / 6.0 * a.abs().powi(3) + 0.5 * a.powi(4) + a.powi(6) / 48.0
        }
        ExpansionBound::LdStep => {
            (2.0 * p.omega0 * p.delta_t).powi(2) / n * e.powi(3) * dk.powi(3) * (15.0 / 288.0 + e * dk / (12.0 * sp)).sqrt()
        }
    };
    Ok(BoundReport::new(
        which.id(),
        which.formula(),
        &[
            ("omega0", p.omega0),
            ("delta_t", p.delta_t),
            ("n", n),
            ("dk", p.dk),
            ("eps0", p.eps0),
            ("beta_c", p.beta_c),
            ("beta_s", p.beta_s),
            ("p_tr", p.p_tr),
            ("hbar", p.hbar),
        ],
        value,
    ))
}

/// Per-step values of the three error families of a full pulse.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BudgetFamilies {
    /// Step errors of one basic sequence: imperfections, splitting,
    /// selectivity and ten-term truncations.
    pub first_kind: Option<f64>,
    /// Reduction of the exact rotations to the target propagator.
    pub reduction: Option<f64>,
    /// Lamb-Dicke residual of one repetition.
    pub ld_step: Option<f64>,
}

/// n·first + n·reduction + n·ld_step; n·ld_step does not depend on n.
pub fn total_error_budget(f: &BudgetFamilies, n: usize) -> Result<BoundReport> {
    let first = f.first_kind.ok_or_else(|| invalid("missing first-kind step errors"))?;
    let red = f.reduction.ok_or_else(|| invalid("missing reduction errors"))?;
    let ld = f.ld_step.ok_or_else(|| invalid("missing Lamb-Dicke step errors"))?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if first < 0.0 || red < 0.0 || ld < 0.0 {
        return Err(invalid("family bounds must be nonnegative"));
    }
    let nf = n as f64;
    Ok(BoundReport::new(
        "total_error_budget",
        "n*first_kind + n*reduction + n*ld_step",
        &[("first_kind", first), ("reduction", red), ("ld_step", ld), ("n", nf)],
        nf * first + nf * red + nf * ld,
    ))
}
