//! Expansions of non-Gaussian states into finite Gaussian superpositions:
//! Bessel and Taylor series of exp{iz sin(Δk x)}, the ten-term expansion of
//! a singly driven state, and Lamb-Dicke single-Gaussian reductions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::{expansion_bound, ExpansionBound, ExpansionParams};
use crate::error::{invalid, Result};
use crate::gwp_core::{GaussianSuperposition, GwpTerm, InternalLabel, C64};
use crate::pulses::ALPHA;
use crate::special::{bessel_j_range, bessel_tail_bound, binomial, factorial};

/// Gaussian superposition with a certified residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    /// The approximating superposition.
    pub approx: GaussianSuperposition,
    /// Upper bound on ‖exact - approx‖.
    pub residual_bound: f64,
    /// Number of Gaussian terms.
    pub n_terms: usize,
}

impl ExpansionResult {
    fn new(approx: GaussianSuperposition, residual_bound: f64) -> Self {
        let n_terms = approx.len();
        Self {
            approx,
            residual_bound,
            n_terms,
        }
    }
}

/// g multiplied by c·exp(i k (x - x_ref)), as a single term.
fn shifted(g: &GwpTerm, k: f64, x_ref: f64, c: C64) -> Result<GwpTerm> {
    let mut t = g.modulate(k, C64::new(0.0, 0.0))?;
    t.amplitude *= c * C64::from_polar(1.0, k * (g.x_c - x_ref));
    Ok(t)
}

/// Builds Σ_m coeff_m exp(i m dk (x - x_ref)) g on one internal state,
/// skipping zero coefficients.
fn harmonic_sum(
    g: &GwpTerm,
    coeffs: &BTreeMap<i64, C64>,
    dk: f64,
    x_ref: f64,
    label: InternalLabel,
    out: &mut GaussianSuperposition,
) -> Result<()> {
    for (&m, &c) in coeffs {
        if c != C64::new(0.0, 0.0) {
            out.push(label, shifted(g, m as f64 * dk, x_ref, c)?);
        }
    }
    Ok(())
}

/// exp{iz sin(Δk x)} g ≈ Σ_{|n| ≤ N} J_n(z) e^{inΔk x} g, with the residual
/// bounded by the tail Σ_{|n|>N} |J_n(z)| ≤ 2 Σ_{n>N} (|z|/2)^n/n!.
pub fn bessel_expand(g: &GwpTerm, z: f64, dk: f64, n_trunc: usize) -> Result<ExpansionResult> {
    if !z.is_finite() || !dk.is_finite() {
        return Err(invalid("z and dk must be finite"));
    }
    let mut coeffs = BTreeMap::new();
    if z == 0.0 {
        coeffs.insert(0, C64::new(1.0, 0.0));
    } else {
        let js = bessel_j_range(z, n_trunc);
        for (i, j) in js.iter().enumerate() {
            coeffs.insert(i as i64 - n_trunc as i64, C64::new(*j, 0.0));
        }
    }
    let mut out = GaussianSuperposition::default();
    harmonic_sum(g, &coeffs, dk, 0.0, InternalLabel::G0, &mut out)?;
    Ok(ExpansionResult::new(out, bessel_tail_bound(z, n_trunc) * g.amplitude.norm()))
}

/// Smallest Taylor order N with 2N + 1 > 2e|z| + 10.
pub fn default_taylor_order(z: f64) -> usize {
    let target = 2.0 * std::f64::consts::E * z.abs() + 10.0;
    (((target - 1.0) / 2.0).floor() as usize) + 1
}

/// exp{iz sin(Δk x)} g ≈ Σ_{j ≤ N} (iz sin Δk x)^j/j! g, regrouped into
/// plane-wave shifted terms; residual ≤ |z|^{N+1}/(N+1)!.
pub fn taylor_expand(g: &GwpTerm, z: f64, dk: f64, order: usize) -> Result<ExpansionResult> {
    let mut coeffs: BTreeMap<i64, C64> = BTreeMap::new();
    for j in 0..=order {
        // (iz sin u)^j / j! = (z/2)^j/j! Σ_r C(j,r) (-1)^{j-r} e^{i(2r-j)u}
        let pre = (0.5 * z).powi(j as i32) / factorial(j);
        for r in 0..=j {
            let sign = if (j - r) % 2 == 0 { 1.0 } else { -1.0 };
            *coeffs.entry(2 * r as i64 - j as i64).or_insert(C64::new(0.0, 0.0)) +=
                C64::new(pre * sign * binomial(j, r), 0.0);
        }
    }
    let mut out = GaussianSuperposition::default();
    harmonic_sum(g, &coeffs, dk, 0.0, InternalLabel::G0, &mut out)?;
    let rb = z.abs().powi(order as i32 + 1) / factorial(order + 1) * g.amplitude.norm();
    Ok(ExpansionResult::new(out, rb))
}

/// Which singly driven state the ten-term expansion approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TenTermVariant {
    /// cos(Ω cos θ) g |g0⟩ + sin(Ω cos θ) e^{i ksum x/2} g |e⟩.
    Driven,
    /// ½(1+i) g|g0⟩ + ½(1-i) cos(Ω cos θ) g|g0⟩ + ½(1+i) sin(Ω cos θ) e^{i ksum x/2} g|e⟩.
    HalfMixed,
}

impl TenTermVariant {
    /// Exact (g0, e) amplitudes of the state at x, with θ = ½Δk x - π/4.
    pub fn exact_amplitudes(self, g: &GwpTerm, omega_amp: f64, dk: f64, ksum: f64, x: f64) -> (C64, C64) {
        let a = omega_amp * (0.5 * dk * x - ALPHA).cos();
        let psi = g.eval(x);
        let carrier = C64::from_polar(1.0, 0.5 * ksum * x);
        let (cg, ce) = (a.cos(), a.sin());
        match self {
            TenTermVariant::Driven => (cg * psi, ce * carrier * psi),
            TenTermVariant::HalfMixed => {
                let p = C64::new(0.5, 0.5);
                let m = C64::new(0.5, -0.5);
                (p * psi + m * cg * psi, p * ce * carrier * psi)
            }
        }
    }
}

/// Ten-term expansion of the singly driven state around x_c0.
///
/// With u = ½Δk(x - x_c0), β_c = Ω cos(½Δk x_c0 - π/4), β_s = Ω sin(½Δk x_c0 - π/4)
/// and S0 = β_c - Ω cos θ = β_c(1 - cos u) + β_s sin u, the trigonometric
/// factors are expanded to second order in S0:
/// cos(β_c - S0) ≈ cos β_c (1 - S0²/2) + sin β_c S0 and
/// sin(β_c - S0) ≈ sin β_c (1 - S0²/2) - cos β_c S0.
/// S0 and S0² are trigonometric polynomials in u of degree 1 and 2, so
/// each internal state carries five plane-wave shifted copies of g.
pub fn ten_term_expansion(
    g: &GwpTerm,
    omega_amp: f64,
    dk: f64,
    ksum: f64,
    x_c0: f64,
    variant: TenTermVariant,
) -> Result<ExpansionResult> {
    let th0 = 0.5 * dk * x_c0 - ALPHA;
    let beta_c = omega_amp * th0.cos();
    let beta_s = omega_amp * th0.sin();
    // Fourier coefficients of S0 in e^{imu}.
    let mut s0 = [C64::new(0.0, 0.0); 5];
    s0[2] = C64::new(beta_c, 0.0);
    s0[3] = C64::new(-0.5 * beta_c, -0.5 * beta_s);
    s0[1] = C64::new(-0.5 * beta_c, 0.5 * beta_s);
    let mut s0sq = [C64::new(0.0, 0.0); 5];
    for i in 1..4 {
        for j in 1..4 {
            let m = i + j - 2;
            if m < 5 {
                s0sq[m] += s0[i] * s0[j];
            }
        }
    }
    let (sb, cb) = beta_c.sin_cos();
    let mut cg = BTreeMap::new();
    let mut ce = BTreeMap::new();
    for idx in 0..5 {
        let m = idx as i64 - 2;
        let delta = if m == 0 { 1.0 } else { 0.0 };
        let base = C64::new(delta, 0.0) - 0.5 * s0sq[idx];
        cg.insert(m, cb * base + sb * s0[idx]);
        ce.insert(m, sb * base - cb * s0[idx]);
    }
    if variant == TenTermVariant::HalfMixed {
        let p = C64::new(0.5, 0.5);
        let mm = C64::new(0.5, -0.5);
        for v in cg.values_mut() {
            *v *= mm;
        }
        *cg.get_mut(&0).expect("m = 0 present") += p;
        for v in ce.values_mut() {
            *v *= p;
        }
    }
    if omega_amp == 0.0 {
        ce.clear();
        cg.retain(|m, _| *m == 0);
    }
    let mut out = GaussianSuperposition::default();
    harmonic_sum(g, &cg, 0.5 * dk, x_c0, InternalLabel::G0, &mut out)?;
    // The |e⟩ part carries e^{i ksum x/2} = e^{i ksum (x - x_c0)/2} e^{i ksum x_c0/2}.
    let carrier = C64::from_polar(1.0, 0.5 * ksum * x_c0);
    for (&m, &c) in &ce {
        if c != C64::new(0.0, 0.0) {
            out.push(
                InternalLabel::E,
                shifted(g, 0.5 * m as f64 * dk + 0.5 * ksum, x_c0, c * carrier)?,
            );
        }
    }
    let which = match variant {
        TenTermVariant::Driven => ExpansionBound::TenTerm,
        TenTermVariant::HalfMixed => ExpansionBound::TenTermVariant,
    };
    let rb = expansion_bound(
        which,
        &ExpansionParams {
            dk,
            eps0: g.spread(),
            beta_c,
            beta_s,
            ..Default::default()
        },
    )?
    .bound_value
        * g.amplitude.norm();
    Ok(ExpansionResult::new(out, rb))
}

/// Truncation order of the Lamb-Dicke reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdOrder {
    /// sin u ≈ u, cos u ≈ 1.
    First,
    /// sin u ≈ u, cos u ≈ 1 - u²/2.
    Second,
}

/// Multiplies g by exp{i[s0 + s1 y + ½ s2 y²]} with y = x - x_c, which keeps
/// it a single Gaussian.
pub fn quadratic_phase_state(g: &GwpTerm, s0: f64, s1: f64, s2: f64) -> Result<GwpTerm> {
    let mut t = g.modulate(s1, C64::new(0.0, -0.5 * s2))?;
    t.global_phase += s0;
    Ok(t)
}

/// One repetition of the Lamb-Dicke reduction of exp{i[q_s sin(Δk y) + q_c cos(Δk y)]}
/// with strengths q/n. Returns the reduced term and the residual bound
/// written through p_tr/ħ = Δk max(|q_s|, |q_c|)/n.
pub fn lamb_dicke_state(g: &GwpTerm, q_s: f64, q_c: f64, n: usize, dk: f64, order: LdOrder) -> Result<(GwpTerm, f64)> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let nf = n as f64;
    let (qs, qc) = (q_s / nf, q_c / nf);
    let s2 = match order {
        LdOrder::First => 0.0,
        LdOrder::Second => -qc * dk * dk,
    };
    let t = quadratic_phase_state(g, qc, qs * dk, s2)?;
    let which = match order {
        LdOrder::First => ExpansionBound::LdFirstOrder,
        LdOrder::Second => ExpansionBound::LdSecondOrder,
    };
    let p_tr = g.consts.hbar * dk.abs() * qs.abs().max(qc.abs());
    let rb = expansion_bound(
        which,
        &ExpansionParams {
            dk,
            eps0: g.spread(),
            p_tr,
            hbar: g.consts.hbar,
            ..Default::default()
        },
    )?
    .bound_value
        * g.amplitude.norm();
    Ok((t, rb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gwp_core::PhysicalConstants;

    fn g0() -> GwpTerm {
        GwpTerm::coherent(0.0, 0.0, PhysicalConstants::default()).unwrap()
    }

    #[test]
    fn bessel_at_zero_is_identity() {
        let r = bessel_expand(&g0(), 0.0, 0.05, 8).unwrap();
        assert_eq!(r.n_terms, 1);
        assert_eq!(r.residual_bound, 0.0);
    }

    #[test]
    fn bessel_term_momenta() {
        let g = GwpTerm::coherent(0.3, 0.2, PhysicalConstants::default()).unwrap();
        let r = bessel_expand(&g, 0.5, 0.05, 3).unwrap();
        for (i, t) in r.approx.terms.iter().enumerate() {
            let n = i as f64 - 3.0;
            assert!((t.term.p_c - (0.2 + n * 0.05)).abs() < 1e-15);
        }
    }

    #[test]
    fn null_drive_keeps_input() {
        let r = ten_term_expansion(&g0(), 0.0, 0.05, 0.2, 0.0, TenTermVariant::Driven).unwrap();
        assert_eq!(r.n_terms, 1);
        assert_eq!(r.residual_bound, 0.0);
        assert!((r.approx.eval(InternalLabel::G0, 0.4) - g0().eval(0.4)).norm() < 1e-15);
    }

    #[test]
    fn ten_terms_split_between_labels() {
        let r = ten_term_expansion(&g0(), 0.1, 0.05, 0.2, 0.0, TenTermVariant::Driven).unwrap();
        assert!(r.n_terms <= 10);
        let ng = r.approx.terms.iter().filter(|t| t.label == InternalLabel::G0).count();
        let ne = r.approx.terms.iter().filter(|t| t.label == InternalLabel::E).count();
        assert_eq!((ng, ne), (5, 5));
    }

    #[test]
    fn ld_kick_matches_transferred_momentum() {
        let q = (2.0f64 * 0.5 * 0.2).powi(2);
        let (t, _) = lamb_dicke_state(&g0(), q, 0.0, 1, 0.05, LdOrder::Second).unwrap();
        assert!((t.p_c - 0.05 * q).abs() < 1e-15);
        let (same, rb) = lamb_dicke_state(&g0(), 0.0, 0.0, 3, 0.05, LdOrder::Second).unwrap();
        assert_eq!(rb, 0.0);
        assert!((same.eval(0.3) - g0().eval(0.3)).norm() < 1e-15);
    }

    #[test]
    fn taylor_order_rule() {
        let n = default_taylor_order(1.0);
        assert!(2 * n + 1 > (2.0 * std::f64::consts::E + 10.0) as usize);
        assert!(2 * (n - 1) + 1 <= (2.0 * std::f64::consts::E + 10.0).ceil() as usize);
    }
}
