mod common;

use std::f64::consts::PI;

use common::{ground, quad};
use proptest::prelude::*;
use ssiss::bounds::{
    basic_norm, energy_param_bounds, erfc_tail_bound, expansion_bound, gaussian_integral_ik, imperfection_bound,
    total_error_budget, trotter_bound, BasicNorm, BudgetFamilies, ExpansionBound, ExpansionParams, TrajectorySummary,
};
use ssiss::potentials::smooth_step;
use ssiss::{GwpTerm, PhysicalConstants};

fn c() -> PhysicalConstants {
    PhysicalConstants::default()
}

#[test]
fn gaussian_moments_against_frozen_quadrature() {
    // Frozen from 40-digit quadrature.
    let i5 = gaussian_integral_ik(5, 0.7, 1.3).unwrap();
    assert!((i5 - 24.340731644928671).abs() / 24.34 < 1e-10);
    let i10 = gaussian_integral_ik(10, -1.3, 0.9).unwrap();
    assert!((i10 - 2367.3233116557156).abs() / 2367.3 < 1e-10);
    assert!((gaussian_integral_ik(0, 0.4, 1.3).unwrap() - 1.3 * PI.sqrt()).abs() < 1e-14);
    let i2 = gaussian_integral_ik(2, 0.4, 1.3).unwrap();
    assert!((i2 - 1.3 * PI.sqrt() * (0.16 + 0.845)).abs() < 1e-13);
}

#[test]
fn tail_bound_against_frozen_tail() {
    let b = erfc_tail_bound(1.0).unwrap();
    assert!((b - 0.14669838371217808).abs() < 1e-15);
    assert!(b >= 0.13940279264033099);
    for y in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let exact = quad(|t| (-t * t).exp(), y, y + 12.0);
        assert!(erfc_tail_bound(y).unwrap() >= exact * (1.0 - 1e-13), "y = {y}");
    }
}

#[test]
fn delta_weighted_norm_peaks_at_the_center() {
    let g = ground();
    let eps = 0.3;
    let at = basic_norm(BasicNorm::DeltaWeighted, 0, &g, 0.0, eps).unwrap();
    for c0 in [-0.4, -0.1, 0.2, 0.5] {
        assert!(basic_norm(BasicNorm::DeltaWeighted, 0, &g, c0, eps).unwrap() < at);
    }
    let far = basic_norm(BasicNorm::DeltaWeighted, 0, &g, 10.0 * g.spread(), eps).unwrap();
    assert!(far < 1e-15 * at);
}

#[test]
fn step_weighted_norm_matches_a_dense_riemann_sum() {
    let g = GwpTerm::new(0.3, 0.5, 0.7, 0.4, c()).unwrap();
    let (center, eps) = (0.8, 0.25);
    let q = basic_norm(BasicNorm::StepWeighted, 2, &g, center, eps).unwrap();
    let n = 1_000_000;
    let (a, b) = (-15.0, 15.0);
    let h = (b - a) / n as f64;
    let s: f64 = (0..n)
        .map(|i| {
            let x = a + (i as f64 + 0.5) * h;
            let w = smooth_step(x - center, eps);
            x.powi(4) * w * w * g.eval(x).norm_sqr()
        })
        .sum::<f64>()
        * h;
    assert!((q - s.sqrt()).abs() < 1e-9, "{q} vs {}", s.sqrt());
}

#[test]
fn imperfection_bound_frozen_and_limits() {
    let s = TrajectorySummary::from_samples(&[(0.0, 1.0)], 6.0).unwrap();
    let b = imperfection_bound(&s, 6.0, &c(), 2.0 * PI).unwrap().bound_value;
    assert!((b - 3.8129187217149206e-7).abs() / b < 1e-12);
    let far = TrajectorySummary::from_samples(&[(0.0, 1.0)], 40.0).unwrap();
    assert!(imperfection_bound(&far, 40.0, &c(), 2.0 * PI).unwrap().bound_value < 1e-300);
    // Exponent algebra between y = 3 and y = 6 at fixed P.
    let mut a = s;
    a.y_m_min = 3.0;
    let mut d = s;
    d.y_m_min = 6.0;
    let ratio = imperfection_bound(&d, 6.0, &c(), 1.0).unwrap().bound_value
        / imperfection_bound(&a, 6.0, &c(), 1.0).unwrap().bound_value;
    assert!((ratio - (-(36.0f64 - 9.0) / 2.0).exp()).abs() / ratio < 1e-12);
}

#[test]
fn imperfection_decay_is_gaussian_in_the_ratio() {
    let (mut y2, mut lb) = (Vec::new(), Vec::new());
    for k in 3..=8 {
        let x_l = k as f64;
        let s = TrajectorySummary::from_samples(&[(0.0, 1.0)], x_l).unwrap();
        y2.push(x_l * x_l);
        // The polynomial factor √P grows like y^{3/2}; the exponential factor alone decays with slope -1/2.
        lb.push((imperfection_bound(&s, x_l, &c(), 1.0).unwrap().bound_value / s.p_max.sqrt()).ln());
    }
    let fit = ssiss::special::linear_fit(&y2, &lb).unwrap();
    assert!(fit.r_squared > 0.999);
    assert!((fit.slope + 0.5).abs() < 1e-12, "slope {}", fit.slope);
}

#[test]
fn trotter_bound_limits() {
    assert_eq!(trotter_bound(1.0, 2.0, 0.0, &c()).unwrap().bound_value, 0.0);
}

#[test]
fn ground_state_energy_box() {
    let b = energy_param_bounds(0.5, &c()).unwrap();
    assert!((b.x_c_max - 1.0).abs() < 1e-15 && (b.p_c_max - 1.0).abs() < 1e-15);
    assert!((b.eps2_min - 0.5).abs() < 1e-15 && (b.eps2_max - 2.0).abs() < 1e-15);
    assert!((b.dev_ratio_lower(6.0) - 5.0 / 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn second_order_ld_bound_frozen() {
    // Frozen from 40-digit quadrature of the moment integrals.
    let q = 0.04;
    let b = expansion_bound(
        ExpansionBound::LdSecondOrder,
        &ExpansionParams { dk: 0.05, eps0: 1.0, p_tr: 0.05 * q, ..Default::default() },
    )
    .unwrap()
    .bound_value;
    assert!((b - 1.1668612421545565e-6).abs() / b < 1e-12);
}

#[test]
fn budget_sums_families() {
    let zero = BudgetFamilies { first_kind: Some(0.0), reduction: Some(0.0), ld_step: Some(0.0) };
    assert_eq!(total_error_budget(&zero, 7).unwrap().bound_value, 0.0);
    let f = BudgetFamilies { first_kind: Some(1e-4), reduction: Some(2e-4), ld_step: Some(3e-4) };
    assert!((total_error_budget(&f, 10).unwrap().bound_value - 6e-3).abs() < 1e-15);
}

proptest! {
    #[test]
    fn moments_match_quadrature(k in 0usize..=10, x0 in -2.0..2.0f64, eps in 0.3..2.0f64) {
        let closed = gaussian_integral_ik(k, x0, eps).unwrap();
        let num = quad(|x| x.powi(k as i32) * (-(x - x0).powi(2) / (eps * eps)).exp(), x0 - 14.0 * eps, x0 + 14.0 * eps);
        prop_assert!((closed - num).abs() <= 1e-10 * num.abs().max(1e-3 * eps.powi(k as i32)));
    }

    #[test]
    fn bounds_are_deterministic(omega0 in 0.0..2.0f64, dt in 0.0..0.5f64, n in 1usize..64, dk in 0.0..0.5f64) {
        let p = ExpansionParams { omega0, delta_t: dt, n, dk, eps0: 1.0, ..Default::default() };
        for which in ExpansionBound::ALL {
            let a = expansion_bound(which, &p).unwrap();
            let b = expansion_bound(which, &p).unwrap();
            prop_assert_eq!(a.bound_value.to_bits(), b.bound_value.to_bits());
            prop_assert_eq!(a.inputs_hash(), b.inputs_hash());
            prop_assert!(a.bound_value >= 0.0);
        }
    }

    #[test]
    fn trotter_bound_halves_by_eight(m1 in 0.0..10.0f64, m2 in 0.0..10.0f64, tau in 1e-3..1.0f64) {
        let full = trotter_bound(m1, m2, tau, &c()).unwrap().bound_value;
        let half = trotter_bound(m1, m2, 0.5 * tau, &c()).unwrap().bound_value;
        prop_assert!((full - 8.0 * half).abs() <= 1e-14 * full.max(1e-300));
    }
}
