mod common;

use std::f64::consts::PI;

use common::{grid, ground, on_grid, quad};
use proptest::prelude::*;
use ssiss::grid_oracle::{GridHamiltonian, Observable};
use ssiss::gwp_core::{overlap_terms, poly_eval};
use ssiss::potentials::PotentialSpec;
use ssiss::{GwpTerm, PhysicalConstants, QuadraticHamiltonian, C64};

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

#[test]
fn spread_of_real_linewidths() {
    assert!((GwpTerm::new(0.0, 0.0, 0.5, 0.0, consts()).unwrap().spread() - 1.0).abs() < 1e-15);
    assert!((GwpTerm::new(0.0, 0.0, 1.0, 0.0, consts()).unwrap().spread() - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn spread_is_twice_the_density_variance() {
    // Frozen: the variance of |ψ|² for Δx² = 1, T0 = 2 is exactly 2.
    let g = GwpTerm::new(0.4, -0.3, 1.0, 2.0, consts()).unwrap();
    let n = quad(|x| g.eval(x).norm_sqr(), -30.0, 30.0);
    let mean = quad(|x| x * g.eval(x).norm_sqr(), -30.0, 30.0) / n;
    let var = quad(|x| (x - mean).powi(2) * g.eval(x).norm_sqr(), -30.0, 30.0) / n;
    assert!((n - 1.0).abs() < 1e-12);
    assert!((var - 2.0).abs() < 1e-10, "variance {var}");
    assert!((0.5 * g.spread().powi(2) - var).abs() < 1e-10);
}

#[test]
fn energy_plug_in_values() {
    assert!((ground().energy().unwrap() - 0.5).abs() < 1e-15);
    let shifted = GwpTerm::coherent(1.0, 0.0, consts()).unwrap();
    assert!((shifted.energy().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn energy_matches_grid_expectation() {
    // Frozen closed form: 0.245 + 0.045 + 0.625 + 0.125.
    let g = GwpTerm::new(0.3, 0.7, 1.0, 1.0, consts()).unwrap();
    assert!((g.energy().unwrap() - 1.04).abs() < 1e-14);
    let s = on_grid(&g, grid(24.0, 2048, 0.01));
    let h = GridHamiltonian::field_free(PotentialSpec::harmonic(consts()));
    let e = s.observe(&Observable::Energy(h));
    assert!((e - 1.04).abs() / 1.04 < 1e-8, "grid energy {e}");
}

#[test]
fn zero_time_and_half_period() {
    let g = GwpTerm::coherent(1.0, 0.0, consts()).unwrap();
    let same = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, 0.0).unwrap();
    for x in [-2.0, 0.0, 0.5, 3.0] {
        assert!((same.eval(x) - g.eval(x)).norm() < 1e-15);
    }
    let half = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, PI).unwrap();
    assert!((half.x_c + 1.0).abs() < 1e-14);
    assert!(half.p_c.abs() < 1e-14);
}

#[test]
fn overlap_of_separated_packets_matches_quadrature() {
    let g = ground();
    let eps = g.spread();
    let h = GwpTerm::coherent(6.0 * eps, 0.3, consts()).unwrap();
    let closed = overlap_terms(&g, &h);
    let re = quad(|x| (g.eval(x).conj() * h.eval(x)).re, -20.0, 30.0);
    let im = quad(|x| (g.eval(x).conj() * h.eval(x)).im, -20.0, 30.0);
    assert!((closed - C64::new(re, im)).norm() < 1e-10);
}

#[test]
fn chirp_modulation_matches_grid_moments() {
    let g = GwpTerm::new(0.0, 0.2, 0.5, 0.0, consts()).unwrap();
    let m = g.modulate(0.0, C64::new(0.0, 0.1)).unwrap();
    let s = on_grid(&m, grid(16.0, 2048, 0.01));
    let x2 = s.observe(&Observable::X2) - s.observe(&Observable::X).powi(2);
    assert!((x2 - 0.5 * m.spread().powi(2)).abs() < 1e-9);
    assert!((s.observe(&Observable::P) - m.p_c).abs() < 1e-9);
    // The chirp exp(-0.1i y²) leaves the density unchanged.
    for x in [-1.0, 0.0, 0.7] {
        assert!((m.eval(x) - g.eval(x) * C64::new(0.0, -0.1 * x * x).exp()).norm() < 1e-14);
    }
}

#[test]
fn second_derivative_polynomial_matches_finite_differences() {
    let g = GwpTerm::new(0.2, 0.6, 0.8, 0.5, consts()).unwrap();
    let q = g.derivative_polynomial(2).unwrap();
    let h = 1e-3;
    for x in [-1.0, -0.3, 0.4, 1.1] {
        let fd = (g.eval(x + h) - 2.0 * g.eval(x) + g.eval(x - h)) / (h * h);
        let exact = poly_eval(&q, x) * g.eval(x);
        assert!((fd - exact).norm() / exact.norm() < 1e-6);
    }
}

fn term() -> impl Strategy<Value = GwpTerm> {
    (-3.0..3.0f64, -3.0..3.0f64, 0.1..3.0f64, -2.0..2.0f64)
        .prop_map(|(x, p, d, t)| GwpTerm::new(x, p, d, t, PhysicalConstants::default()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn period_recurrence(g in term()) {
        let back = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, 2.0 * PI).unwrap();
        prop_assert!((back.x_c - g.x_c).abs() < 1e-12);
        prop_assert!((back.p_c - g.p_c).abs() < 1e-12);
        prop_assert!((back.dx2 - g.dx2).abs() < 1e-12);
        prop_assert!((back.t0_param - g.t0_param).abs() < 1e-12);
    }

    #[test]
    fn energy_is_conserved(g in term(), tau in -20.0..20.0f64) {
        let e0 = g.energy().unwrap();
        let e1 = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, tau).unwrap().energy().unwrap();
        prop_assert!((e1 - e0).abs() / e0 < 1e-12);
    }

    #[test]
    fn parameters_stay_in_the_energy_box(g in term(), tau in 0.0..6.3f64) {
        let c = g.consts;
        let e = g.energy().unwrap();
        let h = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, tau).unwrap();
        let tol = 1.0 + 1e-12;
        prop_assert!(h.x_c.abs() <= (2.0 * e / c.stiffness()).sqrt() * tol);
        prop_assert!(h.p_c.abs() <= (2.0 * c.mass * e).sqrt() * tol);
        let e2 = h.spread().powi(2);
        prop_assert!(e2 * tol >= c.hbar * c.hbar / (4.0 * c.mass * e));
        prop_assert!(e2 <= 4.0 * e / c.stiffness() * tol);
    }

    #[test]
    fn evolution_is_unitary(g in term(), tau in -20.0..20.0f64, free in any::<bool>()) {
        let ham = if free { QuadraticHamiltonian::Free } else { QuadraticHamiltonian::Harmonic };
        let h = g.evolve_quadratic(ham, tau).unwrap();
        prop_assert!((overlap_terms(&h, &h).re - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn overlap_agrees_with_quadrature(a in term(), b in term()) {
        let closed = overlap_terms(&a, &b);
        let re = quad(|x| (a.eval(x).conj() * b.eval(x)).re, -40.0, 40.0);
        let im = quad(|x| (a.eval(x).conj() * b.eval(x)).im, -40.0, 40.0);
        prop_assert!((closed - C64::new(re, im)).norm() < 1e-10, "{closed} vs {re} + {im}i");
    }
}
