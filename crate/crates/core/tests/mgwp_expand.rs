mod common;

use common::{grid, ground};
use proptest::prelude::*;
use ssiss::bounds::{expansion_bound, ExpansionBound, ExpansionParams};
use ssiss::grid_oracle::SpinorGrid;
use ssiss::mgwp_expand::{bessel_expand, lamb_dicke_state, ten_term_expansion, LdOrder, TenTermVariant};
use ssiss::special::{bessel_tail_bound, linear_fit};
use ssiss::{GaussianSuperposition, GwpTerm, InternalLabel, PhysicalConstants, C64};

fn max_phase_error(g: &GwpTerm, z: f64, dk: f64, n_trunc: usize) -> f64 {
    let r = bessel_expand(g, z, dk, n_trunc).unwrap();
    (0..4001)
        .map(|i| {
            let x = -8.0 + 16.0 * i as f64 / 4000.0;
            let exact = C64::new(0.0, z * (dk * x).sin()).exp() * g.eval(x);
            (r.approx.eval(InternalLabel::G0, x) - exact).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn bessel_reconstruction_is_pointwise_accurate() {
    let g = ground();
    let dk = 0.7;
    let at8 = max_phase_error(&g, 0.5, dk, 8);
    assert!(at8 <= bessel_tail_bound(0.5, 8));
    assert!(max_phase_error(&g, 0.5, dk, 9) < 1e-12);
}

fn exact_state(g: &GwpTerm, omega: f64, dk: f64, ksum: f64, v: TenTermVariant, s: &SpinorGrid) -> SpinorGrid {
    SpinorGrid::from_fn(s.grid, s.consts, |x| v.exact_amplitudes(g, omega, dk, ksum, x))
}

#[test]
fn ten_term_bound_dominates_grid_residual() {
    let g = ground();
    let gr = grid(12.0, 1024, 0.01);
    for variant in [TenTermVariant::Driven, TenTermVariant::HalfMixed] {
        for omega in [0.05, 0.1] {
            for dk in [0.02, 0.05] {
                let r = ten_term_expansion(&g, omega, dk, 0.2, 0.0, variant).unwrap();
                assert!(r.n_terms <= 10);
                let approx = SpinorGrid::sample(&r.approx, gr, g.consts).unwrap();
                let measured = approx.distance(&exact_state(&g, omega, dk, 0.2, variant, &approx)).unwrap();
                assert!(measured <= r.residual_bound, "{variant:?} Ω={omega} dk={dk}: {measured} > {}", r.residual_bound);
            }
        }
    }
}

#[test]
fn sequence_step_bound_dominates_first_step_residual() {
    let g = ground();
    let gr = grid(12.0, 1024, 0.01);
    for a in [0.02, 0.05] {
        for dk in [0.02, 0.05] {
            let omega = 2.0 * a;
            let r = ten_term_expansion(&g, omega, dk, 0.2, 0.0, TenTermVariant::Driven).unwrap();
            let approx = SpinorGrid::sample(&r.approx, gr, g.consts).unwrap();
            let measured = approx.distance(&exact_state(&g, omega, dk, 0.2, TenTermVariant::Driven, &approx)).unwrap();
            let p = ExpansionParams { omega0: a, delta_t: 1.0, n: 1, dk, eps0: g.spread(), ..Default::default() };
            let b = expansion_bound(ExpansionBound::SeqStep1, &p).unwrap().bound_value;
            assert!(measured <= b, "a={a} dk={dk}: {measured} > {b}");
        }
    }
}

#[test]
fn later_sequence_step_bounds_dominate_their_residuals() {
    // Before the third and fourth driven steps the accumulated rotation is
    // three and four times the single-step amplitude 2Ω0δt/√n.
    let g = ground();
    let gr = grid(12.0, 1024, 0.01);
    for a in [0.02, 0.05] {
        for dk in [0.02, 0.05] {
            let p = ExpansionParams { omega0: a, delta_t: 1.0, n: 1, dk, eps0: g.spread(), ..Default::default() };
            for (which, mult) in [(ExpansionBound::SeqStep3, 3.0), (ExpansionBound::SeqStep4, 4.0)] {
                let b = expansion_bound(which, &p).unwrap().bound_value;
                for variant in [TenTermVariant::Driven, TenTermVariant::HalfMixed] {
                    let omega = mult * 2.0 * a;
                    let r = ten_term_expansion(&g, omega, dk, 0.2, 0.0, variant).unwrap();
                    let approx = SpinorGrid::sample(&r.approx, gr, g.consts).unwrap();
                    let measured = approx.distance(&exact_state(&g, omega, dk, 0.2, variant, &approx)).unwrap();
                    assert!(measured <= b, "{which:?} {variant:?} a={a} dk={dk}: {measured} > {b}");
                }
            }
        }
    }
}

#[test]
fn lamb_dicke_bound_dominates_grid_residual() {
    let c = PhysicalConstants::default();
    let g = ground();
    let gr = grid(12.0, 1024, 0.01);
    let (qs, qc) = (0.04, 0.03);
    for dk in [0.02, 0.05, 0.1] {
        let (t, rb) = lamb_dicke_state(&g, qs, qc, 1, dk, LdOrder::Second).unwrap();
        let ld = SpinorGrid::sample(&GaussianSuperposition::single(InternalLabel::G0, t), gr, c).unwrap();
        let exact = SpinorGrid::from_fn(gr, c, |x| {
            let u = dk * (x - g.x_c);
            (C64::new(0.0, qs * u.sin() + qc * u.cos()).exp() * g.eval(x), C64::new(0.0, 0.0))
        });
        let measured = ld.distance(&exact).unwrap();
        assert!(measured <= rb, "dk={dk}: {measured} > {rb}");
        assert!(measured > 0.05 * rb, "dk={dk}: bound {rb} is far from {measured}");
    }
}

#[test]
fn lamb_dicke_bound_scales_with_dk_squared_and_eps_cubed() {
    let c = PhysicalConstants::default();
    let p_tr = 1e-3;
    let bound = |dk: f64, eps: f64| {
        let p = ExpansionParams { dk, eps0: eps, p_tr, hbar: c.hbar, ..Default::default() };
        expansion_bound(ExpansionBound::LdSecondOrder, &p).unwrap().bound_value
    };
    let dks: Vec<f64> = (0..6).map(|k| 1e-4 * 10f64.powf(k as f64 / 5.0)).collect();
    let fit = linear_fit(
        &dks.iter().map(|d| d.ln()).collect::<Vec<_>>(),
        &dks.iter().map(|d| bound(*d, 1.0).ln()).collect::<Vec<_>>(),
    )
    .unwrap();
    assert!((fit.slope - 2.0).abs() < 0.05, "dk slope {}", fit.slope);
    let eps: Vec<f64> = (0..6).map(|k| 0.1 * 10f64.powf(k as f64 / 5.0)).collect();
    let fit = linear_fit(
        &eps.iter().map(|e| e.ln()).collect::<Vec<_>>(),
        &eps.iter().map(|e| bound(1e-4, *e).ln()).collect::<Vec<_>>(),
    )
    .unwrap();
    assert!((fit.slope - 3.0).abs() < 0.05, "eps slope {}", fit.slope);
}

fn term() -> impl Strategy<Value = GwpTerm> {
    (-2.0..2.0f64, -1.0..1.0f64, 0.2..2.0f64, -1.0..1.0f64)
        .prop_map(|(x, p, d, t)| GwpTerm::new(x, p, d, t, PhysicalConstants::default()).unwrap())
}

proptest! {
    #[test]
    fn bessel_residual_shrinks_with_truncation(z in -4.0..4.0f64) {
        let g = ground();
        let mut last = f64::INFINITY;
        for n in 0..(z.abs() as usize + 20) {
            let r = bessel_expand(&g, z, 0.05, n).unwrap().residual_bound;
            prop_assert!(r <= last);
            // The true tail at |z| = 5, n = 20 is about 7.6e-12, so the rule is checked for |z| <= 4.
            if n as f64 >= z.abs() + 15.0 {
                prop_assert!(r < 1e-12);
            }
            last = r;
        }
    }

    #[test]
    fn lamb_dicke_steps_compose(g in term(), qs in -0.2..0.2f64, qc in -0.2..0.2f64, n in 1usize..40, dk in 0.01..0.2f64) {
        let (once, _) = lamb_dicke_state(&g, qs, qc, 1, dk, LdOrder::Second).unwrap();
        let mut t = g.clone();
        for _ in 0..n {
            t = lamb_dicke_state(&t, qs, qc, n, dk, LdOrder::Second).unwrap().0;
        }
        prop_assert!((t.x_c - once.x_c).abs() < 1e-12);
        prop_assert!((t.p_c - once.p_c).abs() < 1e-12);
        prop_assert!((t.dx2 - once.dx2).abs() < 1e-12);
        prop_assert!((t.t0_param - once.t0_param).abs() < 1e-12);
    }

    #[test]
    fn null_lamb_dicke_step_is_identity(g in term(), n in 1usize..10) {
        let (t, rb) = lamb_dicke_state(&g, 0.0, 0.0, n, 0.05, LdOrder::First).unwrap();
        prop_assert_eq!(rb, 0.0);
        prop_assert!((t.eval(0.3) - g.eval(0.3)).norm() < 1e-14);
    }
}
