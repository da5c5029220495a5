mod common;

use std::f64::consts::PI;

use common::{grid, ground, on_grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssiss::grid_oracle::{commutator_norm, evolve, CommutatorKind, GridHamiltonian, Observable, SpinorGrid};
use ssiss::potentials::PotentialSpec;
use ssiss::pulses::{DrivePhase, PhamdownBeams};
use ssiss::{GaussianSuperposition, GwpTerm, InternalLabel, PhysicalConstants, QuadraticHamiltonian, C64};

fn c() -> PhysicalConstants {
    PhysicalConstants::default()
}

#[test]
fn cancelling_terms_sample_to_zero() {
    let g = ground();
    let mut s = GaussianSuperposition::single(InternalLabel::G0, g.clone());
    s.push(InternalLabel::G0, g.with_amplitude(C64::new(-1.0, 0.0)));
    let on = SpinorGrid::sample(&s, grid(12.0, 512, 0.01), c()).unwrap();
    assert!(on.norm_sqr() < 1e-12);
}

#[test]
fn random_superposition_norm_matches_overlaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut s = GaussianSuperposition::default();
    for _ in 0..5 {
        let t = GwpTerm::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.3..1.0),
            rng.gen_range(-0.5..0.5),
            c(),
        )
        .unwrap()
        .with_amplitude(C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let label = if rng.gen_bool(0.5) { InternalLabel::G0 } else { InternalLabel::E };
        s.push(label, t);
    }
    let on = SpinorGrid::sample(&s, grid(16.0, 2048, 0.01), c()).unwrap();
    assert!((on.norm_sqr() - s.norm_sqr()).abs() < 1e-9);
}

#[test]
fn free_spreading_follows_the_linewidth_law() {
    let g = GwpTerm::new(0.0, 0.0, 0.5, 0.0, c()).unwrap();
    let s = on_grid(&g, grid(20.0, 2048, 0.005));
    let t = 2.0;
    let out = evolve(&s, &GridHamiltonian::field_free(PotentialSpec::free(c())), t).unwrap();
    let var = out.observe(&Observable::X2) - out.observe(&Observable::X).powi(2);
    // W(t) = W0 + iħt/(2m), so Var = |W|²/Δx² = (0.25 + 1)/0.5.
    assert!((var - 2.5).abs() < 1e-8, "variance {var}");
    let analytic = g.evolve_quadratic(QuadraticHamiltonian::Free, t).unwrap();
    assert!((var - 0.5 * analytic.spread().powi(2)).abs() < 1e-8);
}

#[test]
fn displaced_energy_matches_closed_form() {
    let g = GwpTerm::coherent(1.0, 0.0, c()).unwrap();
    let s = on_grid(&g, grid(14.0, 1024, 0.01));
    let h = GridHamiltonian::field_free(PotentialSpec::harmonic(c()));
    assert!((s.observe(&Observable::Energy(h)) - g.energy().unwrap()).abs() < 1e-8);
}

fn recurrence_distance(dt: f64, n: usize) -> (f64, SpinorGrid) {
    let g = GwpTerm::coherent(2.0, 0.5, c()).unwrap();
    let s = on_grid(&g, grid(16.0, n, dt));
    let out = evolve(&s, &GridHamiltonian::field_free(PotentialSpec::harmonic(c())), 2.0 * PI).unwrap();
    let want = on_grid(&g.evolve_quadratic(QuadraticHamiltonian::Harmonic, 2.0 * PI).unwrap(), s.grid);
    (1.0 - want.inner(&out).unwrap().norm_sqr(), out)
}

#[test]
fn splitting_converges_at_second_order() {
    let (coarse, _) = recurrence_distance(0.1, 512);
    let (fine, _) = recurrence_distance(0.05, 512);
    assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
}

#[test]
fn doubling_the_mesh_leaves_observables_unchanged() {
    let (_, a) = recurrence_distance(0.01, 512);
    let (_, b) = recurrence_distance(0.01, 1024);
    for o in [Observable::X, Observable::P, Observable::X2, Observable::P2, Observable::Norm] {
        assert!((a.observe(&o) - b.observe(&o)).abs() < 1e-8);
    }
    assert!(a.boundary_ratio() < 1e-8);
}

#[test]
fn commutator_norms_do_not_depend_on_the_phase() {
    let s = on_grid(&ground(), grid(12.0, 512, 0.01));
    let pot = PotentialSpec::harmonic(c());
    let b = PhamdownBeams::new(0.5, 0.05, 0.2).unwrap();
    for which in [CommutatorKind::M1, CommutatorKind::M2] {
        let base = commutator_norm(&s, which, &pot, &b, DrivePhase::Zero);
        assert!(base.is_finite() && base > 0.0);
        for g in DrivePhase::ALL {
            let v = commutator_norm(&s, which, &pot, &b, g);
            assert!((v - base).abs() <= 1e-8 * base, "{which:?} {g:?}: {v} vs {base}");
        }
    }
}
