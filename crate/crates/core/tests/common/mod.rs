//! Helpers shared by the integration tests.
#![allow(dead_code)]

use ssiss::grid_oracle::{Grid, SpinorGrid};
use ssiss::{GaussianSuperposition, GwpTerm, InternalLabel, PhysicalConstants};

/// Clenshaw-Curtis quadrature over unit panels of [a, b]. The library uses
/// double-exponential quadrature, so this is an independent route.
pub fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let panels = ((b - a).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            quadrature::clenshaw_curtis::integrate(&f, lo, lo + h, 1e-15).integral
        })
        .sum()
}

/// Ground-state packet of the default constants.
pub fn ground() -> GwpTerm {
    GwpTerm::coherent(0.0, 0.0, PhysicalConstants::default()).unwrap()
}

/// Samples a single term on |g0⟩.
pub fn on_grid(g: &GwpTerm, grid: Grid) -> SpinorGrid {
    SpinorGrid::sample(&GaussianSuperposition::single(InternalLabel::G0, g.clone()), grid, g.consts).unwrap()
}

/// Symmetric grid [-half, half) with the given point count and time step.
pub fn grid(half: f64, n: usize, dt: f64) -> Grid {
    Grid::new(-half, half, n, dt).unwrap()
}
