//! Simulation and certification toolkit for spatially selective,
//! internal-state selective triggering pulses acting on one atom in a
//! harmonic or double-well trap.
//!
//! * [`gwp_core`]: Gaussian wave packets, exact quadratic evolution, overlaps.
//! * [`potentials`]: trap shapes and smooth step/delta regularizations.
//! * [`pulses`]: laser coupling, exact rotations and pulse sequences.
//! * [`grid_oracle`]: split-operator reference propagator.
//! * [`bounds`]: closed-form error bounds and basic norms.
//! * [`mgwp_expand`]: Bessel, ten-term and Lamb-Dicke expansions.
//! * [`experiments`]: scenario runner and report emitters behind the `ssiss` CLI.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod grid_oracle;
pub mod gwp_core;
pub mod mgwp_expand;
pub mod potentials;
pub mod pulses;
pub mod special;

pub use error::{Result, SsissError};
pub use gwp_core::{C64, GaussianSuperposition, GwpTerm, InternalLabel, PhysicalConstants, QuadraticHamiltonian};
