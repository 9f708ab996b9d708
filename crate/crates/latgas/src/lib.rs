//! Kawasaki lattice-gas nucleation toolkit.
//!
//! A library for simulating and analysing homogeneous nucleation in the
//! two-dimensional Kawasaki lattice gas at low temperature:
//!
//! - [`params`] — model constants and every derived scalar (critical droplet
//!   size, energy barrier, quasi-square resistances).
//! - [`lattice`] — the periodic occupancy configuration with stable particle
//!   identities, exact incremental energy, and snapshot serialization.
//! - [`kmc`] — exact event-driven (rejection-free) continuous-time dynamics
//!   with conservative particle-exchange Metropolis rates.
//! - [`geometry`] — droplet observables: clusters, quasi-squares, bounding
//!   rectangles, free/trapped/sleeping particles, thickening, cloud merging.
//! - [`gibbs`] — exact measures on tiny lattices and the restricted-ensemble
//!   sampler used to draw physical initial conditions.
//! - [`toymodel`] — the birth-death caricature of droplet growth with exact
//!   absorption solvers and a Monte Carlo runner for the aggregated arrival
//!   process.
//! - [`harness`] — batch nucleation studies: replica orchestration, exit
//!   classification, trajectory-tube detection, cloud histories, scaling
//!   reports, and the record/plan file formats.
//!
//! The `latgas` binary exposes the same functionality as a thin subcommand
//! CLI; the `examples/` directory demonstrates each capability as a runnable
//! program.

pub mod error;
pub mod geometry;
pub mod gibbs;
pub mod harness;
pub mod kmc;
pub mod lattice;
pub mod params;
pub mod toymodel;

pub use error::{Error, Result};
