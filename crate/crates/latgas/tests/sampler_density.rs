//! Large-lattice density behaviour of the restricted-ensemble sampler.
//!
//! At beta*Delta = 4.8 the subcritical-droplet population still dominates
//! the singleton gas, so the equilibrium density sits far above
//! e^{-beta Delta} but below the dilute-droplet (non-interacting polymer)
//! sum; the singleton asymptotic only emerges at larger beta. The test
//! pins the sampled 20x20 density inside that derived bracket and checks
//! the asymptotic direction.

use latgas::gibbs::{default_burn_in, default_thinning, MuRSampler};
use latgas::params::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Exact density of the two-site-truncated (singletons and dimers only)
/// restricted measure on the 4x4 torus at U=1, Delta=1.6, beta=3,
/// computed by full enumeration; free of wrap artifacts because no
/// allowed shape spans the torus.
const TWO_SITE_DENSITY: f64 = 0.012718;

/// Sum over every fixed polyomino of at most 8 cells of
/// size * exp(-beta (Delta size - U bonds)) at the same parameters: the
/// leading-order density of a non-interacting gas of subcritical
/// droplets, an upper envelope for the true density (exclusion between
/// droplets only reduces it).
const POLYMER_SUM_DENSITY: f64 = 0.082184;

fn mean_density(params: &ModelParams, l: u32, draws: u32, seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sampler = MuRSampler::new(params, l).unwrap();
    sampler.run(default_burn_in(l), &mut rng);
    let mut total = 0u64;
    for _ in 0..draws {
        sampler.run(default_thinning(l), &mut rng);
        total += sampler.config().particle_count() as u64;
    }
    total as f64 / draws as f64 / (l * l) as f64
}

#[test]
fn density_sits_between_two_site_gas_and_free_droplet_sum() {
    let p = ModelParams::standard(1.0, 1.6, 3.0, 2.0);
    let rho = mean_density(&p, 20, 100_000, 7);
    println!("20x20 density at beta*Delta=4.8: {rho}");
    assert!(
        rho > 2.0 * TWO_SITE_DENSITY,
        "droplet population missing: rho = {rho}"
    );
    assert!(
        rho < POLYMER_SUM_DENSITY,
        "density above the free-droplet envelope: rho = {rho}"
    );
}

#[test]
fn singleton_asymptotic_sets_in_as_beta_grows() {
    // rho / e^{-beta Delta} must decrease toward 1 as beta grows at
    // fixed Delta (droplet corrections die off exponentially).
    let p3 = ModelParams::standard(1.0, 1.6, 3.0, 2.0);
    let p6 = ModelParams::standard(1.0, 1.6, 6.0, 2.0);
    let r3 = mean_density(&p3, 20, 20_000, 11) / (-3.0f64 * 1.6).exp();
    let r6 = mean_density(&p6, 20, 20_000, 11) / (-6.0f64 * 1.6).exp();
    println!("rho/e^(-beta Delta): beta=3 -> {r3}, beta=6 -> {r6}");
    assert!(r3 > 2.0, "expected strong droplet enhancement at beta=3");
    assert!(r6 < r3 / 2.0, "enhancement must fade with beta");
    assert!(r6 > 0.9, "density cannot undershoot the singleton gas");
    assert!(r6 < 2.0, "beta=6 should be near the singleton asymptotic");
}
