//! Exact Gibbs measures on tiny lattices (by full enumeration) and the
//! Metropolis birth/death sampler for the restricted ensemble used as the
//! physical initial law.
//!
//! Energies follow the lattice convention `H = -U * bonds`; grand modes
//! weight a configuration by `exp(-beta (H + Delta |eta|))`, the canonical
//! mode by `exp(-beta H)` on the fixed-particle-number slice, and the
//! restricted mode additionally conditions on every cluster being
//! subcritical (volume at most `ell_c (ell_c - 1) + 2`).

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Site};
use crate::params::{derive, DerivedParams, ModelParams};

/// Enumeration bound: full occupancy scans are limited to `L^2 <= 24`.
pub const MAX_ENUMERATION_CELLS: u32 = 24;

/// Default burn-in, in whole-lattice sweeps (`L^2` proposals each).
pub const DEFAULT_BURN_IN_SWEEPS: u32 = 10;
/// Default thinning between draws, in whole-lattice sweeps.
pub const DEFAULT_THINNING_SWEEPS: u32 = 1;

/// Default burn-in for an `L x L` sampler, in proposals.
pub fn default_burn_in(l: u32) -> u64 {
    DEFAULT_BURN_IN_SWEEPS as u64 * l as u64 * l as u64
}

/// Default thinning for an `L x L` sampler, in proposals.
pub fn default_thinning(l: u32) -> u64 {
    DEFAULT_THINNING_SWEEPS as u64 * l as u64 * l as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureMode {
    /// `exp(-beta H)` on configurations with exactly `n` particles.
    Canonical { n: u32 },
    /// `exp(-beta (H + Delta |eta|))` on all occupancies.
    Grand,
    /// Grand-canonical conditioned on the subcritical set.
    GrandRestricted,
}

impl std::str::FromStr for MeasureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<MeasureMode> {
        if let Some(n) = s.strip_prefix("canonical=") {
            let n: u32 = n
                .parse()
                .map_err(|_| Error::Param(format!("bad particle count in mode `{s}`")))?;
            return Ok(MeasureMode::Canonical { n });
        }
        match s {
            "grand" => Ok(MeasureMode::Grand),
            "restricted" => Ok(MeasureMode::GrandRestricted),
            other => Err(Error::Param(format!(
                "unknown measure mode `{other}` (grand | restricted | canonical=N)"
            ))),
        }
    }
}

/// A fully enumerated measure over site-occupancy bitmasks (bit `y*L + x`
/// set = site occupied). Excluded configurations carry weight zero.
#[derive(Debug, Clone)]
pub struct ExactMeasure {
    pub l: u32,
    pub mode: MeasureMode,
    pub weights: Vec<f64>,
    pub partition: f64,
}

impl ExactMeasure {
    pub fn prob(&self, mask: u32) -> f64 {
        self.weights[mask as usize] / self.partition
    }

    /// Expected particle number per site.
    pub fn density(&self) -> f64 {
        let mut mean_n = 0.0;
        for (mask, w) in self.weights.iter().enumerate() {
            mean_n += w * (mask as u32).count_ones() as f64;
        }
        mean_n / self.partition / (self.l * self.l) as f64
    }

    /// Total-variation distance to an empirical law given as per-mask
    /// sample weights (counts or sojourn times).
    pub fn tv_distance(&self, empirical: &[f64]) -> f64 {
        assert_eq!(empirical.len(), self.weights.len());
        let total: f64 = empirical.iter().sum();
        assert!(total > 0.0, "empty empirical law");
        let mut tv = 0.0;
        for (mask, w) in self.weights.iter().enumerate() {
            tv += (w / self.partition - empirical[mask] / total).abs();
        }
        tv / 2.0
    }
}

/// Number of nearest-neighbour bonds of an occupancy mask, counting the
/// `+x` and `+y` lattice edges of every site (so the doubled edges of the
/// 2-torus are honoured, matching the dynamic lattice).
pub fn mask_bonds(mask: u32, l: u32) -> u32 {
    let li = l as i32;
    let mut bonds = 0;
    for y in 0..li {
        for x in 0..li {
            if mask & bit(x, y, l) == 0 {
                continue;
            }
            if mask & bit((x + 1) % li, y, l) != 0 {
                bonds += 1;
            }
            if mask & bit(x, (y + 1) % li, l) != 0 {
                bonds += 1;
            }
        }
    }
    bonds
}

fn bit(x: i32, y: i32, l: u32) -> u32 {
    1u32 << (y as u32 * l + x as u32)
}

/// True when every connected occupied component of the mask has volume at
/// most `max_volume` (singletons trivially comply).
pub fn mask_in_r(mask: u32, l: u32, max_volume: u32) -> bool {
    let cells = l * l;
    let mut seen = 0u32;
    for start in 0..cells {
        let b = 1u32 << start;
        if mask & b == 0 || seen & b != 0 {
            continue;
        }
        // Flood fill this component.
        let mut comp = b;
        let mut frontier = vec![start];
        while let Some(i) = frontier.pop() {
            let (x, y) = ((i % l) as i32, (i / l) as i32);
            let li = l as i32;
            for (nx, ny) in [
                ((x + 1) % li, y),
                ((x - 1).rem_euclid(li), y),
                (x, (y + 1) % li),
                (x, (y - 1).rem_euclid(li)),
            ] {
                let nb = bit(nx, ny, l);
                if mask & nb != 0 && comp & nb == 0 {
                    comp |= nb;
                    frontier.push((ny as u32 * l + nx as u32) as u32);
                }
            }
        }
        if comp.count_ones() > max_volume {
            return false;
        }
        seen |= comp;
    }
    true
}

/// Enumerates the exact measure on the `L x L` torus. Restricted mode
/// derives the subcritical volume bound from `params` (which must then be
/// in the metastable regime); the other modes use only `u`, `delta`,
/// `beta`.
pub fn enumerate_measure(l: u32, mode: MeasureMode, params: &ModelParams) -> Result<ExactMeasure> {
    let cells = l * l;
    if cells > MAX_ENUMERATION_CELLS {
        return Err(Error::Capacity(format!(
            "enumeration needs L^2 <= {MAX_ENUMERATION_CELLS}, got {cells}"
        )));
    }
    let max_volume = match mode {
        MeasureMode::GrandRestricted => Some(derive(params)?.max_subcritical_volume()),
        _ => None,
    };
    let states = 1u64 << cells;
    let mut weights = vec![0.0; states as usize];
    let mut partition = 0.0;
    for mask in 0..states {
        let mask = mask as u32;
        let n = mask.count_ones();
        if let MeasureMode::Canonical { n: want } = mode {
            if n != want {
                continue;
            }
        }
        if let Some(maxv) = max_volume {
            if !mask_in_r(mask, l, maxv) {
                continue;
            }
        }
        let h = -params.u * mask_bonds(mask, l) as f64;
        let exponent = match mode {
            MeasureMode::Canonical { .. } => -params.beta * h,
            _ => -params.beta * (h + params.delta * n as f64),
        };
        let w = exponent.exp();
        weights[mask as usize] = w;
        partition += w;
    }
    if partition <= 0.0 {
        return Err(Error::Param("measure has empty support".into()));
    }
    Ok(ExactMeasure {
        l,
        mode,
        weights,
        partition,
    })
}

/// Metropolis acceptance probability for toggling a site with `n_nb`
/// occupied neighbours: `min(1, exp(-beta (dH + Delta d|eta|)))`.
pub fn toggle_acceptance(u: f64, delta: f64, beta: f64, occupied_now: bool, n_nb: u32) -> f64 {
    let exponent = if occupied_now {
        // Death: dH = +U n, d|eta| = -1.
        -beta * (u * n_nb as f64 - delta)
    } else {
        // Birth: dH = -U n, d|eta| = +1.
        -beta * (delta - u * n_nb as f64)
    };
    exponent.exp().min(1.0)
}

/// Markov-chain sampler for the restricted ensemble: uniformly random
/// single-site birth/death proposals, Metropolis acceptance, and rejection
/// of any birth that would create a supercritical cluster. Reversible with
/// respect to the restricted measure and irreducible on it (deletions
/// never leave the subcritical set and reach the empty configuration).
pub struct MuRSampler {
    config: Configuration,
    u: f64,
    delta: f64,
    beta: f64,
    max_volume: u32,
    proposals: u64,
    accepted: u64,
}

impl MuRSampler {
    /// Starts from the empty configuration. Requires the metastable regime.
    /// Physical runs should use `L >= 2 ell_c` (the derived domain side
    /// already guarantees this); smaller tori are accepted so that the
    /// sampler can be validated against full enumeration on tiny lattices.
    pub fn new(params: &ModelParams, l: u32) -> Result<MuRSampler> {
        params.validate()?;
        let derived: DerivedParams = derive(params)?;
        Ok(MuRSampler {
            config: Configuration::empty(l)?,
            u: params.u,
            delta: params.delta,
            beta: params.beta,
            max_volume: derived.max_subcritical_volume(),
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    /// One birth/death proposal.
    pub fn propose<R: Rng>(&mut self, rng: &mut R) {
        let l = self.config.side();
        let x = rng.random_range(0..l as i32);
        let y = rng.random_range(0..l as i32);
        let site = Site::new(x, y);
        self.proposals += 1;
        let occupied = self.config.occupied(site);
        let n_nb = self.config.occupied_neighbor_count(site);
        let acc = toggle_acceptance(self.u, self.delta, self.beta, occupied, n_nb);
        if rng.random::<f64>() >= acc {
            return;
        }
        if occupied {
            self.config.remove_particle(site).expect("occupied site");
            self.accepted += 1;
        } else {
            // A birth may merge neighbouring clusters; reject it if the
            // resulting component leaves the subcritical set.
            self.config.add_particle(site).expect("empty site");
            let vol =
                crate::kmc::component_volume_capped(&self.config, site, self.max_volume + 1);
            if vol > self.max_volume {
                self.config.remove_particle(site).expect("just added");
            } else {
                self.accepted += 1;
            }
        }
    }

    /// Runs a fixed number of proposals.
    pub fn run<R: Rng>(&mut self, proposals: u64, rng: &mut R) {
        for _ in 0..proposals {
            self.propose(rng);
        }
    }

    /// Runs `thinning` proposals and returns a copy of the configuration.
    pub fn draw<R: Rng>(&mut self, thinning: u64, rng: &mut R) -> Configuration {
        self.run(thinning, rng);
        self.config.clone()
    }
}

/// Draws one configuration from the restricted ensemble after `burn_in`
/// proposals plus one thinning stride (both measured in proposals; the
/// defaults are [`DEFAULT_BURN_IN_SWEEPS`] and [`DEFAULT_THINNING_SWEEPS`]
/// sweeps of `L^2` proposals).
pub fn sample_mur<R: Rng>(
    params: &ModelParams,
    l: u32,
    rng: &mut R,
    burn_in: u64,
    thinning: u64,
) -> Result<Configuration> {
    let mut sampler = MuRSampler::new(params, l)?;
    sampler.run(burn_in, rng);
    Ok(sampler.draw(thinning, rng))
}
