//! Offline cloud decomposition of a logged trajectory.
//!
//! The torus is segmented, at a sequence of analysis epochs, into
//! well-separated rectangles ("clouds") built around the particles that
//! have been asleep for a while: their sites are thickened and the
//! resulting blobs are merged until pairwise far apart. Each cloud hosts
//! one nucleation attempt, followed from its first appearance (birth) to a
//! terminal event: a quasi-square reaching the success side, the loss of
//! every quasi-square (death), or absorption into an older cloud (merge).
//!
//! Conventions:
//! - Only quasi-squares with both dimensions at least 2 count, both for
//!   declaring the initial sleepers and for the per-cloud inventory; a
//!   dimer neither seeds nor sustains an attempt.
//! - At the first epoch every particle sitting in such a quasi-square is
//!   treated as already asleep (the droplet predates the observation
//!   window); afterwards sleep follows the freeness evaluations at the
//!   epochs themselves.
//! - The merge radius shrinks with the epoch index along the geometric
//!   schedule of [`cloud_schedule`]; the thickening radius shrinks in
//!   lockstep so both stay equal.
//! - Epochs whose clouds cannot be unwrapped on the torus are skipped
//!   with a note: live attempts persist untouched to the next clean epoch.
//! - Cloud identity across epochs is rectangle overlap. When several live
//!   attempts overlap one new rectangle, the oldest continues and the
//!   others end as merged. A successful attempt keeps claiming its
//!   rectangle (so a supercritical droplet is not reborn every epoch) but
//!   emits no further events.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{
    aggregate_clouds, circumscribed_rectangle, cloud_schedule, clusterise, free_particles,
    thicken, Clusters, Rectangle, SleepState,
};
use crate::kmc::{Replayer, TrajectoryLog};
use crate::lattice::Site;
use crate::params::{DerivedParams, ModelParams};

/// Beyond this index the merge radius equals its limit to machine
/// precision, so the schedule argument is capped here.
const SCHEDULE_INDEX_CAP: u32 = 60;

/// Refuse to slice a trajectory into more analysis epochs than this.
const MAX_EPOCHS: usize = 100_000;

/// Tuning knobs for [`cloud_histories`]; `Default` means "derive
/// everything from the model parameters".
#[derive(Debug, Clone, Default)]
pub struct CensusOptions {
    /// Spacing of the analysis epochs; default `exp((Delta - alpha) beta)`.
    pub epoch_period: Option<f64>,
    /// Escape radius for the freeness classification; default `ell_c + 2`.
    pub freeness_window: Option<u32>,
    /// An attempt succeeds when a quasi-square with both dimensions at
    /// least this side appears in its cloud; default `ell_c`.
    pub success_side: Option<u32>,
}

/// Terminal state of one cloud attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudOutcome {
    /// A quasi-square in the cloud reached the success side.
    Success,
    /// The cloud vanished or lost every quasi-square it had.
    Died,
    /// Absorbed into an older cloud.
    Merged,
    /// Still present when the trajectory ended.
    Alive,
}

impl std::fmt::Display for CloudOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CloudOutcome::Success => "success",
            CloudOutcome::Died => "died",
            CloudOutcome::Merged => "merged",
            CloudOutcome::Alive => "alive",
        };
        write!(f, "{s}")
    }
}

/// What one cloud looked like at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochEntry {
    pub time: f64,
    pub rect: Rectangle,
    /// Dimensions (sorted ascending) of the smallest quasi-square with
    /// both sides at least 2 inside the cloud, if any.
    pub smallest_square: Option<(u32, u32)>,
    /// Same for the largest; drives the success check.
    pub largest_square: Option<(u32, u32)>,
}

/// One nucleation attempt: a cloud lineage from birth to its terminal
/// event (or the end of the trajectory).
#[derive(Debug, Clone, PartialEq)]
pub struct CloudHistory {
    pub id: u32,
    /// Epoch time of first appearance.
    pub born: f64,
    /// Epoch time of the terminal event; `None` while alive.
    pub ended: Option<f64>,
    pub outcome: CloudOutcome,
    /// One entry per epoch the cloud was observed.
    pub timeline: Vec<EpochEntry>,
}

impl CloudHistory {
    /// Time from birth to the terminal event; `None` while alive.
    pub fn lifetime(&self) -> Option<f64> {
        self.ended.map(|e| e - self.born)
    }
}

/// The cloud set of one analysis epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub time: f64,
    /// Merge radius used at this epoch.
    pub radius: f64,
    /// Cloud rectangles (empty when nothing is asleep or the epoch was
    /// skipped).
    pub clouds: Vec<Rectangle>,
    /// Set when wrap ambiguity forced the epoch to be skipped.
    pub skipped: Option<String>,
}

/// Full census: every attempt ever observed plus the per-epoch cloud sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudCensus {
    pub histories: Vec<CloudHistory>,
    pub epochs: Vec<EpochRecord>,
    pub epoch_period: f64,
    pub sleep_window: f64,
    pub freeness_window: u32,
    pub success_side: u32,
}

impl CloudCensus {
    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn count(&self, outcome: CloudOutcome) -> usize {
        self.histories
            .iter()
            .filter(|h| h.outcome == outcome)
            .count()
    }

    pub fn successes(&self) -> usize {
        self.count(CloudOutcome::Success)
    }

    pub fn skipped_epochs(&self) -> usize {
        self.epochs.iter().filter(|e| e.skipped.is_some()).count()
    }
}

/// Segments a logged trajectory into per-cloud nucleation attempts.
///
/// The configuration at each epoch is reconstructed by replay (events
/// stamped exactly at an epoch time are included). Freeness is evaluated
/// at the epochs only, so the sleep clock is sampled at the epoch
/// resolution.
pub fn cloud_histories(
    log: &TrajectoryLog,
    params: &ModelParams,
    derived: &DerivedParams,
    opts: &CensusOptions,
) -> Result<CloudCensus> {
    let beta = params.beta;
    let period = match opts.epoch_period {
        Some(p) if p.is_finite() && p > 0.0 => p,
        Some(p) => {
            return Err(Error::Param(format!(
                "analysis epoch period must be positive and finite, got {p}"
            )))
        }
        None => ((params.delta - params.alpha) * beta).exp(),
    };
    let window = match opts.freeness_window {
        Some(w) if w >= 2 => w,
        Some(w) => {
            return Err(Error::Param(format!(
                "freeness window must be at least 2, got {w}"
            )))
        }
        None => derived.ell_c + 2,
    };
    let success_side = match opts.success_side {
        Some(s) if s >= 2 => s,
        Some(s) => {
            return Err(Error::Param(format!(
                "success side must be at least 2, got {s}"
            )))
        }
        None => derived.ell_c,
    };
    if params.theta - 2.0 * params.kappa <= 0.0 {
        return Err(Error::Param(format!(
            "cloud radius exponent Theta - 2 kappa = {} must be positive",
            params.theta - 2.0 * params.kappa
        )));
    }
    let sleep_window = (derived.sleep_exp * beta).exp();

    let l = log.initial.side();
    let t0 = log.initial.time();
    let t_end = log.final_time().max(t0);
    let span_epochs = ((t_end - t0) / period).ceil();
    if span_epochs > MAX_EPOCHS as f64 {
        return Err(Error::Param(format!(
            "trajectory spans {span_epochs:.0} analysis epochs (cap {MAX_EPOCHS}); raise the epoch period"
        )));
    }
    let mut epoch_times = Vec::new();
    let mut k = 0u32;
    loop {
        let t = t0 + f64::from(k) * period;
        if t >= t_end {
            break;
        }
        epoch_times.push(t);
        k += 1;
    }
    epoch_times.push(t_end);

    // Sleep bookkeeping: everyone starts awake except the particles of the
    // initial quasi-square droplets, which are preset as asleep.
    let mut sleep = SleepState::new(log.initial.particles().iter().map(|(id, _)| *id), t0);
    for cluster in &clusterise(&log.initial).clusters {
        match cluster.quasi_square {
            Some((d1, _)) if d1 >= 2 => {
                for site in &cluster.sites {
                    let pid = log
                        .initial
                        .particle_at(*site)
                        .expect("cluster site is occupied");
                    sleep.preset_asleep(pid, sleep_window)?;
                }
            }
            _ => {}
        }
    }

    let mut rep = Replayer::new(log);
    let mut histories: Vec<CloudHistory> = Vec::new();
    let mut live: Vec<usize> = Vec::new();
    let mut epochs: Vec<EpochRecord> = Vec::new();

    for (j, &t) in epoch_times.iter().enumerate() {
        while rep.peek().is_some_and(|e| e.time <= t) {
            rep.advance();
        }
        let config = &rep.config;
        if j > 0 {
            let report = free_particles(config, window);
            sleep.update(&report, t)?;
        }

        let index = (j as u32).min(SCHEDULE_INDEX_CAP);
        let sigma = cloud_schedule(index, params.theta, params.kappa, beta);
        let s_exp = params.theta - params.kappa * (2.0 - 0.5f64.powi(index as i32));

        let seeds: Vec<Site> = config
            .particles()
            .into_iter()
            .filter(|(pid, _)| sleep.sleeping(*pid, t, sleep_window) == Some(true))
            .map(|(_, site)| site)
            .collect();

        let rects = match build_clouds(&seeds, s_exp, sigma, beta, l) {
            Ok(r) => r,
            Err(Error::WrapAmbiguity(msg)) => {
                epochs.push(EpochRecord {
                    time: t,
                    radius: sigma,
                    clouds: Vec::new(),
                    skipped: Some(msg),
                });
                continue;
            }
            Err(e) => return Err(e),
        };

        // Match the new rectangles against the live lineages by overlap.
        // Retired successes claim first, then older births, then lower id.
        live.sort_by(|&a, &b| {
            let key = |h: &CloudHistory| (h.outcome != CloudOutcome::Success, h.born, h.id);
            key(&histories[a])
                .partial_cmp(&key(&histories[b]))
                .expect("epoch times are finite")
        });
        let mut claimed: Vec<Option<usize>> = vec![None; rects.len()];
        let mut next_live: Vec<usize> = Vec::new();
        for &h in &live {
            let last = histories[h]
                .timeline
                .last()
                .expect("live lineage was observed")
                .rect;
            let mut chosen = None;
            let mut absorbed = false;
            for (ri, rect) in rects.iter().enumerate() {
                if last.distance(rect, l) == 0 {
                    if claimed[ri].is_none() {
                        chosen = Some(ri);
                        break;
                    }
                    absorbed = true;
                }
            }
            match chosen {
                Some(ri) => {
                    claimed[ri] = Some(h);
                    next_live.push(h);
                }
                None => {
                    let hist = &mut histories[h];
                    if hist.outcome == CloudOutcome::Alive {
                        hist.ended = Some(t);
                        hist.outcome = if absorbed {
                            CloudOutcome::Merged
                        } else {
                            CloudOutcome::Died
                        };
                    }
                    // A retired success that stops matching just leaves
                    // the live set; its record is already terminal.
                }
            }
        }
        for (ri, _) in rects.iter().enumerate() {
            if claimed[ri].is_none() {
                let id = histories.len() as u32;
                histories.push(CloudHistory {
                    id,
                    born: t,
                    ended: None,
                    outcome: CloudOutcome::Alive,
                    timeline: Vec::new(),
                });
                claimed[ri] = Some(histories.len() - 1);
                next_live.push(histories.len() - 1);
            }
        }
        live = next_live;

        let clusters = clusterise(config);
        for (ri, rect) in rects.iter().enumerate() {
            let h = claimed[ri].expect("every cloud is claimed or born");
            let (smallest, largest) = square_inventory(&clusters, rect, l);
            let hist = &mut histories[h];
            hist.timeline.push(EpochEntry {
                time: t,
                rect: *rect,
                smallest_square: smallest,
                largest_square: largest,
            });
            if hist.outcome == CloudOutcome::Alive {
                if largest.is_some_and(|d| d.0 >= success_side) {
                    hist.outcome = CloudOutcome::Success;
                    hist.ended = Some(t);
                    // Stays live so the supercritical cloud keeps claiming
                    // its rectangle instead of spawning fresh lineages.
                } else if smallest.is_none()
                    && hist.timeline.iter().any(|e| e.smallest_square.is_some())
                {
                    hist.outcome = CloudOutcome::Died;
                    hist.ended = Some(t);
                    live.retain(|&x| x != h);
                }
            }
        }

        epochs.push(EpochRecord {
            time: t,
            radius: sigma,
            clouds: rects,
            skipped: None,
        });
    }

    Ok(CloudCensus {
        histories,
        epochs,
        epoch_period: period,
        sleep_window,
        freeness_window: window,
        success_side,
    })
}

/// Thickens the seed sites, splits the blob into connected components,
/// circumscribes each, and merges the rectangles at distance `sigma`.
fn build_clouds(
    seeds: &[Site],
    s_exp: f64,
    sigma: f64,
    beta: f64,
    l: u32,
) -> Result<Vec<Rectangle>> {
    if seeds.is_empty() {
        return Ok(Vec::new());
    }
    let (blob, saturated) = thicken(seeds, s_exp, beta, l);
    if saturated {
        return Err(Error::WrapAmbiguity(
            "thickened sleeping set covers the torus".into(),
        ));
    }
    let mut rects = Vec::new();
    for component in blob_components(&blob, l) {
        rects.push(circumscribed_rectangle(&component, l)?);
    }
    Ok(aggregate_clouds(&rects, sigma, l)?.rectangles)
}

/// Connected components (nearest-neighbour adjacency on the torus) of a
/// site set.
fn blob_components(blob: &BTreeSet<Site>, l: u32) -> Vec<Vec<Site>> {
    let li = l as i32;
    let mut seen: BTreeSet<Site> = BTreeSet::new();
    let mut components = Vec::new();
    for &start in blob {
        if seen.contains(&start) {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = vec![start];
        seen.insert(start);
        while let Some(s) = queue.pop() {
            component.push(s);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let q = Site::new((s.x + dx).rem_euclid(li), (s.y + dy).rem_euclid(li));
                if blob.contains(&q) && seen.insert(q) {
                    queue.push(q);
                }
            }
        }
        components.push(component);
    }
    components
}

/// Smallest and largest quasi-square dimensions (both sides at least 2)
/// among the clusters with a site inside `rect`.
fn square_inventory(
    clusters: &Clusters,
    rect: &Rectangle,
    l: u32,
) -> (Option<(u32, u32)>, Option<(u32, u32)>) {
    let mut smallest: Option<(u32, u32)> = None;
    let mut largest: Option<(u32, u32)> = None;
    for cluster in &clusters.clusters {
        let Some(dims) = cluster.quasi_square else {
            continue;
        };
        if dims.0 < 2 {
            continue;
        }
        if !cluster.sites.iter().any(|s| rect.contains(*s, l)) {
            continue;
        }
        smallest = Some(smallest.map_or(dims, |d| d.min(dims)));
        largest = Some(largest.map_or(dims, |d| d.max(dims)));
    }
    (smallest, largest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmc::{Event, StopReason, TrajectoryLog};
    use crate::lattice::Configuration;
    use crate::params::{derive, ModelParams};

    fn config_with(l: u32, sites: &[(i32, i32)]) -> Configuration {
        let mut c = Configuration::empty(l).unwrap();
        for &(x, y) in sites {
            c.add_particle(Site::new(x, y)).unwrap();
        }
        c
    }

    /// Builds a log from scripted nearest-neighbour exchanges, validating
    /// each one against the evolving configuration.
    fn log_with_moves(
        initial: Configuration,
        moves: &[((i32, i32), (i32, i32), f64)],
        horizon: f64,
    ) -> TrajectoryLog {
        let mut config = initial.clone();
        let mut events = Vec::new();
        for &((fx, fy), (tx, ty), t) in moves {
            let from = Site::new(fx, fy);
            let to = Site::new(tx, ty);
            let dh_units = config.delta_energy_units(from, to).unwrap();
            let pid = config.particle_at(from).unwrap();
            config.apply_exchange(from, to).unwrap();
            events.push(Event {
                time: t,
                from,
                to,
                pid,
                dh_units,
            });
        }
        TrajectoryLog {
            initial,
            events,
            stop: StopReason::Horizon { time: horizon },
            truncated: false,
        }
    }

    fn test_params() -> (ModelParams, DerivedParams) {
        let params = ModelParams::standard(1.0, 1.6, 1.0, 2.4);
        let derived = derive(&params).unwrap();
        (params, derived)
    }

    #[test]
    fn free_gas_yields_an_empty_census() {
        let (params, derived) = test_params();
        let initial = config_with(32, &[(2, 2), (12, 12), (22, 22)]);
        let log = log_with_moves(initial, &[], 10.0);
        let census = cloud_histories(&log, &params, &derived, &CensusOptions::default()).unwrap();
        assert!(census.is_empty());
        // Default period exp(1.55) ~ 4.71: epochs at 0, 4.71, 9.42, 10.
        assert_eq!(census.epochs.len(), 4);
        assert!(census.epochs.iter().all(|e| e.clouds.is_empty()));
        assert_eq!(census.skipped_epochs(), 0);
    }

    #[test]
    fn single_nucleating_droplet_is_one_successful_attempt() {
        let (params, derived) = test_params();
        // 2x2 droplet plus five isolated walkers that build it out to 3x3.
        let initial = config_with(
            32,
            &[
                (10, 10),
                (11, 10),
                (10, 11),
                (11, 11),
                (10, 14),
                (12, 14),
                (13, 10),
                (15, 11),
                (14, 12),
            ],
        );
        let moves = [
            ((10, 14), (10, 13), 1.0),
            ((10, 13), (10, 12), 2.0),
            ((12, 14), (12, 13), 2.5),
            ((12, 13), (11, 13), 2.8),
            ((11, 13), (11, 12), 3.0), // 2x3 complete
            ((13, 10), (12, 10), 4.0),
            ((15, 11), (14, 11), 4.5),
            ((14, 11), (13, 11), 4.8),
            ((13, 11), (12, 11), 5.0),
            ((14, 12), (13, 12), 6.0),
            ((13, 12), (12, 12), 7.0), // 3x3 complete
        ];
        let log = log_with_moves(initial, &moves, 12.0);
        let opts = CensusOptions {
            epoch_period: Some(10.0),
            ..CensusOptions::default()
        };
        let census = cloud_histories(&log, &params, &derived, &opts).unwrap();

        assert_eq!(census.histories.len(), 1);
        let h = &census.histories[0];
        assert_eq!(h.outcome, CloudOutcome::Success);
        assert_eq!(h.born, 0.0);
        assert_eq!(h.ended, Some(10.0));
        assert_eq!(h.lifetime(), Some(10.0));
        assert_eq!(census.successes(), 1);
        // Observed at every epoch (0, 10, 12), growing from (2,2) to (3,3).
        assert_eq!(h.timeline.len(), 3);
        assert_eq!(h.timeline[0].smallest_square, Some((2, 2)));
        assert_eq!(h.timeline[1].largest_square, Some((3, 3)));
        assert_eq!(census.epochs.len(), 3);
        assert!(census.epochs.iter().all(|e| e.clouds.len() == 1));
    }

    #[test]
    fn far_droplets_stay_in_separate_clouds() {
        let (params, derived) = test_params();
        let initial = config_with(
            32,
            &[
                (4, 4),
                (5, 4),
                (4, 5),
                (5, 5),
                (20, 20),
                (21, 20),
                (20, 21),
                (21, 21),
            ],
        );
        let log = log_with_moves(initial, &[], 9.0);
        let census = cloud_histories(&log, &params, &derived, &CensusOptions::default()).unwrap();

        assert_eq!(census.histories.len(), 2);
        assert!(census
            .histories
            .iter()
            .all(|h| h.outcome == CloudOutcome::Alive && h.ended.is_none()));
        for epoch in &census.epochs {
            assert_eq!(epoch.clouds.len(), 2, "at t = {}", epoch.time);
            let d = epoch.clouds[0].distance(&epoch.clouds[1], 32);
            assert!(
                f64::from(d) >= epoch.radius,
                "clouds at distance {d} < radius {} at t = {}",
                epoch.radius,
                epoch.time
            );
        }
    }

    #[test]
    fn dismantled_droplet_dies_and_leaves_a_sleeping_residue() {
        let (params, derived) = test_params();
        let initial = config_with(32, &[(10, 10), (11, 10), (10, 11), (11, 11)]);
        // One particle walks west, a second walks north; the leftover
        // dimer no longer counts as a quasi-square.
        let moves = [
            ((10, 10), (9, 10), 1.0),
            ((9, 10), (8, 10), 2.0),
            ((8, 10), (7, 10), 3.0),
            ((7, 10), (6, 10), 4.0),
            ((10, 11), (10, 12), 5.0),
            ((10, 12), (10, 13), 6.0),
            ((10, 13), (10, 14), 7.0),
        ];
        let log = log_with_moves(initial, &moves, 25.0);
        let opts = CensusOptions {
            epoch_period: Some(10.0),
            ..CensusOptions::default()
        };
        let census = cloud_histories(&log, &params, &derived, &opts).unwrap();

        // Attempt 0 dies at the first epoch after the dismantling; the
        // still-sleeping dimer then seeds a fresh square-less lineage.
        assert_eq!(census.histories.len(), 2);
        let died = &census.histories[0];
        assert_eq!(died.outcome, CloudOutcome::Died);
        assert_eq!(died.ended, Some(10.0));
        assert_eq!(died.timeline[0].smallest_square, Some((2, 2)));
        assert_eq!(died.timeline[1].smallest_square, None);
        let residue = &census.histories[1];
        assert_eq!(residue.outcome, CloudOutcome::Alive);
        assert_eq!(residue.born, 20.0);
        assert!(residue
            .timeline
            .iter()
            .all(|e| e.smallest_square.is_none()));
    }

    #[test]
    fn growing_droplet_absorbs_its_neighbour() {
        let (params, derived) = test_params();
        // Two 2x2 droplets whose clouds start 4 apart (radius ~3.16), plus
        // two walkers that extend the right droplet westward to 2x3; the
        // enlarged cloud then comes within the merge radius of the left
        // one. Side 48 keeps the merged cloud under half the torus.
        let initial = config_with(
            48,
            &[
                (4, 10),
                (5, 10),
                (4, 11),
                (5, 11),
                (15, 10),
                (16, 10),
                (15, 11),
                (16, 11),
                (14, 13),
                (14, 8),
            ],
        );
        let moves = [
            ((14, 13), (14, 12), 1.0),
            ((14, 12), (14, 11), 2.0),
            ((14, 8), (14, 9), 3.0),
            ((14, 9), (14, 10), 4.0), // right droplet now 2x3 on x in [14,16]
        ];
        let log = log_with_moves(initial, &moves, 12.0);
        let opts = CensusOptions {
            epoch_period: Some(10.0),
            ..CensusOptions::default()
        };
        let census = cloud_histories(&log, &params, &derived, &opts).unwrap();

        assert_eq!(census.epochs[0].clouds.len(), 2);
        assert_eq!(census.epochs[1].clouds.len(), 1);
        assert_eq!(census.epochs[2].clouds.len(), 1);
        assert_eq!(census.histories.len(), 2);
        let survivor = &census.histories[0];
        assert_eq!(survivor.outcome, CloudOutcome::Alive);
        assert_eq!(survivor.timeline.len(), 3);
        // After the merge the shared cloud holds both the 2x2 and the 2x3.
        assert_eq!(survivor.timeline[1].smallest_square, Some((2, 2)));
        assert_eq!(survivor.timeline[1].largest_square, Some((2, 3)));
        let merged = &census.histories[1];
        assert_eq!(merged.outcome, CloudOutcome::Merged);
        assert_eq!(merged.ended, Some(10.0));
        assert_eq!(merged.timeline.len(), 1);
    }

    #[test]
    fn supercritical_start_succeeds_immediately_without_respawning() {
        let (params, derived) = test_params();
        let sites: Vec<(i32, i32)> = (10..13)
            .flat_map(|x| (10..13).map(move |y| (x, y)))
            .collect();
        let initial = config_with(32, &sites);
        let log = log_with_moves(initial, &[], 5.0);
        let opts = CensusOptions {
            epoch_period: Some(10.0),
            ..CensusOptions::default()
        };
        let census = cloud_histories(&log, &params, &derived, &opts).unwrap();

        assert_eq!(census.histories.len(), 1);
        let h = &census.histories[0];
        assert_eq!(h.outcome, CloudOutcome::Success);
        assert_eq!(h.born, 0.0);
        assert_eq!(h.ended, Some(0.0));
        assert_eq!(h.lifetime(), Some(0.0));
        // The retired cloud keeps claiming its rectangle at the final
        // epoch instead of spawning a second lineage.
        assert_eq!(h.timeline.len(), 2);
    }

    #[test]
    fn wrapping_cloud_skips_the_epoch() {
        let (params, derived) = test_params();
        // Radius ~3.16 around a 2x2 on an 8-torus covers every column.
        let initial = config_with(8, &[(3, 3), (4, 3), (3, 4), (4, 4)]);
        let log = log_with_moves(initial, &[], 3.0);
        let opts = CensusOptions {
            epoch_period: Some(5.0),
            ..CensusOptions::default()
        };
        let census = cloud_histories(&log, &params, &derived, &opts).unwrap();

        assert_eq!(census.epochs.len(), 2);
        assert_eq!(census.skipped_epochs(), 2);
        assert!(census.is_empty());
        assert!(census.epochs[0].skipped.is_some());
    }

    #[test]
    fn option_validation_rejects_bad_knobs() {
        let (params, derived) = test_params();
        let log = log_with_moves(config_with(16, &[(2, 2)]), &[], 1.0);
        for opts in [
            CensusOptions {
                epoch_period: Some(0.0),
                ..CensusOptions::default()
            },
            CensusOptions {
                epoch_period: Some(f64::NAN),
                ..CensusOptions::default()
            },
            CensusOptions {
                freeness_window: Some(1),
                ..CensusOptions::default()
            },
            CensusOptions {
                success_side: Some(1),
                ..CensusOptions::default()
            },
        ] {
            assert!(cloud_histories(&log, &params, &derived, &opts).is_err());
        }
    }
}
