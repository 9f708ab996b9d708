//! Replay-based detection and classification of the first exit from the
//! subcritical set: which move created the first supercritical cluster,
//! and whether it did so by growing one cluster or by bridging several.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::clusterise;
use crate::kmc::{Replayer, TrajectoryLog};
use crate::lattice::{Configuration, Site};
use crate::params::DerivedParams;

/// How a trajectory left the subcritical set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitMode {
    /// The triggering move attached to (or rearranged) a single cluster.
    Growth,
    /// The triggering move bridged at least two clusters of volume >= 2.
    Coalescence,
    /// The run ended (horizon or event cap) without leaving the set.
    Truncated,
}

impl std::fmt::Display for ExitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExitMode::Growth => "growth",
            ExitMode::Coalescence => "coalescence",
            ExitMode::Truncated => "truncated",
        })
    }
}

impl std::str::FromStr for ExitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<ExitMode> {
        match s {
            "growth" => Ok(ExitMode::Growth),
            "coalescence" => Ok(ExitMode::Coalescence),
            "truncated" => Ok(ExitMode::Truncated),
            other => Err(Error::Parse {
                line: 0,
                msg: format!("unknown exit mode `{other}`"),
            }),
        }
    }
}

/// The move that first produced a supercritical cluster, with the cluster
/// it produced and the classification of the mechanism.
#[derive(Debug, Clone)]
pub struct ExitEvent {
    /// Index into the log's event list.
    pub event_index: usize,
    pub time: f64,
    /// Sites of the supercritical cluster right after the move.
    pub cluster_sites: Vec<Site>,
    pub volume: u32,
    /// Number of distinct pre-move clusters (volume >= 2) merged into the
    /// supercritical cluster by the move.
    pub clusters_joined: u32,
    pub mode: ExitMode,
}

/// Sites of the connected occupied component containing `start`, capped;
/// returns `None` if the component exceeds the cap.
fn component_sites(config: &Configuration, start: Site, cap: usize) -> Option<Vec<Site>> {
    let start = config.wrap(start);
    if !config.occupied(start) {
        return Some(Vec::new());
    }
    let mut seen = BTreeSet::new();
    seen.insert((start.x, start.y));
    let mut queue = vec![start];
    let mut out = vec![start];
    while let Some(s) = queue.pop() {
        for n in config.neighbors(s) {
            if config.occupied(n) && seen.insert((n.x, n.y)) {
                if out.len() + 1 > cap {
                    return None;
                }
                out.push(n);
                queue.push(n);
            }
        }
    }
    Some(out)
}

/// Replays the trajectory and returns the first event whose post-move
/// configuration contains a cluster of volume >= the exit threshold,
/// classified as growth or coalescence. `Ok(None)` if the trajectory never
/// leaves the subcritical set. A single exchange can merge up to four
/// clusters plus the mover, so the supercritical volume is bounded but not
/// fixed; the actual volume is reported.
pub fn find_exit(log: &TrajectoryLog, derived: &DerivedParams) -> Result<Option<ExitEvent>> {
    let threshold = derived.exit_volume();
    if crate::kmc::find_component_at_least(&log.initial, threshold).is_some() {
        return Err(Error::Analysis(
            "trajectory starts outside the subcritical set; no triggering move exists".into(),
        ));
    }
    find_first_cluster_of(log, threshold)
}

/// [`find_exit`] at an explicit volume threshold, without the
/// starting-state check: the first move after which some cluster reaches
/// `threshold` sites.
pub fn find_first_cluster_of(log: &TrajectoryLog, threshold: u32) -> Result<Option<ExitEvent>> {
    if threshold < 2 {
        return Err(Error::Param("cluster thresholds start at 2".into()));
    }
    // Volume cap: 4 merged below-threshold clusters + the mover.
    let cap = (4 * (threshold - 1) + 1) as usize;
    let mut replay = Replayer::new(log);
    let mut index = 0;
    while let Some(ev) = replay.advance() {
        let sites = component_sites(&replay.config, ev.to, cap)
            .unwrap_or_else(|| panic!("component beyond the merge bound at event {index}"));
        if sites.len() >= threshold as usize {
            let mode = classify_trigger(&replay.config, ev.from, ev.to, &sites);
            return Ok(Some(ExitEvent {
                event_index: index,
                time: ev.time,
                volume: sites.len() as u32,
                clusters_joined: mode.0,
                mode: if mode.0 >= 2 {
                    ExitMode::Coalescence
                } else {
                    ExitMode::Growth
                },
                cluster_sites: sites,
            }));
        }
        index += 1;
    }
    Ok(None)
}

/// Counts the distinct pre-move clusters (volume >= 2) represented in the
/// supercritical cluster minus the moved particle.
fn classify_trigger(
    post: &Configuration,
    from: Site,
    to: Site,
    cluster_sites: &[Site],
) -> (u32, ()) {
    let mut pre = post.clone();
    pre.apply_exchange(to, from)
        .expect("reversing a logged exchange is a valid move");
    let clusters = clusterise(&pre);
    let l = pre.side();
    let to = pre.wrap(to);
    let mut roots: BTreeSet<(i32, i32)> = BTreeSet::new();
    for &s in cluster_sites {
        if pre.wrap(s) == to {
            continue; // the moved particle itself
        }
        if let Some(c) = clusters.cluster_at(s, l) {
            let root = c.sites[0];
            roots.insert((root.x, root.y));
        }
    }
    (roots.len() as u32, ())
}

/// Classification of the first exit; errors if the trajectory never exits.
pub fn classify_exit(log: &TrajectoryLog, derived: &DerivedParams) -> Result<ExitMode> {
    match find_exit(log, derived)? {
        Some(exit) => Ok(exit.mode),
        None => Err(Error::Analysis(
            "trajectory never leaves the subcritical set".into(),
        )),
    }
}
