//! Free / trapped / clusterised particle classification by bounded-window
//! iterative peeling, and the sleeping-particle bookkeeping built on it.
//!
//! A particle is *clusterised* when its site belongs to a cluster. Any
//! other particle is *free* when, with every remaining particle treated as
//! a fixed obstacle, it has a nearest-neighbour escape path that stays
//! inside the window ball around its start, never steps onto or next to an
//! obstacle, and reaches l-infinity distance `w` from the start. Freed
//! particles are removed at the end of each round (they can be walked to
//! the boundary one at a time, in peeling order) and the rounds repeat
//! until nothing changes; the remaining candidates are *trapped*.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::lattice::{linf_dist, Configuration, Site};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeStatus {
    Clusterised,
    Free,
    Trapped,
}

/// Classification of every particle, plus the witness escape paths in the
/// order the peeling freed them (each path starts at the particle's site
/// and ends at window distance).
#[derive(Debug, Clone, PartialEq)]
pub struct FreenessReport {
    /// Window radius actually used (clamped to L/2 on small tori).
    pub window: u32,
    pub status: BTreeMap<u32, FreeStatus>,
    pub peel_order: Vec<(u32, Vec<Site>)>,
}

impl FreenessReport {
    pub fn status_of(&self, pid: u32) -> Option<FreeStatus> {
        self.status.get(&pid).copied()
    }

    pub fn free_ids(&self) -> Vec<u32> {
        self.status
            .iter()
            .filter(|(_, s)| **s == FreeStatus::Free)
            .map(|(id, _)| *id)
            .collect()
    }
}

/// Classifies every particle of `config` with window radius `window`.
pub fn free_particles(config: &Configuration, window: u32) -> FreenessReport {
    assert!(window >= 2, "freeness window must be at least 2");
    let l = config.side();
    let w = window.min(l / 2);

    let mut status = BTreeMap::new();
    let mut candidates: Vec<(u32, Site)> = Vec::new();
    for (pid, site) in config.particles() {
        if config.occupied_neighbor_count(site) > 0 {
            status.insert(pid, FreeStatus::Clusterised);
        } else {
            status.insert(pid, FreeStatus::Trapped);
            candidates.push((pid, site));
        }
    }
    candidates.sort_by_key(|&(pid, _)| pid);

    let mut obstacles: HashSet<Site> = config.occupied_sites().into_iter().collect();
    let mut peel_order = Vec::new();
    loop {
        let mut freed_this_round = Vec::new();
        for &(pid, site) in &candidates {
            if let Some(path) = escape_path(config, site, w, &obstacles) {
                freed_this_round.push((pid, site, path));
            }
        }
        if freed_this_round.is_empty() {
            break;
        }
        for (pid, site, path) in freed_this_round {
            status.insert(pid, FreeStatus::Free);
            obstacles.remove(&site);
            peel_order.push((pid, path));
        }
        candidates.retain(|(pid, _)| status[pid] == FreeStatus::Trapped);
    }

    FreenessReport {
        window: w,
        status,
        peel_order,
    }
}

/// Breadth-first escape search for the particle at `start`. Obstacles
/// include the particle itself; its own site is exempt from the adjacency
/// constraint, every later site must be empty of obstacles and not
/// nearest-neighbour to one.
fn escape_path(
    config: &Configuration,
    start: Site,
    w: u32,
    obstacles: &HashSet<Site>,
) -> Option<Vec<Site>> {
    let blocked = |site: Site| -> bool {
        if site == start {
            return false;
        }
        if obstacles.contains(&site) {
            return true;
        }
        config
            .neighbors(site)
            .into_iter()
            .any(|q| q != start && obstacles.contains(&q))
    };

    let mut parent: HashMap<Site, Site> = HashMap::new();
    parent.insert(start, start);
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        if linf_dist(s, start, config.side()) == w {
            let mut path = vec![s];
            let mut cur = s;
            while cur != start {
                cur = parent[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for q in config.neighbors(s) {
            if linf_dist(q, start, config.side()) > w {
                continue;
            }
            if parent.contains_key(&q) || blocked(q) {
                continue;
            }
            parent.insert(q, s);
            queue.push_back(q);
        }
    }
    None
}

/// Per-particle last-known-free clock times; `sleeping` at `t` means not
/// seen free during the trailing window `[t - sleep_window, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SleepState {
    last_free: BTreeMap<u32, f64>,
    last_update: f64,
}

impl SleepState {
    /// Every particle starts counted as free at `t0` (hence active).
    pub fn new(ids: impl IntoIterator<Item = u32>, t0: f64) -> SleepState {
        SleepState {
            last_free: ids.into_iter().map(|id| (id, t0)).collect(),
            last_update: t0,
        }
    }

    /// Marks a particle as not having been free for at least
    /// `sleep_window` before the state's creation time (used to seed
    /// droplet particles as already sleeping).
    pub fn preset_asleep(&mut self, pid: u32, sleep_window: f64) -> Result<()> {
        match self.last_free.get_mut(&pid) {
            Some(t) => {
                *t = self.last_update - sleep_window;
                Ok(())
            }
            None => Err(Error::Bookkeeping(format!("unknown particle id {pid}"))),
        }
    }

    /// Records a freeness evaluation at time `t`.
    pub fn update(&mut self, report: &FreenessReport, t: f64) -> Result<()> {
        if t < self.last_update {
            return Err(Error::Param(format!(
                "sleep update at {t} precedes previous update {}",
                self.last_update
            )));
        }
        for (&pid, &status) in &report.status {
            if !self.last_free.contains_key(&pid) {
                return Err(Error::Bookkeeping(format!("unknown particle id {pid}")));
            }
            if status == FreeStatus::Free {
                self.last_free.insert(pid, t);
            }
        }
        self.last_update = t;
        Ok(())
    }

    pub fn last_free_time(&self, pid: u32) -> Option<f64> {
        self.last_free.get(&pid).copied()
    }

    pub fn sleeping(&self, pid: u32, t: f64, sleep_window: f64) -> Option<bool> {
        self.last_free.get(&pid).map(|lf| t - lf >= sleep_window)
    }

    /// Ids of particles that are not sleeping at `t`.
    pub fn active_ids(&self, t: f64, sleep_window: f64) -> Vec<u32> {
        self.last_free
            .iter()
            .filter(|(_, lf)| t - **lf < sleep_window)
            .map(|(id, _)| *id)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_with(l: u32, sites: &[(i32, i32)]) -> Configuration {
        let mut c = Configuration::empty(l).unwrap();
        for &(x, y) in sites {
            c.add_particle(Site::new(x, y)).unwrap();
        }
        c
    }

    #[test]
    fn lone_particle_is_free() {
        let c = config_with(16, &[(8, 8)]);
        let r = free_particles(&c, 5);
        assert_eq!(r.status_of(1), Some(FreeStatus::Free));
        assert_eq!(r.peel_order.len(), 1);
        let path = &r.peel_order[0].1;
        assert_eq!(path[0], Site::new(8, 8));
        assert_eq!(linf_dist(*path.last().unwrap(), Site::new(8, 8), 16), 5);
    }

    #[test]
    fn diagonal_pair_frees_in_one_round() {
        let c = config_with(16, &[(5, 5), (6, 6)]);
        let r = free_particles(&c, 4);
        assert_eq!(r.status_of(1), Some(FreeStatus::Free));
        assert_eq!(r.status_of(2), Some(FreeStatus::Free));
    }

    #[test]
    fn bonded_pair_is_clusterised() {
        let c = config_with(16, &[(5, 5), (6, 5)]);
        let r = free_particles(&c, 4);
        assert_eq!(r.status_of(1), Some(FreeStatus::Clusterised));
        assert_eq!(r.status_of(2), Some(FreeStatus::Clusterised));
        assert!(r.peel_order.is_empty());
    }

    fn fill_rect(c: &mut Configuration, x0: i32, x1: i32, y0: i32, y1: i32) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                c.add_particle(Site::new(x, y)).unwrap();
            }
        }
    }

    #[test]
    fn four_singles_in_a_walled_pocket_are_mutually_trapped() {
        // Four singles at the corners of a 2-spaced square, walled in by
        // four clusterised blocks: every first move of every single lands
        // next to a wall or next to another single, and that deadlock
        // survives every peeling round.
        let mut c = Configuration::empty(48).unwrap();
        let ids = [
            c.add_particle(Site::new(29, 12)).unwrap(),
            c.add_particle(Site::new(29, 10)).unwrap(),
            c.add_particle(Site::new(27, 10)).unwrap(),
            c.add_particle(Site::new(27, 12)).unwrap(),
        ];
        fill_rect(&mut c, 23, 26, 13, 20); // wall above-left
        fill_rect(&mut c, 22, 26, 7, 9); // wall below-left
        fill_rect(&mut c, 30, 32, 7, 9); // wall below-right
        fill_rect(&mut c, 30, 34, 13, 15); // wall above-right
        let r = free_particles(&c, 10);
        for pid in ids {
            assert_eq!(r.status_of(pid), Some(FreeStatus::Trapped), "pid {pid}");
        }
        assert!(r.peel_order.is_empty());
    }

    #[test]
    fn sealed_particle_is_trapped() {
        // Hollow 5x5 ring of clusterised sites with a single particle at
        // the centre.
        let mut sites = Vec::new();
        for d in 0..5 {
            sites.push((6 + d, 6));
            sites.push((6 + d, 10));
            sites.push((6, 6 + d));
            sites.push((10, 6 + d));
        }
        sites.sort();
        sites.dedup();
        sites.push((8, 8));
        let c = config_with(20, &sites);
        let r = free_particles(&c, 6);
        let center = c.particle_at(Site::new(8, 8)).unwrap();
        assert_eq!(r.status_of(center), Some(FreeStatus::Trapped));
        // Every ring site is clusterised.
        for (pid, site) in c.particles() {
            if site != Site::new(8, 8) {
                assert_eq!(r.status_of(pid), Some(FreeStatus::Clusterised));
            }
        }
    }

    #[test]
    fn peeling_cascade_unlocks_second_particle() {
        // A corridor of clusterised walls with two singles inside, the
        // inner one only able to leave after the outer one is peeled away.
        //
        //   wall:  y=4 and y=8 rows, x in 4..=13, plus a cap at x=4
        //   inner particle at (6,6), outer at (9,6); corridor one row high
        //   around y=6, so the outer particle blocks the inner's exit.
        let mut sites = Vec::new();
        for x in 4..=13 {
            sites.push((x, 4));
            sites.push((x, 8));
        }
        for y in 5..=7 {
            sites.push((4, y));
        }
        // Thicken the walls so corridor cells are not adjacent to them.
        for x in 4..=13 {
            sites.push((x, 3));
            sites.push((x, 9));
        }
        let mut c = Configuration::empty(20).unwrap();
        for &(x, y) in &sites {
            c.add_particle(Site::new(x, y)).unwrap();
        }
        // Corridor interior rows y=5..7; only y=6 is clear of wall
        // adjacency. Outer particle sits between inner and the exit.
        let inner = c.add_particle(Site::new(6, 6)).unwrap();
        let outer = c.add_particle(Site::new(9, 6)).unwrap();
        let r = free_particles(&c, 6);
        assert_eq!(r.status_of(outer), Some(FreeStatus::Free));
        assert_eq!(r.status_of(inner), Some(FreeStatus::Free));
        // The outer particle must be peeled strictly before the inner one.
        let order: Vec<u32> = r.peel_order.iter().map(|(pid, _)| *pid).collect();
        let pos = |pid: u32| order.iter().position(|&p| p == pid).unwrap();
        assert!(pos(outer) < pos(inner));
    }

    #[test]
    fn window_clamps_on_small_torus() {
        let c = config_with(6, &[(3, 3)]);
        let r = free_particles(&c, 10);
        assert_eq!(r.window, 3);
        assert_eq!(r.status_of(1), Some(FreeStatus::Free));
    }

    /// Replays the recorded peeling order and checks every path is a legal
    /// sequential escape plan: nearest-neighbour steps, inside the window,
    /// never on or next to a remaining obstacle.
    fn assert_escape_sound(config: &Configuration, report: &FreenessReport) {
        let mut obstacles: HashSet<Site> = config.occupied_sites().into_iter().collect();
        for (pid, path) in &report.peel_order {
            let start = config
                .particles()
                .into_iter()
                .find(|(id, _)| id == pid)
                .unwrap()
                .1;
            assert_eq!(path[0], start);
            assert_eq!(
                linf_dist(*path.last().unwrap(), start, config.side()),
                report.window
            );
            for step in path.windows(2) {
                assert_eq!(linf_dist(step[0], step[1], config.side()), 1);
                assert!(
                    step[0].x == step[1].x || step[0].y == step[1].y,
                    "diagonal step"
                );
            }
            for &site in &path[1..] {
                assert!(
                    linf_dist(site, start, config.side()) <= report.window,
                    "path leaves window"
                );
                assert!(!obstacles.contains(&site) || site == start);
                for q in config.neighbors(site) {
                    assert!(
                        q == start || !obstacles.contains(&q),
                        "particle {pid} touches an obstacle at {q}"
                    );
                }
            }
            obstacles.remove(&start);
        }
    }

    #[test]
    fn escape_paths_replay_soundly_on_random_configs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7777);
        for _ in 0..300 {
            let l = rng.random_range(8..20u32);
            let density = rng.random::<f64>() * 0.4;
            let mut c = Configuration::empty(l).unwrap();
            for y in 0..l as i32 {
                for x in 0..l as i32 {
                    if rng.random::<f64>() < density {
                        c.add_particle(Site::new(x, y)).unwrap();
                    }
                }
            }
            let r = free_particles(&c, 4);
            assert_escape_sound(&c, &r);
            // Statuses partition the particles.
            assert_eq!(r.status.len(), c.particle_count() as usize);
        }
    }

    #[test]
    fn sleep_timeline() {
        let window = 10.0;
        let mut sleep = SleepState::new([1, 2], 0.0);
        assert_eq!(sleep.sleeping(1, 0.0, window), Some(false));

        // Particle 1 free at t=5, both trapped afterwards.
        let mut status = BTreeMap::new();
        status.insert(1, FreeStatus::Free);
        status.insert(2, FreeStatus::Trapped);
        let report = FreenessReport {
            window: 5,
            status,
            peel_order: vec![],
        };
        sleep.update(&report, 5.0).unwrap();
        let mut trapped = BTreeMap::new();
        trapped.insert(1, FreeStatus::Clusterised);
        trapped.insert(2, FreeStatus::Trapped);
        let trapped_report = FreenessReport {
            window: 5,
            status: trapped,
            peel_order: vec![],
        };
        sleep.update(&trapped_report, 9.0).unwrap();

        // Particle 1 was free at 5: first sleeping at 15. Particle 2 was
        // never free after 0: sleeping from 10.
        assert_eq!(sleep.sleeping(1, 14.9, window), Some(false));
        assert_eq!(sleep.sleeping(1, 15.0, window), Some(true));
        assert_eq!(sleep.sleeping(2, 9.9, window), Some(false));
        assert_eq!(sleep.sleeping(2, 10.0, window), Some(true));
        assert_eq!(sleep.active_ids(12.0, window), vec![1]);
        assert_eq!(sleep.sleeping(3, 0.0, window), None);

        // Unknown particle in a report is a bookkeeping error.
        let mut bogus = BTreeMap::new();
        bogus.insert(99, FreeStatus::Free);
        let bogus_report = FreenessReport {
            window: 5,
            status: bogus,
            peel_order: vec![],
        };
        assert!(sleep.update(&bogus_report, 20.0).is_err());
        // Time must not run backwards.
        assert!(sleep.update(&trapped_report, 1.0).is_err());
    }

    #[test]
    fn preset_asleep_starts_sleeping() {
        let mut sleep = SleepState::new([1, 2], 100.0);
        sleep.preset_asleep(1, 50.0).unwrap();
        assert_eq!(sleep.sleeping(1, 100.0, 50.0), Some(true));
        assert_eq!(sleep.sleeping(2, 100.0, 50.0), Some(false));
        assert!(sleep.preset_asleep(9, 50.0).is_err());
    }
}
