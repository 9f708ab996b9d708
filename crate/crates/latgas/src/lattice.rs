//! Periodic occupancy configurations with stable particle identities.
//!
//! A [`Configuration`] is an `L x L` torus of occupied/empty cells, a
//! continuous clock, and a particle id on every occupied cell. The energy is
//! `-U` per nearest-neighbour occupied bond; it is tracked incrementally as
//! an integer bond count (exact, drift-free) and only converted to a real
//! number when multiplied by `beta`. Distances on the torus use the
//! minimum-image l-infinity convention throughout.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// A lattice site. Coordinates are normalized into `[0, L)` by every
/// [`Configuration`] operation that accepts a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Minimum-image displacement of one coordinate on a circle of length `l`:
/// the representative of `dx` in `(-l/2, l/2]`.
pub fn wrap_diff(dx: i32, l: u32) -> i32 {
    let l = l as i32;
    let mut d = dx.rem_euclid(l);
    if d > l / 2 {
        d -= l;
    }
    d
}

/// Minimum-image l-infinity distance between two sites on the `l`-torus.
pub fn linf_dist(a: Site, b: Site, l: u32) -> u32 {
    let dx = wrap_diff(a.x - b.x, l).unsigned_abs();
    let dy = wrap_diff(a.y - b.y, l).unsigned_abs();
    dx.max(dy)
}

/// Periodic `L x L` occupancy grid with particle identities and a clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    l: u32,
    /// `0` = empty, otherwise the particle id (ids start at 1).
    cells: Vec<u32>,
    n: u32,
    time: f64,
    /// Number of occupied nearest-neighbour bonds, counted as torus edges
    /// (on `L >= 3` this is the number of occupied pairs; tracked
    /// incrementally and verified against brute-force recounts in tests).
    bonds: i64,
    next_id: u32,
}

impl Configuration {
    /// An empty torus. `L >= 2` is required (`L = 1` would make every site
    /// its own neighbour).
    pub fn empty(l: u32) -> Result<Self> {
        if l < 2 {
            return Err(Error::Param(format!("lattice side must be >= 2, got {l}")));
        }
        Ok(Configuration {
            l,
            cells: vec![0; (l as usize) * (l as usize)],
            n: 0,
            time: 0.0,
            bonds: 0,
            next_id: 1,
        })
    }

    pub fn side(&self) -> u32 {
        self.l
    }

    pub fn particle_count(&self) -> u32 {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Advances the clock; `dt` must be nonnegative (time is nondecreasing).
    pub fn advance_clock(&mut self, dt: f64) {
        debug_assert!(dt >= 0.0, "clock must not run backwards");
        self.time += dt;
    }

    /// Number of occupied nearest-neighbour bonds.
    pub fn bond_count(&self) -> i64 {
        self.bonds
    }

    /// Energy in integer units of `U` (i.e. `H/U = -bonds`).
    pub fn energy_units(&self) -> i64 {
        -self.bonds
    }

    /// Energy `H = -U * bonds`.
    pub fn energy(&self, u: f64) -> f64 {
        -u * self.bonds as f64
    }

    /// Normalizes a site into `[0, L)^2`.
    pub fn wrap(&self, s: Site) -> Site {
        let l = self.l as i32;
        Site::new(s.x.rem_euclid(l), s.y.rem_euclid(l))
    }

    fn idx(&self, s: Site) -> usize {
        let w = self.wrap(s);
        w.y as usize * self.l as usize + w.x as usize
    }

    /// The four nearest neighbours (wrapped). On `L = 2` opposite directions
    /// coincide; counts deliberately keep that multiplicity so incremental
    /// and from-scratch energies agree.
    pub fn neighbors(&self, s: Site) -> [Site; 4] {
        [
            self.wrap(Site::new(s.x + 1, s.y)),
            self.wrap(Site::new(s.x - 1, s.y)),
            self.wrap(Site::new(s.x, s.y + 1)),
            self.wrap(Site::new(s.x, s.y - 1)),
        ]
    }

    pub fn occupied(&self, s: Site) -> bool {
        self.cells[self.idx(s)] != 0
    }

    pub fn particle_at(&self, s: Site) -> Option<u32> {
        match self.cells[self.idx(s)] {
            0 => None,
            id => Some(id),
        }
    }

    /// Number of occupied nearest neighbours (0..=4, with multiplicity).
    pub fn occupied_neighbor_count(&self, s: Site) -> u32 {
        self.neighbors(s).iter().filter(|&&q| self.occupied(q)).count() as u32
    }

    /// Adds a particle with a freshly assigned id; errors if the site is
    /// occupied. Returns the id.
    pub fn add_particle(&mut self, s: Site) -> Result<u32> {
        let id = self.next_id;
        self.add_particle_with_id(s, id)?;
        Ok(id)
    }

    /// Adds a particle with a caller-chosen id. Id uniqueness is the
    /// caller's responsibility (the snapshot parser checks it); occupancy is
    /// checked here.
    pub fn add_particle_with_id(&mut self, s: Site, id: u32) -> Result<()> {
        if id == 0 {
            return Err(Error::Bookkeeping("particle id 0 is reserved".into()));
        }
        let i = self.idx(s);
        if self.cells[i] != 0 {
            return Err(Error::Move(format!("site {} is already occupied", self.wrap(s))));
        }
        self.bonds += self.occupied_neighbor_count(s) as i64;
        self.cells[i] = id;
        self.n += 1;
        self.next_id = self.next_id.max(id + 1);
        Ok(())
    }

    /// Removes the particle at `s`, returning its id.
    pub fn remove_particle(&mut self, s: Site) -> Result<u32> {
        let i = self.idx(s);
        let id = self.cells[i];
        if id == 0 {
            return Err(Error::Move(format!("site {} is empty", self.wrap(s))));
        }
        self.cells[i] = 0;
        self.bonds -= self.occupied_neighbor_count(s) as i64;
        self.n -= 1;
        Ok(id)
    }

    /// Validates that `from -> to` is an executable exchange: nearest
    /// neighbours, `from` occupied, `to` empty.
    pub fn check_move(&self, from: Site, to: Site) -> Result<()> {
        let from = self.wrap(from);
        let to = self.wrap(to);
        if !self.neighbors(from).contains(&to) {
            return Err(Error::Move(format!("{from} and {to} are not nearest neighbours")));
        }
        if !self.occupied(from) {
            return Err(Error::Move(format!("move source {from} is empty")));
        }
        if self.occupied(to) {
            return Err(Error::Move(format!("move target {to} is occupied")));
        }
        Ok(())
    }

    /// Energy change of the exchange in integer units of `U`:
    /// `dH/U = n_from - n_to`, where `n_from` counts occupied neighbours of
    /// `from` excluding `to` and `n_to` counts occupied neighbours of `to`
    /// excluding `from`. Always in `-3..=3`.
    pub fn delta_energy_units(&self, from: Site, to: Site) -> Result<i32> {
        self.check_move(from, to)?;
        Ok(self.delta_energy_units_unchecked(from, to))
    }

    /// As [`Self::delta_energy_units`] without validation; callers must
    /// guarantee the move is executable (hot path of the event loop).
    pub fn delta_energy_units_unchecked(&self, from: Site, to: Site) -> i32 {
        let from = self.wrap(from);
        let to = self.wrap(to);
        let mut n_from = 0i32;
        for q in self.neighbors(from) {
            if q != to && self.occupied(q) {
                n_from += 1;
            }
        }
        let mut n_to = 0i32;
        for q in self.neighbors(to) {
            if q != from && self.occupied(q) {
                n_to += 1;
            }
        }
        n_from - n_to
    }

    /// Executes the exchange: the particle (and its id) moves `from -> to`;
    /// the bond count is updated incrementally; `N` and the clock are
    /// untouched.
    pub fn apply_exchange(&mut self, from: Site, to: Site) -> Result<()> {
        self.check_move(from, to)?;
        let dh = self.delta_energy_units_unchecked(from, to);
        let (i, j) = (self.idx(from), self.idx(to));
        self.cells[j] = self.cells[i];
        self.cells[i] = 0;
        self.bonds -= dh as i64;
        Ok(())
    }

    /// All particles as `(id, site)` pairs, in row-major site order.
    pub fn particles(&self) -> Vec<(u32, Site)> {
        let mut out = Vec::with_capacity(self.n as usize);
        for y in 0..self.l as i32 {
            for x in 0..self.l as i32 {
                let s = Site::new(x, y);
                if let Some(id) = self.particle_at(s) {
                    out.push((id, s));
                }
            }
        }
        out
    }

    /// All occupied sites in row-major order.
    pub fn occupied_sites(&self) -> Vec<Site> {
        self.particles().into_iter().map(|(_, s)| s).collect()
    }

    /// Recomputes the bond count from scratch (test oracle and validator).
    pub fn recount_bonds(&self) -> i64 {
        let mut bonds = 0i64;
        for y in 0..self.l as i32 {
            for x in 0..self.l as i32 {
                let s = Site::new(x, y);
                if self.occupied(s) {
                    // Count +x and +y edges only, once each.
                    if self.occupied(self.wrap(Site::new(x + 1, y))) {
                        bonds += 1;
                    }
                    if self.occupied(self.wrap(Site::new(x, y + 1))) {
                        bonds += 1;
                    }
                }
            }
        }
        bonds
    }

    /// A copy with every particle translated by `(dx, dy)` (same ids).
    pub fn translated(&self, dx: i32, dy: i32) -> Configuration {
        let mut out = Configuration::empty(self.l).expect("same side is valid");
        out.time = self.time;
        for (id, s) in self.particles() {
            out.add_particle_with_id(Site::new(s.x + dx, s.y + dy), id)
                .expect("translation preserves distinctness");
        }
        out
    }
}

/// Serializes a configuration: header `L <int> N <int> t <float>`, then one
/// `id x y` line per particle sorted by id. Deterministic byte-for-byte.
pub fn snapshot_write(config: &Configuration) -> String {
    let mut parts = config.particles();
    parts.sort_by_key(|&(id, _)| id);
    let mut out = format!("L {} N {} t {}\n", config.side(), config.particle_count(), config.time());
    for (id, s) in parts {
        out.push_str(&format!("{} {} {}\n", id, s.x, s.y));
    }
    out
}

/// Parses the snapshot format produced by [`snapshot_write`]. Extra
/// whitespace is tolerated; duplicate ids or sites, out-of-range
/// coordinates, and count mismatches are parse errors with line numbers.
pub fn snapshot_read(text: &str) -> Result<Configuration> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty snapshot".into(),
    })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "L" || toks[2] != "N" || toks[4] != "t" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `L <int> N <int> t <float>`, got `{header}`"),
        });
    }
    let l: u32 = toks[1].parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad L `{}`", toks[1]),
    })?;
    let n: u32 = toks[3].parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad N `{}`", toks[3]),
    })?;
    let t: f64 = toks[5].parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad t `{}`", toks[5]),
    })?;

    let mut config = Configuration::empty(l).map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    config.set_time(t);
    let mut seen_ids: HashSet<u32> = HashSet::new();
    let mut seen_sites: HashMap<Site, usize> = HashMap::new();
    let mut count = 0u32;
    for (idx, raw) in lines {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `id x y`, got `{body}`"),
            });
        }
        let id: u32 = toks[0].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad id `{}`", toks[0]),
        })?;
        let x: i32 = toks[1].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad x `{}`", toks[1]),
        })?;
        let y: i32 = toks[2].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad y `{}`", toks[2]),
        })?;
        if x < 0 || y < 0 || x >= l as i32 || y >= l as i32 {
            return Err(Error::Parse {
                line,
                msg: format!("site ({x}, {y}) outside [0, {l})^2"),
            });
        }
        if !seen_ids.insert(id) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate particle id {id}"),
            });
        }
        let site = Site::new(x, y);
        if let Some(prev) = seen_sites.insert(site, line) {
            return Err(Error::Parse {
                line,
                msg: format!("site {site} already used on line {prev}"),
            });
        }
        config.add_particle_with_id(site, id).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        count += 1;
    }
    if count != n {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header says N = {n} but {count} particle lines follow"),
        });
    }
    Ok(config)
}
