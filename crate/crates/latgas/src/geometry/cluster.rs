//! Clusters, circumscribed rectangles, quasi-square labels, and the
//! subcritical-set membership predicates.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Site};
use crate::params::DerivedParams;

/// Axis-aligned rectangle on the torus, stored with an unwrapped anchor:
/// `(x0, y0)` lies in `[0, L)^2`, the inclusive opposite corner `(x1, y1)`
/// may exceed `L - 1`, and each side length is at most `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rectangle {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rectangle {
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Rectangle {
        assert!(x1 >= x0 && y1 >= y0, "corners out of order");
        Rectangle { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> u32 {
        (self.x1 - self.x0 + 1) as u32
    }

    pub fn height(&self) -> u32 {
        (self.y1 - self.y0 + 1) as u32
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    /// Side lengths sorted ascending.
    pub fn dims(&self) -> (u32, u32) {
        let (w, h) = (self.width(), self.height());
        (w.min(h), w.max(h))
    }

    /// Largest l-infinity distance between two of its sites.
    pub fn diameter(&self) -> u32 {
        self.width().max(self.height()) - 1
    }

    /// Torus membership test.
    pub fn contains(&self, site: Site, l: u32) -> bool {
        let l = l as i32;
        let dx = (site.x - self.x0).rem_euclid(l);
        let dy = (site.y - self.y0).rem_euclid(l);
        dx <= self.x1 - self.x0 && dy <= self.y1 - self.y0
    }

    /// All covered sites, wrapped into `[0, L)^2`, deduplicated, sorted.
    pub fn sites(&self, l: u32) -> Vec<Site> {
        let li = l as i32;
        let mut out = HashSet::new();
        for y in self.y0..=self.y1 {
            for x in self.x0..=self.x1 {
                out.insert(Site::new(x.rem_euclid(li), y.rem_euclid(li)));
            }
        }
        let mut v: Vec<Site> = out.into_iter().collect();
        v.sort();
        v
    }

    /// l-infinity distance between the two rectangles as site sets on the
    /// torus (0 when they intersect).
    pub fn distance(&self, other: &Rectangle, l: u32) -> u32 {
        let gx = axis_gap(self.x0, self.width(), other.x0, other.width(), l);
        let gy = axis_gap(self.y0, self.height(), other.y0, other.height(), l);
        gx.max(gy)
    }
}

/// Circular-interval gap along one axis: the minimal number of steps
/// separating the two intervals (0 when they share a position).
fn axis_gap(a_start: i32, a_len: u32, b_start: i32, b_len: u32, l: u32) -> u32 {
    let l = l as i32;
    let (a_len, b_len) = (a_len as i32, b_len as i32);
    let mut best = i32::MAX;
    for k in [-l, 0, l] {
        let lo = (b_start - a_start).rem_euclid(l) + k;
        let hi = lo + b_len - 1;
        // Plane gap between [0, a_len-1] and [lo, hi].
        let gap = (lo - (a_len - 1)).max(0 - hi).max(0);
        best = best.min(gap);
    }
    best as u32
}

/// Smallest rectangle containing `sites` on the torus of side `l`.
///
/// The unwrap is per axis: the covering arc is the complement of the
/// largest circular gap between occupied coordinates. A site set whose
/// covering rectangle has l-infinity diameter at least `L/2` cannot be
/// unwrapped unambiguously and is rejected.
pub fn circumscribed_rectangle(sites: &[Site], l: u32) -> Result<Rectangle> {
    if sites.is_empty() {
        return Err(Error::Param("circumscribed rectangle of no sites".into()));
    }
    let (x0, xlen) = axis_cover(sites.iter().map(|s| s.x), l)?;
    let (y0, ylen) = axis_cover(sites.iter().map(|s| s.y), l)?;
    Ok(Rectangle::new(x0, y0, x0 + xlen - 1, y0 + ylen - 1))
}

/// Minimal covering circular arc of a coordinate multiset: `(start, len)`.
fn axis_cover(coords: impl Iterator<Item = i32>, l: u32) -> Result<(i32, i32)> {
    let li = l as i32;
    let mut pos: Vec<i32> = coords.map(|c| c.rem_euclid(li)).collect();
    pos.sort_unstable();
    pos.dedup();
    // Largest circular gap between consecutive occupied coordinates.
    let mut gap_len = li - (pos[pos.len() - 1] - pos[0]) - 1;
    let mut start = pos[0];
    for w in pos.windows(2) {
        let g = w[1] - w[0] - 1;
        if g > gap_len {
            gap_len = g;
            start = w[1];
        }
    }
    let len = li - gap_len;
    if 2 * (len - 1) >= li {
        return Err(Error::WrapAmbiguity(format!(
            "site set spans {len} of {l} along one axis"
        )));
    }
    Ok((start, len))
}

/// A connected occupied component with at least two sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Wrapped member sites, sorted.
    pub sites: Vec<Site>,
    /// Circumscribed rectangle; `None` when the component wraps too far
    /// around the torus to be unwrapped unambiguously.
    pub rc: Option<Rectangle>,
    /// `(l1, l2)` with `l1 <= l2 <= l1 + 1` when the sites exactly fill a
    /// quasi-square rectangle.
    pub quasi_square: Option<(u32, u32)>,
}

impl Cluster {
    pub fn volume(&self) -> u32 {
        self.sites.len() as u32
    }
}

/// The clusterised decomposition: clusters (components of size >= 2, in
/// row-major order of their first site) and singles (occupied sites with
/// no occupied neighbour).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clusters {
    pub clusters: Vec<Cluster>,
    pub singles: Vec<Site>,
}

impl Clusters {
    pub fn max_volume(&self) -> u32 {
        self.clusters.iter().map(Cluster::volume).max().unwrap_or(0)
    }

    /// The cluster containing `site`, if any.
    pub fn cluster_at(&self, site: Site, l: u32) -> Option<&Cluster> {
        let li = l as i32;
        let s = Site::new(site.x.rem_euclid(li), site.y.rem_euclid(li));
        self.clusters.iter().find(|c| c.sites.binary_search(&s).is_ok())
    }
}

/// Decomposes the occupied sites into clusters and singles.
pub fn clusterise(config: &Configuration) -> Clusters {
    let l = config.side();
    let mut visited: HashSet<Site> = HashSet::new();
    let mut clusters = Vec::new();
    let mut singles = Vec::new();
    let mut occupied = config.occupied_sites();
    occupied.sort();
    for s in occupied {
        if visited.contains(&s) {
            continue;
        }
        if config.occupied_neighbor_count(s) == 0 {
            singles.push(s);
            continue;
        }
        let mut comp = vec![s];
        visited.insert(s);
        let mut i = 0;
        while i < comp.len() {
            for q in config.neighbors(comp[i]) {
                if config.occupied(q) && visited.insert(q) {
                    comp.push(q);
                }
            }
            i += 1;
        }
        comp.sort();
        clusters.push(make_cluster(comp, l));
    }
    Clusters { clusters, singles }
}

fn make_cluster(sites: Vec<Site>, l: u32) -> Cluster {
    let rc = circumscribed_rectangle(&sites, l).ok();
    let quasi_square = rc.and_then(|r| {
        let (d1, d2) = r.dims();
        (r.area() == sites.len() as u64 && d2 - d1 <= 1).then_some((d1, d2))
    });
    Cluster {
        sites,
        rc,
        quasi_square,
    }
}

/// True when every cluster volume is at most `ell_c (ell_c - 1) + 2`.
pub fn in_r(config: &Configuration, derived: &DerivedParams) -> bool {
    clusterise(config).max_volume() <= derived.max_subcritical_volume()
}

/// True when the bound of [`in_r`] holds except for at most one cluster,
/// whose volume must stay below `exception_bound`.
///
/// The spec'd bound is `lambda(beta)/8` (see [`in_rprime`]); the explicit
/// form exists because that quantity only exceeds the subcritical volume
/// at inverse temperatures far beyond floating-point range for the default
/// sqrt-log choice of `lambda`.
pub fn in_rprime_with_bound(
    config: &Configuration,
    max_subcritical: u32,
    exception_bound: f64,
) -> bool {
    let mut over = 0u32;
    for c in &clusterise(config).clusters {
        if c.volume() > max_subcritical {
            over += 1;
            if over > 1 || (c.volume() as f64) >= exception_bound {
                return false;
            }
        }
    }
    true
}

/// [`in_rprime_with_bound`] with the exception bound `lambda(beta)/8`.
pub fn in_rprime(config: &Configuration, derived: &DerivedParams) -> bool {
    in_rprime_with_bound(
        config,
        derived.max_subcritical_volume(),
        derived.lambda_beta / 8.0,
    )
}
