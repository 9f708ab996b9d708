//! Thickened neighbourhoods, the cloud aggregation map with its shrinking
//! radius schedule, and the active-particles-per-box diagnostic.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::cluster::Rectangle;
use crate::geometry::freeness::SleepState;
use crate::lattice::{Configuration, Site};

/// `[A, s]`: all sites within closed l-infinity distance `exp((s/2) beta)`
/// of `A` on the torus. The boolean is set when the radius reaches `L/2`
/// and the result saturates to the whole torus.
pub fn thicken(sites: &[Site], s: f64, beta: f64, l: u32) -> (BTreeSet<Site>, bool) {
    assert!(s >= 0.0, "thickening exponent must be nonnegative");
    let radius_real = ((s / 2.0) * beta).exp();
    let li = l as i32;
    if radius_real >= l as f64 / 2.0 {
        let mut all = BTreeSet::new();
        for y in 0..li {
            for x in 0..li {
                all.insert(Site::new(x, y));
            }
        }
        return (all, true);
    }
    let r = radius_real.floor() as i32;
    let mut out = BTreeSet::new();
    for z in sites {
        for dy in -r..=r {
            for dx in -r..=r {
                out.insert(Site::new(
                    (z.x + dx).rem_euclid(li),
                    (z.y + dy).rem_euclid(li),
                ));
            }
        }
    }
    (out, false)
}

/// Radius schedule `r_j = exp((beta/2) (theta - kappa sum_{i<=j} 2^{-i}))`,
/// i.e. `r_0 = exp((theta - kappa) beta / 2)` and each step multiplies by
/// `exp(-(kappa / 2^j) beta / 2)`. Decreasing in `j` with limit
/// `exp((theta - 2 kappa) beta / 2)`.
pub fn cloud_schedule(j: u32, theta: f64, kappa: f64, beta: f64) -> f64 {
    let partial: f64 = 2.0 - 0.5f64.powi(j as i32);
    ((beta / 2.0) * (theta - kappa * partial)).exp()
}

/// Fixed point of the merge map at distance `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudSet {
    pub rectangles: Vec<Rectangle>,
    pub sigma: f64,
}

/// Iterates the merge map: repeatedly groups rectangles whose pairwise
/// torus distance is below `sigma` (transitively) and replaces each group
/// by the circumscribed rectangle of its union, until nothing merges.
/// The output rectangles are pairwise at distance >= `sigma`.
pub fn aggregate_clouds(rects: &[Rectangle], sigma: f64, l: u32) -> Result<CloudSet> {
    if sigma <= 0.0 {
        return Err(Error::Param("cloud merge distance must be positive".into()));
    }
    let mut current: Vec<Rectangle> = rects.to_vec();
    current.sort();
    loop {
        let n = current.len();
        if n <= 1 {
            break;
        }
        // Union-find over the proximity graph.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        let mut merged_any = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if (current[i].distance(&current[j], l) as f64) < sigma {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                        merged_any = true;
                    }
                }
            }
        }
        if !merged_any {
            break;
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<Rectangle>> =
            std::collections::BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(current[i]);
        }
        current = groups
            .into_values()
            .map(|g| union_rectangle(&g, l))
            .collect::<Result<Vec<_>>>()?;
        current.sort();
    }
    Ok(CloudSet {
        rectangles: current,
        sigma,
    })
}

/// Circumscribed rectangle of a union of rectangles on the torus: per axis
/// the minimal covering arc of the covered coordinates.
pub fn union_rectangle(rects: &[Rectangle], l: u32) -> Result<Rectangle> {
    assert!(!rects.is_empty());
    let (x0, xlen) = arc_cover(rects.iter().map(|r| (r.x0, r.width())), l)?;
    let (y0, ylen) = arc_cover(rects.iter().map(|r| (r.y0, r.height())), l)?;
    Ok(Rectangle::new(x0, y0, x0 + xlen - 1, y0 + ylen - 1))
}

/// Minimal covering arc of a set of circular intervals `(start, len)`.
fn arc_cover(intervals: impl Iterator<Item = (i32, u32)>, l: u32) -> Result<(i32, i32)> {
    let li = l as i32;
    let mut covered = vec![false; l as usize];
    for (start, len) in intervals {
        for k in 0..len as i32 {
            covered[((start + k).rem_euclid(li)) as usize] = true;
        }
    }
    // Longest run of uncovered positions (circularly).
    let total: usize = covered.iter().filter(|c| **c).count();
    if total == l as usize {
        return Err(Error::WrapAmbiguity(
            "cloud rectangles cover a full torus axis".into(),
        ));
    }
    let mut best_gap = 0i32;
    let mut best_start = 0i32;
    for i in 0..li {
        if covered[i as usize] || !covered[((i - 1).rem_euclid(li)) as usize] {
            continue; // only start counting at the head of a gap
        }
        let mut g = 0;
        while !covered[((i + g) % li) as usize] {
            g += 1;
        }
        if g > best_gap {
            best_gap = g;
            best_start = (i + g) % li;
        }
    }
    let len = li - best_gap;
    if 2 * (len - 1) >= li {
        return Err(Error::WrapAmbiguity(format!(
            "cloud rectangle spans {len} of {l} along one axis"
        )));
    }
    Ok((best_start, len))
}

/// Tile side for the active-box diagnostic: `ceil(exp(S beta / 2))`,
/// clamped to the torus side.
pub fn active_box_side(s_exponent: f64, beta: f64, l: u32) -> u32 {
    let side = ((s_exponent * beta) / 2.0).exp().ceil();
    if side >= l as f64 {
        l
    } else {
        (side as u32).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveBoxReport {
    pub side: u32,
    pub tiles_per_axis: u32,
    /// Maximum number of active particles found in one tile.
    pub max_active: u32,
    /// The paper-style regularity condition: at most three per box.
    pub condition_holds: bool,
}

/// Tiles the torus with boxes of the given side and counts active (not
/// sleeping) particles per tile.
pub fn active_box_diagnostic(
    config: &Configuration,
    sleep: &SleepState,
    t: f64,
    sleep_window: f64,
    side: u32,
) -> ActiveBoxReport {
    let l = config.side();
    let side = side.clamp(1, l);
    let tiles_per_axis = l.div_ceil(side);
    let mut counts = vec![0u32; (tiles_per_axis * tiles_per_axis) as usize];
    for (pid, site) in config.particles() {
        if sleep.sleeping(pid, t, sleep_window) == Some(false) {
            let tx = (site.x as u32) / side;
            let ty = (site.y as u32) / side;
            counts[(ty * tiles_per_axis + tx) as usize] += 1;
        }
    }
    let max_active = counts.into_iter().max().unwrap_or(0);
    ActiveBoxReport {
        side,
        tiles_per_axis,
        max_active,
        condition_holds: max_active <= 3,
    }
}
