//! Growth-tube detection: the observation box around the first
//! supercritical cluster, the last pre-exit and first post-exit times at
//! which each quasi-square stage is present inside it, and the evaluation
//! of the full chain of tube inequalities with its two time windows.
//!
//! Detection is window-free: it records raw stage times, so a single
//! detection pass can be re-evaluated under several window exponents.

use crate::error::{Error, Result};
use crate::geometry::{circumscribed_rectangle, clusterise, Rectangle};
use crate::harness::classify::{find_exit, find_first_cluster_of};
use crate::kmc::{Replayer, TrajectoryLog};
use crate::lattice::{Configuration, Site};
use crate::params::{DerivedParams, ModelParams};

/// Raw tube observables for one trajectory: the observation box, the exit
/// time, and per-stage presence times. `last_sub[i]` is the end of the last
/// interval before (or at) the exit during which a quasi-square with
/// `sub_dims[i]` exists wholly inside the box; `first_super[i]` is the
/// first time at or after the exit at which `super_dims[i]` appears there.
/// `None` encodes "never" (an empty supremum or infimum).
#[derive(Debug, Clone, PartialEq)]
pub struct TubeReport {
    /// Observation box, absent when the trigger cluster's circumscribed
    /// rectangle is wrap-ambiguous on a small torus.
    pub box_rect: Option<Rectangle>,
    /// Rounded baricenter of the trigger cluster (the box center).
    pub center: Option<Site>,
    /// Human-readable reason when detection could not run.
    pub aborted: Option<String>,
    pub tau_exit: f64,
    pub sub_dims: Vec<(u32, u32)>,
    pub last_sub: Vec<Option<f64>>,
    pub super_dims: Vec<(u32, u32)>,
    pub first_super: Vec<Option<f64>>,
}

/// Outcome of checking the chain of tube inequalities at one window
/// exponent. `sub_pass` covers the subcritical half only (window, strict
/// stage order, strictly before the exit); `pass` additionally requires the
/// supercritical half within its window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainVerdict {
    pub pass: bool,
    pub sub_pass: bool,
    /// First failed stage, when any.
    pub fail_stage: Option<String>,
    /// Pre-exit window `e^{(theta + delta) beta}`.
    pub window_sub: f64,
    /// Post-exit window `e^{(2 Delta - U + delta) beta}`.
    pub window_super: f64,
}

/// Successor of quasi-square dimensions along the growth ladder:
/// a square gains a column, an oblong completes to the next square.
pub fn next_dims(d: (u32, u32)) -> (u32, u32) {
    if d.0 == d.1 {
        (d.0, d.1 + 1)
    } else {
        (d.0 + 1, d.1)
    }
}

/// Subcritical stages `(2,2) .. (ell_c - 1, ell_c)` in ladder order.
pub fn subcritical_dims(ell_c: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut d = (2, 2);
    while d != (ell_c, ell_c) {
        out.push(d);
        d = next_dims(d);
    }
    out
}

/// Supercritical stages `(ell_c, ell_c) .. (target, target)` in ladder order.
pub fn supercritical_dims(ell_c: u32, target_side: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut d = (ell_c, ell_c);
    while d.1 <= target_side {
        out.push(d);
        d = next_dims(d);
    }
    out
}

/// Default final square side for the supercritical half of the chain:
/// `ell_c + 2`, or the growth target `sqrt(lambda_beta / 8)` when that is
/// larger (it is not at desk-scale volumes).
pub fn default_target_side(derived: &DerivedParams) -> u32 {
    let grown = (derived.lambda_beta / 8.0).sqrt().floor() as u32;
    (derived.ell_c + 2).max(grown)
}

/// Floor-centered square box of area `min(e^{theta beta}, L^2/4)` around
/// `center`.
fn observation_box(center: Site, params: &ModelParams, l: u32) -> Rectangle {
    let area = (params.theta * params.beta)
        .exp()
        .min(l as f64 * l as f64 / 4.0);
    let side = (area.sqrt().floor() as i32).max(1);
    let x0 = center.x - (side - 1) / 2;
    let y0 = center.y - (side - 1) / 2;
    Rectangle::new(x0, y0, x0 + side - 1, y0 + side - 1)
}

/// Rounded mean position of `sites`, unwrapped relative to their
/// circumscribed rectangle's anchor corner.
fn baricenter(sites: &[Site], rc: &Rectangle, l: u32) -> Site {
    let li = l as i32;
    let (mut sx, mut sy) = (0.0, 0.0);
    for s in sites {
        sx += (s.x - rc.x0).rem_euclid(li) as f64;
        sy += (s.y - rc.y0).rem_euclid(li) as f64;
    }
    let n = sites.len() as f64;
    Site::new(
        rc.x0 + (sx / n).round() as i32,
        rc.y0 + (sy / n).round() as i32,
    )
}

/// Presence flags: for each entry of `dims`, is a cluster that is exactly a
/// quasi-square of those dimensions currently contained in `boxr`?
fn scan_presence(
    config: &Configuration,
    boxr: &Rectangle,
    dims: &[(u32, u32)],
    out: &mut [bool],
) {
    let l = config.side();
    out.fill(false);
    for cluster in &clusterise(config).clusters {
        let Some(d) = cluster.quasi_square else {
            continue;
        };
        let Some(i) = dims.iter().position(|&w| w == d) else {
            continue;
        };
        if !out[i] && cluster.sites.iter().all(|&s| boxr.contains(s, l)) {
            out[i] = true;
        }
    }
}

/// Detects the tube observables of one trajectory. Errors if the
/// trajectory never leaves the subcritical set; returns an aborted report
/// when the observation box cannot be placed (wrap-ambiguous trigger).
/// `target_side` defaults to [`default_target_side`].
pub fn detect_tube(
    log: &TrajectoryLog,
    params: &ModelParams,
    derived: &DerivedParams,
    target_side: Option<u32>,
) -> Result<TubeReport> {
    detect_tube_with(log, params, derived, target_side, None)
}

/// [`detect_tube`] with the box anchored at the first cluster of
/// `trigger_volume` sites instead of at the exit trigger. Stage times and
/// windows still pivot on the exit from the subcritical set; only the
/// observation box moves. (The threshold that defines the box's anchor
/// cluster is stated inconsistently across definitions of the limit
/// object; this knob keeps both readings runnable.)
pub fn detect_tube_with(
    log: &TrajectoryLog,
    params: &ModelParams,
    derived: &DerivedParams,
    target_side: Option<u32>,
    trigger_volume: Option<u32>,
) -> Result<TubeReport> {
    let exit = find_exit(log, derived)?.ok_or_else(|| {
        Error::Analysis("tube analysis needs a trajectory that leaves the subcritical set".into())
    })?;
    let target = target_side.unwrap_or_else(|| default_target_side(derived));
    if target < derived.ell_c {
        return Err(Error::Param(format!(
            "target side {target} below the critical side {}",
            derived.ell_c
        )));
    }
    let sub_dims = subcritical_dims(derived.ell_c);
    let super_dims = supercritical_dims(derived.ell_c, target);
    let l = log.initial.side();

    let aborted_report = |reason: String, tau_exit: f64| TubeReport {
        box_rect: None,
        center: None,
        aborted: Some(reason),
        tau_exit,
        last_sub: vec![None; sub_dims.len()],
        sub_dims: sub_dims.clone(),
        first_super: vec![None; super_dims.len()],
        super_dims: super_dims.clone(),
    };

    let anchor = match trigger_volume {
        None => exit.clone(),
        Some(v) if v == derived.exit_volume() => exit.clone(),
        Some(v) => match find_first_cluster_of(log, v)? {
            Some(hit) => hit,
            None => {
                return Ok(aborted_report(
                    format!("trigger volume {v} never reached"),
                    exit.time,
                ));
            }
        },
    };

    let rc = match circumscribed_rectangle(&anchor.cluster_sites, l) {
        Ok(rc) => rc,
        Err(Error::WrapAmbiguity(msg)) => {
            return Ok(aborted_report(
                format!("observation box undetermined: {msg}"),
                exit.time,
            ));
        }
        Err(e) => return Err(e),
    };
    let center = baricenter(&anchor.cluster_sites, &rc, l);
    let boxr = observation_box(center, params, l);
    // Moves touching this margin can change which clusters lie inside the
    // box; anything farther cannot.
    let expanded = Rectangle::new(boxr.x0 - 2, boxr.y0 - 2, boxr.x1 + 2, boxr.y1 + 2);

    let all_dims: Vec<(u32, u32)> = sub_dims.iter().chain(&super_dims).copied().collect();
    let n_sub = sub_dims.len();
    let mut present = vec![false; all_dims.len()];
    let mut fresh = vec![false; all_dims.len()];
    let mut last_sub: Vec<Option<f64>> = vec![None; n_sub];
    let mut first_super: Vec<Option<f64>> = vec![None; super_dims.len()];

    let mut replay = Replayer::new(log);
    scan_presence(&replay.config, &boxr, &all_dims, &mut present);
    let mut index = 0usize;
    while let Some(ev) = replay.advance() {
        let relevant = expanded.contains(ev.from, l) || expanded.contains(ev.to, l);
        if relevant {
            scan_presence(&replay.config, &boxr, &all_dims, &mut fresh);
            let t = ev.time;
            for i in 0..all_dims.len() {
                if present[i] && !fresh[i] && i < n_sub && t <= exit.time {
                    last_sub[i] = Some(t);
                }
                if !present[i] && fresh[i] && i >= n_sub && t >= exit.time {
                    first_super[i - n_sub].get_or_insert(t);
                }
            }
            present.copy_from_slice(&fresh);
        }
        if index == exit.event_index {
            // Stages still present at the exit instant: the supremum of
            // pre-exit presence times is the exit time itself, and the
            // infimum of post-exit ones likewise.
            for i in 0..n_sub {
                if present[i] {
                    last_sub[i] = Some(exit.time);
                }
            }
            for i in n_sub..all_dims.len() {
                if present[i] {
                    first_super[i - n_sub].get_or_insert(exit.time);
                }
            }
        }
        index += 1;
    }

    Ok(TubeReport {
        box_rect: Some(boxr),
        center: Some(center),
        aborted: None,
        tau_exit: exit.time,
        sub_dims,
        last_sub,
        super_dims,
        first_super,
    })
}

impl TubeReport {
    /// Checks the chain of tube inequalities at window exponent `delta`
    /// (defaulting to the params' scaling-window exponent).
    pub fn evaluate(&self, params: &ModelParams, delta: Option<f64>) -> ChainVerdict {
        let delta = delta.unwrap_or(params.delta_small);
        let window_sub = ((params.theta + delta) * params.beta).exp();
        let window_super = ((2.0 * params.delta - params.u + delta) * params.beta).exp();
        if let Some(reason) = &self.aborted {
            return ChainVerdict {
                pass: false,
                sub_pass: false,
                fail_stage: Some(reason.clone()),
                window_sub,
                window_super,
            };
        }
        evaluate_chain(
            &self.sub_dims,
            &self.last_sub,
            &self.super_dims,
            &self.first_super,
            self.tau_exit,
            window_sub,
            window_super,
        )
    }

    /// `(dims, is_subcritical, time)` triples in ladder order, for
    /// serialization.
    pub fn entries(&self) -> Vec<((u32, u32), bool, Option<f64>)> {
        let mut out = Vec::with_capacity(self.sub_dims.len() + self.super_dims.len());
        for (d, t) in self.sub_dims.iter().zip(&self.last_sub) {
            out.push((*d, true, *t));
        }
        for (d, t) in self.super_dims.iter().zip(&self.first_super) {
            out.push((*d, false, *t));
        }
        out
    }
}

/// The chain, strict throughout:
/// `tau_exit - window_sub < last_sub[0] < .. < last_sub[end] < tau_exit
///  < first_super[0] < .. < first_super[end] < tau_exit + window_super`,
/// with a missing time failing the stage that needs it.
pub fn evaluate_chain(
    sub_dims: &[(u32, u32)],
    last_sub: &[Option<f64>],
    super_dims: &[(u32, u32)],
    first_super: &[Option<f64>],
    tau_exit: f64,
    window_sub: f64,
    window_super: f64,
) -> ChainVerdict {
    let name = |d: (u32, u32)| format!("{}x{}", d.0, d.1);
    let mut fail_stage = None;
    let mut fail = |stage: String, flag: &mut bool| {
        *flag = false;
        if fail_stage.is_none() {
            fail_stage = Some(stage);
        }
    };

    let mut sub_pass = true;
    let mut prev = tau_exit - window_sub;
    let mut prev_label = "the pre-exit window start".to_string();
    for (d, t) in sub_dims.iter().zip(last_sub) {
        match t {
            None => fail(
                format!("no {} quasi-square in the box before exit", name(*d)),
                &mut sub_pass,
            ),
            Some(t) => {
                if *t <= prev {
                    fail(
                        format!("last {} not after {}", name(*d), prev_label),
                        &mut sub_pass,
                    );
                }
                prev = *t;
                prev_label = format!("last {}", name(*d));
            }
        }
    }
    if sub_pass && prev >= tau_exit {
        fail(
            format!("{prev_label} not strictly before the exit"),
            &mut sub_pass,
        );
    }

    let mut super_pass = true;
    let mut prev = tau_exit;
    let mut prev_label = "the exit".to_string();
    for (d, t) in super_dims.iter().zip(first_super) {
        match t {
            None => fail(
                format!("no {} quasi-square in the box after exit", name(*d)),
                &mut super_pass,
            ),
            Some(t) => {
                if *t <= prev {
                    fail(
                        format!("first {} not after {}", name(*d), prev_label),
                        &mut super_pass,
                    );
                }
                prev = *t;
                prev_label = format!("first {}", name(*d));
            }
        }
    }
    if super_pass && prev >= tau_exit + window_super {
        fail(
            format!("{prev_label} beyond the post-exit window"),
            &mut super_pass,
        );
    }

    ChainVerdict {
        pass: sub_pass && super_pass,
        sub_pass,
        fail_stage,
        window_sub,
        window_super,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmc::{Event, StopReason};
    use crate::params::{derive, ModelParams};

    fn standard() -> (ModelParams, DerivedParams) {
        let p = ModelParams::standard(1.0, 1.6, 3.0, 2.4);
        let d = derive(&p).unwrap();
        (p, d)
    }

    fn config_with(l: u32, sites: &[(i32, i32)]) -> Configuration {
        let mut c = Configuration::empty(l).unwrap();
        for &(x, y) in sites {
            c.add_particle(Site::new(x, y)).unwrap();
        }
        c
    }

    fn log_with_moves(
        initial: Configuration,
        moves: &[((i32, i32), (i32, i32), f64)],
    ) -> TrajectoryLog {
        let mut config = initial.clone();
        let mut events = Vec::new();
        for &((fx, fy), (tx, ty), t) in moves {
            let (from, to) = (Site::new(fx, fy), Site::new(tx, ty));
            let dh = config.delta_energy_units(from, to).unwrap();
            config.apply_exchange(from, to).unwrap();
            let pid = config.particle_at(config.wrap(to)).unwrap();
            events.push(Event {
                time: t,
                from,
                to,
                pid,
                dh_units: dh,
            });
        }
        let final_time = events.last().map_or(0.0, |e| e.time);
        TrajectoryLog {
            initial,
            events,
            stop: StopReason::Horizon { time: final_time },
            truncated: false,
        }
    }

    /// 2x2 square seed at (10,10), feeder block east, two lone walkers.
    fn fixture_sites() -> Vec<(i32, i32)> {
        vec![
            (10, 10),
            (11, 10),
            (10, 11),
            (11, 11), // the seed square
            (13, 10),
            (13, 11),
            (14, 10),
            (14, 11), // feeder block
            (10, 13), // walker that triggers the exit
        ]
    }

    /// Scripted moves visiting 2x2 -> 2x3 -> exit -> 3x3.
    fn fixture_moves() -> Vec<((i32, i32), (i32, i32), f64)> {
        vec![
            ((13, 10), (12, 10), 100.0), // seed becomes a 5-site ell
            ((13, 11), (12, 11), 200.0), // full 2x3
            ((14, 10), (13, 10), 300.0), // 7 sites: 2x3 presence ends
            ((14, 11), (13, 11), 400.0), // 2x4 block, volume 8
            ((10, 13), (10, 12), 500.0), // volume 9: the exit
            // march the two surplus east particles around to complete 3x3
            ((13, 11), (13, 12), 510.0),
            ((13, 12), (12, 12), 520.0),
            ((13, 10), (13, 11), 530.0),
            ((13, 11), (13, 12), 540.0),
            ((13, 12), (13, 13), 550.0),
            ((13, 13), (12, 13), 560.0),
            ((12, 13), (11, 13), 570.0),
            ((11, 13), (11, 12), 600.0), // full 3x3 at (10..12)^2
        ]
    }

    #[test]
    fn ladder_dims() {
        assert_eq!(subcritical_dims(3), vec![(2, 2), (2, 3)]);
        assert_eq!(
            supercritical_dims(3, 5),
            vec![(3, 3), (3, 4), (4, 4), (4, 5), (5, 5)]
        );
        assert_eq!(subcritical_dims(5), vec![(2, 2), (2, 3), (3, 3), (3, 4), (4, 4), (4, 5)]);
        assert_eq!(supercritical_dims(3, 3), vec![(3, 3)]);
    }

    #[test]
    fn scripted_growth_passes_full_chain() {
        let (p, d) = standard();
        let log = log_with_moves(config_with(32, &fixture_sites()), &fixture_moves());
        let report = detect_tube(&log, &p, &d, Some(3)).unwrap();
        assert!(report.aborted.is_none());
        assert_eq!(report.tau_exit, 500.0);
        assert_eq!(report.sub_dims, vec![(2, 2), (2, 3)]);
        assert_eq!(report.last_sub, vec![Some(100.0), Some(300.0)]);
        assert_eq!(report.super_dims, vec![(3, 3)]);
        assert_eq!(report.first_super, vec![Some(600.0)]);
        let verdict = report.evaluate(&p, None);
        assert!(verdict.pass, "fail stage: {:?}", verdict.fail_stage);
        assert!(verdict.sub_pass);
        assert!(verdict.fail_stage.is_none());
    }

    #[test]
    fn skipping_a_stage_fails_and_names_it() {
        let (p, d) = standard();
        // Same seed, but the feeders glue on as an irregular clump: the
        // 2x3 quasi-square never forms before the exit.
        let moves = vec![
            ((13, 10), (12, 10), 100.0), // 5-site ell, 2x2 gone
            ((14, 10), (13, 10), 300.0), // reconnects block: 8-site clump
            ((10, 13), (10, 12), 500.0), // volume 9: exit
        ];
        let log = log_with_moves(config_with(32, &fixture_sites()), &moves);
        let report = detect_tube(&log, &p, &d, Some(3)).unwrap();
        assert_eq!(report.last_sub, vec![Some(100.0), None]);
        let verdict = report.evaluate(&p, None);
        assert!(!verdict.pass);
        assert!(!verdict.sub_pass);
        let stage = verdict.fail_stage.unwrap();
        assert!(stage.contains("2x3"), "stage was: {stage}");
    }

    #[test]
    fn quasi_squares_outside_the_box_are_ignored() {
        let (p, d) = standard();
        // A static far square would pin 2x2 presence to the end of time if
        // the box filter failed.
        let mut sites = fixture_sites();
        sites.extend_from_slice(&[(25, 25), (26, 25), (25, 26), (26, 26)]);
        let log = log_with_moves(config_with(32, &sites), &fixture_moves());
        let report = detect_tube(&log, &p, &d, Some(3)).unwrap();
        let boxr = report.box_rect.unwrap();
        assert!(!boxr.contains(Site::new(25, 25), 32));
        assert_eq!(report.last_sub, vec![Some(100.0), Some(300.0)]);
        assert!(report.evaluate(&p, None).pass);
    }

    #[test]
    fn box_has_min_area_and_is_centered() {
        let (p, d) = standard();
        let log = log_with_moves(config_with(32, &fixture_sites()), &fixture_moves());
        let report = detect_tube(&log, &p, &d, Some(3)).unwrap();
        let boxr = report.box_rect.unwrap();
        // min(e^{7.2}, 32^2/4) = 256 -> side 16, floor-centered at the
        // trigger cluster's rounded mean position (11, 11).
        assert_eq!(boxr.dims(), (16, 16));
        assert_eq!((boxr.x0, boxr.y0), (4, 4));
    }

    #[test]
    fn wrap_ambiguous_trigger_aborts_without_failing() {
        let (p, d) = standard();
        // A 7-site bar spanning most of an 8-torus plus two attachments:
        // the trigger cluster's rectangle is wrap-ambiguous.
        let sites = vec![
            (0, 3),
            (1, 3),
            (2, 3),
            (3, 3),
            (4, 3),
            (5, 3),
            (6, 3), // bar
            (1, 5),
            (3, 5), // walkers
        ];
        let log = log_with_moves(
            config_with(8, &sites),
            &[((1, 5), (1, 4), 1.0), ((3, 5), (3, 4), 2.0)],
        );
        let report = detect_tube(&log, &p, &d, Some(3)).unwrap();
        assert!(report.box_rect.is_none());
        let reason = report.aborted.clone().unwrap();
        assert!(reason.contains("box"), "reason: {reason}");
        let verdict = report.evaluate(&p, None);
        assert!(!verdict.pass);
        assert_eq!(verdict.fail_stage.as_deref(), Some(reason.as_str()));
    }

    #[test]
    fn chain_rejects_window_and_order_violations() {
        let sub = [(2, 2), (2, 3)];
        let sup = [(3, 3)];
        let ok = |last: &[Option<f64>], first: &[Option<f64>]| {
            evaluate_chain(&sub, last, &sup, first, 1000.0, 300.0, 500.0)
        };
        // Baseline passes.
        let v = ok(&[Some(800.0), Some(900.0)], &[Some(1100.0)]);
        assert!(v.pass && v.sub_pass);
        // 2x2 left the box before the pre-exit window opened.
        let v = ok(&[Some(600.0), Some(900.0)], &[Some(1100.0)]);
        assert!(!v.pass && !v.sub_pass);
        assert!(v.fail_stage.unwrap().contains("2x2"));
        // Stages out of order.
        let v = ok(&[Some(900.0), Some(800.0)], &[Some(1100.0)]);
        assert!(!v.sub_pass);
        assert!(v.fail_stage.unwrap().contains("2x3"));
        // Last subcritical stage exactly at the exit: strict, fails.
        let v = ok(&[Some(800.0), Some(1000.0)], &[Some(1100.0)]);
        assert!(!v.sub_pass);
        // Supercritical stage at the exit instant: strict, fails, but the
        // subcritical half still passes.
        let v = ok(&[Some(800.0), Some(900.0)], &[Some(1000.0)]);
        assert!(!v.pass && v.sub_pass);
        assert!(v.fail_stage.unwrap().contains("3x3"));
        // Supercritical stage beyond its window.
        let v = ok(&[Some(800.0), Some(900.0)], &[Some(1500.0)]);
        assert!(!v.pass && v.sub_pass);
        // Missing supercritical stage.
        let v = ok(&[Some(800.0), Some(900.0)], &[None]);
        assert!(!v.pass && v.sub_pass);
        assert!(v.fail_stage.unwrap().contains("after exit"));
    }

    #[test]
    fn default_target_uses_critical_side_plus_two_at_desk_scale() {
        let (_, d) = standard();
        assert_eq!(default_target_side(&d), 5);
    }

    #[test]
    fn pass_implies_ordered_finite_subcritical_times() {
        // The record invariant: whenever the verdict passes, the stored
        // subcritical times are finite and nondecreasing up to the exit.
        let (p, d) = standard();
        let log = log_with_moves(config_with(32, &fixture_sites()), &fixture_moves());
        let report = detect_tube(&log, &p, &d, Some(3)).unwrap();
        let verdict = report.evaluate(&p, None);
        assert!(verdict.pass);
        let mut prev = f64::NEG_INFINITY;
        for t in &report.last_sub {
            let t = t.expect("pass implies finite subcritical stage times");
            assert!(t >= prev);
            prev = t;
        }
        assert!(prev <= report.tau_exit);
    }
}
