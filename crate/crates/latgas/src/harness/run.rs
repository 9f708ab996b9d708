//! Study execution: every (beta, replica) grid point gets its own RNG
//! stream, an equilibrated subcritical start, a dynamics run to the first
//! exit (or a horizon/event-cap truncation), a short post-exit
//! continuation for the supercritical tube stages, and offline
//! classification — producing one record per replica plus a study summary.

use std::collections::HashSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::clusterise;
use crate::gibbs::{default_burn_in, sample_mur};
use crate::harness::classify::{find_exit, ExitMode};
use crate::harness::plan::{ExperimentPlan, PlanPoint};
use crate::harness::records::{records_to_string, NucleationRecord};
use crate::harness::scaling::{fit_scaling, ScalingReport};
use crate::harness::tube::detect_tube_with;
use crate::kmc::{
    component_volume_capped, find_component_at_least, run_until, write_log, Event, Observer,
    RateTable, StopReason, StopRule,
};
use crate::lattice::{Configuration, Site};
use crate::params::params_to_str;

/// Study-level metadata and aggregates, serialized as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    /// Model parameters in the flat file format (beta = first grid value).
    pub params: String,
    pub betas: Vec<f64>,
    pub replicas: u32,
    pub seed: u64,
    /// Window exponents each record's tube chain was judged at.
    pub deltas: Vec<f64>,
    pub target_side: Option<u32>,
    pub trigger_volume: Option<u32>,
    /// More than half of all records truncated.
    pub truncation_dominated: bool,
    pub report: ScalingReport,
}

/// Everything a study produces.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub records: Vec<NucleationRecord>,
    pub summary: StudySummary,
}

/// Geometry observer for one replica: samples cluster statistics every
/// period, re-measures at every event that changes a cluster of at least
/// [`GEOMETRY_EVENT_VOLUME`] sites, and counts sampled instants that are
/// (impossibly) outside the subcritical set before the exit.
struct StatsObserver {
    period: f64,
    exit_volume: u32,
    max_subcritical: u32,
    exited: bool,
    samples: u64,
    violations: u64,
    max_cluster: u32,
}

/// Cluster volume at which an event counts as "changing a real droplet"
/// and triggers a geometry re-measure.
pub const GEOMETRY_EVENT_VOLUME: u32 = 4;

/// Cap for per-event component scans; far above any reachable volume at
/// desk scale but cheap to hit.
const VOLUME_SCAN_CAP: u32 = 64;

impl StatsObserver {
    fn new(period: f64, exit_volume: u32, max_subcritical: u32) -> Self {
        StatsObserver {
            period,
            exit_volume,
            max_subcritical,
            exited: false,
            samples: 0,
            violations: 0,
            max_cluster: 0,
        }
    }
}

/// Volume of the cluster the moved particle belonged to before the move,
/// reconstructed from the post-move configuration (the origin site counts
/// as occupied, the landing site as empty), capped.
fn pre_move_volume(config: &Configuration, from: Site, to: Site, cap: u32) -> u32 {
    let from = config.wrap(from);
    let to = config.wrap(to);
    let mut seen: HashSet<(i32, i32)> = HashSet::new();
    seen.insert((from.x, from.y));
    let mut stack = vec![from];
    let mut count = 1;
    while let Some(s) = stack.pop() {
        for n in config.neighbors(s) {
            if n == to || !config.occupied(n) {
                continue;
            }
            if seen.insert((n.x, n.y)) {
                count += 1;
                if count >= cap {
                    return count;
                }
                stack.push(n);
            }
        }
    }
    count
}

impl Observer for StatsObserver {
    fn period(&self) -> Option<f64> {
        Some(self.period)
    }

    fn on_sample(&mut self, config: &Configuration, _t: f64) {
        self.samples += 1;
        let volume = clusterise(config).max_volume();
        self.max_cluster = self.max_cluster.max(volume);
        if !self.exited && volume > self.max_subcritical {
            self.violations += 1;
        }
    }

    fn on_event(&mut self, config: &Configuration, event: &Event) {
        let grown = component_volume_capped(config, event.to, VOLUME_SCAN_CAP);
        if grown >= self.exit_volume {
            self.exited = true;
        }
        let shrunk = pre_move_volume(config, event.from, event.to, GEOMETRY_EVENT_VOLUME);
        if grown >= GEOMETRY_EVENT_VOLUME || shrunk >= GEOMETRY_EVENT_VOLUME {
            // Only the landing cluster can have grown; remeasure it.
            self.max_cluster = self.max_cluster.max(grown);
        }
    }
}

/// Runs one replica at one grid point; the trajectory is analyzed (and
/// optionally saved) in place so only the record survives the worker.
/// Pure given its RNG stream.
fn run_replica(
    plan: &ExperimentPlan,
    point: &PlanPoint,
    beta_index: usize,
    replica: u32,
    logs_dir: Option<&Path>,
) -> Result<NucleationRecord> {
    let stream = plan.stream_index(beta_index, replica);
    let mut rng = ChaCha12Rng::seed_from_u64(plan.seed);
    rng.set_stream(stream);

    let mut config = sample_mur(
        &point.params,
        point.side,
        &mut rng,
        default_burn_in(point.side),
        0,
    )?;
    let exit_volume = point.derived.exit_volume();
    if find_component_at_least(&config, exit_volume).is_some() {
        return Err(Error::Bookkeeping(
            "equilibrated start outside the subcritical set".into(),
        ));
    }
    let particles_initial = config.particle_count();

    let mut stats = StatsObserver::new(
        point.sample_period,
        exit_volume,
        point.derived.max_subcritical_volume(),
    );
    let rates = RateTable::new(point.beta * point.params.u);
    let rules = [
        StopRule::exit_from_r(&point.derived),
        StopRule::Horizon(point.horizon),
        StopRule::EventCap(plan.event_cap),
    ];
    let mut log = run_until(&mut config, &rules, &mut [&mut stats], &rates, &mut rng)?;

    let exited = matches!(log.stop, StopReason::ClusterVolume { .. });
    let truncated = !exited;

    if exited && plan.post_exit_scale > 0.0 {
        // Keep simulating long enough to watch the supercritical stages.
        let delta_max = plan
            .effective_deltas()
            .into_iter()
            .fold(point.params.delta_small, f64::max);
        let window_super =
            ((2.0 * point.params.delta - point.params.u + delta_max) * point.beta).exp();
        let extra = plan.post_exit_scale * window_super;
        let events_left = plan.event_cap.saturating_sub(log.events.len() as u64);
        if extra > 0.0 && events_left > 0 {
            let tail_rules = [
                StopRule::Horizon(log.final_time() + extra),
                StopRule::EventCap(events_left),
            ];
            let tail = run_until(&mut config, &tail_rules, &mut [&mut stats], &rates, &mut rng)?;
            log.extend_from(tail);
        }
    }

    let mut record = NucleationRecord {
        beta: point.beta,
        replica,
        stream,
        side: point.side,
        theta_eff: point.theta_eff,
        tau_exit: None,
        exit_mode: ExitMode::Truncated,
        trigger_center: None,
        trigger_volume: None,
        clusters_joined: None,
        events: log.events.len() as u64,
        max_cluster: stats.max_cluster,
        samples: stats.samples,
        subcritical_violations: stats.violations,
        particles_initial,
        particles_final: config.particle_count(),
        tube: None,
        tube_pass: Vec::new(),
    };

    if !truncated {
        let exit = find_exit(&log, &point.derived)?.ok_or_else(|| {
            Error::Bookkeeping("stop rule fired but no exit event found on replay".into())
        })?;
        record.tau_exit = Some(exit.time);
        record.exit_mode = exit.mode;
        record.trigger_volume = Some(exit.volume);
        record.clusters_joined = Some(exit.clusters_joined);
        let tube = detect_tube_with(
            &log,
            &point.params,
            &point.derived,
            plan.target_side,
            plan.trigger_volume,
        )?;
        record.trigger_center = tube.center;
        record.tube_pass = plan
            .effective_deltas()
            .into_iter()
            .map(|delta| {
                let verdict = tube.evaluate(&point.params, Some(delta));
                (delta, verdict.pass, verdict.sub_pass)
            })
            .collect();
        // The stored report carries what the CSV round-trips: stage times
        // and the abort reason. The box itself is derivable (center is the
        // trigger_center column, the side follows from the parameters).
        record.tube = Some(crate::harness::tube::TubeReport {
            box_rect: None,
            center: None,
            ..tube
        });
    }

    if let Some(dir) = logs_dir {
        let name = format!("beta{}_r{:04}.log.gz", point.beta, replica);
        write_log(&log, &dir.join(name))?;
    }
    Ok(record)
}

/// Runs the whole plan: replicas within a temperature execute in parallel,
/// records come out sorted by (beta, replica), and `on_record` fires once
/// per finished record in that order. When the plan names an output
/// directory, `records.csv` and `summary.json` (and per-replica logs if
/// requested) are written there.
pub fn run_study_with(
    plan: &ExperimentPlan,
    mut on_record: impl FnMut(&NucleationRecord),
) -> Result<StudyOutput> {
    plan.validate()?;
    if plan.save_logs && plan.out_dir.is_none() {
        return Err(Error::Param("save_logs needs an `out` directory".into()));
    }
    let points = plan.points()?;
    let logs_dir = plan.out_dir.as_ref().map(|d| d.join("logs"));
    if let Some(dir) = &logs_dir {
        if plan.save_logs {
            std::fs::create_dir_all(dir)?;
        }
    }

    let save_dir = if plan.save_logs { logs_dir.as_deref() } else { None };
    let mut records = Vec::with_capacity(points.len() * plan.replicas as usize);
    for (beta_index, point) in points.iter().enumerate() {
        let mut batch: Vec<NucleationRecord> = (0..plan.replicas)
            .into_par_iter()
            .map(|replica| run_replica(plan, point, beta_index, replica, save_dir))
            .collect::<Result<Vec<_>>>()?;
        batch.sort_by_key(|r| r.replica);
        for record in batch {
            on_record(&record);
            records.push(record);
        }
    }

    let crit_energy = points
        .first()
        .map(|p| p.derived.crit_energy)
        .unwrap_or(f64::NAN);
    let report = fit_scaling(&records, crit_energy);
    let truncated = records
        .iter()
        .filter(|r| r.exit_mode == ExitMode::Truncated)
        .count();
    let summary = StudySummary {
        params: params_to_str(&plan.params),
        betas: plan.betas.clone(),
        replicas: plan.replicas,
        seed: plan.seed,
        deltas: plan.effective_deltas(),
        target_side: plan.target_side,
        trigger_volume: plan.trigger_volume,
        truncation_dominated: 2 * truncated > records.len(),
        report,
    };
    let output = StudyOutput { records, summary };
    if let Some(dir) = &plan.out_dir {
        write_study(&output, dir)?;
    }
    Ok(output)
}

/// [`run_study_with`] without a progress callback.
pub fn run_study(plan: &ExperimentPlan) -> Result<StudyOutput> {
    run_study_with(plan, |_| {})
}

/// Writes `records.csv` and `summary.json` into `dir`.
pub fn write_study(output: &StudyOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.csv"), records_to_string(&output.records)?)?;
    let json = serde_json::to_string_pretty(&output.summary)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}

/// Reads a study back from `dir` (the inverse of [`write_study`]).
pub fn read_study(dir: &Path) -> Result<StudyOutput> {
    let records =
        crate::harness::records::records_from_str(&std::fs::read_to_string(dir.join("records.csv"))?)?;
    let text = std::fs::read_to_string(dir.join("summary.json"))?;
    let summary: StudySummary = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("summary.json: {e}"),
    })?;
    Ok(StudyOutput { records, summary })
}
