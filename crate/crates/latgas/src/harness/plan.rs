//! Experiment plans: a model parameter set, a grid of inverse
//! temperatures, replica counts, seeding, stop rules and output options,
//! parsed from the same `key = value` file format as parameter files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::params::{
    derive, lattice_side, parse_params_str, DerivedParams, ModelParams,
};

/// Default cap on applied events per replica; hitting it truncates the
/// record (and bounds the in-memory event log).
pub const DEFAULT_EVENT_CAP: u64 = 5_000_000;

/// Default number of observer samples across the horizon when no explicit
/// sampling period is given.
pub const DEFAULT_SAMPLES_PER_RUN: f64 = 256.0;

/// A full study description. Plan files mix model-parameter keys
/// (`U`, `Delta`, `Theta`, tuning exponents) with plan keys:
///
/// ```text
/// betas = 2.5, 3.0, 3.5   # inverse-temperature grid (required)
/// replicas = 80           # per beta (required)
/// seed = 7                # master seed (default 1)
/// out = study_dir         # output directory for records + summary
/// horizon = 1e6           # absolute clock horizon (default: scaling law)
/// horizon_scale = 1.0     # multiplier on the default horizon
/// event_cap = 5000000
/// sample_period = 50.0    # observer cadence (default horizon/256)
/// post_exit_scale = 1.05  # fraction of the post-exit window simulated
/// target_side = 5         # final square side for the tube chain
/// deltas = 0.05           # window exponents to evaluate the tube at
/// trigger_volume = 9      # cluster volume that places the analysis box
/// save_logs = false       # keep per-replica event logs (gzip)
/// ```
///
/// `beta` itself is rejected: the grid comes from `betas`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// Model parameters; the `beta` field holds the first grid value and is
    /// overridden per grid point.
    pub params: ModelParams,
    pub betas: Vec<f64>,
    pub replicas: u32,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Absolute horizon override; `None` derives it per beta.
    pub horizon: Option<f64>,
    pub horizon_scale: f64,
    pub event_cap: u64,
    /// Observer sampling period; `None` derives horizon/256 per beta.
    pub sample_period: Option<f64>,
    /// Fraction of the largest post-exit tube window simulated past the
    /// exit so the supercritical stages can be observed.
    pub post_exit_scale: f64,
    pub target_side: Option<u32>,
    /// Window exponents at which each record's tube chain is judged;
    /// empty means the params' own delta.
    pub deltas: Vec<f64>,
    /// Cluster volume that centers the observation box (defaults to the
    /// exit threshold).
    pub trigger_volume: Option<u32>,
    pub save_logs: bool,
}

/// One (beta, lattice, stop-rule) grid point of a plan.
#[derive(Debug, Clone)]
pub struct PlanPoint {
    pub beta: f64,
    pub params: ModelParams,
    pub derived: DerivedParams,
    pub side: u32,
    pub theta_eff: f64,
    pub horizon: f64,
    pub sample_period: f64,
}

const PLAN_KEYS: &[&str] = &[
    "betas",
    "replicas",
    "seed",
    "out",
    "horizon",
    "horizon_scale",
    "event_cap",
    "sample_period",
    "post_exit_scale",
    "target_side",
    "deltas",
    "trigger_volume",
    "save_logs",
];

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{key}: expected a number, got `{value}`"),
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_f64(line, key, v.trim()))
        .collect()
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{key}: expected an integer, got `{value}`"),
    })
}

impl ExperimentPlan {
    pub fn parse_str(text: &str) -> Result<ExperimentPlan> {
        let mut params_text = String::new();
        let mut betas: Option<Vec<f64>> = None;
        let mut replicas: Option<u32> = None;
        let mut seed = 1u64;
        let mut out_dir = None;
        let mut horizon = None;
        let mut horizon_scale = 1.0;
        let mut event_cap = DEFAULT_EVENT_CAP;
        let mut sample_period = None;
        let mut post_exit_scale = 1.05;
        let mut target_side = None;
        let mut deltas = Vec::new();
        let mut trigger_volume = None;
        let mut save_logs = false;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                params_text.push_str(raw);
                params_text.push('\n');
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if key == "beta" {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "plans take a `betas` grid, not a single `beta`".into(),
                });
            }
            if !PLAN_KEYS.contains(&key) {
                params_text.push_str(raw);
                params_text.push('\n');
                continue;
            }
            match key {
                "betas" => betas = Some(parse_list(line_no, key, value)?),
                "replicas" => replicas = Some(parse_int(line_no, key, value)?),
                "seed" => seed = parse_int(line_no, key, value)?,
                "out" => out_dir = Some(PathBuf::from(value)),
                "horizon" => horizon = Some(parse_f64(line_no, key, value)?),
                "horizon_scale" => horizon_scale = parse_f64(line_no, key, value)?,
                "event_cap" => event_cap = parse_int(line_no, key, value)?,
                "sample_period" => sample_period = Some(parse_f64(line_no, key, value)?),
                "post_exit_scale" => post_exit_scale = parse_f64(line_no, key, value)?,
                "target_side" => target_side = Some(parse_int(line_no, key, value)?),
                "deltas" => deltas = parse_list(line_no, key, value)?,
                "trigger_volume" => trigger_volume = Some(parse_int(line_no, key, value)?),
                "save_logs" => {
                    save_logs = match value {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        other => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("save_logs: expected true/false, got `{other}`"),
                            })
                        }
                    }
                }
                _ => unreachable!("key list is exhaustive"),
            }
        }

        let betas = betas.ok_or(Error::Parse {
            line: 0,
            msg: "plan needs a `betas` grid".into(),
        })?;
        if betas.is_empty() {
            return Err(Error::Param("plan needs at least one beta".into()));
        }
        let replicas = replicas.ok_or(Error::Parse {
            line: 0,
            msg: "plan needs a `replicas` count".into(),
        })?;

        params_text.push_str(&format!("beta = {}\n", betas[0]));
        let params = parse_params_str(&params_text)?;

        let plan = ExperimentPlan {
            params,
            betas,
            replicas,
            seed,
            out_dir,
            horizon,
            horizon_scale,
            event_cap,
            sample_period,
            post_exit_scale,
            target_side,
            deltas,
            trigger_volume,
            save_logs,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<ExperimentPlan> {
        let text = std::fs::read_to_string(path)?;
        ExperimentPlan::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Param("replicas must be at least 1".into()));
        }
        if !self.betas.iter().all(|b| b.is_finite() && *b > 0.0) {
            return Err(Error::Param("betas must be positive".into()));
        }
        if self.horizon_scale <= 0.0 || self.post_exit_scale < 0.0 {
            return Err(Error::Param(
                "horizon_scale must be positive and post_exit_scale nonnegative".into(),
            ));
        }
        if let Some(h) = self.horizon {
            if !(h >= 0.0) {
                return Err(Error::Param("horizon must be nonnegative".into()));
            }
        }
        if !self.deltas.iter().all(|d| d.is_finite() && *d >= 0.0) {
            return Err(Error::Param("deltas must be nonnegative".into()));
        }
        // Every grid point must be an admissible parameter set.
        for &beta in &self.betas {
            let mut p = self.params.clone();
            p.beta = beta;
            p.validate()?;
        }
        Ok(())
    }

    /// The window exponents records are judged at (params' delta when the
    /// plan lists none).
    pub fn effective_deltas(&self) -> Vec<f64> {
        if self.deltas.is_empty() {
            vec![self.params.delta_small]
        } else {
            self.deltas.clone()
        }
    }

    /// Default horizon at one grid point: the nucleation scale
    /// `e^{(Gamma - theta_eff + 3 delta) beta}` times `horizon_scale`.
    pub fn default_horizon(&self, derived: &DerivedParams, beta: f64, theta_eff: f64) -> f64 {
        let exponent = derived.crit_energy - theta_eff + 3.0 * self.params.delta_small;
        (exponent * beta).exp() * self.horizon_scale
    }

    /// Resolves the full grid: per beta, the lattice side, the effective
    /// box exponent, the horizon, and the sampling period.
    pub fn points(&self) -> Result<Vec<PlanPoint>> {
        let mut out = Vec::with_capacity(self.betas.len());
        for &beta in &self.betas {
            let mut params = self.params.clone();
            params.beta = beta;
            params.validate()?;
            let derived = derive(&params)?;
            let side = lattice_side(params.theta, beta, derived.ell_c)?;
            let horizon = self
                .horizon
                .unwrap_or_else(|| self.default_horizon(&derived, beta, side.theta_eff));
            let sample_period = self
                .sample_period
                .unwrap_or(horizon / DEFAULT_SAMPLES_PER_RUN)
                .max(f64::MIN_POSITIVE);
            out.push(PlanPoint {
                beta,
                params,
                derived,
                side: side.l,
                theta_eff: side.theta_eff,
                horizon,
                sample_period,
            });
        }
        Ok(out)
    }

    /// Global replica index, used as the RNG stream for one (beta,
    /// replica) pair: distinct for every pair by construction.
    pub fn stream_index(&self, beta_index: usize, replica: u32) -> u64 {
        beta_index as u64 * self.replicas as u64 + replica as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = "\
# a desk-scale study
U = 1.0
Delta = 1.6
Theta = 2.4
betas = 2.5, 3.0, 3.5
replicas = 8
seed = 42
out = study
deltas = 0.05, 0.1
";

    #[test]
    fn parses_plan_and_params_keys_side_by_side() {
        let plan = ExperimentPlan::parse_str(PLAN).unwrap();
        assert_eq!(plan.betas, vec![2.5, 3.0, 3.5]);
        assert_eq!(plan.replicas, 8);
        assert_eq!(plan.seed, 42);
        assert_eq!(plan.out_dir.as_deref(), Some(Path::new("study")));
        assert_eq!(plan.params.u, 1.0);
        assert_eq!(plan.params.delta, 1.6);
        assert_eq!(plan.params.beta, 2.5); // first grid value
        assert_eq!(plan.effective_deltas(), vec![0.05, 0.1]);
        assert!(!plan.save_logs);
    }

    #[test]
    fn a_single_beta_key_is_rejected() {
        let err = ExperimentPlan::parse_str("U=1\nDelta=1.6\nTheta=2.4\nbeta=3\nreplicas=1")
            .unwrap_err();
        assert!(err.to_string().contains("betas"), "err: {err}");
    }

    #[test]
    fn missing_grid_or_replicas_is_rejected() {
        assert!(ExperimentPlan::parse_str("U=1\nDelta=1.6\nTheta=2.4\nreplicas=1").is_err());
        assert!(ExperimentPlan::parse_str("U=1\nDelta=1.6\nTheta=2.4\nbetas=3").is_err());
        let err =
            ExperimentPlan::parse_str("U=1\nDelta=1.6\nTheta=2.4\nbetas=3\nreplicas=0")
                .unwrap_err();
        assert!(err.to_string().contains("replicas"), "err: {err}");
    }

    #[test]
    fn invalid_regime_fails_at_any_grid_point() {
        // Delta out of the strict window must fail even though the first
        // grid point alone would parse.
        let err = ExperimentPlan::parse_str("U=1\nDelta=2.1\nTheta=2.4\nbetas=3\nreplicas=1");
        assert!(err.is_err());
    }

    #[test]
    fn points_resolve_side_horizon_and_period() {
        let plan = ExperimentPlan::parse_str(PLAN).unwrap();
        let points = plan.points().unwrap();
        assert_eq!(points.len(), 3);
        // sides follow round(e^{Theta beta / 2}) with the 2 ell_c floor
        assert_eq!(points[0].side, 20);
        assert_eq!(points[1].side, 37);
        assert_eq!(points[2].side, 67);
        for pt in &points {
            let expected =
                ((pt.derived.crit_energy - pt.theta_eff + 3.0 * plan.params.delta_small)
                    * pt.beta)
                    .exp();
            assert!((pt.horizon / expected - 1.0).abs() < 1e-12);
            assert!((pt.sample_period - pt.horizon / 256.0).abs() < 1e-12);
            assert_eq!(pt.params.beta, pt.beta);
        }
    }

    #[test]
    fn explicit_horizon_and_period_override_the_scaling_law() {
        let text = format!("{PLAN}horizon = 0\nsample_period = 10\n");
        let plan = ExperimentPlan::parse_str(&text).unwrap();
        let points = plan.points().unwrap();
        assert!(points.iter().all(|p| p.horizon == 0.0));
        assert!(points.iter().all(|p| p.sample_period == 10.0));
    }

    #[test]
    fn stream_indices_are_distinct_across_the_grid() {
        let plan = ExperimentPlan::parse_str(PLAN).unwrap();
        let mut seen = std::collections::HashSet::new();
        for b in 0..plan.betas.len() {
            for r in 0..plan.replicas {
                assert!(seen.insert(plan.stream_index(b, r)));
            }
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn unknown_params_keys_still_error() {
        let err = ExperimentPlan::parse_str(
            "U=1\nDelta=1.6\nTheta=2.4\nbetas=3\nreplicas=1\nbogus_knob=2\n",
        );
        assert!(err.is_err());
    }
}
