//! Study-level aggregation: per-temperature exit-time quantiles, exit-mode
//! fractions and tube pass-rates, and the least-squares fit of
//! `ln(median tau_exit)` against `beta` with its predicted exponent.

use serde::{Deserialize, Serialize};

use crate::harness::classify::ExitMode;
use crate::harness::records::NucleationRecord;

/// Minimum non-truncated records per temperature, and minimum distinct
/// temperatures, for the regression to be attempted.
pub const MIN_EXITED_FOR_FIT: usize = 20;
pub const MIN_BETAS_FOR_FIT: usize = 2;

/// Tube verdict rates at one window exponent, over growth exits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeRates {
    pub delta: f64,
    /// Denominator: growth exits carrying a verdict at this delta.
    pub growth_exits: u64,
    pub full_pass_rate: Option<f64>,
    pub sub_pass_rate: Option<f64>,
}

/// Aggregates for one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSummary {
    pub beta: f64,
    pub side: u32,
    pub theta_eff: f64,
    pub replicas: u64,
    pub exited: u64,
    pub truncated: u64,
    pub growth: u64,
    pub coalescence: u64,
    /// coalescence / (growth + coalescence)
    pub coalescence_fraction: Option<f64>,
    pub tau_q10: Option<f64>,
    pub tau_q25: Option<f64>,
    pub tau_median: Option<f64>,
    pub tau_q75: Option<f64>,
    pub tau_q90: Option<f64>,
    pub mean_events: f64,
    pub tube: Vec<TubeRates>,
}

/// Least-squares line through `(beta, ln median tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Predicted exponent: critical energy minus the mean effective box
    /// exponent of the fitted temperatures.
    pub target_slope: f64,
    pub points: usize,
}

/// The full aggregation: per-temperature summaries plus the fit when the
/// data supports one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub per_beta: Vec<BetaSummary>,
    pub fit: Option<ScalingFit>,
}

/// Type-7 (linear interpolation) quantile of an already-sorted sample.
fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn rate(hits: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

fn summarize_beta(beta: f64, records: &[&NucleationRecord]) -> BetaSummary {
    let mut taus: Vec<f64> = records.iter().filter_map(|r| r.tau_exit).collect();
    taus.sort_by(|a, b| a.partial_cmp(b).expect("finite exit times"));
    let growth = records
        .iter()
        .filter(|r| r.exit_mode == ExitMode::Growth)
        .count() as u64;
    let coalescence = records
        .iter()
        .filter(|r| r.exit_mode == ExitMode::Coalescence)
        .count() as u64;
    let truncated = records.len() as u64 - growth - coalescence;

    // Collect the window exponents seen in any record's verdict list.
    let mut deltas: Vec<f64> = Vec::new();
    for r in records.iter() {
        for (d, _, _) in &r.tube_pass {
            if !deltas.iter().any(|x| x == d) {
                deltas.push(*d);
            }
        }
    }
    deltas.sort_by(|a, b| a.partial_cmp(b).expect("finite deltas"));
    let tube = deltas
        .into_iter()
        .map(|delta| {
            let mut n = 0;
            let mut full = 0;
            let mut sub = 0;
            for r in records.iter() {
                if r.exit_mode != ExitMode::Growth {
                    continue;
                }
                if let Some((_, p, s)) = r.tube_pass.iter().find(|(d, _, _)| *d == delta) {
                    n += 1;
                    full += *p as u64;
                    sub += *s as u64;
                }
            }
            TubeRates {
                delta,
                growth_exits: n,
                full_pass_rate: rate(full, n),
                sub_pass_rate: rate(sub, n),
            }
        })
        .collect();

    BetaSummary {
        beta,
        side: records.first().map_or(0, |r| r.side),
        theta_eff: records.first().map_or(0.0, |r| r.theta_eff),
        replicas: records.len() as u64,
        exited: taus.len() as u64,
        truncated,
        growth,
        coalescence,
        coalescence_fraction: rate(coalescence, growth + coalescence),
        tau_q10: quantile_sorted(&taus, 0.10),
        tau_q25: quantile_sorted(&taus, 0.25),
        tau_median: quantile_sorted(&taus, 0.50),
        tau_q75: quantile_sorted(&taus, 0.75),
        tau_q90: quantile_sorted(&taus, 0.90),
        mean_events: records.iter().map(|r| r.events as f64).sum::<f64>()
            / (records.len().max(1) as f64),
        tube,
    }
}

/// Aggregates records into per-temperature summaries and, when at least
/// [`MIN_BETAS_FOR_FIT`] temperatures have [`MIN_EXITED_FOR_FIT`]
/// non-truncated records each, fits `ln(median tau)` against `beta`.
/// `crit_energy` is the energy barrier the slope is compared to.
pub fn fit_scaling(records: &[NucleationRecord], crit_energy: f64) -> ScalingReport {
    let mut betas: Vec<f64> = Vec::new();
    for r in records {
        if !betas.iter().any(|b| *b == r.beta) {
            betas.push(r.beta);
        }
    }
    betas.sort_by(|a, b| a.partial_cmp(b).expect("finite betas"));

    let per_beta: Vec<BetaSummary> = betas
        .iter()
        .map(|&beta| {
            let group: Vec<&NucleationRecord> =
                records.iter().filter(|r| r.beta == beta).collect();
            summarize_beta(beta, &group)
        })
        .collect();

    let usable: Vec<&BetaSummary> = per_beta
        .iter()
        .filter(|s| s.exited as usize >= MIN_EXITED_FOR_FIT && s.tau_median.is_some())
        .collect();
    let fit = if usable.len() >= MIN_BETAS_FOR_FIT {
        let n = usable.len() as f64;
        let xs: Vec<f64> = usable.iter().map(|s| s.beta).collect();
        let ys: Vec<f64> = usable
            .iter()
            .map(|s| s.tau_median.expect("filtered above").ln())
            .collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum();
        let slope = sxy / sxx;
        let mean_theta_eff = usable.iter().map(|s| s.theta_eff).sum::<f64>() / n;
        Some(ScalingFit {
            slope,
            intercept: my - slope * mx,
            target_slope: crit_energy - mean_theta_eff,
            points: usable.len(),
        })
    } else {
        None
    };

    ScalingReport { per_beta, fit }
}
