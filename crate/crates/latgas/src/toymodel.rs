//! Caricature processes for the nucleation mechanism: the birth-death
//! chain on quasi-square dimensions (droplet growth/shrinkage reduced to
//! one coordinate), exact absorption solvers for it, and the aggregated
//! arrival process in which fresh droplet histories appear at Poisson
//! times and race to criticality.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::params::{derive, ModelParams};

/// How the failure state `(0,0)` behaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMode {
    /// `(0,0)` re-enters the ladder with the empty-state resistance.
    Cycling,
    /// `(0,0)` is absorbing (each history dies at most once).
    History,
}

/// One-dimensional birth-death chain over quasi-square dimensions
/// `[(0,0), (2,2), (2,3), (3,3), ..., (ell_c, ell_c)]`, with successor
/// map `(l1, l2) + 1 = (l2, l1 + 1)`. Whatever probability mass is not
/// spent moving up or down is a self-loop.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub states: Vec<(u32, u32)>,
    /// Probability of moving to the next state, per state index.
    pub up: Vec<f64>,
    /// Probability of moving to the previous state, per state index.
    pub down: Vec<f64>,
    pub absorbing: Vec<bool>,
    pub mode: ChainMode,
}

impl ChainSpec {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: (u32, u32)) -> Result<usize> {
        self.states
            .iter()
            .position(|&s| s == state)
            .ok_or_else(|| Error::Domain(format!("({},{}) is not a chain state", state.0, state.1)))
    }

    /// Indices of the non-absorbing states, in ladder order.
    pub fn transient(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.absorbing[i]).collect()
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.len() {
            let total = self.up[i] + self.down[i];
            if !(0.0..=1.0 + 1e-15).contains(&total) || self.up[i] < 0.0 || self.down[i] < 0.0 {
                return Err(Error::Param(format!(
                    "state ({},{}) has up+down = {total}, not a probability",
                    self.states[i].0, self.states[i].1
                )));
            }
        }
        Ok(())
    }

    /// One step from state index `i`; returns the new index.
    pub fn step<R: Rng>(&self, i: usize, rng: &mut R) -> usize {
        if self.absorbing[i] {
            return i;
        }
        let x: f64 = rng.random();
        if x < self.up[i] {
            i + 1
        } else if x < self.up[i] + self.down[i] {
            i - 1
        } else {
            i
        }
    }
}

/// Largest of the per-state minimal inverse temperatures at which
/// `u(s) + d(s) = 1`, found by bisection on each strictly decreasing
/// per-state sum. Returns an error if some state never admits a valid
/// probability (a non-positive rate exponent).
fn minimal_admissible_beta(exponents: &[(f64, Option<f64>)]) -> Result<f64> {
    let mut beta_min: f64 = 0.0;
    for &(a, b) in exponents {
        let sum = |beta: f64| (-a * beta).exp() + b.map_or(0.0, |b| (-b * beta).exp());
        if a <= 0.0 || b.is_some_and(|b| b <= 0.0) {
            return Err(Error::Param(
                "a transition rate exponent is non-positive; no inverse temperature \
                 makes the chain stochastic"
                    .into(),
            ));
        }
        if sum(f64::MIN_POSITIVE) <= 1.0 {
            continue; // valid for every beta
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while sum(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sum(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        beta_min = beta_min.max(hi);
    }
    Ok(beta_min)
}

/// Builds the quasi-square dimension chain for the given parameters.
///
/// Every transient state above `(0,0)` moves up with `e^{-(Delta-U) beta}`
/// and down with `e^{-(r(s)-Delta) beta}`; in cycling mode `(0,0)` moves
/// up with `e^{-(r00-Delta) beta}` where `r00 = 4 Delta - 2U - Theta`
/// is the resistance of the empty state, and in history mode it is
/// absorbing. `(ell_c, ell_c)` is always absorbing. Errors if any
/// up/down pair exceeds probability one, reporting the minimal inverse
/// temperature that would be admissible.
pub fn build_xi(params: &ModelParams, mode: ChainMode) -> Result<ChainSpec> {
    let derived = derive(params)?;
    let (u, delta, beta) = (params.u, params.delta, params.beta);

    let mut states = vec![(0, 0)];
    let mut cursor = (2u32, 2u32);
    while cursor != (derived.ell_c, derived.ell_c) {
        states.push(cursor);
        cursor = (cursor.1, cursor.0 + 1); // successor map
    }
    states.push(cursor);

    let up_exp = delta - u;
    let r00 = 4.0 * delta - 2.0 * u - params.theta;
    let mut up = vec![0.0; states.len()];
    let mut down = vec![0.0; states.len()];
    let mut absorbing = vec![false; states.len()];
    let mut exponents: Vec<(f64, Option<f64>)> = Vec::new();

    match mode {
        ChainMode::Cycling => {
            up[0] = (-(r00 - delta) * beta).exp();
            exponents.push((r00 - delta, None));
        }
        ChainMode::History => absorbing[0] = true,
    }
    let last = states.len() - 1;
    absorbing[last] = true;
    for (i, &(l1, l2)) in states.iter().enumerate().take(last).skip(1) {
        let r = derived.resistance(l1, l2)?;
        up[i] = (-up_exp * beta).exp();
        down[i] = (-(r - delta) * beta).exp();
        exponents.push((up_exp, Some(r - delta)));
    }

    let spec = ChainSpec {
        states,
        up,
        down,
        absorbing,
        mode,
    };
    if let Err(e) = spec.validate() {
        let beta_min = minimal_admissible_beta(&exponents)?;
        return Err(Error::Param(format!(
            "{e}; minimal admissible beta is {beta_min} (got {beta})"
        )));
    }
    Ok(spec)
}

fn require_history(spec: &ChainSpec) -> Result<()> {
    if spec.mode != ChainMode::History {
        return Err(Error::Param(
            "absorption solvers need the history-mode chain (absorbing failure state)".into(),
        ));
    }
    Ok(())
}

/// Probability that the chain started at `start` is absorbed at the top
/// state `(ell_c, ell_c)` rather than at `(0,0)`: the gambler's-ruin
/// partial-sum formula over the down/up ratios. Cross-checked internally
/// against the direct linear solve.
pub fn absorption_prob(spec: &ChainSpec, start: (u32, u32)) -> Result<f64> {
    require_history(spec)?;
    let i = spec.index_of(start)?;
    let last = spec.len() - 1;
    if i == 0 {
        return Ok(0.0);
    }
    if i == last {
        return Ok(1.0);
    }
    // pi_0 = 1, pi_k = prod_{j=1..k} d_j/u_j over transient 1..=m.
    let m = last - 1;
    let mut pi = 1.0;
    let mut partial = 0.0; // sum pi_0..pi_{i-1}
    let mut total = 0.0; // sum pi_0..pi_m
    for k in 0..=m {
        if k > 0 {
            pi *= spec.down[k] / spec.up[k];
        }
        if k < i {
            partial += pi;
        }
        total += pi;
    }
    let h = partial / total;
    let solved = absorption_prob_linear(spec, start)?;
    let scale = h.abs().max(solved.abs()).max(f64::MIN_POSITIVE);
    if ((h - solved) / scale).abs() > 1e-9 {
        return Err(Error::Numeric(format!(
            "absorption probability routes disagree: closed form {h}, linear solve {solved}"
        )));
    }
    Ok(h)
}

/// The same absorption probability computed by solving `(I - Q) h = b`
/// over the transient states with dense LU.
pub fn absorption_prob_linear(spec: &ChainSpec, start: (u32, u32)) -> Result<f64> {
    require_history(spec)?;
    let i = spec.index_of(start)?;
    let last = spec.len() - 1;
    if i == 0 {
        return Ok(0.0);
    }
    if i == last {
        return Ok(1.0);
    }
    let m = last - 1; // transient states are 1..=m
    let iq = DMatrix::from_fn(m, m, |r, c| {
        let (sr, sc) = (r + 1, c + 1);
        let q = if sc == sr + 1 {
            spec.up[sr]
        } else if sc + 1 == sr {
            spec.down[sr]
        } else if sc == sr {
            1.0 - spec.up[sr] - spec.down[sr]
        } else {
            0.0
        };
        if r == c {
            1.0 - q
        } else {
            -q
        }
    });
    let b = DVector::from_fn(m, |r, _| if r + 1 == m { spec.up[m] } else { 0.0 });
    let h = iq
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric("singular transient system".into()))?;
    Ok(h[i - 1])
}

/// Expected number of steps (self-loops included) until absorption at
/// either boundary, from the solve of `(I - Q) t = 1`.
pub fn mean_absorption_time(spec: &ChainSpec, start: (u32, u32)) -> Result<f64> {
    require_history(spec)?;
    let i = spec.index_of(start)?;
    let last = spec.len() - 1;
    if i == 0 || i == last {
        return Ok(0.0);
    }
    let m = last - 1;
    let iq = DMatrix::from_fn(m, m, |r, c| {
        let (sr, sc) = (r + 1, c + 1);
        let q = if sc == sr + 1 {
            spec.up[sr]
        } else if sc + 1 == sr {
            spec.down[sr]
        } else if sc == sr {
            1.0 - spec.up[sr] - spec.down[sr]
        } else {
            0.0
        };
        if r == c {
            1.0 - q
        } else {
            -q
        }
    });
    let ones = DVector::from_element(m, 1.0);
    let t = iq
        .lu()
        .solve(&ones)
        .ok_or_else(|| Error::Numeric("singular transient system".into()))?;
    Ok(t[i - 1])
}

/// The aggregated arrival process: a census of live droplet histories,
/// each an independent history-mode chain, fed by Poisson arrivals at
/// `(2,2)` every step.
#[derive(Debug, Clone)]
pub struct ZetaState {
    /// State index of every live history.
    pub live: Vec<usize>,
    /// Mean of the per-step Poisson arrival count.
    pub arrival_mean: f64,
    pub steps: u64,
    pub succeeded: bool,
    pub arrivals: u64,
    pub failures: u64,
}

/// Outcome of one aggregated-process run.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaReport {
    /// Steps taken up to and including the first success (or `max_steps`).
    pub steps: u64,
    pub truncated: bool,
    pub arrivals: u64,
    pub failures: u64,
    /// Histories still alive when the run stopped.
    pub live: u64,
}

impl ZetaState {
    pub fn new(arrival_mean: f64) -> ZetaState {
        ZetaState {
            live: Vec::new(),
            arrival_mean,
            steps: 0,
            succeeded: false,
            arrivals: 0,
            failures: 0,
        }
    }

    /// Advances every live history one step, drops failures, then admits
    /// the Poisson arrivals. Sets the success flag if any history reached
    /// the top state.
    pub fn step<R: Rng>(&mut self, spec: &ChainSpec, rng: &mut R) {
        debug_assert_eq!(spec.mode, ChainMode::History);
        self.steps += 1;
        let top = spec.len() - 1;
        let mut kept = 0;
        for idx in 0..self.live.len() {
            let next = spec.step(self.live[idx], rng);
            if next == 0 {
                self.failures += 1; // forgotten immediately
            } else {
                if next == top {
                    self.succeeded = true; // successful history stays
                }
                self.live[kept] = next;
                kept += 1;
            }
        }
        self.live.truncate(kept);
        if self.arrival_mean > 0.0 {
            let poisson = Poisson::new(self.arrival_mean).expect("positive mean");
            let n = poisson.sample(rng) as u64;
            self.arrivals += n;
            let entry = 1; // state (2,2)
            for _ in 0..n {
                self.live.push(entry);
            }
        }
    }
}

/// Runs the aggregated process until the first history reaches the top
/// state, or `max_steps` elapse (reported as truncation).
pub fn simulate_zeta_spec<R: Rng>(
    spec: &ChainSpec,
    arrival_mean: f64,
    rng: &mut R,
    max_steps: u64,
) -> Result<ZetaReport> {
    require_history(spec)?;
    if arrival_mean < 0.0 {
        return Err(Error::Param(format!(
            "arrival mean must be nonnegative, got {arrival_mean}"
        )));
    }
    let mut zeta = ZetaState::new(arrival_mean);
    while !zeta.succeeded && zeta.steps < max_steps {
        zeta.step(spec, rng);
    }
    Ok(ZetaReport {
        steps: zeta.steps,
        truncated: !zeta.succeeded,
        arrivals: zeta.arrivals,
        failures: zeta.failures,
        live: zeta.live.len() as u64,
    })
}

/// Builds the history-mode chain from `params` and runs the aggregated
/// process with arrival mean `a(beta) = e^{(Theta - 3 Delta + 2U) beta}`.
pub fn simulate_zeta<R: Rng>(
    params: &ModelParams,
    rng: &mut R,
    max_steps: u64,
) -> Result<ZetaReport> {
    let spec = build_xi(params, ChainMode::History)?;
    let a = derive(params)?.a_beta;
    simulate_zeta_spec(&spec, a, rng, max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn standard(beta: f64) -> ModelParams {
        ModelParams::standard(1.0, 1.6, beta, 2.0)
    }

    #[test]
    fn state_ladder_at_critical_side_three() {
        let spec = build_xi(&standard(10.0), ChainMode::History).unwrap();
        assert_eq!(spec.states, vec![(0, 0), (2, 2), (2, 3), (3, 3)]);
        assert!(spec.absorbing[0] && spec.absorbing[3]);
        assert!(!spec.absorbing[1] && !spec.absorbing[2]);
    }

    #[test]
    fn ladder_grows_with_critical_side() {
        // Delta = 1.75 -> ell_c = 4.
        let p = ModelParams::standard(1.0, 1.75, 12.0, 2.3);
        let spec = build_xi(&p, ChainMode::History).unwrap();
        assert_eq!(
            spec.states,
            vec![(0, 0), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4)]
        );
    }

    #[test]
    fn transition_probabilities_hand_values() {
        let beta = 10.0;
        let spec = build_xi(&standard(beta), ChainMode::History).unwrap();
        // up = e^{-(Delta-U) beta} = e^{-6}; down = e^{-(r-Delta) beta}.
        assert!((spec.up[1] / (-6.0f64).exp() - 1.0).abs() < 1e-12);
        assert!((spec.down[1] / (-4.0f64).exp() - 1.0).abs() < 1e-12);
        assert!((spec.up[2] / (-6.0f64).exp() - 1.0).abs() < 1e-12);
        assert!((spec.down[2] / (-4.0f64).exp() - 1.0).abs() < 1e-12);
        assert_eq!(spec.up[0], 0.0); // history mode: failure absorbs

        let cyc = build_xi(&standard(beta), ChainMode::Cycling).unwrap();
        // r(0,0) = 4 Delta - 2U - Theta = 2.4; up = e^{-(2.4-1.6) beta}.
        assert!((cyc.up[0] / (-8.0f64).exp() - 1.0).abs() < 1e-12);
        assert!(!cyc.absorbing[0]);
    }

    #[test]
    fn too_small_beta_reports_minimal_admissible() {
        let err = build_xi(&standard(1.0), ChainMode::History).unwrap_err();
        let msg = err.to_string();
        let beta_min: f64 = msg
            .split("minimal admissible beta is ")
            .nth(1)
            .and_then(|rest| rest.split(' ').next())
            .and_then(|tok| tok.parse().ok())
            .unwrap_or_else(|| panic!("no minimal beta in: {msg}"));
        // At U=1, Delta=1.6 the binding constraint is
        // e^{-0.6 b} + e^{-0.4 b} = 1, i.e. x^3 + x^2 = 1 with
        // x = e^{-0.2 b} = 0.7548776662... (inverse plastic number),
        // so b = 5 ln(1.3247179572...) = 1.4059978716...
        assert!(
            (beta_min - 1.405_997_871_6).abs() < 1e-8,
            "minimal beta {beta_min}"
        );
        assert!(build_xi(&standard(beta_min + 1e-6), ChainMode::History).is_ok());
        assert!(build_xi(&standard(beta_min - 1e-3), ChainMode::History).is_err());
    }

    #[test]
    fn absorption_probability_closed_form() {
        // h((2,2)) = 1 / (1 + e^{0.2 b} + e^{0.4 b}).
        for beta in [5.0, 10.0, 20.0, 40.0] {
            let spec = build_xi(&standard(beta), ChainMode::History).unwrap();
            let h = absorption_prob(&spec, (2, 2)).unwrap();
            let expect = 1.0 / (1.0 + (0.2 * beta).exp() + (0.4 * beta).exp());
            assert!(
                ((h - expect) / expect).abs() < 1e-10,
                "beta {beta}: {h} vs {expect}"
            );
        }
        let spec = build_xi(&standard(10.0), ChainMode::History).unwrap();
        let h = absorption_prob(&spec, (2, 2)).unwrap();
        assert!((h - 0.015876).abs() < 5e-7, "{h}");
    }

    #[test]
    fn absorption_boundaries() {
        let spec = build_xi(&standard(10.0), ChainMode::History).unwrap();
        assert_eq!(absorption_prob(&spec, (3, 3)).unwrap(), 1.0);
        assert_eq!(absorption_prob(&spec, (0, 0)).unwrap(), 0.0);
        assert!(absorption_prob(&spec, (5, 5)).is_err());
        let cyc = build_xi(&standard(10.0), ChainMode::Cycling).unwrap();
        assert!(absorption_prob(&cyc, (2, 2)).is_err());
    }

    #[test]
    fn closed_form_and_linear_solve_agree_on_random_parameters() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let mut checked = 0;
        while checked < 1000 {
            let u = 0.5 + 1.5 * rng.random::<f64>();
            // Keep ell_c moderate: Delta in (U + 0.05 U, 2U - U/8).
            let delta = u * (1.05 + rng.random::<f64>() * (2.0 - 0.125 - 1.05));
            let beta = 2.0 / (delta - u) * (1.0 + 3.0 * rng.random::<f64>());
            let theta = delta + 1e-3; // irrelevant in history mode
            let p = ModelParams {
                theta,
                ..ModelParams::standard(u, delta, beta, theta)
            };
            let Ok(spec) = build_xi(&p, ChainMode::History) else {
                continue;
            };
            for &s in &spec.states {
                let a = absorption_prob(&spec, s).unwrap();
                let b = absorption_prob_linear(&spec, s).unwrap();
                let scale = a.abs().max(b.abs()).max(1e-300);
                assert!(
                    ((a - b) / scale).abs() < 1e-10,
                    "u={u} delta={delta} beta={beta} s={s:?}: {a} vs {b}"
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn single_transient_state_with_no_self_loop_takes_one_step() {
        let spec = ChainSpec {
            states: vec![(0, 0), (2, 2), (3, 3)],
            up: vec![0.0, 0.7, 0.0],
            down: vec![0.0, 0.3, 0.0],
            absorbing: vec![true, false, true],
            mode: ChainMode::History,
        };
        assert!((mean_absorption_time(&spec, (2, 2)).unwrap() - 1.0).abs() < 1e-15);
        assert!((absorption_prob(&spec, (2, 2)).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn mean_time_matches_monte_carlo() {
        let beta = 10.0;
        let spec = build_xi(&standard(beta), ChainMode::History).unwrap();
        let exact = mean_absorption_time(&spec, (2, 2)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let reps = 100_000u32;
        let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
        for _ in 0..reps {
            let mut i = 1;
            let mut steps = 0u64;
            while !spec.absorbing[i] {
                i = spec.step(i, &mut rng);
                steps += 1;
            }
            let s = steps as f64;
            sum += s;
            sumsq += s * s;
        }
        let mean = sum / reps as f64;
        let sd = ((sumsq / reps as f64 - mean * mean) / reps as f64).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * sd,
            "mc {mean} vs exact {exact} (sd {sd})"
        );
    }

    #[test]
    fn mean_time_log_rate_approaches_theta_minus_delta() {
        let beta = 40.0;
        let spec = build_xi(&standard(beta), ChainMode::History).unwrap();
        let t = mean_absorption_time(&spec, (2, 2)).unwrap();
        let rate = t.ln() / beta;
        assert!((rate - 0.4).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn success_log_rate_recovers_barrier_gap() {
        // (-1/beta) ln h((2,2)) -> Gamma - (4 Delta - 2U) = 0.4.
        let beta = 40.0;
        let spec = build_xi(&standard(beta), ChainMode::History).unwrap();
        let h = absorption_prob(&spec, (2, 2)).unwrap();
        let rate = -h.ln() / beta;
        assert!((rate - 0.4).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn monotonicity_in_beta() {
        let mut prev_h = f64::INFINITY;
        let mut prev_t = 0.0;
        for beta in [4.0, 6.0, 8.0, 12.0, 16.0, 24.0] {
            let spec = build_xi(&standard(beta), ChainMode::History).unwrap();
            let h = absorption_prob(&spec, (2, 2)).unwrap();
            let t = mean_absorption_time(&spec, (2, 2)).unwrap();
            assert!(h < prev_h, "h not decreasing at beta {beta}");
            assert!(t > prev_t, "time not increasing at beta {beta}");
            prev_h = h;
            prev_t = t;
        }
    }

    #[test]
    fn zeta_without_arrivals_truncates() {
        let spec = build_xi(&standard(10.0), ChainMode::History).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let report = simulate_zeta_spec(&spec, 0.0, &mut rng, 500).unwrap();
        assert!(report.truncated);
        assert_eq!(report.steps, 500);
        assert_eq!(report.arrivals, 0);
        assert_eq!(report.live, 0);
    }

    #[test]
    fn zeta_with_certain_ascent_succeeds_at_first_arrival() {
        // d = 0: every history must climb; no failures ever.
        let spec = ChainSpec {
            states: vec![(0, 0), (2, 2), (2, 3), (3, 3)],
            up: vec![0.0, 1.0, 1.0, 0.0],
            down: vec![0.0, 0.0, 0.0, 0.0],
            absorbing: vec![true, false, false, true],
            mode: ChainMode::History,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut steps = Vec::new();
        for _ in 0..200 {
            let report = simulate_zeta_spec(&spec, 0.25, &mut rng, 100_000).unwrap();
            assert!(!report.truncated);
            assert_eq!(report.failures, 0);
            assert!(report.arrivals >= 1);
            steps.push(report.steps as f64);
        }
        // First arrival after ~Geometric(1 - e^{-1/4}) steps, plus the
        // two-step climb: mean = 1/(1 - e^{-0.25}) + 2 ~ 6.52.
        let mean = steps.iter().sum::<f64>() / steps.len() as f64;
        let expect = 1.0 / (1.0 - (-0.25f64).exp()) + 2.0;
        assert!((mean - expect).abs() < 0.8, "mean {mean} vs {expect}");
    }

    #[test]
    fn zeta_mean_success_step_near_arrival_success_product() {
        // Mean steps to first success ~ 1/(a(beta) h((2,2))) ~ 3.44e3 at
        // Theta = 2.4, beta = 10 (a = e^{-4}).
        let p = ModelParams::standard(1.0, 1.6, 10.0, 2.4);
        let a = derive(&p).unwrap().a_beta;
        assert!((a - (-4.0f64).exp()).abs() < 1e-12);
        let spec = build_xi(&p, ChainMode::History).unwrap();
        let h = absorption_prob(&spec, (2, 2)).unwrap();
        let predicted = 1.0 / (a * h);
        assert!((predicted - 3.44e3).abs() < 0.05e3, "predicted {predicted}");

        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let reps = 1000;
        let mut total = 0u64;
        for _ in 0..reps {
            let report = simulate_zeta(&p, &mut rng, 10_000_000).unwrap();
            assert!(!report.truncated);
            total += report.steps;
        }
        let mean = total as f64 / reps as f64;
        assert!(
            mean < 3.0 * predicted && mean > predicted / 3.0,
            "mean {mean} vs predicted {predicted}"
        );
    }

    #[test]
    fn zeta_median_concentrates_at_the_nucleation_scale() {
        // Median success step within factor 10 of e^{(Gamma-Theta-Delta) beta}.
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        for beta in [8.0, 10.0, 12.0] {
            let p = ModelParams::standard(1.0, 1.6, beta, 2.4);
            let scale = (0.8 * beta).exp();
            let reps = 201;
            let mut steps: Vec<u64> = (0..reps)
                .map(|_| {
                    let r = simulate_zeta(&p, &mut rng, 1_000_000_000).unwrap();
                    assert!(!r.truncated);
                    r.steps
                })
                .collect();
            steps.sort_unstable();
            let median = steps[reps / 2] as f64;
            assert!(
                median < 10.0 * scale && median > scale / 10.0,
                "beta {beta}: median {median} vs scale {scale}"
            );
        }
    }
}
