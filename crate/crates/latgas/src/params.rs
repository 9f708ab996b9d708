//! Model parameters and derived constants.
//!
//! Single source of truth for the scalar formulas of the two-dimensional
//! Kawasaki lattice gas in its metastable regime: the critical droplet side
//! `ell_c = ceil(U/(2U-Delta))`, the critical droplet energy `Gamma`, the
//! quasi-square resistances `r(l1,l2)`, the gap `gamma`, the subcritical
//! resistance ceiling `theta`, and the assorted small tuning exponents used
//! by the geometry and harness modules. Everything here is a pure function
//! of a [`ModelParams`].

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to snap `U/(2U-Delta)` to an integer before
/// taking the ceiling. Near the jump points `Delta = 2U - U/k` the quotient
/// is an integer up to rounding noise; without snapping, the ceiling (and
/// with it every derived constant) would flip on the last bit.
const INTEGER_SNAP_REL: f64 = 1e-8;

/// Default lattice-side memory cap for [`lattice_side`].
pub const DEFAULT_SIDE_CAP: u32 = 2048;

/// Default small tuning exponents, as fractions of `U`.
pub const DEFAULT_ALPHA_OVER_U: f64 = 0.05;
pub const DEFAULT_D_OVER_U: f64 = 0.1;
pub const DEFAULT_KAPPA_OVER_U: f64 = 0.1;
pub const DEFAULT_DELTA_SMALL_OVER_U: f64 = 0.05;

/// Identifier of the slowly growing function `lambda(beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LambdaChoice {
    /// `lambda(beta) = sqrt(max(1, ln beta))`; floored at 1 so the value is
    /// defined and positive at small beta.
    #[default]
    SqrtLog,
}

impl LambdaChoice {
    pub fn eval(self, beta: f64) -> f64 {
        match self {
            LambdaChoice::SqrtLog => beta.ln().max(1.0).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LambdaChoice::SqrtLog => "sqrt-log",
        }
    }
}

impl FromStr for LambdaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt-log" => Ok(LambdaChoice::SqrtLog),
            other => Err(Error::Param(format!(
                "unknown lambda_choice `{other}` (supported: sqrt-log)"
            ))),
        }
    }
}

/// Physical model parameters.
///
/// `u` is the nearest-neighbour binding energy (U > 0), `delta` the
/// activation energy per particle (Delta), `beta` the inverse temperature,
/// and `theta` the volume exponent fixing the lattice side `exp(theta*beta/2)`.
/// The four small exponents tune analysis windows: `alpha` (epoch offset,
/// enters `Delta_plus = Delta + alpha`), `d` (sleep depth, enters
/// `D = U + d`), `kappa` (cloud-radius shrink), `delta_small` (scaling-window
/// slack used in the trajectory-tube inequalities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub u: f64,
    pub delta: f64,
    pub beta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub d: f64,
    pub kappa: f64,
    pub delta_small: f64,
    pub lambda_choice: LambdaChoice,
}

impl ModelParams {
    /// Parameters with the default tuning exponents (scaled by `u`), each
    /// clamped to the admissible ceiling `(2U - Delta)/4` so the constructor
    /// yields valid parameters for every `Delta` in the metastable regime.
    pub fn standard(u: f64, delta: f64, beta: f64, theta: f64) -> Self {
        let cap = 2.0 * u - delta;
        let clamp = |v: f64| if cap > 0.0 { v.min(cap / 4.0) } else { v };
        ModelParams {
            u,
            delta,
            beta,
            theta,
            alpha: clamp(DEFAULT_ALPHA_OVER_U * u),
            d: clamp(DEFAULT_D_OVER_U * u),
            kappa: clamp(DEFAULT_KAPPA_OVER_U * u),
            delta_small: clamp(DEFAULT_DELTA_SMALL_OVER_U * u),
            lambda_choice: LambdaChoice::SqrtLog,
        }
    }

    /// Checks the metastable regime and the tuning-exponent bounds.
    ///
    /// The tuning exponents must be positive and at most `(2U - Delta)/4`;
    /// the bound is inclusive so that the stock defaults (`d = kappa = 0.1 U`)
    /// remain admissible at `Delta = 1.6 U`, where the bound is exactly
    /// `0.1 U`.
    pub fn validate(&self) -> Result<()> {
        if !(self.u > 0.0) {
            return Err(Error::Param(format!("U must be > 0, got {}", self.u)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Param(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.delta > 1.5 * self.u && self.delta < 2.0 * self.u) {
            return Err(Error::Param(format!(
                "Delta must lie strictly inside (3U/2, 2U) = ({}, {}), got {}",
                1.5 * self.u,
                2.0 * self.u,
                self.delta
            )));
        }
        let cap = (2.0 * self.u - self.delta) / 4.0;
        // Inclusive up to rounding noise, so a literal `d = 0.1` in a file
        // passes at Delta = 1.6 even though (2-1.6)/4 computes just below 0.1.
        let cap_tol = cap + 1e-12 * self.u.max(1.0);
        for (name, v) in [
            ("alpha", self.alpha),
            ("d", self.d),
            ("kappa", self.kappa),
            ("delta", self.delta_small),
        ] {
            if !(v > 0.0) {
                return Err(Error::Param(format!("{name} must be > 0, got {v}")));
            }
            if v > cap_tol {
                return Err(Error::Param(format!(
                    "{name} must be <= (2U - Delta)/4 = {cap}, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Checks `theta` against its admissible window `(Delta, Gamma - (2Delta - U))`.
    ///
    /// Required whenever a lattice experiment is configured; the pure chain
    /// solvers do not need it.
    pub fn validate_theta_window(&self) -> Result<()> {
        let (lo, hi) = self.theta_window()?;
        if !(self.theta > lo && self.theta < hi) {
            return Err(Error::Param(format!(
                "Theta must lie strictly inside (Delta, Gamma - (2Delta - U)) = ({lo}, {hi}), got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// The admissible window for `theta`: `(Delta, Gamma - (2Delta - U))`.
    pub fn theta_window(&self) -> Result<(f64, f64)> {
        let gamma_crit = critical_energy(self.u, self.delta)?;
        Ok((self.delta, gamma_crit - (2.0 * self.delta - self.u)))
    }
}

/// Everything derivable from a [`ModelParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// The shrinking margin `eps = 2U - Delta`.
    pub eps: f64,
    /// Critical quasi-square side `ceil(U/(2U-Delta))`; >= 3 in the valid regime.
    pub ell_c: u32,
    /// Energy barrier of the critical droplet (Gamma).
    pub crit_energy: f64,
    /// Gap exponent `gamma = (Delta - U) - (ell_c - 2)(2U - Delta)`; > 0.
    pub gap: f64,
    /// Resistance of the largest subcritical quasi-square:
    /// `theta = 2Delta - U - gamma = 2U + (ell_c - 3)(2U - Delta)`.
    pub theta_res: f64,
    /// Sleep depth exponent `D = U + d`.
    pub sleep_exp: f64,
    /// `Delta_plus = Delta + alpha`.
    pub delta_plus: f64,
    /// Active-box diagnostic exponent `S = (4Delta - theta)/3 - alpha`.
    pub box_diag_exp: f64,
    /// Mean of the per-step arrival count in the aggregated toy process:
    /// `a_beta = exp((Theta - 3Delta + 2U) beta)`.
    pub a_beta: f64,
    /// `lambda(beta)` for the configured choice.
    pub lambda_beta: f64,
    /// Resistance per quasi-square dimension `(l1, l2)`, for
    /// `1 <= l1 <= ell_c`, `l2 in {l1, l1+1}`, truncated at `(ell_c, ell_c)`.
    pub r_table: Vec<((u32, u32), f64)>,
}

impl DerivedParams {
    /// Largest admissible cluster volume inside the subcritical set R:
    /// `ell_c (ell_c - 1) + 2`.
    pub fn max_subcritical_volume(&self) -> u32 {
        self.ell_c * (self.ell_c - 1) + 2
    }

    /// Cluster volume whose first appearance marks the exit from R:
    /// one more than [`Self::max_subcritical_volume`].
    pub fn exit_volume(&self) -> u32 {
        self.max_subcritical_volume() + 1
    }

    /// Resistance looked up from the precomputed table.
    pub fn resistance(&self, l1: u32, l2: u32) -> Result<f64> {
        self.r_table
            .iter()
            .find(|(dims, _)| *dims == (l1, l2))
            .map(|&(_, r)| r)
            .ok_or_else(|| Error::Domain(format!("({l1},{l2}) is not in the resistance table")))
    }

    /// Human-readable table of every derived constant.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "eps         = {}", self.eps);
        let _ = writeln!(out, "ell_c       = {}", self.ell_c);
        let _ = writeln!(out, "Gamma       = {}", self.crit_energy);
        let _ = writeln!(out, "gamma       = {}", self.gap);
        let _ = writeln!(out, "theta       = {}", self.theta_res);
        let _ = writeln!(out, "D           = {}", self.sleep_exp);
        let _ = writeln!(out, "Delta_plus  = {}", self.delta_plus);
        let _ = writeln!(out, "S           = {}", self.box_diag_exp);
        let _ = writeln!(out, "a_beta      = {}", self.a_beta);
        let _ = writeln!(out, "lambda_beta = {}", self.lambda_beta);
        for ((l1, l2), r) in &self.r_table {
            let _ = writeln!(out, "r({l1},{l2})      = {r}");
        }
        out
    }
}

/// Critical quasi-square side length `ceil(U/(2U-Delta))`.
///
/// Rejects parameters outside the metastable regime and quotients that snap
/// to an integer `<= 2` (the regime requires a critical side of at least 3).
pub fn critical_length(u: f64, delta: f64) -> Result<u32> {
    check_regime(u, delta)?;
    let q = u / (2.0 * u - delta);
    let snapped = q.round();
    let ell = if (q - snapped).abs() <= INTEGER_SNAP_REL * q.abs() {
        snapped
    } else {
        q.ceil()
    };
    if ell < 3.0 {
        return Err(Error::Param(format!(
            "critical length must exceed 2, got {ell} (Delta = {delta} is too close to 3U/2)"
        )));
    }
    Ok(ell as u32)
}

/// Energy barrier of the critical droplet:
/// `Gamma = -U[(ell_c-1)^2 + ell_c(ell_c-2) + 1] + Delta[ell_c(ell_c-1) + 2]`.
pub fn critical_energy(u: f64, delta: f64) -> Result<f64> {
    let ell = critical_length(u, delta)? as f64;
    Ok(-u * ((ell - 1.0) * (ell - 1.0) + ell * (ell - 2.0) + 1.0)
        + delta * (ell * (ell - 1.0) + 2.0))
}

/// Resistance of the `l1 x l2` quasi-square:
/// `min{(2U-Delta) l1 - U + 2Delta - U, 2Delta - U}`.
///
/// Only quasi-square dimensions (`1 <= l1 <= l2 <= l1+1`) are admissible.
pub fn resistance(l1: u32, l2: u32, u: f64, delta: f64) -> Result<f64> {
    check_regime(u, delta)?;
    if !(1 <= l1 && l1 <= l2 && l2 <= l1 + 1) {
        return Err(Error::Domain(format!(
            "({l1},{l2}) is not a quasi-square dimension pair (need 1 <= l1 <= l2 <= l1+1)"
        )));
    }
    let uncapped = (2.0 * u - delta) * l1 as f64 - u + 2.0 * delta - u;
    Ok(uncapped.min(2.0 * delta - u))
}

/// Populates every derived constant from validated parameters.
pub fn derive(params: &ModelParams) -> Result<DerivedParams> {
    params.validate()?;
    let u = params.u;
    let delta = params.delta;
    let eps = 2.0 * u - delta;
    let ell_c = critical_length(u, delta)?;
    let crit_energy = critical_energy(u, delta)?;
    let gap = (delta - u) - (ell_c as f64 - 2.0) * eps;
    let theta_res = 2.0 * delta - u - gap;
    let mut r_table = Vec::new();
    for l1 in 1..=ell_c {
        r_table.push(((l1, l1), resistance(l1, l1, u, delta)?));
        if l1 < ell_c {
            r_table.push(((l1, l1 + 1), resistance(l1, l1 + 1, u, delta)?));
        }
    }
    Ok(DerivedParams {
        eps,
        ell_c,
        crit_energy,
        gap,
        theta_res,
        sleep_exp: u + params.d,
        delta_plus: delta + params.alpha,
        box_diag_exp: (4.0 * delta - theta_res) / 3.0 - params.alpha,
        a_beta: ((params.theta - 3.0 * delta + 2.0 * u) * params.beta).exp(),
        lambda_beta: params.lambda_choice.eval(params.beta),
        r_table,
    })
}

/// A derived lattice side together with the exponent it actually realizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSide {
    pub l: u32,
    /// `ln(L^2)/beta`; every exponent comparison at finite beta uses this
    /// realized value rather than the requested `theta`.
    pub theta_eff: f64,
}

/// Lattice side `L = round(exp(theta*beta/2))`, floored at `2*ell_c` and
/// capped at [`DEFAULT_SIDE_CAP`].
pub fn lattice_side(theta: f64, beta: f64, ell_c: u32) -> Result<LatticeSide> {
    lattice_side_capped(theta, beta, ell_c, DEFAULT_SIDE_CAP)
}

/// [`lattice_side`] with an explicit memory cap.
pub fn lattice_side_capped(theta: f64, beta: f64, ell_c: u32, cap: u32) -> Result<LatticeSide> {
    if !(beta > 0.0) {
        return Err(Error::Param(format!("beta must be > 0, got {beta}")));
    }
    let raw = (theta * beta / 2.0).exp().round();
    if raw > cap as f64 {
        return Err(Error::Capacity(format!(
            "lattice side {raw} exceeds the configured cap {cap}"
        )));
    }
    let l = (raw as u32).max(2 * ell_c);
    Ok(LatticeSide {
        l,
        theta_eff: ((l as f64) * (l as f64)).ln() / beta,
    })
}

fn check_regime(u: f64, delta: f64) -> Result<()> {
    if !(u > 0.0) {
        return Err(Error::Param(format!("U must be > 0, got {u}")));
    }
    if !(delta > 1.5 * u && delta < 2.0 * u) {
        return Err(Error::Param(format!(
            "Delta must lie strictly inside (3U/2, 2U) = ({}, {}), got {delta}",
            1.5 * u,
            2.0 * u
        )));
    }
    Ok(())
}

/// Parses the flat `key = value` parameter-file format.
///
/// Recognized keys: `U`, `Delta`, `beta`, `Theta` (required) and `alpha`,
/// `d`, `kappa`, `delta`, `lambda_choice` (optional, defaulted). `#` starts
/// a comment; blank lines are ignored; unknown keys are rejected.
pub fn parse_params_str(text: &str) -> Result<ModelParams> {
    let mut u = None;
    let mut delta = None;
    let mut beta = None;
    let mut theta = None;
    let mut alpha = None;
    let mut d = None;
    let mut kappa = None;
    let mut delta_small = None;
    let mut lambda_choice = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let num = || -> Result<f64> {
            value.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("`{value}` is not a number (key `{key}`)"),
            })
        };
        match key {
            "U" => u = Some(num()?),
            "Delta" => delta = Some(num()?),
            "beta" => beta = Some(num()?),
            "Theta" => theta = Some(num()?),
            "alpha" => alpha = Some(num()?),
            "d" => d = Some(num()?),
            "kappa" => kappa = Some(num()?),
            "delta" => delta_small = Some(num()?),
            "lambda_choice" => lambda_choice = Some(value.parse::<LambdaChoice>()?),
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }

    let require = |name: &str, v: Option<f64>| -> Result<f64> {
        v.ok_or_else(|| Error::Param(format!("missing required key `{name}`")))
    };
    let u = require("U", u)?;
    Ok(ModelParams {
        u,
        delta: require("Delta", delta)?,
        beta: require("beta", beta)?,
        theta: require("Theta", theta)?,
        alpha: alpha.unwrap_or(DEFAULT_ALPHA_OVER_U * u),
        d: d.unwrap_or(DEFAULT_D_OVER_U * u),
        kappa: kappa.unwrap_or(DEFAULT_KAPPA_OVER_U * u),
        delta_small: delta_small.unwrap_or(DEFAULT_DELTA_SMALL_OVER_U * u),
        lambda_choice: lambda_choice.unwrap_or_default(),
    })
}

/// Reads a parameter file from disk.
pub fn load_params(path: &std::path::Path) -> Result<ModelParams> {
    parse_params_str(&std::fs::read_to_string(path)?)
}

/// Serializes parameters back into the flat file format.
pub fn params_to_str(p: &ModelParams) -> String {
    format!(
        "U = {}\nDelta = {}\nbeta = {}\nTheta = {}\nalpha = {}\nd = {}\nkappa = {}\ndelta = {}\nlambda_choice = {}\n",
        p.u, p.delta, p.beta, p.theta, p.alpha, p.d, p.kappa, p.delta_small, p.lambda_choice.name()
    )
}
