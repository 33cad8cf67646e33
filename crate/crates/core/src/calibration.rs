//! Calibration of the disbelief parameter by variance matching.
//!
//! The disbelief magnitude is set equal to the standard deviation of the
//! expected utilities under the posterior it induces: `|beta| = sigma(beta)`.
//! For the Bernoulli game with the Luce prior this reduces to
//! `sqrt(2) |beta| sinh(|beta|/2) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::ExpectedUtilitySeq;
use crate::posterior::{posterior, TruncationPolicy};
use crate::prior::PriorSpec;
use crate::roots;

/// Search interval for `|beta|`.
pub const SEARCH_LO: f64 = 1e-6;
pub const SEARCH_HI: f64 = 50.0;
const X_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub abs_beta: f64,
    pub residual: f64,
    pub iterations: u32,
    pub method: String,
    /// Set when more than one sign change of the defining equation was seen.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub multiple_roots: bool,
}

impl CalibrationResult {
    pub fn beta(&self) -> f64 {
        -self.abs_beta
    }
}

/// Posterior variance of `U_n = n` under the Luce prior:
/// `1 / (2 sinh^2(|beta|/2))`.
pub fn bernoulli_variance_closed(abs_beta: f64) -> Result<f64> {
    if !(abs_beta > 0.0) || !abs_beta.is_finite() {
        return Err(Error::Domain(format!(
            "|beta| must be positive, got {abs_beta}"
        )));
    }
    let s = (0.5 * abs_beta).sinh();
    Ok(0.5 / (s * s))
}

/// Posterior mean of `U_n = n` under the Luce prior: `coth(|beta|/2)`.
pub fn bernoulli_mean_closed(abs_beta: f64) -> Result<f64> {
    if !(abs_beta > 0.0) || !abs_beta.is_finite() {
        return Err(Error::Domain(format!(
            "|beta| must be positive, got {abs_beta}"
        )));
    }
    Ok(1.0 / (0.5 * abs_beta).tanh())
}

/// Positive root of `sqrt(2) b sinh(b/2) - 1`.
pub fn calibrate_bernoulli_disbelief() -> CalibrationResult {
    let f = |b: f64| Ok(std::f64::consts::SQRT_2 * b * (0.5 * b).sinh() - 1.0);
    // Increasing in b, negative at SEARCH_LO and positive at SEARCH_HI.
    let root = roots::bisect_then_secant(f, SEARCH_LO, SEARCH_HI, X_TOL)
        .expect("bracket holds analytically");
    CalibrationResult {
        abs_beta: root.x,
        residual: root.residual,
        iterations: root.iterations,
        method: "closed-form bernoulli: bisection + secant".into(),
        multiple_roots: false,
    }
}

/// Solves `b = sigma(-b)` where `sigma` is the posterior standard deviation
/// of the expected utilities.
///
/// The bracket is located by halving `b` from [`SEARCH_HI`] toward
/// [`SEARCH_LO`]; the scan continues past the first sign change (while the
/// posterior remains computable) to flag additional roots.
pub fn calibrate_disbelief_general(
    utilities: &ExpectedUtilitySeq,
    prior: &PriorSpec,
    policy: &TruncationPolicy,
) -> Result<CalibrationResult> {
    let f = |b: f64| -> Result<f64> {
        let dist = posterior(prior, utilities, -b, policy)?;
        Ok(b - dist.std_dev())
    };

    let mut hi = SEARCH_HI;
    let mut f_hi = f(hi)?;
    let mut bracket = None;
    let mut sign_changes = 0;
    loop {
        let lo = (hi * 0.5).max(SEARCH_LO);
        let f_lo = match f(lo) {
            Ok(v) => v,
            // Past the first bracket only root counting is at stake.
            Err(_) if bracket.is_some() => break,
            Err(e) => return Err(e),
        };
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            sign_changes += 1;
            bracket.get_or_insert((lo, hi));
        }
        if lo <= SEARCH_LO {
            break;
        }
        hi = lo;
        f_hi = f_lo;
    }

    let (lo, hi) = bracket.ok_or_else(|| {
        Error::Calibration(format!(
            "b - sigma(b) has no sign change on [{SEARCH_LO}, {SEARCH_HI}]"
        ))
    })?;
    if sign_changes > 1 {
        log::warn!(
            "variance-matching equation has {sign_changes} sign changes; using the largest root"
        );
    }
    let root = roots::bisect_then_secant(f, lo, hi, X_TOL)?;
    if root.residual.abs() >= RESIDUAL_TOL {
        return Err(Error::Calibration(format!(
            "residual {} at |beta| = {} exceeds {RESIDUAL_TOL}",
            root.residual, root.x
        )));
    }
    Ok(CalibrationResult {
        abs_beta: root.x,
        residual: root.residual,
        iterations: root.iterations,
        method: "variance matching: bisection + secant".into(),
        multiple_roots: sign_changes > 1,
    })
}
