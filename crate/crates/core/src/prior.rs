//! Prior families over lotteries and their continuous stochastic optima.
//!
//! Every prior is a positive weight `phi(U)` of a lottery's expected utility;
//! the posterior multiplies it by `exp(beta * U)`. For `beta < 0` the product
//! `phi(U) exp(beta U)` has a single interior maximum, which is what
//! [`PriorSpec::continuous_optimum`] returns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

fn default_u0() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PriorSpec {
    /// Luce attribute rule: `a = U` for `U >= 0`, `a = 1/|U|` for `U < 0`.
    #[default]
    Luce,
    /// `phi(U) = U^alpha`
    Power { alpha: f64 },
    /// `phi(U) = ln(1 + U/u0)`
    Log {
        #[serde(default = "default_u0")]
        u0: f64,
    },
    /// Logit prior `exp(V(U))` with `V(U) = b U^gamma + c`.
    Logit { b: f64, c: f64, gamma: f64 },
}

impl PriorSpec {
    pub fn label(&self) -> &'static str {
        match self {
            PriorSpec::Luce => "luce",
            PriorSpec::Power { .. } => "power",
            PriorSpec::Log { .. } => "log",
            PriorSpec::Logit { .. } => "logit",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            PriorSpec::Luce => Ok(()),
            PriorSpec::Power { alpha } => positive("alpha", alpha),
            PriorSpec::Log { u0 } => positive("u0", u0),
            PriorSpec::Logit { b, c, gamma } => {
                positive("b", b)?;
                if !c.is_finite() {
                    return Err(Error::Domain(format!("c must be finite, got {c}")));
                }
                if gamma > 0.0 && gamma < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "gamma must lie in (0, 1), got {gamma}"
                    )))
                }
            }
        }
    }

    /// Natural log of the unnormalized prior weight; `-inf` for zero weight.
    pub fn log_weight(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if !u.is_finite() {
            return Err(Error::Domain(format!("expected utility {u} is not finite")));
        }
        match *self {
            PriorSpec::Luce if u >= 0.0 => Ok(u.ln()),
            PriorSpec::Luce => Ok(-(-u).ln()),
            _ if u < 0.0 => Err(Error::Domain(format!(
                "{} prior needs nonnegative expected utility, got {u}",
                self.label()
            ))),
            PriorSpec::Power { alpha } => Ok(alpha * u.ln()),
            PriorSpec::Log { u0 } => Ok((u / u0).ln_1p().ln()),
            PriorSpec::Logit { b, c, gamma } => Ok(b * u.powf(gamma) + c),
        }
    }

    /// Unnormalized prior weight of a lottery with expected utility `u`.
    pub fn attribute_weight(&self, u: f64) -> Result<f64> {
        let lw = self.log_weight(u)?;
        Ok(match *self {
            PriorSpec::Luce if u >= 0.0 => u,
            PriorSpec::Luce => 1.0 / -u,
            PriorSpec::Power { alpha } => u.powf(alpha),
            PriorSpec::Log { u0 } => (u / u0).ln_1p(),
            PriorSpec::Logit { .. } => lw.exp(),
        })
    }

    /// `(phi, phi', phi'')` at `u >= 0`.
    pub fn shape_derivatives(&self, u: f64) -> Result<(f64, f64, f64)> {
        self.validate()?;
        if !(u >= 0.0) {
            return Err(Error::Domain(format!(
                "shape derivatives need nonnegative expected utility, got {u}"
            )));
        }
        Ok(match *self {
            PriorSpec::Luce => (u, 1.0, 0.0),
            PriorSpec::Power { alpha } => (
                u.powf(alpha),
                alpha * u.powf(alpha - 1.0),
                alpha * (alpha - 1.0) * u.powf(alpha - 2.0),
            ),
            PriorSpec::Log { u0 } => {
                let s = 1.0 + u / u0;
                (s.ln(), 1.0 / (u0 * s), -1.0 / (u0 * u0 * s * s))
            }
            PriorSpec::Logit { b, c, gamma } => {
                let phi = (b * u.powf(gamma) + c).exp();
                let v1 = b * gamma * u.powf(gamma - 1.0);
                let v2 = b * gamma * (gamma - 1.0) * u.powf(gamma - 2.0);
                (phi, v1 * phi, (v2 + v1 * v1) * phi)
            }
        })
    }

    /// Stationarity residual `phi'(u) + beta phi(u)`.
    pub fn stationarity_residual(&self, u: f64, beta: f64) -> Result<f64> {
        let (phi, d1, _) = self.shape_derivatives(u)?;
        Ok(d1 + beta * phi)
    }

    /// Maximizer over continuous `U > 0` of `phi(U) exp(beta U)` for `beta < 0`.
    pub fn continuous_optimum(&self, beta: f64) -> Result<f64> {
        self.validate()?;
        if !(beta < 0.0) || !beta.is_finite() {
            return Err(Error::Sign {
                beta,
                reason: "a finite continuous optimum needs beta < 0",
            });
        }
        let abs_beta = -beta;
        let u = match *self {
            PriorSpec::Luce => 1.0 / abs_beta,
            PriorSpec::Power { alpha } => alpha / abs_beta,
            PriorSpec::Log { u0 } => u0 * log_shape_root(1.0 / (abs_beta * u0))?,
            PriorSpec::Logit { b, gamma, .. } => (b * gamma / abs_beta).powf(1.0 / (1.0 - gamma)),
        };
        let (phi, _, d2) = self.shape_derivatives(u)?;
        if !(d2 - beta * beta * phi < 0.0) {
            return Err(Error::Solver(format!(
                "second-order condition fails at U = {u} for {} prior",
                self.label()
            )));
        }
        Ok(u)
    }
}

/// Solves `(1 + x) ln(1 + x) = k` for `x >= 0`.
///
/// The left side is increasing, zero at `x = 0`, and exceeds `k` at
/// `x = max(10, k)`.
pub(crate) fn log_shape_root(k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!(
            "log-shape target must be positive, got {k}"
        )));
    }
    let g = |x: f64| Ok((1.0 + x) * x.ln_1p() - k);
    let hi = k.max(10.0);
    let root = roots::bisect(g, 0.0, hi, hi * f64::EPSILON, 0.0)?;
    if root.residual.abs() > 1e-12 * k.max(1.0) {
        return Err(Error::Solver(format!(
            "log-shape root residual {} too large",
            root.residual
        )));
    }
    Ok(root.x)
}
