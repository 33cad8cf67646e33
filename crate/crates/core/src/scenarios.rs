//! Repeated Bernoulli games and the martingale roulette sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::{ExpectedUtilitySeq, Growth};
use crate::posterior::{posterior, PosteriorDistribution, TruncationPolicy};
use crate::prior::PriorSpec;

/// Win probability of an even-money bet on a double-zero wheel.
pub const DOUBLE_ZERO_WIN: f64 = 18.0 / 38.0;

/// Average per-game expected value of `n` repeated Bernoulli games:
/// `1 + log2 n`.
pub fn repeated_game_value(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain(
            "number of repeated games must be at least 1".into(),
        ));
    }
    Ok(1.0 + (n as f64).log2())
}

/// `U_N = 1 + log2 N` for `N = 1, 2, ...`.
pub fn repeated_game_utilities() -> ExpectedUtilitySeq {
    ExpectedUtilitySeq::from_fn("repeated", |n| 1.0 + (n as f64).log2()).with_growth(
        Growth::Logarithmic {
            offset: 1.0,
            scale: std::f64::consts::LOG2_E,
        },
    )
}

/// Unnormalized log-weight `ln U_N + beta U_N` of `N` repeated games.
pub fn repeated_game_log_weight(n: u64, beta: f64) -> Result<f64> {
    let u = repeated_game_value(n)?;
    Ok(u.ln() + beta * u)
}

/// Posterior over the number of repeated games `N >= 1` under the Luce prior.
///
/// The weights decay like `N^(-|beta| / ln 2)`, so the normalization exists
/// only for `|beta| > ln 2` and converges slowly just above it; callers
/// near that threshold need a loose `rel_tol` or a large `max_index`.
pub fn repeated_game_posterior(
    beta: f64,
    policy: &TruncationPolicy,
) -> Result<PosteriorDistribution> {
    if !(beta < 0.0) {
        return Err(Error::Sign {
            beta,
            reason: "repeated-game values are unbounded, so beta must be negative",
        });
    }
    posterior(&PriorSpec::Luce, &repeated_game_utilities(), beta, policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatedGameResult {
    pub beta: f64,
    /// Willingness to pay, `1/|beta|`.
    pub u_opt: f64,
    /// `2^(1/|beta| - 1)` before rounding.
    pub n_opt_continuous: f64,
    pub n_opt: u64,
}

pub fn repeated_optimal(beta: f64) -> Result<RepeatedGameResult> {
    if !(beta < 0.0) || !beta.is_finite() {
        return Err(Error::Sign {
            beta,
            reason: "repeated-game values are unbounded, so beta must be negative",
        });
    }
    let u_opt = -1.0 / beta;
    let n_cont = (u_opt - 1.0).exp2();
    if n_cont >= 2f64.powi(63) {
        return Err(Error::Domain(format!(
            "optimal number of games {n_cont:e} exceeds the integer range"
        )));
    }
    let low = (n_cont.floor() as u64).max(1);
    let high = (n_cont.floor() as u64 + 1).max(1);
    let n_opt = if repeated_game_log_weight(high, beta)? > repeated_game_log_weight(low, beta)? {
        high
    } else {
        low
    };
    Ok(RepeatedGameResult {
        beta,
        u_opt,
        n_opt_continuous: n_cont,
        n_opt,
    })
}

/// One stop-or-continue decision of the martingale gambler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageChoice {
    pub stage: u32,
    pub u_stop: f64,
    pub u_continue: f64,
    pub p_stop: f64,
    pub p_continue: f64,
}

/// Doubling strategy on an even-money roulette bet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roulette {
    /// Initial stake.
    pub x0: f64,
    pub p_win: f64,
}

impl Default for Roulette {
    fn default() -> Self {
        Self {
            x0: 1.0,
            p_win: DOUBLE_ZERO_WIN,
        }
    }
}

impl Roulette {
    pub fn new(x0: f64, p_win: f64) -> Result<Self> {
        let r = Self { x0, p_win };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0) || !self.x0.is_finite() {
            return Err(Error::Domain(format!(
                "stake x0 must be positive, got {}",
                self.x0
            )));
        }
        if !(self.p_win > 0.0 && self.p_win < 1.0) {
            return Err(Error::Domain(format!(
                "win probability must lie in (0, 1), got {}",
                self.p_win
            )));
        }
        Ok(())
    }

    /// Growth factor `2 (1 - p)` of the expected loss.
    pub fn loss_ratio(&self) -> f64 {
        2.0 * (1.0 - self.p_win)
    }

    /// Expected net outcome after at most `n` spins:
    /// `[1 - (2(1-p))^n] x0`.
    pub fn expected_value(&self, n: u32) -> Result<f64> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidIndex(0));
        }
        let log_ratio = self.loss_ratio().ln();
        Ok(-(f64::from(n) * log_ratio).exp_m1() * self.x0)
    }

    /// Large-`n` form `-(2(1-p))^n x0`.
    pub fn asymptotic_value(&self, n: u32) -> Result<f64> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidIndex(0));
        }
        Ok(-self.loss_ratio().powi(n as i32) * self.x0)
    }

    /// Two-way choice between stopping at stage `n` and playing stage `n+1`,
    /// with loss attributes `1/|U|`.
    pub fn stage_choice(&self, n: u32, beta: f64) -> Result<StageChoice> {
        if !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be finite, got {beta}")));
        }
        let u_stop = self.expected_value(n)?;
        let u_continue = self.expected_value(n + 1)?;
        for u in [u_stop, u_continue] {
            if u == 0.0 {
                return Err(Error::SingularAttribute);
            }
            if u > 0.0 {
                return Err(Error::Domain(format!(
                    "stage values must be losses, got U = {u} (win probability {})",
                    self.p_win
                )));
            }
        }
        let lw_stop = -(-u_stop).ln() + beta * u_stop;
        let lw_continue = -(-u_continue).ln() + beta * u_continue;
        // Two-way softmax in the log domain.
        let p_continue = 1.0 / (1.0 + (lw_stop - lw_continue).exp());
        Ok(StageChoice {
            stage: n,
            u_stop,
            u_continue,
            p_stop: 1.0 - p_continue,
            p_continue,
        })
    }

    pub fn sequence(&self, stages: u32, beta: f64) -> Result<Vec<StageChoice>> {
        (1..=stages).map(|n| self.stage_choice(n, beta)).collect()
    }
}

pub fn roulette_expected_value(n: u32, x0: f64, p_win: f64) -> Result<f64> {
    Roulette::new(x0, p_win)?.expected_value(n)
}

/// `-(20/19)^n x0` for the double-zero wheel; accurate only for large `n`.
pub fn roulette_asymptotic_value(n: u32, x0: f64) -> Result<f64> {
    Roulette::new(x0, DOUBLE_ZERO_WIN)?.asymptotic_value(n)
}

pub fn roulette_stage_choice(n: u32, beta: f64, x0: f64) -> Result<StageChoice> {
    Roulette::new(x0, DOUBLE_ZERO_WIN)?.stage_choice(n, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn repeated_values() {
        assert_eq!(repeated_game_value(1).unwrap(), 1.0);
        assert_eq!(repeated_game_value(1024).unwrap(), 11.0);
        assert!((repeated_game_value(3).unwrap() - 2.58496).abs() < 1e-5);
        assert!(repeated_game_value(0).is_err());
    }

    #[test]
    fn repeated_optimum_examples() {
        let r = repeated_optimal(-1.0).unwrap();
        assert_eq!((r.u_opt, r.n_opt_continuous, r.n_opt), (1.0, 1.0, 1));
        let r = repeated_optimal(-0.25).unwrap();
        assert_eq!((r.u_opt, r.n_opt_continuous), (4.0, 8.0));
        let r = repeated_optimal(-2.0).unwrap();
        assert!((r.n_opt_continuous - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.n_opt, 1);
        assert!(repeated_optimal(0.0).is_err());
    }

    #[test]
    fn repeated_half_beta_direct_weights() {
        // Weights (1 + log2 N) exp(-0.5 (1 + log2 N)) at N = 1..4.
        let w: Vec<f64> = (1..=4u64)
            .map(|n| {
                let u = 1.0 + (n as f64).log2();
                u * (-0.5 * u).exp()
            })
            .collect();
        let argmax = (0..4).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap() + 1;
        assert!((1..=3).contains(&argmax));
        assert_eq!(repeated_optimal(-0.5).unwrap().n_opt, argmax as u64);
        // The normalization itself diverges at this beta.
        assert!(matches!(
            repeated_game_posterior(-0.5, &TruncationPolicy::default()),
            Err(Error::DivergentNormalization { .. })
        ));
    }

    #[test]
    fn repeated_posterior_normalizes() {
        let d = repeated_game_posterior(-4.0, &TruncationPolicy::default()).unwrap();
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(d.stochastically_optimal(), 1);
        assert!(repeated_game_posterior(0.5, &TruncationPolicy::default()).is_err());
    }

    #[test]
    fn roulette_values() {
        let r = Roulette::default();
        assert!((r.expected_value(1).unwrap() + 0.0526).abs() < 1e-4);
        assert_relative_eq!(
            r.expected_value(1).unwrap(),
            -1.0 / 19.0,
            max_relative = 1e-14
        );
        assert!((r.expected_value(2).unwrap() + 0.108).abs() < 1e-3);
        let fair = Roulette::new(1.0, 0.5).unwrap();
        for n in 1..20 {
            assert_eq!(fair.expected_value(n).unwrap(), 0.0);
        }
        assert!(Roulette::new(0.0, 0.4).is_err());
        assert!(Roulette::new(1.0, 1.0).is_err());
    }

    #[test]
    fn asymptotic_form() {
        let exact = roulette_expected_value(200, 1.0, DOUBLE_ZERO_WIN).unwrap();
        let asym = roulette_asymptotic_value(200, 1.0).unwrap();
        assert!((asym / exact - 1.0).abs() < 1e-4);
        assert_relative_eq!(roulette_asymptotic_value(1, 1.0).unwrap(), -20.0 / 19.0);
    }

    #[test]
    fn stage_choices_sum_to_one() {
        let c = roulette_stage_choice(1, 0.0, 1.0).unwrap();
        assert!((c.p_stop - 0.671).abs() < 0.002);
        assert!((c.p_continue - 0.329).abs() < 0.002);
        assert!((c.p_stop + c.p_continue - 1.0).abs() < 1e-12);
        assert!(c.u_continue < c.u_stop && c.u_stop < 0.0);
    }

    #[test]
    fn fair_wheel_is_singular() {
        let fair = Roulette::new(1.0, 0.5).unwrap();
        assert_eq!(fair.stage_choice(1, 0.0), Err(Error::SingularAttribute));
        let favourable = Roulette::new(1.0, 0.6).unwrap();
        assert!(matches!(
            favourable.stage_choice(1, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn stage_choice_scale_invariance_at_neutral_belief() {
        let a = roulette_stage_choice(3, 0.0, 1.0).unwrap();
        let b = roulette_stage_choice(3, 0.0, 250.0).unwrap();
        assert_relative_eq!(a.p_stop, b.p_stop, max_relative = 1e-14);
        // With beta != 0 the scale enters through beta * U.
        let c = roulette_stage_choice(3, 0.5, 10.0).unwrap();
        let (us, uc) = (c.u_stop, c.u_continue);
        let ws = (0.5 * us).exp() / us.abs();
        let wc = (0.5 * uc).exp() / uc.abs();
        assert_relative_eq!(c.p_stop, ws / (ws + wc), max_relative = 1e-14);
    }
}
