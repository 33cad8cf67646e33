//! Posterior distribution over a lottery family.
//!
//! Minimizing the Kullback-Leibler information relative to a prior under the
//! normalization and global-mean constraints gives
//! `p(L_n) = phi(U_n) exp(beta U_n) / Z`. Infinite families are truncated
//! once a bound on the omitted mass is negligible against the accumulated sum;
//! all weights are handled in the log domain.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::{ExpectedUtilitySeq, Growth};
use crate::prior::PriorSpec;

/// Stopping rule for infinite sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationPolicy {
    /// Stop once `tail_bound < rel_tol * accumulated_sum`.
    pub rel_tol: f64,
    pub max_index: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_index: 1_000_000,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::Domain(format!(
                "truncation rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_index < 1 {
            return Err(Error::Domain(
                "truncation max_index must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Consecutive negligible terms required by the fallback stopping rule.
const NEGLIGIBLE_RUN: usize = 50;

/// Tolerance for stochastic indifference.
pub const INDIFFERENCE_TOL: f64 = 1e-12;

/// Normalized posterior weights over lottery indices `1..=n_trunc`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDistribution {
    probs: Vec<f64>,
    utilities: Vec<f64>,
    beta: f64,
    log_normalizer: f64,
    log_tail_bound: f64,
}

impl PosteriorDistribution {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_trunc(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    /// Probability of lottery `n` (1-based).
    pub fn prob(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(self.probs[n - 1])
    }

    /// `ln Z` over the retained support, before normalization.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn normalizer(&self) -> f64 {
        self.log_normalizer.exp()
    }

    /// Bound on the omitted unnormalized mass; zero for finite families.
    pub fn tail_bound(&self) -> f64 {
        self.log_tail_bound.exp()
    }

    /// Tail bound relative to the retained unnormalized mass.
    pub fn relative_tail(&self) -> f64 {
        (self.log_tail_bound - self.log_normalizer).exp()
    }

    /// Index of the most probable lottery; ties go to the smallest index.
    pub fn stochastically_optimal(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best + 1
    }

    pub fn compare(&self, i: usize, j: usize) -> Result<Preference> {
        Ok(preference_of(self.prob(i)?, self.prob(j)?))
    }

    /// `sum p(L_n) U_n` over the retained support.
    pub fn global_mean(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.utilities)
            .map(|(p, u)| p * u)
            .sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.utilities)
            .map(|(p, u)| p * u * u)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.global_mean();
        self.probs
            .iter()
            .zip(&self.utilities)
            .map(|(p, u)| p * (u - mean) * (u - mean))
            .sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.probs.len() {
            Err(Error::IndexOutOfRange {
                index: n,
                len: self.probs.len(),
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    PreferFirst,
    PreferSecond,
    Indifferent,
}

/// Running `ln sum exp(x_i)`.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Builds the posterior `phi(U_n) exp(beta U_n) / Z` over `utilities`.
pub fn posterior(
    prior: &PriorSpec,
    utilities: &ExpectedUtilitySeq,
    beta: f64,
    policy: &TruncationPolicy,
) -> Result<PosteriorDistribution> {
    prior.validate()?;
    policy.validate()?;
    if !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite, got {beta}")));
    }

    let finite_len = utilities.len();
    if finite_len.is_none() {
        check_convergence(utilities, beta, policy)?;
    }

    let mut tail = TailEstimator::new(prior, utilities.growth(), beta, policy.rel_tol);
    let mut log_weights = Vec::new();
    let mut values = Vec::new();
    let mut acc = LogSumExp::new();
    let mut log_tail = f64::NEG_INFINITY;
    let end = finite_len.unwrap_or(policy.max_index);

    for n in 1..=end {
        let u = utilities.value(n);
        let lw = prior.log_weight(u)? + beta * u;
        if lw.is_nan() || lw == f64::INFINITY {
            return Err(Error::Domain(format!(
                "weight of lottery {n} is not finite"
            )));
        }
        acc.push(lw);
        log_weights.push(lw);
        values.push(u);

        if finite_len.is_none() {
            let log_sum = acc.value();
            log_tail = tail.observe(n, lw, log_sum);
            if log_sum > f64::NEG_INFINITY && log_tail - log_sum < policy.rel_tol.ln() {
                break;
            }
            if n == policy.max_index {
                return Err(Error::TruncationFailure {
                    max_index: policy.max_index,
                    relative_tail: (log_tail - log_sum).exp(),
                    rel_tol: policy.rel_tol,
                });
            }
        }
    }

    let log_normalizer = acc.value();
    if log_normalizer == f64::NEG_INFINITY {
        return Err(Error::Domain(
            "all prior weights are zero; the posterior is undefined".into(),
        ));
    }
    let mut probs: Vec<f64> = log_weights
        .iter()
        .map(|lw| (lw - log_normalizer).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);

    Ok(PosteriorDistribution {
        probs,
        utilities: values,
        beta,
        log_normalizer,
        log_tail_bound: log_tail,
    })
}

/// Rejects sign/growth combinations whose normalization sum diverges.
fn check_convergence(
    utilities: &ExpectedUtilitySeq,
    beta: f64,
    policy: &TruncationPolicy,
) -> Result<()> {
    if let Growth::Logarithmic { scale, .. } = utilities.growth() {
        // Weights decay like N^(beta * scale) up to logarithmic factors.
        if scale > 0.0 && !(-beta * scale > 1.0) {
            return Err(Error::DivergentNormalization {
                beta,
                reason: format!(
                    "weights decay like N^({:.6}); convergence needs |beta| > {:.6}",
                    beta * scale,
                    1.0 / scale
                ),
            });
        }
    }
    if beta >= 0.0 && utilities.unbounded_above(policy.max_index) {
        return Err(Error::Sign {
            beta,
            reason: "expected utilities are unbounded above, so beta must be negative",
        });
    }
    if beta < 0.0 && utilities.unbounded_below(policy.max_index) {
        return Err(Error::Sign {
            beta,
            reason: "expected utilities are unbounded below, so beta must be nonnegative",
        });
    }
    Ok(())
}

/// Bounds the unnormalized mass beyond the current index.
struct TailEstimator {
    kind: TailKind,
    beta: f64,
    log_rel_tol: f64,
    prev_lw: f64,
    prev_log_ratio: f64,
    decreasing_ratios: usize,
    negligible_run: usize,
}

enum TailKind {
    /// `w_m = (c m + d) exp(beta (c m + d))`, summed exactly.
    AffineLuce {
        slope: f64,
        intercept: f64,
    },
    /// `w_N = (a + b ln N) exp(beta (a + b ln N))`, bounded by an integral.
    LogarithmicLuce {
        offset: f64,
        scale: f64,
    },
    Generic,
}

impl TailEstimator {
    fn new(prior: &PriorSpec, growth: Growth, beta: f64, rel_tol: f64) -> Self {
        let luce_like = match prior {
            PriorSpec::Luce => true,
            PriorSpec::Power { alpha } => *alpha == 1.0,
            _ => false,
        };
        let kind = match growth {
            Growth::Affine { slope, intercept } if luce_like && slope > 0.0 && beta < 0.0 => {
                TailKind::AffineLuce { slope, intercept }
            }
            Growth::Logarithmic { offset, scale }
                if luce_like && scale > 0.0 && -beta * scale > 1.0 =>
            {
                TailKind::LogarithmicLuce { offset, scale }
            }
            _ => TailKind::Generic,
        };
        Self {
            kind,
            beta,
            log_rel_tol: rel_tol.ln(),
            prev_lw: f64::NEG_INFINITY,
            prev_log_ratio: f64::INFINITY,
            decreasing_ratios: 0,
            negligible_run: 0,
        }
    }

    /// Log of a bound on `sum_{m > n} w_m`, given the `n`-th log-weight and
    /// the running log-sum. Returns `+inf` while no bound is available.
    fn observe(&mut self, n: usize, lw: f64, log_sum: f64) -> f64 {
        let bound = match self.kind {
            TailKind::AffineLuce { slope, intercept } => {
                affine_luce_tail(n, slope, intercept, self.beta)
            }
            TailKind::LogarithmicLuce { offset, scale } => {
                logarithmic_luce_tail(n, offset, scale, self.beta)
            }
            TailKind::Generic => self.generic(lw, log_sum),
        };
        self.prev_lw = lw;
        bound
    }

    fn generic(&mut self, lw: f64, log_sum: f64) -> f64 {
        let log_ratio = lw - self.prev_lw;
        if log_ratio.is_finite() && log_ratio < 0.0 && log_ratio <= self.prev_log_ratio {
            self.decreasing_ratios += 1;
        } else {
            self.decreasing_ratios = 0;
        }
        if log_ratio.is_finite() {
            self.prev_log_ratio = log_ratio;
        }

        if lw - log_sum < self.log_rel_tol {
            self.negligible_run += 1;
        } else {
            self.negligible_run = 0;
        }

        // Ratios below one and non-increasing: geometric majorant.
        if self.decreasing_ratios >= 4 {
            return lw + log_ratio - (-log_ratio.exp_m1()).ln();
        }
        if self.negligible_run >= NEGLIGIBLE_RUN {
            return lw + (NEGLIGIBLE_RUN as f64).ln();
        }
        f64::INFINITY
    }
}

/// `ln sum_{m > n} (c m + d) exp(beta (c m + d))` for `beta < 0`, `c > 0`.
fn affine_luce_tail(n: usize, c: f64, d: f64, beta: f64) -> f64 {
    let k = (n + 1) as f64;
    if c * k + d <= 0.0 {
        return f64::INFINITY;
    }
    let bc = beta * c;
    // q = exp(beta c); 1 - q and q / (1 - q) without cancellation.
    let one_minus_q = -bc.exp_m1();
    let q_over = bc.exp() / one_minus_q;
    let amplitude = c * (k + q_over) + d;
    beta * d + bc * k - one_minus_q.ln() + amplitude.ln()
}

/// Integral bound on `sum_{N > M} (a + b ln N) exp(beta (a + b ln N))`.
fn logarithmic_luce_tail(m: usize, a: f64, b: f64, beta: f64) -> f64 {
    let s = -beta * b;
    let big_m = m as f64;
    let level = a + b * big_m.ln();
    // Summand is decreasing on [M, inf) once a + b ln x > b / s.
    if level <= b / s {
        return f64::INFINITY;
    }
    let amplitude = level / (s - 1.0) + b / ((s - 1.0) * (s - 1.0));
    beta * a + (1.0 - s) * big_m.ln() + amplitude.ln()
}

/// Integer bracket around the continuous optimum: `(floor(x*), floor(x*) + 1)`
/// with the lower end clamped to 1. For the Luce prior over `U_n = n`,
/// `x* = 1/|beta|`.
pub fn optimal_bracket(beta: f64, prior: &PriorSpec) -> Result<(usize, usize)> {
    let x = prior.continuous_optimum(beta)?;
    let low = x.floor();
    if low >= usize::MAX as f64 {
        return Err(Error::Domain(format!(
            "continuous optimum {x} exceeds index range"
        )));
    }
    let low = low as usize;
    Ok((low.max(1), low.max(1).max(low + 1)))
}

/// `Z = sum n exp(-|beta| n) = 1 / (4 sinh^2(|beta|/2))` for the Bernoulli game
/// under the Luce prior.
pub fn bernoulli_partition_closed(beta: f64) -> Result<f64> {
    if !(beta < 0.0) || !beta.is_finite() {
        return Err(Error::Sign {
            beta,
            reason: "the Bernoulli partition sum converges only for beta < 0",
        });
    }
    let s = (0.5 * beta).sinh();
    Ok(1.0 / (4.0 * s * s))
}

/// Orders two probabilities the way [`PosteriorDistribution::compare`] does.
pub fn preference_of(pi: f64, pj: f64) -> Preference {
    match (pi - pj).abs().partial_cmp(&INDIFFERENCE_TOL) {
        Some(Ordering::Greater) if pi > pj => Preference::PreferFirst,
        Some(Ordering::Greater) => Preference::PreferSecond,
        _ => Preference::Indifferent,
    }
}
