//! Lotteries, utility functions and lottery families.
//!
//! A [`Lottery`] is a finite list of winning outcomes plus a residual branch
//! that pays nothing. The Bernoulli coin-toss game generates the family
//! `L_n` with outcomes `(2^m, 2^-m)` for `m = 1..=n` and residual `2^-n`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(prob) + residual == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub payoff: f64,
    pub prob: f64,
}

/// A finite lottery with a zero-payoff residual branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLottery")]
pub struct Lottery {
    outcomes: Vec<Outcome>,
    residual: f64,
}

#[derive(Deserialize)]
struct RawLottery {
    outcomes: Vec<Outcome>,
    residual: f64,
}

impl TryFrom<RawLottery> for Lottery {
    type Error = Error;

    fn try_from(raw: RawLottery) -> Result<Self> {
        Lottery::new(raw.outcomes, raw.residual)
    }
}

impl Lottery {
    pub fn new(outcomes: Vec<Outcome>, residual: f64) -> Result<Self> {
        let bad_prob = |p: f64| !(0.0..=1.0).contains(&p) || !p.is_finite();
        if bad_prob(residual) {
            return Err(Error::InvalidLottery(format!(
                "residual probability {residual} outside [0, 1]"
            )));
        }
        for (i, o) in outcomes.iter().enumerate() {
            if bad_prob(o.prob) {
                return Err(Error::InvalidLottery(format!(
                    "outcome {} has probability {} outside [0, 1]",
                    i + 1,
                    o.prob
                )));
            }
            if !o.payoff.is_finite() {
                return Err(Error::InvalidLottery(format!(
                    "outcome {} has non-finite payoff",
                    i + 1
                )));
            }
        }
        let total: f64 = outcomes.iter().map(|o| o.prob).sum::<f64>() + residual;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidLottery(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { outcomes, residual })
    }

    /// Lottery that always pays nothing.
    pub fn empty() -> Self {
        Self {
            outcomes: Vec::new(),
            residual: 1.0,
        }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob).sum::<f64>() + self.residual
    }

    pub fn expected_utility(&self, utility: &UtilitySpec) -> Result<f64> {
        self.expected_utility_detailed(utility).map(|eu| eu.value)
    }

    /// Expected utility over the winning outcomes, reporting whether the
    /// residual branch had to be skipped because `u(0)` is undefined.
    pub fn expected_utility_detailed(&self, utility: &UtilitySpec) -> Result<ExpectedUtility> {
        utility.validate()?;
        let mut value = 0.0;
        for (i, o) in self.outcomes.iter().enumerate() {
            value += utility.eval(o.payoff, i + 1)? * o.prob;
        }
        let residual_skipped = match utility.utility_at_zero() {
            Some(u0) => {
                value += u0 * self.residual;
                false
            }
            None => self.residual > 0.0,
        };
        Ok(ExpectedUtility {
            value,
            residual_skipped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedUtility {
    pub value: f64,
    /// The residual branch carried probability but `u(0)` is not finite.
    pub residual_skipped: bool,
}

/// The `n`-th Bernoulli lottery: up to `n` tosses, paying `2^m` when tails
/// first shows at toss `m`.
pub fn bernoulli_lottery(n: i64) -> Result<Lottery> {
    if n < 1 {
        return Err(Error::InvalidIndex(n));
    }
    let n = i32::try_from(n).map_err(|_| Error::InvalidIndex(n))?;
    // 2^-m underflows past m = 1074; such branches carry no representable mass.
    let outcomes = (1..=n)
        .map(|m| Outcome {
            payoff: 2f64.powi(m),
            prob: 2f64.powi(-m),
        })
        .collect();
    Ok(Lottery {
        outcomes,
        residual: 2f64.powi(-n),
    })
}

/// Utility function applied to payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UtilitySpec {
    /// `u(x) = x`
    #[default]
    Linear,
    /// `u(x) = ln x`, payoffs must be positive.
    #[serde(alias = "logarithmic")]
    Log,
    /// `u(x) = x^exponent`
    Power { exponent: f64 },
    /// Assigns `base^m` to the `m`-th outcome regardless of its payoff.
    Geometric { base: f64 },
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            UtilitySpec::Power { exponent } if !(exponent > 0.0 && exponent.is_finite()) => Err(
                Error::Domain(format!("power exponent must be positive, got {exponent}")),
            ),
            UtilitySpec::Geometric { base } if !(base > 0.0 && base.is_finite()) => Err(
                Error::Domain(format!("geometric base must be positive, got {base}")),
            ),
            _ => Ok(()),
        }
    }

    /// Utility of `payoff` as the `index`-th (1-based) outcome.
    pub fn eval(&self, payoff: f64, index: usize) -> Result<f64> {
        match *self {
            UtilitySpec::Linear => Ok(payoff),
            UtilitySpec::Log => {
                if payoff > 0.0 {
                    Ok(payoff.ln())
                } else {
                    Err(Error::Domain(format!(
                        "logarithmic utility needs positive payoffs, got {payoff}"
                    )))
                }
            }
            UtilitySpec::Power { exponent } => {
                if payoff >= 0.0 {
                    Ok(payoff.powf(exponent))
                } else {
                    Err(Error::Domain(format!(
                        "power utility needs nonnegative payoffs, got {payoff}"
                    )))
                }
            }
            UtilitySpec::Geometric { base } => Ok(base.powf(index as f64)),
        }
    }

    fn utility_at_zero(&self) -> Option<f64> {
        match self {
            UtilitySpec::Linear | UtilitySpec::Power { .. } => Some(0.0),
            UtilitySpec::Log | UtilitySpec::Geometric { .. } => None,
        }
    }
}

/// Closed-form expected utility of the `n`-th Bernoulli lottery when the
/// `m`-th outcome carries utility `x^m`: `x (2^n - x^n) / (2^n (2 - x))`,
/// and `n` at `x = 2`. The flag is true when the family converges (`x < 2`).
pub fn geometric_expected_utility(n: i64, x: f64) -> Result<(f64, bool)> {
    if n < 1 {
        return Err(Error::InvalidIndex(n));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "geometric base must be positive, got {x}"
        )));
    }
    Ok((geometric_partial_sum(n as f64, x), x < 2.0))
}

/// `sum_{m=1}^{n} (x/2)^m`, written to stay accurate near `x = 2`.
fn geometric_partial_sum(n: f64, x: f64) -> f64 {
    if x == 2.0 {
        return n;
    }
    let r = x / 2.0;
    // 1 - r and r - 1 are exact here, so the near-2 cancellation is benign.
    r * (-(n * (r - 1.0).ln_1p()).exp_m1()) / (1.0 - r)
}

/// A family of lotteries indexed by `n >= 1`, generated on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GameFamily {
    Bernoulli,
    Custom { lotteries: Vec<Lottery> },
}

impl GameFamily {
    pub fn label(&self) -> &'static str {
        match self {
            GameFamily::Bernoulli => "bernoulli",
            GameFamily::Custom { .. } => "custom",
        }
    }

    /// Number of lotteries, `None` for an infinite family.
    pub fn len(&self) -> Option<usize> {
        match self {
            GameFamily::Bernoulli => None,
            GameFamily::Custom { lotteries } => Some(lotteries.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn lottery(&self, n: i64) -> Result<Lottery> {
        match self {
            GameFamily::Bernoulli => bernoulli_lottery(n),
            GameFamily::Custom { lotteries } => {
                if n < 1 {
                    return Err(Error::InvalidIndex(n));
                }
                lotteries
                    .get(n as usize - 1)
                    .cloned()
                    .ok_or(Error::IndexOutOfRange {
                        index: n as usize,
                        len: lotteries.len(),
                    })
            }
        }
    }

    /// Expected utilities of the family under `utility`.
    ///
    /// Bernoulli families use closed forms, so arbitrarily large indices
    /// stay O(1) and never build the lottery.
    pub fn expected_utilities(&self, utility: &UtilitySpec) -> Result<ExpectedUtilitySeq> {
        utility.validate()?;
        match self {
            GameFamily::Custom { lotteries } => {
                let values = lotteries
                    .iter()
                    .map(|l| l.expected_utility(utility))
                    .collect::<Result<Vec<_>>>()?;
                ExpectedUtilitySeq::finite("custom", values)
            }
            GameFamily::Bernoulli => Ok(match *utility {
                UtilitySpec::Linear => ExpectedUtilitySeq::bernoulli(),
                UtilitySpec::Log => ExpectedUtilitySeq::from_fn("bernoulli/log", |n| {
                    let n = n as f64;
                    std::f64::consts::LN_2 * (2.0 - (n + 2.0) * (-n).exp2())
                }),
                UtilitySpec::Power { exponent } => {
                    // sum_m 2^{m a} 2^{-m} = sum_m (2^{a-1})^m
                    let x = 2.0 * (exponent - 1.0).exp2();
                    ExpectedUtilitySeq::from_fn("bernoulli/power", move |n| {
                        geometric_partial_sum(n as f64, x)
                    })
                }
                UtilitySpec::Geometric { base } => {
                    let seq = ExpectedUtilitySeq::from_fn("bernoulli/geometric", move |n| {
                        geometric_partial_sum(n as f64, base)
                    });
                    if base == 2.0 {
                        seq.with_growth(Growth::Affine {
                            slope: 1.0,
                            intercept: 0.0,
                        })
                    } else {
                        seq
                    }
                }
            }),
        }
    }
}

/// Known asymptotic shape of an expected-utility sequence, used for
/// analytic tail bounds when truncating infinite sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `U_n = slope * n + intercept`
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// `U_n = offset + scale * ln n`
    Logarithmic {
        offset: f64,
        scale: f64,
    },
    Unknown,
}

type Generator = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Finite(Arc<[f64]>),
    Generator(Generator),
}

/// Expected utilities `U_1, U_2, ...` of a lottery family.
#[derive(Clone)]
pub struct ExpectedUtilitySeq {
    label: String,
    source: Source,
    growth: Growth,
}

impl fmt::Debug for ExpectedUtilitySeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("ExpectedUtilitySeq");
        d.field("label", &self.label);
        match &self.source {
            Source::Finite(v) => d.field("values", v),
            Source::Generator(_) => d.field("values", &"<generator>"),
        };
        d.field("growth", &self.growth).finish()
    }
}

impl ExpectedUtilitySeq {
    pub fn finite(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("utility sequence is empty".into()));
        }
        if let Some(i) = values.iter().position(|u| !u.is_finite()) {
            return Err(Error::Domain(format!("U_{} is not finite", i + 1)));
        }
        Ok(Self {
            label: label.into(),
            source: Source::Finite(values.into()),
            growth: Growth::Unknown,
        })
    }

    /// Infinite sequence given by `f(n)` for `n >= 1`.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            source: Source::Generator(Arc::new(f)),
            growth: Growth::Unknown,
        }
    }

    /// Attach a growth hint; the caller vouches that it is exact.
    pub fn with_growth(mut self, growth: Growth) -> Self {
        self.growth = growth;
        self
    }

    /// `U_n = n`: the Bernoulli game under linear utility.
    pub fn bernoulli() -> Self {
        Self::affine("bernoulli", 1.0, 0.0)
    }

    pub fn affine(label: impl Into<String>, slope: f64, intercept: f64) -> Self {
        Self::from_fn(label, move |n| slope * n as f64 + intercept)
            .with_growth(Growth::Affine { slope, intercept })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    /// `None` for infinite sequences.
    pub fn len(&self) -> Option<usize> {
        match &self.source {
            Source::Finite(v) => Some(v.len()),
            Source::Generator(_) => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// `U_n` for `n >= 1`. Panics past the end of a finite sequence.
    pub fn value(&self, n: usize) -> f64 {
        assert!(n >= 1, "utility indices start at 1");
        match &self.source {
            Source::Finite(v) => v[n - 1],
            Source::Generator(f) => f(n),
        }
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        match self.len() {
            Some(len) if n == 0 || n > len => None,
            _ if n == 0 => None,
            _ => Some(self.value(n)),
        }
    }

    /// Checked monotonicity over the first `upto` terms (or all of a finite
    /// sequence).
    pub fn monotone_nondecreasing(&self, upto: usize) -> bool {
        let end = self.len().map_or(upto, |len| len.min(upto));
        (2..=end).all(|n| self.value(n) >= self.value(n - 1))
    }

    /// Whether the sequence looks unbounded above when probed near
    /// `probe_index`. Finite sequences are always bounded.
    pub fn unbounded_above(&self, probe_index: usize) -> bool {
        match (self.len(), self.growth) {
            (Some(_), _) => false,
            (None, Growth::Affine { slope, .. }) => slope > 0.0,
            (None, Growth::Logarithmic { scale, .. }) => scale > 0.0,
            (None, Growth::Unknown) => {
                let [a, b, c] = self.probe(probe_index);
                a < b && b < c
            }
        }
    }

    pub fn unbounded_below(&self, probe_index: usize) -> bool {
        match (self.len(), self.growth) {
            (Some(_), _) => false,
            (None, Growth::Affine { slope, .. }) => slope < 0.0,
            (None, Growth::Logarithmic { scale, .. }) => scale < 0.0,
            (None, Growth::Unknown) => {
                let [a, b, c] = self.probe(probe_index);
                a > b && b > c
            }
        }
    }

    fn probe(&self, at: usize) -> [f64; 3] {
        let at = at.max(3);
        [self.value(at - 2), self.value(at - 1), self.value(at)]
    }

    /// The first `n` values.
    pub fn take(&self, n: usize) -> Vec<f64> {
        let end = self.len().map_or(n, |len| len.min(n));
        (1..=end).map(|i| self.value(i)).collect()
    }
}
