//! Stochastic-preference analysis of the St. Petersburg game.
//!
//! Lotteries are not ranked by expected utility alone. A population's choice
//! probabilities over a family of lotteries follow from minimizing the
//! Kullback-Leibler information relative to a prior, which yields
//! `p(L_n) ∝ phi(U_n) exp(beta U_n)`. With disbelief (`beta < 0`) the most
//! probable lottery has finite expected utility even when `U_n` diverges.
//!
//! - [`lottery`]: lotteries, utility functions, lottery families.
//! - [`prior`]: prior families and their continuous optima.
//! - [`posterior`]: truncated, log-domain posterior construction and queries.
//! - [`calibration`]: variance-matching calibration of `|beta|`.
//! - [`scenarios`]: repeated games and the roulette martingale.
//! - [`simulator`]: Monte Carlo oracle, parallel with the `parallel` feature.
//! - [`report`]: CSV/JSON serializations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod lottery;
pub mod posterior;
pub mod prior;
pub mod report;
pub mod roots;
pub mod scenarios;
pub mod simulator;

pub use calibration::{
    bernoulli_mean_closed, bernoulli_variance_closed, calibrate_bernoulli_disbelief,
    calibrate_disbelief_general, CalibrationResult,
};
pub use error::{Error, ErrorKind, Result};
pub use lottery::{
    bernoulli_lottery, geometric_expected_utility, ExpectedUtilitySeq, GameFamily, Growth, Lottery,
    Outcome, UtilitySpec,
};
pub use posterior::{
    bernoulli_partition_closed, optimal_bracket, posterior, PosteriorDistribution, Preference,
    TruncationPolicy,
};
pub use prior::PriorSpec;
pub use scenarios::{
    repeated_game_posterior, repeated_game_utilities, repeated_game_value, repeated_optimal,
    roulette_asymptotic_value, roulette_expected_value, roulette_stage_choice, RepeatedGameResult,
    Roulette, StageChoice,
};
pub use simulator::{
    play_bernoulli_game, simulate_martingale, simulate_repeated, Backend, MartingaleSummary,
    SimConfig, SimSummary,
};
