//! Monte Carlo oracle for the Bernoulli game and the roulette martingale.
//!
//! Each replication draws from its own ChaCha8 stream, selected by the
//! replication index, so results do not depend on how replications are
//! split into shards or which backend runs them. Shards cover contiguous
//! replication ranges and are concatenated in shard order before any
//! floating-point reduction.

use std::ops::Range;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::Roulette;

pub const GENERATOR: &str = "chacha8: seed_from_u64(seed), stream = replication index";

/// Largest toss count whose payoff `2^n` stays exact in binary64 and sums
/// exactly in `u128`.
pub const MAX_TOSSES_LIMIT: u32 = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: usize,
    pub max_tosses: u32,
    pub parallel_shards: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            replications: 1000,
            max_tosses: 60,
            parallel_shards: 16,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Domain("replications must be at least 1".into()));
        }
        if self.parallel_shards < 1 {
            return Err(Error::Domain("parallel_shards must be at least 1".into()));
        }
        if !(1..=MAX_TOSSES_LIMIT).contains(&self.max_tosses) {
            return Err(Error::Domain(format!(
                "max_tosses must lie in 1..={MAX_TOSSES_LIMIT}, got {}",
                self.max_tosses
            )));
        }
        Ok(())
    }

    fn shard_ranges(&self) -> Vec<Range<u64>> {
        let reps = self.replications as u64;
        let shards = (self.parallel_shards as u64).min(reps);
        let base = reps / shards;
        let extra = reps % shards;
        let mut start = 0;
        (0..shards)
            .map(|s| {
                let len = base + u64::from(s < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    }
}

/// How shards are executed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Backend {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Rayon,
}

/// Generator for replication `rep`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn run_replications<T, F>(cfg: &SimConfig, backend: Backend, per_rep: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let shards = cfg.shard_ranges();
    match backend {
        Backend::Sequential => shards.into_iter().flatten().map(&per_rep).collect(),
        #[cfg(feature = "parallel")]
        Backend::Rayon => {
            use rayon::prelude::*;
            let parts: Vec<Vec<T>> = shards
                .into_par_iter()
                .map(|r| r.map(&per_rep).collect())
                .collect();
            parts.into_iter().flatten().collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameDraw {
    pub tosses: u32,
    pub payoff: u64,
    /// The geometric draw exceeded `max_tosses` and was capped.
    pub truncated: bool,
}

/// One Bernoulli game: tosses until the first tail, paying `2^tosses`.
///
/// The toss count is read off the trailing zero bits of a single uniform
/// 64-bit draw, which is geometric with parameter 1/2.
pub fn play_bernoulli_game<R: RngCore + ?Sized>(rng: &mut R, max_tosses: u32) -> GameDraw {
    let max_tosses = max_tosses.clamp(1, MAX_TOSSES_LIMIT);
    let tosses = rng.next_u64().trailing_zeros() + 1;
    let (tosses, truncated) = if tosses > max_tosses {
        (max_tosses, true)
    } else {
        (tosses, false)
    };
    GameDraw {
        tosses,
        payoff: 1u64 << tosses,
        truncated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub n_games: u64,
    pub replications: usize,
    /// Mean over replications of the per-game average winnings.
    pub per_game_mean: f64,
    pub per_game_median_of_means: f64,
    /// Standard deviation of replication means over `sqrt(replications)`.
    pub stderr_proxy: f64,
    pub truncated_games: u64,
    pub config: SimConfig,
    pub generator: String,
}

pub fn simulate_repeated(n_games: u64, cfg: &SimConfig) -> Result<SimSummary> {
    simulate_repeated_with(n_games, cfg, Backend::default())
}

pub fn simulate_repeated_with(
    n_games: u64,
    cfg: &SimConfig,
    backend: Backend,
) -> Result<SimSummary> {
    cfg.validate()?;
    if n_games == 0 {
        return Err(Error::Domain("number of games must be at least 1".into()));
    }
    let per_rep = run_replications(cfg, backend, |rep| {
        let mut rng = replication_rng(cfg.seed, rep);
        let mut total: u128 = 0;
        let mut truncated = 0u64;
        for _ in 0..n_games {
            let g = play_bernoulli_game(&mut rng, cfg.max_tosses);
            total += u128::from(g.payoff);
            truncated += u64::from(g.truncated);
        }
        (total as f64 / n_games as f64, truncated)
    });

    let reps = per_rep.len() as f64;
    let mut means: Vec<f64> = per_rep.iter().map(|&(m, _)| m).collect();
    let truncated_games = per_rep.iter().map(|&(_, t)| t).sum();
    let mean = means.iter().sum::<f64>() / reps;
    let var = if means.len() > 1 {
        means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (reps - 1.0)
    } else {
        0.0
    };
    means.sort_by(f64::total_cmp);
    Ok(SimSummary {
        n_games,
        replications: cfg.replications,
        per_game_mean: mean,
        per_game_median_of_means: median_sorted(&means),
        stderr_proxy: (var / reps).sqrt(),
        truncated_games,
        config: *cfg,
        generator: GENERATOR.into(),
    })
}

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageEstimate {
    pub stage: u32,
    pub empirical_mean: f64,
    pub stderr: f64,
    /// Closed-form expected value at this horizon.
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSummary {
    pub x0: f64,
    pub p_win: f64,
    pub stages: Vec<StageEstimate>,
    pub config: SimConfig,
    pub generator: String,
}

pub fn simulate_martingale(
    n_stages: u32,
    x0: f64,
    p_win: f64,
    cfg: &SimConfig,
) -> Result<MartingaleSummary> {
    simulate_martingale_with(n_stages, x0, p_win, cfg, Backend::default())
}

/// Doubling strategy: bet `2^k x0` after `k` losses, stop at the first win.
/// Reports the mean net outcome for every horizon `1..=n_stages`.
pub fn simulate_martingale_with(
    n_stages: u32,
    x0: f64,
    p_win: f64,
    cfg: &SimConfig,
    backend: Backend,
) -> Result<MartingaleSummary> {
    cfg.validate()?;
    let wheel = Roulette::new(x0, p_win)?;
    if !(1..=MAX_TOSSES_LIMIT).contains(&n_stages) {
        return Err(Error::Domain(format!(
            "n_stages must lie in 1..={MAX_TOSSES_LIMIT}, got {n_stages}"
        )));
    }
    // Spin of the first win, or 0 if every spin up to the horizon lost.
    let first_wins = run_replications(cfg, backend, |rep| {
        let mut rng = replication_rng(cfg.seed, rep);
        (1..=n_stages)
            .find(|_| rng.random::<f64>() < p_win)
            .unwrap_or(0)
    });

    let mut wins_at = vec![0u64; n_stages as usize + 1];
    for k in first_wins {
        wins_at[k as usize] += 1;
    }
    let reps = cfg.replications as f64;
    let mut wins = 0u64;
    let stages = (1..=n_stages)
        .map(|h| {
            wins += wins_at[h as usize];
            let losses = cfg.replications as u64 - wins;
            let lost_stake = ((h as f64).exp2() - 1.0) * x0;
            let q = wins as f64 / reps;
            Ok(StageEstimate {
                stage: h,
                empirical_mean: (wins as f64 * x0 - losses as f64 * lost_stake) / reps,
                stderr: (q * (1.0 - q) / reps).sqrt() * (x0 + lost_stake),
                exact: wheel.expected_value(h)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MartingaleSummary {
        x0,
        p_win,
        stages,
        config: *cfg,
        generator: GENERATOR.into(),
    })
}
