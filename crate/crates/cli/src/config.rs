//! Run configuration: JSON file keys and command-line flags, flags winning.

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use petersburg::{GameFamily, PriorSpec, SimConfig, TruncationPolicy, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Distribution,
    Optimal,
    Calibrate,
    Repeated,
    Roulette,
    Simulate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    /// Average winnings per game over N repeated Bernoulli games.
    #[default]
    Repeated,
    /// Doubling strategy on roulette.
    Martingale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameArg {
    Bernoulli,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Luce,
    Power,
    Log,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UtilityArg {
    Linear,
    Log,
    Power,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouletteConfig {
    pub x0: f64,
    pub p_win: f64,
    pub stages: u32,
}

impl Default for RouletteConfig {
    fn default() -> Self {
        Self {
            x0: 1.0,
            p_win: petersburg::scenarios::DOUBLE_ZERO_WIN,
            stages: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub kind: SimKind,
    /// Games per replication, one output row each.
    pub n_games: Vec<u64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            kind: SimKind::Repeated,
            n_games: (3..=12).map(|k| 1u64 << k).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub game: GameFamily,
    pub utility: UtilitySpec,
    pub prior: PriorSpec,
    /// Calibrated by variance matching when absent.
    pub beta: Option<f64>,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub truncation: TruncationPolicy,
    pub sim: Option<SimConfig>,
    pub roulette: RouletteConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            game: GameFamily::Bernoulli,
            utility: UtilitySpec::Linear,
            prior: PriorSpec::Luce,
            beta: None,
            output_format: OutputFormat::Csv,
            output_path: None,
            truncation: TruncationPolicy::default(),
            sim: None,
            roulette: RouletteConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Stochastic-preference analysis of the St. Petersburg game.
#[derive(Debug, Parser)]
#[command(name = "petersburg", version, about)]
pub struct Cli {
    /// Computation to run; may instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// JSON run configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Print the merged configuration as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,

    /// Lottery family. `custom` needs `game.lotteries` in the config file.
    #[arg(long, value_enum)]
    pub game: Option<GameArg>,

    #[arg(long, value_enum)]
    pub utility: Option<UtilityArg>,
    /// Exponent of the power utility.
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Base of the geometric utility.
    #[arg(long)]
    pub base: Option<f64>,

    #[arg(long, value_enum)]
    pub prior: Option<PriorArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub u0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Belief parameter; calibrated when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,

    #[arg(long = "output-format", alias = "format", value_enum)]
    pub output_format: Option<OutputFormat>,
    /// Output file; relative paths resolve against $PETERSBURG_OUTPUT_DIR.
    #[arg(long = "output-path", alias = "output")]
    pub output_path: Option<PathBuf>,

    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_index: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub max_tosses: Option<u32>,
    #[arg(long)]
    pub parallel_shards: Option<usize>,
    /// Run simulations on one thread.
    #[arg(long)]
    pub sequential: bool,

    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub p_win: Option<f64>,
    /// Number of roulette stages.
    #[arg(long)]
    pub stages: Option<u32>,

    #[arg(long = "sim-kind", value_enum)]
    pub sim_kind: Option<SimKind>,
    /// Games per replication for `simulate`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_games: Option<Vec<u64>>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

impl Cli {
    /// Config file (if any) with flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => load(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg)?;
        if cfg.command.is_none() {
            return Err(config_err(
                "no command given on the command line or in the config file",
            ));
        }
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        if self.command.is_some() {
            cfg.command = self.command;
        }
        match self.game {
            Some(GameArg::Bernoulli) => cfg.game = GameFamily::Bernoulli,
            Some(GameArg::Custom) if !matches!(cfg.game, GameFamily::Custom { .. }) => {
                return Err(config_err(
                    "--game custom needs game.lotteries in a config file",
                ));
            }
            _ => {}
        }
        self.apply_utility(cfg)?;
        self.apply_prior(cfg)?;
        if self.beta.is_some() {
            cfg.beta = self.beta;
        }
        if let Some(f) = self.output_format {
            cfg.output_format = f;
        }
        if let Some(p) = &self.output_path {
            cfg.output_path = Some(p.clone());
        }
        if let Some(t) = self.rel_tol {
            cfg.truncation.rel_tol = t;
        }
        if let Some(m) = self.max_index {
            cfg.truncation.max_index = m;
        }

        let sim_flags = self.seed.is_some()
            || self.replications.is_some()
            || self.max_tosses.is_some()
            || self.parallel_shards.is_some();
        if sim_flags {
            let sim = cfg.sim.get_or_insert_with(SimConfig::default);
            if let Some(v) = self.seed {
                sim.seed = v;
            }
            if let Some(v) = self.replications {
                sim.replications = v;
            }
            if let Some(v) = self.max_tosses {
                sim.max_tosses = v;
            }
            if let Some(v) = self.parallel_shards {
                sim.parallel_shards = v;
            }
        }

        if let Some(v) = self.x0 {
            cfg.roulette.x0 = v;
        }
        if let Some(v) = self.p_win {
            cfg.roulette.p_win = v;
        }
        if let Some(v) = self.stages {
            cfg.roulette.stages = v;
        }
        if let Some(k) = self.sim_kind {
            cfg.simulate.kind = k;
        }
        if let Some(n) = &self.n_games {
            cfg.simulate.n_games = n.clone();
        }
        Ok(())
    }

    fn apply_utility(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        let current = cfg.utility;
        cfg.utility = match self.utility {
            None => current,
            Some(UtilityArg::Linear) => UtilitySpec::Linear,
            Some(UtilityArg::Log) => UtilitySpec::Log,
            Some(UtilityArg::Power) => UtilitySpec::Power {
                exponent: match current {
                    UtilitySpec::Power { exponent } => exponent,
                    _ => self
                        .exponent
                        .ok_or_else(|| config_err("--utility power needs --exponent"))?,
                },
            },
            Some(UtilityArg::Geometric) => UtilitySpec::Geometric {
                base: match current {
                    UtilitySpec::Geometric { base } => base,
                    _ => self
                        .base
                        .ok_or_else(|| config_err("--utility geometric needs --base"))?,
                },
            },
        };
        match (&mut cfg.utility, self.exponent, self.base) {
            (UtilitySpec::Power { exponent }, Some(e), None) => *exponent = e,
            (UtilitySpec::Geometric { base }, None, Some(b)) => *base = b,
            (_, None, None) => {}
            _ => {
                return Err(config_err(
                    "--exponent/--base do not match the utility kind",
                ))
            }
        }
        Ok(())
    }

    fn apply_prior(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| config_err(format!("--prior {} needs --{flag}", self.prior_label())))
        };
        if let Some(kind) = self.prior {
            let same_kind = matches!(
                (kind, &cfg.prior),
                (PriorArg::Luce, PriorSpec::Luce)
                    | (PriorArg::Power, PriorSpec::Power { .. })
                    | (PriorArg::Log, PriorSpec::Log { .. })
                    | (PriorArg::Logit, PriorSpec::Logit { .. })
            );
            if !same_kind {
                cfg.prior = match kind {
                    PriorArg::Luce => PriorSpec::Luce,
                    PriorArg::Power => PriorSpec::Power {
                        alpha: need(self.alpha, "alpha")?,
                    },
                    PriorArg::Log => PriorSpec::Log {
                        u0: self.u0.unwrap_or(1.0),
                    },
                    PriorArg::Logit => PriorSpec::Logit {
                        b: need(self.b, "b")?,
                        c: need(self.c, "c")?,
                        gamma: need(self.gamma, "gamma")?,
                    },
                };
            }
        }
        match &mut cfg.prior {
            PriorSpec::Power { alpha } => {
                if let Some(v) = self.alpha {
                    *alpha = v;
                }
            }
            PriorSpec::Log { u0 } => {
                if let Some(v) = self.u0 {
                    *u0 = v;
                }
            }
            PriorSpec::Logit { b, c, gamma } => {
                if let Some(v) = self.b {
                    *b = v;
                }
                if let Some(v) = self.c {
                    *c = v;
                }
                if let Some(v) = self.gamma {
                    *gamma = v;
                }
            }
            PriorSpec::Luce => {}
        }
        let used: &[&str] = match cfg.prior {
            PriorSpec::Luce => &[],
            PriorSpec::Power { .. } => &["alpha"],
            PriorSpec::Log { .. } => &["u0"],
            PriorSpec::Logit { .. } => &["b", "c", "gamma"],
        };
        for (flag, given) in [
            ("alpha", self.alpha.is_some()),
            ("u0", self.u0.is_some()),
            ("b", self.b.is_some()),
            ("c", self.c.is_some()),
            ("gamma", self.gamma.is_some()),
        ] {
            if given && !used.contains(&flag) {
                return Err(config_err(format!(
                    "--{flag} does not apply to the {} prior",
                    cfg.prior.label()
                )));
            }
        }
        Ok(())
    }

    fn prior_label(&self) -> &'static str {
        match self.prior {
            Some(PriorArg::Luce) | None => "luce",
            Some(PriorArg::Power) => "power",
            Some(PriorArg::Log) => "log",
            Some(PriorArg::Logit) => "logit",
        }
    }
}
