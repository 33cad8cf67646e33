mod config;
mod output;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use petersburg::report::{self, format_sig, MACHINE_DIGITS};
use petersburg::simulator::{simulate_martingale_with, simulate_repeated_with, Backend};
use petersburg::{
    calibrate_bernoulli_disbelief, calibrate_disbelief_general, optimal_bracket, posterior,
    repeated_game_posterior, repeated_game_utilities, repeated_optimal, CalibrationResult,
    ErrorKind, ExpectedUtilitySeq, GameFamily, PosteriorDistribution, PriorSpec, Roulette,
    SimConfig, UtilitySpec,
};

use config::{Cli, Command, OutputFormat, RunConfig, SimKind};
use output::{fmt4, key_values, table};

/// Relative output paths resolve against this directory.
const OUTPUT_DIR_ENV: &str = "PETERSBURG_OUTPUT_DIR";

enum Failure {
    Config(String),
    Core(petersburg::Error),
}

impl From<petersburg::Error> for Failure {
    fn from(e: petersburg::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(format!("serialization failed: {e}"))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Core(e) => match e.kind() {
                ErrorKind::Domain | ErrorKind::Sign => 2,
                ErrorKind::Solver => 3,
            },
        }
    }

    /// One line: `error code=<n> kind=<kind> tag=<tag> message=<json string>`.
    fn report_line(&self) -> String {
        let (kind, tag, message) = match self {
            Failure::Config(m) => ("config", "config", m.clone()),
            Failure::Core(e) => {
                let kind = match e.kind() {
                    ErrorKind::Domain => "domain",
                    ErrorKind::Sign => "sign",
                    ErrorKind::Solver => "solver",
                };
                (kind, e.tag(), e.to_string())
            }
        };
        format!(
            "error code={} kind={kind} tag={tag} message={}",
            self.exit_code(),
            Value::String(message)
        )
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            let _ = e.print();
            eprintln!("{}", Failure::Config(first).report_line());
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.report_line());
            ExitCode::from(f.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.resolve().map_err(|e| Failure::Config(e.0))?;
    if cli.dump_config {
        return write_stdout(&(serde_json::to_string_pretty(&cfg)? + "\n"));
    }
    let backend = if cli.sequential {
        Backend::Sequential
    } else {
        Backend::default()
    };
    let artifact = run(&cfg, backend)?;
    emit(&cfg, &artifact)
}

fn emit(cfg: &RunConfig, artifact: &str) -> Result<(), Failure> {
    let Some(path) = &cfg.output_path else {
        return write_stdout(artifact);
    };
    let path = match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.clone(),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(&path, artifact)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_stdout(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        // A closed pipe means the reader has what it wanted.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(Failure::Config(format!("cannot write to stdout: {e}")))
        }
        _ => Ok(()),
    }
}

/// Produces the artifact for one command.
fn run(cfg: &RunConfig, backend: Backend) -> Result<String, Failure> {
    cfg.prior.validate()?;
    cfg.truncation.validate()?;
    match cfg.command.expect("resolved config has a command") {
        Command::Distribution => distribution(cfg),
        Command::Optimal => optimal(cfg),
        Command::Calibrate => calibrate(cfg),
        Command::Repeated => repeated(cfg),
        Command::Roulette => roulette(cfg),
        Command::Simulate => simulate(cfg, backend),
    }
}

fn utilities(cfg: &RunConfig) -> Result<ExpectedUtilitySeq, Failure> {
    Ok(cfg.game.expected_utilities(&cfg.utility)?)
}

/// The Bernoulli game with linear utility and the Luce prior has a closed-form
/// calibration equation.
fn is_closed_form_case(cfg: &RunConfig) -> bool {
    matches!(cfg.game, GameFamily::Bernoulli)
        && cfg.utility == UtilitySpec::Linear
        && cfg.prior == PriorSpec::Luce
}

fn calibration(cfg: &RunConfig, seq: &ExpectedUtilitySeq) -> Result<CalibrationResult, Failure> {
    if is_closed_form_case(cfg) {
        Ok(calibrate_bernoulli_disbelief())
    } else {
        Ok(calibrate_disbelief_general(
            seq,
            &cfg.prior,
            &cfg.truncation,
        )?)
    }
}

fn resolve_beta(cfg: &RunConfig, seq: &ExpectedUtilitySeq) -> Result<f64, Failure> {
    match cfg.beta {
        Some(b) => Ok(b),
        None => Ok(calibration(cfg, seq)?.beta()),
    }
}

fn num(x: f64) -> String {
    format_sig(x, MACHINE_DIGITS)
}

fn posterior_table(dist: &PosteriorDistribution, index: &str, utility: &str) -> String {
    let rows: Vec<Vec<String>> = dist
        .probs()
        .iter()
        .zip(dist.utilities())
        .enumerate()
        .map(|(i, (p, u))| vec![(i + 1).to_string(), fmt4(*u), fmt4(*p)])
        .collect();
    table(&[index, utility, "prob"], &rows)
}

fn distribution(cfg: &RunConfig) -> Result<String, Failure> {
    let seq = utilities(cfg)?;
    let beta = resolve_beta(cfg, &seq)?;
    let dist = posterior(&cfg.prior, &seq, beta, &cfg.truncation)?;
    Ok(match cfg.output_format {
        OutputFormat::Csv => report::posterior_csv(&dist),
        OutputFormat::Json => report::to_json_string(&report::posterior_json(&dist))?,
        OutputFormat::Table => {
            key_values(&[
                ("beta", fmt4(dist.beta())),
                ("n_trunc", dist.n_trunc().to_string()),
                ("tail_bound", fmt4(dist.tail_bound())),
            ]) + "\n"
                + &posterior_table(&dist, "n", "U_n")
        }
    })
}

fn optimal(cfg: &RunConfig) -> Result<String, Failure> {
    let seq = utilities(cfg)?;
    let beta = resolve_beta(cfg, &seq)?;
    let dist = posterior(&cfg.prior, &seq, beta, &cfg.truncation)?;
    let n_opt = dist.stochastically_optimal();
    let u_star = cfg.prior.continuous_optimum(beta)?;
    // The index bracket applies when U_n = n.
    let bracket = if matches!(cfg.game, GameFamily::Bernoulli) && cfg.utility == UtilitySpec::Linear
    {
        Some(optimal_bracket(beta, &cfg.prior)?)
    } else {
        None
    };
    let u_opt = dist.utilities()[n_opt - 1];
    let p_opt = dist.probs()[n_opt - 1];
    Ok(match cfg.output_format {
        OutputFormat::Json => report::to_json_string(&json!({
            "beta": beta,
            "n_opt": n_opt,
            "U_n_opt": u_opt,
            "prob_n_opt": p_opt,
            "continuous_optimum": u_star,
            "bracket": bracket.map(|(lo, hi)| vec![lo, hi]),
            "n_trunc": dist.n_trunc(),
        }))?,
        OutputFormat::Csv => {
            let (lo, hi) = bracket.map_or((String::new(), String::new()), |(lo, hi)| {
                (lo.to_string(), hi.to_string())
            });
            format!(
                "beta,n_opt,U_n_opt,prob_n_opt,continuous_optimum,bracket_low,bracket_high\n{},{n_opt},{},{},{},{lo},{hi}\n",
                num(beta),
                num(u_opt),
                num(p_opt),
                num(u_star)
            )
        }
        OutputFormat::Table => key_values(&[
            ("beta", fmt4(beta)),
            ("n_opt", n_opt.to_string()),
            ("U_n_opt", fmt4(u_opt)),
            ("prob_n_opt", fmt4(p_opt)),
            ("continuous_optimum", fmt4(u_star)),
            (
                "bracket",
                bracket.map_or("n/a".into(), |(lo, hi)| format!("[{lo}, {hi}]")),
            ),
        ]),
    })
}

fn calibrate(cfg: &RunConfig) -> Result<String, Failure> {
    let seq = utilities(cfg)?;
    let r = calibration(cfg, &seq)?;
    Ok(match cfg.output_format {
        OutputFormat::Json => report::to_json_string(&r)?,
        OutputFormat::Csv => format!(
            "abs_beta,beta,residual,iterations,method,multiple_roots\n{},{},{},{},{},{}\n",
            num(r.abs_beta),
            num(r.beta()),
            num(r.residual),
            r.iterations,
            r.method,
            r.multiple_roots
        ),
        OutputFormat::Table => key_values(&[
            ("abs_beta", fmt4(r.abs_beta)),
            ("residual", fmt4(r.residual)),
            ("iterations", r.iterations.to_string()),
            ("method", r.method.clone()),
            ("multiple_roots", r.multiple_roots.to_string()),
        ]),
    })
}

fn repeated(cfg: &RunConfig) -> Result<String, Failure> {
    let beta = match cfg.beta {
        Some(b) => b,
        None => calibrate_disbelief_general(
            &repeated_game_utilities(),
            &PriorSpec::Luce,
            &cfg.truncation,
        )?
        .beta(),
    };
    let result = repeated_optimal(beta)?;
    // The table over N needs |beta| > ln 2 and a tolerance the slow tail can meet.
    let dist = match repeated_game_posterior(beta, &cfg.truncation) {
        Ok(d) => Some(d),
        Err(e) => {
            eprintln!(
                "warning tag={} message={}",
                e.tag(),
                Value::String(format!("posterior over N omitted: {e}"))
            );
            None
        }
    };
    Ok(match cfg.output_format {
        OutputFormat::Json => report::to_json_string(&json!({
            "result": result,
            "posterior": dist.as_ref().map(report::posterior_json),
        }))?,
        OutputFormat::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "# u_opt={}", num(result.u_opt));
            let _ = writeln!(out, "# n_opt_continuous={}", num(result.n_opt_continuous));
            let _ = writeln!(out, "# n_opt={}", result.n_opt);
            match &dist {
                Some(d) => out += &report::posterior_csv(d).replacen("n,U_n,prob", "N,U_N,prob", 1),
                None => {
                    let _ = writeln!(out, "# beta={}", num(beta));
                    out += "N,U_N,prob\n";
                }
            }
            out
        }
        OutputFormat::Table => {
            let mut out = key_values(&[
                ("beta", fmt4(beta)),
                ("u_opt", fmt4(result.u_opt)),
                ("n_opt_continuous", fmt4(result.n_opt_continuous)),
                ("n_opt", result.n_opt.to_string()),
            ]);
            if let Some(d) = &dist {
                out += "\n";
                out += &posterior_table(d, "N", "U_N");
            }
            out
        }
    })
}

fn roulette(cfg: &RunConfig) -> Result<String, Failure> {
    let wheel = Roulette::new(cfg.roulette.x0, cfg.roulette.p_win)?;
    // The stage choice is between losses; there is no calibration for it.
    let beta = cfg.beta.unwrap_or(0.0);
    let stages = wheel.sequence(cfg.roulette.stages, beta)?;
    Ok(match cfg.output_format {
        OutputFormat::Csv => report::stage_table_csv(&stages),
        OutputFormat::Json => report::to_json_string(&json!({
            "x0": wheel.x0,
            "p_win": wheel.p_win,
            "beta": beta,
            "stages": stages,
        }))?,
        OutputFormat::Table => {
            let rows: Vec<Vec<String>> = stages
                .iter()
                .map(|s| {
                    vec![
                        s.stage.to_string(),
                        fmt4(s.u_stop),
                        fmt4(s.u_continue),
                        fmt4(s.p_stop),
                        fmt4(s.p_continue),
                    ]
                })
                .collect();
            table(
                &["stage", "u_stop", "u_continue", "p_stop", "p_continue"],
                &rows,
            )
        }
    })
}

fn simulate(cfg: &RunConfig, backend: Backend) -> Result<String, Failure> {
    let sim = cfg.sim.unwrap_or_default();
    match cfg.simulate.kind {
        SimKind::Repeated => {
            if cfg.simulate.n_games.is_empty() {
                return Err(Failure::Config("simulate.n_games is empty".into()));
            }
            let rows = cfg
                .simulate
                .n_games
                .iter()
                .map(|&n| simulate_repeated_with(n, &sim, backend))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(match cfg.output_format {
                OutputFormat::Csv => report::sim_summaries_csv(&rows),
                OutputFormat::Json => report::to_json_string(&rows)?,
                OutputFormat::Table => {
                    sim_header(&sim)
                        + &table(
                            &["n_games", "mean", "median_of_means", "stderr", "truncated"],
                            &rows
                                .iter()
                                .map(|r| {
                                    vec![
                                        r.n_games.to_string(),
                                        fmt4(r.per_game_mean),
                                        fmt4(r.per_game_median_of_means),
                                        fmt4(r.stderr_proxy),
                                        r.truncated_games.to_string(),
                                    ]
                                })
                                .collect::<Vec<_>>(),
                        )
                }
            })
        }
        SimKind::Martingale => {
            let s = simulate_martingale_with(
                cfg.roulette.stages,
                cfg.roulette.x0,
                cfg.roulette.p_win,
                &sim,
                backend,
            )?;
            Ok(match cfg.output_format {
                OutputFormat::Csv => report::martingale_csv(&s),
                OutputFormat::Json => report::to_json_string(&s)?,
                OutputFormat::Table => {
                    sim_header(&sim)
                        + &table(
                            &["stage", "empirical", "stderr", "exact"],
                            &s.stages
                                .iter()
                                .map(|st| {
                                    vec![
                                        st.stage.to_string(),
                                        fmt4(st.empirical_mean),
                                        fmt4(st.stderr),
                                        fmt4(st.exact),
                                    ]
                                })
                                .collect::<Vec<_>>(),
                        )
                }
            })
        }
    }
}

fn sim_header(sim: &SimConfig) -> String {
    key_values(&[
        ("seed", sim.seed.to_string()),
        ("replications", sim.replications.to_string()),
    ]) + "\n"
}
