//! Stable text serializations: CSV tables and JSON documents.
//!
//! Numbers are written with a fixed number of significant digits, `.` as the
//! decimal separator, LF line endings and no locale dependence. JSON objects
//! are emitted with sorted keys.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::posterior::PosteriorDistribution;
use crate::scenarios::StageChoice;
use crate::simulator::{MartingaleSummary, SimSummary};

/// Significant digits used in CSV and JSON output.
pub const MACHINE_DIGITS: usize = 12;

/// Formats `x` with `digits` significant digits, trimming trailing zeros.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{}", trim_fraction(mantissa.to_string()), e),
            None => s,
        }
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// Rounds `x` to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.max(1) - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x, digits)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|i| round_value(i, digits)),
        Value::Object(map) => map.values_mut().for_each(|i| round_value(i, digits)),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to [`MACHINE_DIGITS`] and sorted keys.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v, MACHINE_DIGITS);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn num(x: f64) -> String {
    format_sig(x, MACHINE_DIGITS)
}

pub fn posterior_json(dist: &PosteriorDistribution) -> Value {
    let rows: Vec<Value> = dist
        .probs()
        .iter()
        .zip(dist.utilities())
        .enumerate()
        .map(|(i, (p, u))| json!({"n": i + 1, "U_n": u, "prob": p}))
        .collect();
    json!({
        "metadata": {
            "beta": dist.beta(),
            "n_trunc": dist.n_trunc(),
            "tail_bound": dist.tail_bound(),
            "relative_tail": dist.relative_tail(),
        },
        "rows": rows,
    })
}

/// Posterior table with `# key=value` metadata lines above the header.
pub fn posterior_csv(dist: &PosteriorDistribution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# beta={}", num(dist.beta()));
    let _ = writeln!(out, "# n_trunc={}", dist.n_trunc());
    let _ = writeln!(out, "# tail_bound={}", num(dist.tail_bound()));
    out.push_str("n,U_n,prob\n");
    for (i, (p, u)) in dist.probs().iter().zip(dist.utilities()).enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, num(*u), num(*p));
    }
    out
}

pub fn stage_table_csv(stages: &[StageChoice]) -> String {
    let mut out = String::from("stage,u_stop,u_continue,p_stop,p_continue\n");
    for s in stages {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.stage,
            num(s.u_stop),
            num(s.u_continue),
            num(s.p_stop),
            num(s.p_continue)
        );
    }
    out
}

pub fn sim_summaries_csv(rows: &[SimSummary]) -> String {
    let mut out = String::new();
    if let Some(first) = rows.first() {
        let _ = writeln!(out, "# seed={}", first.config.seed);
        let _ = writeln!(out, "# replications={}", first.config.replications);
        let _ = writeln!(out, "# generator={}", first.generator);
    }
    out.push_str("n_games,replications,per_game_mean,per_game_median_of_means,stderr_proxy,truncated_games\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n_games,
            r.replications,
            num(r.per_game_mean),
            num(r.per_game_median_of_means),
            num(r.stderr_proxy),
            r.truncated_games
        );
    }
    out
}

pub fn martingale_csv(summary: &MartingaleSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# seed={}", summary.config.seed);
    let _ = writeln!(out, "# replications={}", summary.config.replications);
    let _ = writeln!(out, "# generator={}", summary.generator);
    let _ = writeln!(out, "# x0={}", num(summary.x0));
    let _ = writeln!(out, "# p_win={}", num(summary.p_win));
    out.push_str("stage,empirical_mean,stderr,exact\n");
    for s in &summary.stages {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.stage,
            num(s.empirical_mean),
            num(s.stderr),
            num(s.exact)
        );
    }
    out
}
