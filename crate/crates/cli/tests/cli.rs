use std::process::{Command, Output};

use petersburg::{posterior, report, ExpectedUtilitySeq, PriorSpec, TruncationPolicy};

fn petersburg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petersburg"))
        .args(args)
        .env_remove("PETERSBURG_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn calibrate_bernoulli_luce() {
    let o = petersburg(&[
        "calibrate",
        "--game",
        "bernoulli",
        "--prior",
        "luce",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let abs_beta = json(&o)["abs_beta"].as_f64().unwrap();
    assert!((abs_beta - 1.157).abs() < 1e-3);
}

#[test]
fn optimal_at_calibrated_beta_is_one_toss() {
    let o = petersburg(&[
        "optimal",
        "--game",
        "bernoulli",
        "--prior",
        "luce",
        "--beta",
        "-1.157",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["n_opt"], 1);
    assert_eq!(v["bracket"], serde_json::json!([1, 1]));
}

#[test]
fn positive_beta_is_a_sign_error() {
    let o = petersburg(&[
        "distribution",
        "--game",
        "bernoulli",
        "--prior",
        "luce",
        "--beta",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.starts_with("error code=2 kind=sign tag=sign message=\""),
        "{err}"
    );
}

#[test]
fn exit_codes_by_failure_class() {
    assert_eq!(
        petersburg(&["optimal", "--prior", "power"]).status.code(),
        Some(1)
    );
    assert_eq!(petersburg(&["nonsense"]).status.code(), Some(1));
    assert_eq!(petersburg(&["--beta", "-1"]).status.code(), Some(1));
    assert_eq!(
        petersburg(&["roulette", "--p-win", "0.6"]).status.code(),
        Some(2)
    );
    // Polynomial tail of the repeated-game weights cannot meet the default tolerance.
    let o = petersburg(&["repeated"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("tag=truncation-failure"));
}

#[test]
fn matches_library_call() {
    let o = petersburg(&["distribution", "--beta", "-0.8"]);
    let dist = posterior(
        &PriorSpec::Luce,
        &ExpectedUtilitySeq::bernoulli(),
        -0.8,
        &TruncationPolicy::default(),
    )
    .unwrap();
    assert_eq!(stdout(&o), report::posterior_csv(&dist));
}

#[test]
fn dumped_config_reproduces_output() {
    let args = [
        "distribution",
        "--prior",
        "log",
        "--u0",
        "2",
        "--beta",
        "-0.3",
        "--utility",
        "geometric",
        "--base",
        "3",
    ];
    let direct = petersburg(&args);
    assert!(direct.status.success(), "{}", stderr(&direct));

    let mut dump_args = args.to_vec();
    dump_args.push("--dump-config");
    let dumped = petersburg(&dump_args);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, &dumped.stdout).unwrap();

    let replay = petersburg(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(replay.stdout, direct.stdout);
}

#[test]
fn csv_is_byte_stable_and_honours_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_petersburg"))
            .args(["roulette", "--stages", "12", "--output", name])
            .env("PETERSBURG_OUTPUT_DIR", dir.path())
            .output()
            .unwrap();
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
        std::fs::read(dir.path().join(name)).unwrap()
    };
    let a = run("a.csv");
    let b = run("nested/b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("stage,u_stop,u_continue,p_stop,p_continue\n1,"));
    assert!(!text.contains('\r'));
}

#[test]
fn simulation_output_independent_of_backend_and_shards() {
    let base = [
        "simulate",
        "--replications",
        "300",
        "--n-games",
        "8,64,512",
        "--seed",
        "17",
    ];
    let reference = petersburg(&base);
    assert!(reference.status.success(), "{}", stderr(&reference));
    for extra in [
        &["--sequential"][..],
        &["--parallel-shards", "3"],
        &["--parallel-shards", "64"],
    ] {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        assert_eq!(petersburg(&args).stdout, reference.stdout, "{extra:?}");
    }
    let text = stdout(&reference);
    assert!(text.contains("# seed=17\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn custom_family_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("custom.json");
    std::fs::write(
        &cfg,
        r#"{
  "command": "distribution",
  "beta": 0.0,
  "output_format": "json",
  "game": {"family": "custom", "lotteries": [
    {"outcomes": [{"payoff": 1.0, "prob": 1.0}], "residual": 0.0},
    {"outcomes": [{"payoff": 0.0, "prob": 0.5}, {"payoff": 6.0, "prob": 0.5}], "residual": 0.0}
  ]}
}"#,
    )
    .unwrap();
    let o = petersburg(&["--config", cfg.to_str().unwrap(), "--game", "custom"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    assert!((rows[0]["prob"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((rows[1]["prob"].as_f64().unwrap() - 0.75).abs() < 1e-12);
}

#[test]
fn repeated_game_with_loose_tolerance() {
    let o = petersburg(&["repeated", "--beta", "-0.25", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["result"]["n_opt"], 8);
    assert!(v["posterior"].is_null());
    assert!(stderr(&o).starts_with("warning tag=divergent-normalization"));

    let o = petersburg(&["repeated", "--rel-tol", "1e-6", "--format", "table"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("n_opt"));
}

#[test]
fn tables_use_four_significant_digits() {
    let o = petersburg(&["roulette", "--stages", "1", "--format", "table"]);
    let text = stdout(&o);
    assert!(text.contains("0.6724"), "{text}");
    assert!(text.contains("-0.05263"), "{text}");
}
