use std::process::{Command, Output};

use nlstab::cli_io::{ClassifyOutput, OracleOutput, RootsOutput, SampleOutput, SimSummary};

fn nlstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlstab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const P2_EXP: [&str; 12] =
    ["--problem", "p2", "--kernel", "exp1d", "--alpha", "1", "--a", "2.5", "--b", "1", "--d", "0.08"];

fn with(cmd: &str, base: &[&str], extra: &[&str]) -> Vec<String> {
    std::iter::once(cmd).chain(base.iter().copied()).chain(extra.iter().copied()).map(String::from).collect()
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    nlstab(&refs)
}

#[test]
fn classify_exit_codes() {
    let out = run(&with("classify", &P2_EXP, &[]));
    assert_eq!(code(&out), 0);
    let out = run(&with("classify", &P2_EXP, &["--branch", "2"]));
    assert_eq!(code(&out), 10);
    let out = nlstab(&[
        "classify",
        "--problem",
        "p2",
        "--kernel",
        "exp1d",
        "--alpha",
        "1",
        "--a",
        "1",
        "--b",
        "1",
        "--d",
        "1",
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain"));
    let out = nlstab(&["classify", "--problem", "p2", "--kernel", "exp1d"]);
    assert_eq!(code(&out), 2);
    let out = nlstab(&["classify", "--problem", "p3"]);
    assert_eq!(code(&out), 2);
    let out = nlstab(&["frobnicate"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn window_kernel_follows_critical_value() {
    // Critical 1/k₂ for N = 1 is about 0.011876.
    let stable = nlstab(&["classify", "--problem", "p1", "--kernel", "window1d", "--N", "1", "--k2", "80"]);
    assert_eq!(code(&stable), 0);
    let unstable = nlstab(&["classify", "--problem", "p1", "--kernel", "window1d", "--N", "1", "--k2", "90"]);
    assert_eq!(code(&unstable), 10);
    let v: ClassifyOutput = serde_json::from_str(&stdout(&unstable)).unwrap();
    assert!((v.primary().threshold - 0.011_876_495_134_387_583).abs() < 1e-15);
}

#[test]
fn json_outputs_round_trip() {
    let out = stdout(&run(&with("classify", &P2_EXP, &[])));
    let parsed: ClassifyOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", out);

    let out = stdout(&nlstab(&["roots", "xstar", "--a", "2.5", "--b", "1"]));
    let parsed: RootsOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", out);

    let out = stdout(&run(&with("oracle", &P2_EXP, &["--branch", "2"])));
    let parsed: OracleOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", out);
    assert!(out.contains("\"schema_version\": 1"));
}

#[test]
fn invocations_are_byte_identical() {
    for args in [
        with("classify", &P2_EXP, &[]),
        with("oracle", &P2_EXP, &[]),
        vec!["roots".into(), "s0".into(), "--a".into(), "2.5".into(), "--b".into(), "1".into()],
        vec!["sample".into(), "--seed".into(), "11".into(), "--count".into(), "4".into()],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(code(&a), code(&b));
    }
}

#[test]
fn oracle_point_floor() {
    let out = run(&with("oracle", &P2_EXP, &["--points", "64"]));
    assert_eq!(code(&out), 2);
    let out = run(&with("oracle", &P2_EXP, &["--points", "1024"]));
    assert_eq!(code(&out), 0);
}

#[test]
fn scan_writes_csv_file_and_honors_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let base = ["--problem", "p2", "--kernel", "gaussian", "--dim", "2", "--alpha", "0.5", "--a", "3", "--b", "1"];
    let mut args =
        with("scan", &base, &["--param", "d", "--lo", "0.05", "--hi", "2", "--steps", "9", "--log", "--out"]);
    args.push(path.to_str().unwrap().into());
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let single = Command::new(env!("CARGO_BIN_EXE_nlstab")).args(&refs).env("NSL_THREADS", "1").output().unwrap();
    assert_eq!(code(&single), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("index,d,verdict,threshold,oracle_min,oracle_verdict,agree,error\n"));
    assert!(text.ends_with("# rows=9 disagreements=0 errors=0\n"));

    let multi = Command::new(env!("CARGO_BIN_EXE_nlstab")).args(&refs).env("NSL_THREADS", "3").output().unwrap();
    assert_eq!(code(&multi), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);

    let bad = Command::new(env!("CARGO_BIN_EXE_nlstab")).args(&refs).env("NSL_THREADS", "zero").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn scan_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"problem":"p2","family":"exp1d","parameter":"alpha","lo":0.5,"hi":2.0,"steps":4,
            "fixed":{"a":2.5,"b":1.0,"d":0.1}}"#,
    )
    .unwrap();
    let out = nlstab(&["scan", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("index,alpha,"));
}

#[test]
fn simulate_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let base = ["--problem", "p2", "--kernel", "exp1d", "--alpha", "1", "--a", "2.5", "--b", "1", "--d", "0.05"];
    let mut args = with("simulate", &base, &["--series"]);
    args.push(series.to_str().unwrap().into());
    let out = run(&args);
    assert_eq!(code(&out), 0);
    let summary: SimSummary = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary.rate_matches_verdict);
    assert!((summary.measured_rate - summary.expected_rate).abs() < 0.05 * summary.expected_rate.abs());
    let csv = std::fs::read_to_string(&series).unwrap();
    assert!(csv.starts_with("t,seeded_mode_abs,l2_deviation\n"));
    assert_eq!(csv.lines().count(), summary.samples + 1);

    // The summary's configuration replays to the same result.
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, serde_json::to_string(&summary.config).unwrap()).unwrap();
    let replay = nlstab(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(stdout(&replay), stdout(&out));
}

#[test]
fn simulate_rejects_three_dimensional_kernels() {
    let out = nlstab(&[
        "simulate",
        "--problem",
        "p2",
        "--kernel",
        "exp3d",
        "--alpha",
        "1",
        "--a",
        "2.5",
        "--b",
        "1",
        "--d",
        "0.5",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sample_is_seeded() {
    let a: SampleOutput = serde_json::from_str(&stdout(&nlstab(&["sample", "--seed", "5", "--count", "3"]))).unwrap();
    let b: SampleOutput = serde_json::from_str(&stdout(&nlstab(&["sample", "--seed", "6", "--count", "3"]))).unwrap();
    assert_eq!(a.draws.len(), 3);
    assert_ne!(a.draws, b.draws);
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(code(&nlstab(&["--help"])), 0);
    assert_eq!(code(&nlstab(&["--version"])), 0);
}
