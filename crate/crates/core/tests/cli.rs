use std::path::PathBuf;
use std::process::{Command, Output};

use hawkes_queue::config::RunConfig;
use hawkes_queue::phase_type::coxian_example;
use hawkes_queue::queue_moments::{ode_reference, QueueModel};
use hawkes_queue::HawkesParams;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hawkes-queue")).current_dir(dir).args(args).output().unwrap()
}

fn stdout_csv(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

const COXIAN: &str = r#"{"arrivals": {"baseline": "1", "jump": "0.75", "decay": "1"},
 "service": {"kind": "coxian"}, "times": {"start": 0, "stop": 10, "count": 11}}"#;

#[test]
fn moments_curve_matches_reference() {
    let dir = scratch("moments");
    write_config(&dir, COXIAN);
    let (h, rows) = stdout_csv(&run(&dir, &["moments", "--config", "config.json", "-o", "-"]));
    let m = QueueModel::new(HawkesParams::at_baseline(1.0, 0.75, 1.0).unwrap(), coxian_example());
    assert_eq!(rows.len(), 11);
    for r in &rows {
        let t: f64 = r[col(&h, "t")].parse().unwrap();
        let total: f64 = r[col(&h, "mean_total")].parse().unwrap();
        assert!((total - ode_reference(&m, t).unwrap().mean.sum()).abs() < 1e-8);
    }
}

#[test]
fn compare_appends_simulation_columns() {
    let dir = scratch("compare");
    write_config(&dir, COXIAN);
    let (h, rows) = stdout_csv(&run(&dir, &["moments", "--config", "config.json", "--compare", "sim:4000", "--seed", "7", "-o", "-"]));
    let z = col(&h, "z_mean_total");
    col(&h, "sim_mean_total");
    for r in rows.iter().skip(1) {
        let v: f64 = r[z].parse().unwrap();
        assert!(v.abs() < 4.0, "z {v}");
    }
}

#[test]
fn config_errors_exit_with_code_one() {
    let dir = scratch("bad");
    write_config(&dir, r#"{"arrivals": {"baseline": "1", "jump": "0.5", "decay": "1"}, "service": {"kind": "exponential", "rate": "1"}, "times": []}"#);
    let out = run(&dir, &["moments", "--config", "config.json", "-o", "-"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());

    write_config(&dir, "{\"arrivals\": {\"baseline\": 1, \"jump\": 0.5, \"decay\": 1},\n \"typo\": 3}");
    let out = run(&dir, &["moments", "--config", "config.json", "-o", "-"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn numeric_errors_exit_with_code_two() {
    let dir = scratch("numeric");
    write_config(&dir, r#"{"arrivals": {"baseline": "1", "jump": "2", "decay": "1"}, "click": {"dwell_rate": "1", "revenue": "1"}, "times": [1]}"#);
    assert_eq!(run(&dir, &["click-impact", "--config", "config.json", "-o", "-"]).status.code(), Some(2));
}

#[test]
fn autocov_rows_past_the_lag_window_are_zero() {
    let dir = scratch("autocov");
    write_config(
        &dir,
        r#"{"arrivals": {"baseline": "1", "jump": "0.75", "decay": "1.25"}, "service": {"kind": "deterministic", "length": "5"},
            "times": [1, 4, 10], "lags": [0, 2, 5]}"#,
    );
    let (h, rows) = stdout_csv(&run(&dir, &["autocov", "--config", "config.json", "-o", "-"]));
    let (t, tau, v) = (col(&h, "t"), col(&h, "tau"), col(&h, "value"));
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let (t, tau, v): (f64, f64, f64) = (r[t].parse().unwrap(), r[tau].parse().unwrap(), r[v].parse().unwrap());
        if tau >= t {
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn cgf_reports_blowups_as_rows() {
    let dir = scratch("cgf");
    write_config(
        &dir,
        r#"{"arrivals": {"baseline": "1", "jump": "0.5", "decay": "1"}, "service": {"kind": "exponential", "rate": "1"},
            "times": [1, 2], "deltas": [[0, 0], [5, 5]]}"#,
    );
    let (h, rows) = stdout_csv(&run(&dir, &["cgf", "--config", "config.json", "-o", "-"]));
    let (g, b) = (col(&h, "cgf"), col(&h, "blowup"));
    assert_eq!(rows[0][g].parse::<f64>().unwrap(), 0.0);
    assert!(rows.iter().any(|r| r[b] == "1"));
}

#[test]
fn control_converges_and_writes_summary() {
    let dir = scratch("control");
    write_config(
        &dir,
        r#"{"arrivals": {"baseline": "5", "jump": "0.5", "decay": "1"},
            "control": {"mu_inside": "1", "revenue_outside": "100", "revenue_inside": "100", "rate_penalty": "100",
                        "target_rate": "8", "speed_penalty": "150", "horizon": "5"}}"#,
    );
    let out = run(&dir, &["control", "--config", "config.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("control.csv")).unwrap();
    assert!(csv.starts_with("t,mu_star,"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("control.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert!(summary["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn click_asymptote() {
    let dir = scratch("click");
    write_config(&dir, r#"{"arrivals": {"baseline": "1", "jump": "0.75", "decay": "1"}, "times": [0, 1, 50], "click": {"dwell_rate": "2", "revenue": "1"}}"#);
    let (h, rows) = stdout_csv(&run(&dir, &["click-impact", "--config", "config.json", "-o", "-"]));
    let lim = col(&h, "count_gap_limit");
    for r in &rows {
        assert_eq!(r[lim].parse::<f64>().unwrap(), 4.0);
    }
    assert_eq!(rows[0][col(&h, "count_gap")].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let dir = scratch("simulate");
    write_config(&dir, COXIAN);
    for args in [vec!["--reps", "300"], vec![]] {
        let mut a = vec!["simulate", "--config", "config.json", "--seed", "5", "-o", "-"];
        a.extend(&args);
        let x = run(&dir, &a);
        let y = run(&dir, &a);
        assert!(x.status.success());
        assert_eq!(x.stdout, y.stdout);
    }
}

#[test]
fn json_format_and_config_echo() {
    let dir = scratch("json");
    write_config(&dir, COXIAN);
    let out = run(&dir, &["moments", "--config", "config.json", "--format", "json", "-o", "-"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // JSON output embeds the summary
    let echo = RunConfig::from_json(&v["summary"]["config"].to_string()).unwrap();
    assert_eq!(echo, RunConfig::from_json(COXIAN).unwrap());

    // CSV to stdout sends the summary to stderr
    let out = run(&dir, &["moments", "--config", "config.json", "-o", "-"]);
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let echo = RunConfig::from_json(&summary["config"].to_string()).unwrap();
    assert_eq!(echo, RunConfig::from_json(COXIAN).unwrap());
}
