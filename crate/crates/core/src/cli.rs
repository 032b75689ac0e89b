//! Command-line front end. Each command turns a `RunConfig` into a CSV
//! table plus a JSON summary; `run` maps library errors to exit codes.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::applications::{self, ClickImpactQuery};
use crate::config::{RunConfig, ServiceSpec};
use crate::control::{self, ControlProblem, SweepOptions};
use crate::det_queue::{self, DetQueueModel};
use crate::error::{Error, Result};
use crate::generating::{cgf, CgfQuery};
use crate::hawkes::autocov_count;
use crate::queue_moments::{autocov_q, moments};
use crate::selftest;
use crate::simulate::{self, simulate_panel, Column, Statistic, DEFAULT_EVENT_CAP};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hawkes-queue", version, about = "Hawkes-driven infinite-server queues")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config replication count
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Output path, `-` for stdout
    #[arg(short = 'o', long, global = true)]
    pub out: Option<String>,
    /// Append simulation columns, e.g. `sim:100000`
    #[arg(long, global = true)]
    pub compare: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Transient queue moments on a time grid
    Moments,
    /// Auto-covariances over times and lags
    Autocov,
    /// Simulated paths or replicated estimates
    Simulate,
    /// Cumulant generating function values
    Cgf,
    /// Club-queue admission control
    Control,
    /// Value of one extra click
    ClickImpact,
    /// Run the acceptance checks and print a pass/fail table
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Value,
    /// Exit code to use after writing the output.
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Report {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), summary: json!({}), exit_code: 0 }
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    pub fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.header.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        json!({ "rows": rows, "summary": self.summary })
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParams(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidSubGenerator(_)
        | Error::InvalidInitialDist(_)
        | Error::NonSquare { .. }
        | Error::InsufficientReps(_)
        | Error::DegenerateObjective => EXIT_CONFIG,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_NUMERIC,
    }
}

fn parse_compare(s: &Option<String>) -> Result<Option<usize>> {
    match s {
        None => Ok(None),
        Some(v) => {
            let n = v
                .strip_prefix("sim:")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| Error::Config(format!("--compare expects sim:<n>, got {v:?}")))?;
            Ok(Some(n))
        }
    }
}

/// Options shared by all commands after merging flags into the config.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub reps: Option<usize>,
    pub compare: Option<usize>,
}

impl Settings {
    pub fn from(cli: &Cli, cfg: Option<&RunConfig>) -> Result<Self> {
        Ok(Self {
            seed: cli.seed.or(cfg.and_then(|c| c.seed)).unwrap_or(1),
            reps: cli.reps.or(cfg.and_then(|c| c.reps)),
            compare: parse_compare(&cli.compare)?,
        })
    }
}

pub fn cmd_moments(cfg: &RunConfig, set: &Settings) -> Result<Report> {
    let m = cfg.queue_model()?;
    let n = m.phases();
    let times = cfg.times()?;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=n).map(|i| format!("mean_{i}")));
    header.push("mean_total".into());
    header.extend((1..=n).map(|i| format!("var_{i}")));
    header.push("var_total".into());
    header.extend((1..=n).map(|i| format!("cov_lq_{i}")));
    header.push("route".into());
    let panel = match set.compare {
        Some(reps) => Some(simulate_panel(
            &m.arrivals,
            &simulate::ServiceSampler::PhaseType(m.service.clone()),
            &times,
            reps,
            set.seed,
            cfg.event_cap.unwrap_or(DEFAULT_EVENT_CAP),
        )?),
        None => None,
    };
    if panel.is_some() {
        for h in ["sim_mean_total", "se_mean_total", "z_mean_total", "sim_var_total", "se_var_total", "z_var_total"] {
            header.push(h.into());
        }
    }
    let mut rep = Report { header, ..Report::new(&[]) };
    let mut fallbacks = 0;
    for (j, &t) in times.iter().enumerate() {
        let q = moments(&m, t)?;
        if q.route != crate::queue_moments::Route::ClosedForm {
            fallbacks += 1;
        }
        let mut row = vec![Cell::Num(t)];
        row.extend(q.mean.iter().map(|&v| Cell::Num(v)));
        row.push(Cell::Num(q.total_mean()));
        row.extend((0..n).map(|i| Cell::Num(q.cov_qq[(i, i)])));
        row.push(Cell::Num(q.total_variance()));
        row.extend(q.cov_lq.iter().map(|&v| Cell::Num(v)));
        row.push(Cell::Text(q.route.label().into()));
        if let Some(p) = &panel {
            let mean = p.mean(j, Column::Queue);
            let var = p.variance(j, Column::Queue);
            row.extend([
                Cell::Num(mean.point),
                Cell::Num(mean.std_error),
                Cell::Num(mean.z(q.total_mean())),
                Cell::Num(var.point),
                Cell::Num(var.std_error),
                Cell::Num(var.z(q.total_variance())),
            ]);
        }
        rep.rows.push(row);
    }
    rep.summary = json!({ "command": "moments", "phases": n, "points": times.len(), "non_closed_routes": fallbacks,
        "compare_reps": set.compare, "seed": set.seed });
    Ok(rep)
}

pub fn cmd_autocov(cfg: &RunConfig, set: &Settings) -> Result<Report> {
    let p = cfg.params()?;
    let times = cfg.times()?;
    let lags = cfg.lags()?;
    let mut rep = Report::new(&["t", "tau", "value", "std_error", "source"]);
    let (kind, sampler) = match &cfg.service {
        None => ("count", None),
        Some(ServiceSpec::Deterministic { length }) => ("deterministic", Some(simulate::ServiceSampler::deterministic(length.0)?)),
        Some(ServiceSpec::LogNormal { .. }) => {
            return Err(Error::Config("service: log-normal auto-covariance has no closed form".into()))
        }
        Some(s) => ("phase_type", Some(s.sampler()?)),
    };
    let closed = |t: f64, tau: f64| -> Result<f64> {
        match &cfg.service {
            None => autocov_count(&p, t, tau),
            Some(ServiceSpec::Deterministic { length }) => det_queue::autocov(&DetQueueModel::new(p, length.0)?, t, tau),
            Some(_) => Ok(autocov_q(&cfg.queue_model()?, t, tau)?.value.sum()),
        }
    };
    for &tau in &lags {
        for &t in &times {
            rep.rows.push(vec![Cell::Num(t), Cell::Num(tau), Cell::Num(closed(t, tau)?), Cell::Num(0.0), Cell::Text("closed".into())]);
        }
    }
    if let Some(reps) = set.compare {
        let sampler = sampler.unwrap_or(simulate::ServiceSampler::Deterministic(f64::INFINITY));
        let horizon = times.iter().cloned().fold(0.0, f64::max);
        for &tau in &lags {
            for &t in &times {
                let stat = if kind == "count" { Statistic::AutocovN { t, tau } } else { Statistic::Autocov { t, tau } };
                let e = simulate::estimate(&p, &sampler, horizon, reps, &stat, set.seed)?;
                rep.rows.push(vec![Cell::Num(t), Cell::Num(tau), Cell::Num(e.point), Cell::Num(e.std_error), Cell::Text("sim".into())]);
            }
        }
    }
    rep.summary = json!({ "command": "autocov", "model": kind, "lags": lags, "points": times.len(), "compare_reps": set.compare });
    Ok(rep)
}

pub fn cmd_simulate(cfg: &RunConfig, set: &Settings) -> Result<Report> {
    let p = cfg.params()?;
    let sampler = match &cfg.service {
        Some(s) => s.sampler()?,
        // bare Hawkes path: nobody ever leaves
        None => simulate::ServiceSampler::Deterministic(f64::INFINITY),
    };
    let times = match (&cfg.times, cfg.horizon) {
        (Some(g), _) => g.points()?,
        (None, Some(h)) => (0..=100).map(|i| h.0 * i as f64 / 100.0).collect(),
        (None, None) => return Err(Error::Config("times or horizon: one is required".into())),
    };
    let cap = cfg.event_cap.unwrap_or(DEFAULT_EVENT_CAP);
    let n = sampler.phases();
    match set.reps {
        Some(reps) => {
            let panel = simulate_panel(&p, &sampler, &times, reps, set.seed, cap)?;
            let mut rep = Report::new(&[
                "t", "mean_intensity", "se_intensity", "mean_count", "se_count", "var_count", "mean_q", "se_mean_q", "var_q",
                "se_var_q", "cov_lq", "se_cov_lq",
            ]);
            for (j, &t) in times.iter().enumerate() {
                let li = panel.mean(j, Column::Intensity);
                let c = panel.mean(j, Column::Count);
                let vc = panel.variance(j, Column::Count);
                let q = panel.mean(j, Column::Queue);
                let vq = panel.variance(j, Column::Queue);
                let cl = panel.cov((j, Column::Intensity), (j, Column::Queue));
                rep.rows.push(
                    [t, li.point, li.std_error, c.point, c.std_error, vc.point, q.point, q.std_error, vq.point, vq.std_error, cl.point, cl.std_error]
                        .into_iter()
                        .map(Cell::Num)
                        .collect(),
                );
            }
            rep.summary = json!({ "command": "simulate", "mode": "estimate", "reps": reps, "seed": set.seed, "points": times.len() });
            Ok(rep)
        }
        None => {
            let horizon = times.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let path = simulate::simulate_queue_rep(&p, &sampler, horizon, set.seed, 0, cap)?;
            let mut header: Vec<String> = vec!["t".into(), "intensity".into(), "count".into(), "occupancy".into()];
            if n > 1 {
                header.extend((1..=n).map(|i| format!("phase_{i}")));
            }
            let mut rep = Report { header, ..Report::new(&[]) };
            for &t in &times {
                let mut row = vec![
                    Cell::Num(t),
                    Cell::Num(path.intensity_at(t)),
                    Cell::Int(path.count_at(t) as i64),
                    Cell::Int(path.occupancy_at(t) as i64),
                ];
                if n > 1 {
                    row.extend(path.phase_occupancy_at(t, n).into_iter().map(|v| Cell::Int(v as i64)));
                }
                rep.rows.push(row);
            }
            rep.summary = json!({ "command": "simulate", "mode": "path", "seed": set.seed, "arrivals": path.arrival_times.len(), "horizon": horizon });
            Ok(rep)
        }
    }
}

pub fn cmd_cgf(cfg: &RunConfig, _set: &Settings) -> Result<Report> {
    let m = cfg.queue_model()?;
    let times = cfg.times()?;
    let deltas = cfg.deltas.as_ref().ok_or_else(|| Error::Config("deltas: missing".into()))?;
    let n = m.phases();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..=n).map(|i| format!("delta_{i}")));
    header.extend(["cgf".into(), "mgf".into(), "blowup".into(), "blowup_z".into()]);
    let mut rep = Report { header, ..Report::new(&[]) };
    let mut blowups = 0;
    for d in deltas {
        if d.len() != n + 1 {
            return Err(Error::Config(format!("deltas: each entry needs {} values, got {}", n + 1, d.len())));
        }
        let delta: Vec<f64> = d.iter().map(|v| v.0).collect();
        for &t in &times {
            let mut row = vec![Cell::Num(t)];
            row.extend(delta.iter().map(|&v| Cell::Num(v)));
            match cgf(&m, &CgfQuery::new(delta.clone(), t)) {
                Ok(g) => row.extend([Cell::Num(g), Cell::Num(g.exp()), Cell::Int(0), Cell::Num(f64::NAN)]),
                Err(Error::CgfBlowup { z }) => {
                    blowups += 1;
                    row.extend([Cell::Num(f64::NAN), Cell::Num(f64::INFINITY), Cell::Int(1), Cell::Num(z)]);
                }
                Err(e) => return Err(e),
            }
            rep.rows.push(row);
        }
    }
    rep.summary = json!({ "command": "cgf", "points": rep.rows.len(), "blowups": blowups });
    Ok(rep)
}

pub fn control_problem(cfg: &RunConfig) -> Result<(ControlProblem, SweepOptions)> {
    let c = cfg.control.as_ref().ok_or_else(|| Error::Config("control: missing".into()))?;
    let prob = ControlProblem {
        arrivals: cfg.params()?,
        mu_inside: c.mu_inside.0,
        revenue_outside: c.revenue_outside.0,
        revenue_inside: c.revenue_inside.0,
        rate_penalty: c.rate_penalty.0,
        target_rate: c.target_rate.0,
        speed_penalty: c.speed_penalty.0,
        horizon: c.horizon.0,
        grid_points: c.grid_points.unwrap_or(1001),
        initial_outside: 0.0,
        initial_inside: 0.0,
    };
    let opts = SweepOptions { max_iters: c.max_iters.unwrap_or(500), ..SweepOptions::default() };
    Ok((prob, opts))
}

pub fn cmd_control(cfg: &RunConfig, _set: &Settings) -> Result<Report> {
    let (prob, opts) = control_problem(cfg)?;
    let s = control::solve_with(&prob, &opts)?;
    let mut rep = Report::new(&["t", "mu_star", "intensity", "outside", "inside", "gamma1", "gamma2", "gamma3"]);
    for i in 0..s.grid.len() {
        rep.rows.push(
            [s.grid[i], s.mu_star[i], s.intensity[i], s.outside[i], s.inside[i], s.gamma1[i], s.gamma2[i], s.gamma3[i]]
                .into_iter()
                .map(Cell::Num)
                .collect(),
        );
    }
    rep.summary = json!({ "command": "control", "objective": s.objective, "converged": s.converged,
        "iterations": s.iterations, "residual": s.residual, "history": s.history });
    if !s.converged {
        rep.exit_code = EXIT_NO_CONVERGENCE;
    }
    Ok(rep)
}

pub fn cmd_click(cfg: &RunConfig, set: &Settings) -> Result<Report> {
    let p = cfg.params()?;
    let c = cfg.click.as_ref().ok_or_else(|| Error::Config("click: missing".into()))?;
    let times = cfg.times()?;
    let mut header = vec!["T", "count_gap", "count_gap_limit", "dwell_time", "revenue_gap", "revenue_gap_limit"];
    if set.compare.is_some() {
        header.extend(["sim_count_gap", "se_count_gap", "sim_revenue_gap", "se_revenue_gap"]);
    }
    let mut rep = Report::new(&header);
    for &t in &times {
        let q = ClickImpactQuery { arrivals: p, mu: c.dwell_rate.0, m: c.revenue.0, horizon: t };
        let mut row = vec![
            Cell::Num(t),
            Cell::Num(applications::count_gap(&p, t)?),
            Cell::Num(applications::count_gap_limit(&p)?),
            Cell::Num(applications::dwell_time(&q)?),
            Cell::Num(applications::revenue_gap(&q)?),
            Cell::Num(applications::revenue_gap_limit(&q)?),
        ];
        if let Some(reps) = set.compare {
            if t > 0.0 {
                let r = simulate::simulate_click(&p, q.mu, t, reps, set.seed)?;
                row.extend([
                    Cell::Num(r.count_gap.point),
                    Cell::Num(r.count_gap.std_error),
                    Cell::Num(q.m * r.dwell_gap.point),
                    Cell::Num(q.m * r.dwell_gap.std_error),
                ]);
            } else {
                row.extend([Cell::Num(1.0), Cell::Num(0.0), Cell::Num(0.0), Cell::Num(0.0)]);
            }
        }
        rep.rows.push(row);
    }
    rep.summary = json!({ "command": "click-impact", "count_gap_limit": applications::count_gap_limit(&p)?, "points": times.len() });
    Ok(rep)
}

/// Runs one command against a parsed config.
pub fn dispatch(command: Command, cfg: &RunConfig, set: &Settings) -> Result<Report> {
    match command {
        Command::Moments => cmd_moments(cfg, set),
        Command::Autocov => cmd_autocov(cfg, set),
        Command::Simulate => cmd_simulate(cfg, set),
        Command::Cgf => cmd_cgf(cfg, set),
        Command::Control => cmd_control(cfg, set),
        Command::ClickImpact => cmd_click(cfg, set),
        Command::Selftest => unreachable!("selftest has no config"),
    }
}

fn default_name(c: Command) -> &'static str {
    match c {
        Command::Moments => "moments",
        Command::Autocov => "autocov",
        Command::Simulate => "simulate",
        Command::Cgf => "cgf",
        Command::Control => "control",
        Command::ClickImpact => "click-impact",
        Command::Selftest => "selftest",
    }
}

fn write_out(target: &str, text: &str) -> Result<()> {
    if target == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes()).map_err(|e| Error::Config(format!("stdout: {e}")))
    } else {
        std::fs::write(target, text).map_err(|e| Error::Config(format!("cannot write {target}: {e}")))
    }
}

/// Parses arguments, runs, writes outputs and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match run_inner(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_inner(cli: &Cli) -> Result<i32> {
    if cli.command == Command::Selftest {
        let set = Settings::from(cli, None)?;
        let defaults = selftest::Options::default();
        let opts = selftest::Options { reps: set.reps.unwrap_or(defaults.reps), seed: cli.seed.unwrap_or(defaults.seed) };
        let results = selftest::run_all(&opts);
        let table = selftest::render(&results);
        match &cli.out {
            Some(o) => write_out(o, &table)?,
            None => eprint!("{table}"),
        }
        return Ok(if results.iter().all(|r| r.passed) { 0 } else { EXIT_NUMERIC });
    }
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let cfg = RunConfig::from_path(path)?;
    let set = Settings::from(cli, Some(&cfg))?;
    let report = dispatch(cli.command, &cfg, &set)?;
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let target = cli.out.clone().or(cfg.output.clone()).unwrap_or_else(|| format!("{}.{ext}", default_name(cli.command)));
    let mut summary = report.summary.clone();
    summary["config"] = serde_json::from_str(&cfg.to_json()).expect("config echo is JSON");
    let body = match cli.format {
        Format::Csv => report.csv(),
        Format::Json => {
            let mut v = report.json();
            v["summary"] = summary.clone();
            serde_json::to_string_pretty(&v).expect("report is JSON") + "\n"
        }
    };
    write_out(&target, &body)?;
    if cli.format == Format::Csv {
        let text = serde_json::to_string_pretty(&summary).expect("summary is JSON") + "\n";
        if target == "-" {
            eprint!("{text}");
        } else {
            write_out(&format!("{target}.summary.json"), &text)?;
        }
    }
    if report.exit_code != 0 {
        eprintln!("warning: command finished without convergence");
    }
    Ok(report.exit_code)
}
