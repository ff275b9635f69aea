//! Configuration front end and command runner behind the binary.
//!
//! Configs are flat `key = value` lines with `#` comments and case-sensitive
//! keys; unknown keys are rejected. Every module-level precondition is
//! re-validated at parse time, so a parsed [`RunConfig`] is runnable as-is.
//! CSV floats carry 17 significant digits so the files reimport bit-exactly.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::driver::{GridSpec, IncrementTable};
use crate::experiments::{convergence_study, moment_study, simulate_ensemble, ExperimentError};
use crate::model::{validate, InitialHistory, ModelError, ModelParams};
use crate::observables::{barrier_option_price, bond_price, ObservableError};
use crate::schemes::{ControlConfig, Scheme, DEFAULT_EPSILON};
use crate::TIME_SLACK;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("constraint violated for `{key}`: {rule}")]
    ConstraintViolation { key: String, rule: String },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("failed to write `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// One experiment invocation, fully validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub history: InitialHistory,
    pub scheme: Scheme,
    pub ctrl: ControlConfig,
    /// Horizon `T`.
    pub t_end: f64,
    pub h: Option<f64>,
    pub h_ref: Option<f64>,
    pub h_list: Option<Vec<f64>>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub p_list: Option<Vec<f64>>,
    pub strike: Option<f64>,
    pub barrier: Option<f64>,
    pub out: Option<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "lambda",
    "mu",
    "sigma",
    "gamma",
    "delta",
    "beta",
    "tau",
    "xi",
    "xi_table",
    "scheme",
    "c0",
    "c2",
    "epsilon",
    "T",
    "h",
    "h_ref",
    "h_list",
    "n_paths",
    "master_seed",
    "p_list",
    "strike",
    "barrier",
    "out",
];

struct RawConfig<'a> {
    entries: Vec<(usize, &'a str, &'a str)>,
}

impl<'a> RawConfig<'a> {
    fn scan(text: &'a str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty key or value".into(),
                });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if entries.iter().any(|&(_, k, _)| k == key) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            entries.push((line, key, value));
        }
        Ok(Self { entries })
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.entries
            .iter()
            .find(|&&(_, k, _)| k == key)
            .map(|&(_, _, v)| v)
    }

    fn require(&self, key: &'static str) -> Result<&'a str, ConfigError> {
        self.get(key).ok_or(ConfigError::MissingKey { key })
    }
}

fn violation(key: impl Into<String>, rule: impl Into<String>) -> ConfigError {
    ConfigError::ConstraintViolation {
        key: key.into(),
        rule: rule.into(),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| violation(key, format!("`{value}` is not a number")))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|item| parse_f64(key, item.trim()))
        .collect()
}

fn parse_history_table(value: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    value
        .split(',')
        .map(|item| {
            let (t, v) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| violation("xi_table", "entries must look like `time:level`"))?;
            Ok((
                parse_f64("xi_table", t.trim())?,
                parse_f64("xi_table", v.trim())?,
            ))
        })
        .collect()
}

/// Checks that `num/den` is a whole positive count within rounding slack.
fn divides_exactly(num: f64, den: f64) -> bool {
    let k = (num / den).round();
    k >= 1.0 && (k * den - num).abs() <= TIME_SLACK * num.abs().max(1.0)
}

fn check_step(key: &str, h: f64, tau: f64, t_end: f64) -> Result<(), ConfigError> {
    if !(h.is_finite() && h > 0.0 && h < 1.0) {
        return Err(violation(key, "h in (0,1)"));
    }
    if !divides_exactly(tau, h) {
        return Err(violation(key, "tau/h integer"));
    }
    if !divides_exactly(t_end, h) {
        return Err(violation(key, "T/h integer"));
    }
    Ok(())
}

/// Parses and fully validates a config. The diagnostic names the offending
/// key and the violated rule.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = RawConfig::scan(text)?;

    let params = ModelParams {
        lambda: parse_f64("lambda", raw.require("lambda")?)?,
        mu: parse_f64("mu", raw.require("mu")?)?,
        sigma: parse_f64("sigma", raw.require("sigma")?)?,
        gamma: parse_f64("gamma", raw.require("gamma")?)?,
        delta: parse_f64("delta", raw.require("delta")?)?,
        beta: parse_f64("beta", raw.require("beta")?)?,
        tau: parse_f64("tau", raw.require("tau")?)?,
    };

    let history = match (raw.get("xi"), raw.get("xi_table")) {
        (Some(value), None) => InitialHistory::Constant(parse_f64("xi", value)?),
        (None, Some(value)) => InitialHistory::Tabulated(parse_history_table(value)?),
        (Some(_), Some(_)) => return Err(violation("xi", "exactly one of xi, xi_table")),
        (None, None) => return Err(ConfigError::MissingKey { key: "xi" }),
    };

    validate(&params, &history).map_err(|err| match err {
        ModelError::NonPositiveParameter {
            name, constraint, ..
        } => violation(name, constraint),
        ModelError::NonPositiveHistory { .. } => violation("xi", "strictly positive"),
        ModelError::BadHistoryGrid { reason } => violation("xi_table", reason),
        ModelError::OutOfHistoryRange { .. } => violation("xi_table", "covers [-tau, 0]"),
    })?;

    let scheme =
        Scheme::from_str(raw.require("scheme")?).map_err(|message| violation("scheme", message))?;

    let c0 = parse_f64("c0", raw.require("c0")?)?;
    let c2 = parse_f64("c2", raw.require("c2")?)?;
    let epsilon = match raw.get("epsilon") {
        Some(value) => parse_f64("epsilon", value)?,
        None => DEFAULT_EPSILON,
    };
    if !(c0.is_finite() && c0 >= params.lambda) {
        return Err(violation("c0", "c0 >= lambda"));
    }
    if !(c2.is_finite() && c2 >= params.delta) {
        return Err(violation("c2", "c2 >= delta"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(violation("epsilon", "epsilon > 0"));
    }
    let ctrl = ControlConfig::with_epsilon(c0, c2, epsilon);

    let t_end = parse_f64("T", raw.require("T")?)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(violation("T", "positive and finite"));
    }

    let h = raw.get("h").map(|v| parse_f64("h", v)).transpose()?;
    if let Some(h) = h {
        check_step("h", h, params.tau, t_end)?;
    }

    let h_ref = raw
        .get("h_ref")
        .map(|v| parse_f64("h_ref", v))
        .transpose()?;
    let h_list = raw
        .get("h_list")
        .map(|v| parse_f64_list("h_list", v))
        .transpose()?;
    match (&h_ref, &h_list) {
        (Some(h_ref), Some(h_list)) => {
            check_step("h_ref", *h_ref, params.tau, t_end)?;
            if h_list.is_empty() {
                return Err(violation("h_list", "at least one step"));
            }
            for &candidate in h_list {
                check_step("h_list", candidate, params.tau, t_end)?;
                if !divides_exactly(candidate, *h_ref) {
                    return Err(violation("h_list", "multiple of h_ref"));
                }
            }
        }
        (None, None) => {}
        _ => return Err(violation("h_ref", "h_ref and h_list go together")),
    }

    let n_paths = raw
        .require("n_paths")?
        .parse::<usize>()
        .map_err(|_| violation("n_paths", "nonnegative integer"))?;
    if n_paths == 0 {
        return Err(violation("n_paths", "n_paths >= 1"));
    }

    let master_seed = raw
        .require("master_seed")?
        .parse::<u64>()
        .map_err(|_| violation("master_seed", "64-bit unsigned integer"))?;

    let p_list = raw
        .get("p_list")
        .map(|v| parse_f64_list("p_list", v))
        .transpose()?;
    if let Some(ps) = &p_list {
        if ps.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(violation("p_list", "positive and finite"));
        }
    }

    let strike = raw
        .get("strike")
        .map(|v| parse_f64("strike", v))
        .transpose()?;
    if let Some(k) = strike {
        if !(k.is_finite() && k >= 0.0) {
            return Err(violation("strike", "strike >= 0"));
        }
    }
    let barrier = raw
        .get("barrier")
        .map(|v| parse_f64("barrier", v))
        .transpose()?;
    if let Some(b) = barrier {
        if !(b.is_finite() && b > 0.0) {
            return Err(violation("barrier", "positive and finite"));
        }
        if let Some(k) = strike {
            if b <= k {
                return Err(violation("barrier", "barrier > strike"));
            }
        }
    }

    let out = raw.get("out").map(str::to_string);

    Ok(RunConfig {
        params,
        history,
        scheme,
        ctrl,
        t_end,
        h,
        h_ref,
        h_list,
        n_paths,
        master_seed,
        p_list,
        strike,
        barrier,
        out,
    })
}

/// Renders a config back to the flat text format; `parse_config` of the
/// result reproduces the config exactly.
pub fn render_config(config: &RunConfig) -> String {
    let mut text = String::new();
    let mut push = |key: &str, value: String| {
        text.push_str(key);
        text.push_str(" = ");
        text.push_str(&value);
        text.push('\n');
    };
    let p = &config.params;
    push("lambda", format!("{:?}", p.lambda));
    push("mu", format!("{:?}", p.mu));
    push("sigma", format!("{:?}", p.sigma));
    push("gamma", format!("{:?}", p.gamma));
    push("delta", format!("{:?}", p.delta));
    push("beta", format!("{:?}", p.beta));
    push("tau", format!("{:?}", p.tau));
    match &config.history {
        InitialHistory::Constant(value) => push("xi", format!("{value:?}")),
        InitialHistory::Tabulated(nodes) => push(
            "xi_table",
            nodes
                .iter()
                .map(|(t, v)| format!("{t:?}:{v:?}"))
                .collect::<Vec<_>>()
                .join(","),
        ),
    }
    push("scheme", config.scheme.to_string());
    push("c0", format!("{:?}", config.ctrl.c0));
    push("c2", format!("{:?}", config.ctrl.c2));
    push("epsilon", format!("{:?}", config.ctrl.epsilon));
    push("T", format!("{:?}", config.t_end));
    if let Some(h) = config.h {
        push("h", format!("{h:?}"));
    }
    if let Some(h_ref) = config.h_ref {
        push("h_ref", format!("{h_ref:?}"));
    }
    if let Some(h_list) = &config.h_list {
        push(
            "h_list",
            h_list
                .iter()
                .map(|h| format!("{h:?}"))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    push("n_paths", config.n_paths.to_string());
    push("master_seed", config.master_seed.to_string());
    if let Some(p_list) = &config.p_list {
        push(
            "p_list",
            p_list
                .iter()
                .map(|p| format!("{p:?}"))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    if let Some(strike) = config.strike {
        push("strike", format!("{strike:?}"));
    }
    if let Some(barrier) = config.barrier {
        push("barrier", format!("{barrier:?}"));
    }
    if let Some(out) = &config.out {
        push("out", out.clone());
    }
    text
}

/// The five experiment commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliCommand {
    Paths,
    Converge,
    Moments,
    Bond,
    Barrier,
}

impl CliCommand {
    pub fn name(&self) -> &'static str {
        match self {
            CliCommand::Paths => "paths",
            CliCommand::Converge => "converge",
            CliCommand::Moments => "moments",
            CliCommand::Bond => "bond",
            CliCommand::Barrier => "barrier",
        }
    }
}

impl fmt::Display for CliCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CliCommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paths" => Ok(CliCommand::Paths),
            "converge" => Ok(CliCommand::Converge),
            "moments" => Ok(CliCommand::Moments),
            "bond" => Ok(CliCommand::Bond),
            "barrier" => Ok(CliCommand::Barrier),
            other => Err(format!(
                "unknown command `{other}` (expected paths, converge, moments, bond or barrier)"
            )),
        }
    }
}

/// What a successful run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_path: PathBuf,
    pub summary: String,
}

/// Runs one command, writes its CSV, and returns the one-line summary.
/// Nothing is left behind on failure.
pub fn run(command: CliCommand, config: &RunConfig) -> Result<RunOutcome, CliError> {
    let (csv, summary) = match command {
        CliCommand::Paths => run_paths(config)?,
        CliCommand::Converge => run_converge(config)?,
        CliCommand::Moments => run_moments(config)?,
        CliCommand::Bond => run_bond(config)?,
        CliCommand::Barrier => run_barrier(config)?,
    };
    let out_path = PathBuf::from(
        config
            .out
            .clone()
            .unwrap_or_else(|| format!("{command}.csv")),
    );
    if let Err(source) = fs::write(&out_path, csv) {
        let _ = fs::remove_file(&out_path);
        return Err(CliError::Io {
            path: out_path,
            source,
        });
    }
    Ok(RunOutcome { out_path, summary })
}

/// 17 significant digits: enough for bit-faithful reimport of any f64.
fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn require_h(config: &RunConfig) -> Result<f64, CliError> {
    config
        .h
        .ok_or(CliError::Config(ConfigError::MissingKey { key: "h" }))
}

fn run_paths(config: &RunConfig) -> Result<(String, String), CliError> {
    let h = require_h(config)?;
    let grid = GridSpec::new(config.t_end, h, config.params.tau).map_err(ExperimentError::from)?;
    let paths = simulate_ensemble(
        config.scheme,
        &config.params,
        &config.ctrl,
        &config.history,
        grid,
        config.n_paths,
        config.master_seed,
    )?;

    let mut csv = String::from("t");
    for index in 0..paths.len() {
        csv.push_str(&format!(",path_{index}"));
    }
    csv.push('\n');
    for n in 0..=grid.n_steps() {
        csv.push_str(&csv_float(grid.time(n)));
        for path in &paths {
            csv.push(',');
            csv.push_str(&csv_float(path.values[n]));
        }
        csv.push('\n');
    }

    let negative_paths = paths.iter().filter(|p| p.has_negative_value()).count();
    let negativity_events: usize = paths.iter().map(|p| p.negativity_events).sum();
    let clamps: usize = paths.iter().map(|p| p.clamp_applied).sum();
    let summary = format!(
        "{} {} paths over [0, {}] at h = {}: {} with negative recorded values, {} raw negativity events, {} clamps",
        paths.len(),
        config.scheme,
        config.t_end,
        h,
        negative_paths,
        negativity_events,
        clamps,
    );
    Ok((csv, summary))
}

fn run_converge(config: &RunConfig) -> Result<(String, String), CliError> {
    let h_ref = config
        .h_ref
        .ok_or(CliError::Config(ConfigError::MissingKey { key: "h_ref" }))?;
    let h_list = config
        .h_list
        .as_deref()
        .ok_or(CliError::Config(ConfigError::MissingKey { key: "h_list" }))?;
    let report = convergence_study(
        &config.params,
        &config.ctrl,
        config.scheme,
        &config.history,
        config.t_end,
        h_ref,
        h_list,
        config.n_paths,
        config.master_seed,
    )?;

    let mut csv = String::from("h,strong_error,std_error\n");
    for entry in &report.entries {
        csv.push_str(&format!(
            "{},{},{}\n",
            csv_float(entry.h),
            csv_float(entry.strong_error),
            csv_float(entry.std_error),
        ));
    }
    let summary = format!(
        "{} strong error vs reference h = {}: fitted log-log slope {:.4} over {} step sizes ({} paths)",
        config.scheme,
        h_ref,
        report.slope,
        report.entries.len(),
        report.n_paths,
    );
    Ok((csv, summary))
}

fn run_moments(config: &RunConfig) -> Result<(String, String), CliError> {
    let h = require_h(config)?;
    let p_list = config.p_list.clone().unwrap_or_default();
    let study = moment_study(
        &config.params,
        &config.ctrl,
        config.scheme,
        &config.history,
        h,
        config.t_end,
        config.n_paths,
        &p_list,
        config.master_seed,
    )?;

    let mut csv = String::from("t,mean,second_moment,mean_bound\n");
    for (k, &t) in study.report.times.iter().enumerate() {
        let bound = match &study.mean_bound {
            Some(curve) => csv_float(curve.values[k]),
            None => String::new(),
        };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_float(t),
            csv_float(study.report.mean[k]),
            csv_float(study.report.second_moment[k]),
            bound,
        ));
    }
    let last = study.report.mean.len() - 1;
    let summary = format!(
        "{} moments over {} paths at h = {}: final mean {:.6} +- {:.6}, final second moment {:.6}; mean bound {}",
        config.scheme,
        study.report.n_paths,
        h,
        study.report.mean[last],
        study.report.mean_se[last],
        study.report.second_moment[last],
        if study.mean_bound.is_some() {
            "overlaid"
        } else {
            "inapplicable (h >= 2/lambda)"
        },
    );
    Ok((csv, summary))
}

fn run_bond(config: &RunConfig) -> Result<(String, String), CliError> {
    let h = require_h(config)?;
    let grid = GridSpec::new(config.t_end, h, config.params.tau).map_err(ExperimentError::from)?;
    let paths = simulate_ensemble(
        config.scheme,
        &config.params,
        &config.ctrl,
        &config.history,
        grid,
        config.n_paths,
        config.master_seed,
    )?;
    let (estimate, std_error) = bond_price(&paths, config.t_end)?;
    let csv = format!(
        "estimate,std_error,n_paths\n{},{},{}\n",
        csv_float(estimate),
        csv_float(std_error),
        paths.len(),
    );
    let summary = format!(
        "bond price over [0, {}] at h = {}: {:.6} +- {:.6} ({} {} paths)",
        config.t_end,
        h,
        estimate,
        std_error,
        paths.len(),
        config.scheme,
    );
    Ok((csv, summary))
}

fn run_barrier(config: &RunConfig) -> Result<(String, String), CliError> {
    let h = require_h(config)?;
    let strike = config
        .strike
        .ok_or(CliError::Config(ConfigError::MissingKey { key: "strike" }))?;
    let barrier = config
        .barrier
        .ok_or(CliError::Config(ConfigError::MissingKey { key: "barrier" }))?;
    let grid = GridSpec::new(config.t_end, h, config.params.tau).map_err(ExperimentError::from)?;
    let paths = simulate_ensemble(
        config.scheme,
        &config.params,
        &config.ctrl,
        &config.history,
        grid,
        config.n_paths,
        config.master_seed,
    )?;
    let (estimate, std_error) = barrier_option_price(&paths, strike, barrier, config.t_end)?;
    let csv = format!(
        "estimate,std_error,n_paths\n{},{},{}\n",
        csv_float(estimate),
        csv_float(std_error),
        paths.len(),
    );
    let summary = format!(
        "up-and-out call (strike {}, barrier {}) over [0, {}] at h = {}: {:.6} +- {:.6} ({} {} paths)",
        strike,
        barrier,
        config.t_end,
        h,
        estimate,
        std_error,
        paths.len(),
        config.scheme,
    );
    Ok((csv, summary))
}

/// Debug dump of an increment table in the shared CSV conventions.
pub fn increments_csv(table: &IncrementTable) -> String {
    let mut csv = String::from("step,dW,dN\n");
    for n in 0..table.grid().n_steps() {
        csv.push_str(&format!(
            "{n},{},{}\n",
            csv_float(table.brownian()[n]),
            table.jump_counts()[n],
        ));
    }
    csv
}

/// Reads and parses a config file; unreadable files count as config errors.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|err| ConfigError::Syntax {
        line: 0,
        message: format!("cannot read `{}`: {err}", path.display()),
    })?;
    parse_config(&text)
}
