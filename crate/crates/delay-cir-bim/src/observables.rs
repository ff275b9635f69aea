//! Everything measured on simulated paths: the piecewise-constant step
//! process, ensemble moment statistics, the analytic mean bound, and the
//! bond / up-and-out call estimators.

use thiserror::Error;

use crate::model::{InitialHistory, ModelError, ModelParams};
use crate::schemes::PathRecorder;
use crate::TIME_SLACK;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("time {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("paths do not share one grid")]
    GridMismatch,
    #[error("at least two paths required, got {got}")]
    TooFewPaths { got: usize },
    #[error("barrier {barrier} must exceed the strike {strike}, both nonnegative")]
    BadBarrier { strike: f64, barrier: f64 },
    #[error(transparent)]
    History(#[from] ModelError),
}

/// The step process `ŝ(t)`: the initial history on `[-tau, 0)`, the grid
/// value `s_n` on each right-open cell `[t_n, t_{n+1})`, and `s_N` at the
/// closed right endpoint.
pub struct StepProcessView<'a> {
    recorder: &'a PathRecorder,
    history: &'a InitialHistory,
    tau: f64,
}

impl<'a> StepProcessView<'a> {
    pub fn new(recorder: &'a PathRecorder, history: &'a InitialHistory, tau: f64) -> Self {
        Self {
            recorder,
            history,
            tau,
        }
    }

    /// `ŝ(t)` for `t` in `[-tau, t_end]`; grid nodes reproduce their grid
    /// value exactly.
    pub fn value_at(&self, t: f64) -> Result<f64, ObservableError> {
        let grid = self.recorder.grid;
        let t_end = grid.t_end();
        let slack = TIME_SLACK * t_end.max(1.0);
        if !t.is_finite() || t < -self.tau - slack || t > t_end + slack {
            return Err(ObservableError::OutOfRange {
                t,
                lo: -self.tau,
                hi: t_end,
            });
        }
        if t < 0.0 {
            return Ok(self.history.value_at(t, self.tau)?);
        }
        if t >= t_end {
            return Ok(self.recorder.terminal());
        }
        let last_cell = grid.n_steps() - 1;
        let mut index = ((t / grid.h()) as usize).min(last_cell);
        while index > 0 && grid.time(index) > t {
            index -= 1;
        }
        while index < last_cell && grid.time(index + 1) <= t {
            index += 1;
        }
        Ok(self.recorder.values[index])
    }

    /// `ŝ(t_end)`.
    pub fn terminal(&self) -> f64 {
        self.recorder.terminal()
    }

    /// The supremum of `ŝ` over `[0, t_end]` is attained on the grid.
    pub fn max_over_horizon(&self) -> f64 {
        self.recorder.max_value()
    }
}

/// Pointwise ensemble moments with standard errors, accumulated over paths
/// in index order so reported numbers reproduce run to run.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// Node times `t_0..t_N`.
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub second_moment_se: Vec<f64>,
    /// Optional extra sample moments, one trajectory per requested order.
    pub extra_moments: Vec<(f64, Vec<f64>)>,
    pub n_paths: usize,
}

/// Pointwise sample moments of an ensemble sharing one grid.
pub fn moment_report(
    paths: &[PathRecorder],
    p_list: &[f64],
) -> Result<MomentReport, ObservableError> {
    if paths.len() < 2 {
        return Err(ObservableError::TooFewPaths { got: paths.len() });
    }
    let grid = paths[0].grid;
    let nodes = grid.n_steps() + 1;
    if paths
        .iter()
        .any(|p| p.grid != grid || p.values.len() != nodes)
    {
        return Err(ObservableError::GridMismatch);
    }
    let n = paths.len() as f64;

    let mut report = MomentReport {
        times: (0..nodes).map(|k| grid.time(k)).collect(),
        mean: Vec::with_capacity(nodes),
        mean_se: Vec::with_capacity(nodes),
        second_moment: Vec::with_capacity(nodes),
        second_moment_se: Vec::with_capacity(nodes),
        extra_moments: p_list
            .iter()
            .map(|&p| (p, Vec::with_capacity(nodes)))
            .collect(),
        n_paths: paths.len(),
    };

    for k in 0..nodes {
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut sum4 = 0.0;
        for path in paths {
            let x = path.values[k];
            sum += x;
            sum2 += x * x;
            sum4 += (x * x) * (x * x);
        }
        let mean = sum / n;
        let m2 = sum2 / n;
        let var_x = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
        let var_x2 = ((sum4 - n * m2 * m2) / (n - 1.0)).max(0.0);
        report.mean.push(mean);
        report.mean_se.push((var_x / n).sqrt());
        report.second_moment.push(m2);
        report.second_moment_se.push((var_x2 / n).sqrt());
        for (p, trajectory) in &mut report.extra_moments {
            let mut sump = 0.0;
            for path in paths {
                sump += path.values[k].powf(*p);
            }
            trajectory.push(sump / n);
        }
    }
    Ok(report)
}

/// Analytic mean bound after `n` steps:
/// `(1 - lambda*h)^n * (xi0_mean - mu) + mu`. Decays to `mu` whenever
/// `h < 2/lambda`.
pub fn mean_bound(params: &ModelParams, h: f64, xi0_mean: f64, n: u32) -> f64 {
    (1.0 - params.lambda * h).powi(n as i32) * (xi0_mean - params.mu) + params.mu
}

/// Whether the mean bound applies at step `h` (it needs `h < 2/lambda`).
pub fn mean_bound_applicable(params: &ModelParams, h: f64) -> bool {
    h < 2.0 / params.lambda
}

/// The mean-bound trajectory tabulated on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanBoundCurve {
    pub h: f64,
    pub xi0_mean: f64,
    pub values: Vec<f64>,
}

impl MeanBoundCurve {
    pub fn new(params: &ModelParams, h: f64, xi0_mean: f64, n_steps: usize) -> Self {
        Self {
            h,
            xi0_mean,
            values: (0..=n_steps as u32)
                .map(|n| mean_bound(params, h, xi0_mean, n))
                .collect(),
        }
    }
}

/// Discount-factor estimate `E[exp(-integral of ŝ over [0, t_end])]` with its
/// standard error. The integral of the piecewise-constant step process is
/// exactly `h * (s_0 + ... + s_{N-1})`.
pub fn bond_price(paths: &[PathRecorder], t_end: f64) -> Result<(f64, f64), ObservableError> {
    let grid = shared_grid(paths, t_end)?;
    let discounts: Vec<f64> = paths
        .iter()
        .map(|path| {
            let integral: f64 = path.values[..grid.n_steps()].iter().sum::<f64>() * grid.h();
            (-integral).exp()
        })
        .collect();
    Ok(mean_and_se(&discounts))
}

/// Up-and-out call estimate: per-path payoff `(ŝ(t_end) - strike)^+` kept
/// only when the path stays inside `[0, barrier]` at every grid node (the
/// step process attains its extremes on the grid, so node monitoring is
/// exact for `ŝ`), averaged with its standard error.
pub fn barrier_option_price(
    paths: &[PathRecorder],
    strike: f64,
    barrier: f64,
    t_end: f64,
) -> Result<(f64, f64), ObservableError> {
    if !(strike >= 0.0 && barrier > strike) {
        return Err(ObservableError::BadBarrier { strike, barrier });
    }
    let _ = shared_grid(paths, t_end)?;
    let payoffs: Vec<f64> = paths
        .iter()
        .map(|path| {
            let knocked_out = path.values.iter().any(|&v| v < 0.0 || v > barrier);
            if knocked_out {
                0.0
            } else {
                (path.terminal() - strike).max(0.0)
            }
        })
        .collect();
    Ok(mean_and_se(&payoffs))
}

fn shared_grid(
    paths: &[PathRecorder],
    t_end: f64,
) -> Result<crate::driver::GridSpec, ObservableError> {
    let first = paths
        .first()
        .ok_or(ObservableError::TooFewPaths { got: 0 })?;
    let grid = first.grid;
    let nodes = grid.n_steps() + 1;
    if paths
        .iter()
        .any(|p| p.grid != grid || p.values.len() != nodes)
    {
        return Err(ObservableError::GridMismatch);
    }
    if (grid.t_end() - t_end).abs() > TIME_SLACK * t_end.abs().max(1.0) {
        return Err(ObservableError::GridMismatch);
    }
    Ok(grid)
}

/// Sample mean and standard error of the mean, accumulated in slice order.
/// A single observation reports a zero standard error.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
