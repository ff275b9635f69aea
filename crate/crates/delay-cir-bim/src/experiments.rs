//! Monte Carlo studies: strong-convergence measurement against a fine
//! reference, positivity census, and moment trajectories.
//!
//! All studies draw per-path noise from [`SeedPolicy`] streams and reduce the
//! per-path results in path-index order, so a study's output depends only on
//! its inputs and the master seed, never on the worker count.

use rayon::prelude::*;
use thiserror::Error;

use crate::driver::{generate, DriverError, GridSpec, SeedPolicy};
use crate::model::{InitialHistory, ModelError, ModelParams};
use crate::observables::{
    mean_bound_applicable, moment_report, MeanBoundCurve, MomentReport, ObservableError,
};
use crate::schemes::{simulate_path, ControlConfig, PathRecorder, Scheme, SchemeError};
use crate::TIME_SLACK;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid study setup: {reason}")]
    BadStudy { reason: String },
}

/// Simulates `n_paths` independent paths of one scheme on one grid, path `i`
/// driven by the stream `(master_seed, i)`.
pub fn simulate_ensemble(
    scheme: Scheme,
    params: &ModelParams,
    ctrl: &ControlConfig,
    history: &InitialHistory,
    grid: GridSpec,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<PathRecorder>, ExperimentError> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|path_index| {
            let table = generate(grid, params.beta, SeedPolicy::new(master_seed, path_index))?;
            Ok(simulate_path(scheme, params, ctrl, grid, &table, history)?)
        })
        .collect()
}

/// Strong error at one coarse step against the fine reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceEntry {
    pub h: f64,
    /// Sample mean of the squared endpoint gap against the reference path.
    pub strong_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub h_ref: f64,
    pub n_paths: usize,
    pub entries: Vec<ConvergenceEntry>,
    /// Least-squares slope of `log(strong_error)` against `log(h)` over the
    /// entries with a positive error; NaN when fewer than two qualify.
    pub slope: f64,
}

/// Measures the endpoint strong error of `scheme` at each step in `h_list`
/// against a balanced-scheme reference path at `h_ref` — the stand-in for
/// the exact solution, since the model has none in closed form. Every path
/// and every coarse step are driven by the same base-grid noise (coarse
/// increments are aggregated from the reference table), so a balanced-scheme
/// entry at `h = h_ref` is exactly zero.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    params: &ModelParams,
    ctrl: &ControlConfig,
    scheme: Scheme,
    history: &InitialHistory,
    t_end: f64,
    h_ref: f64,
    h_list: &[f64],
    n_paths: usize,
    master_seed: u64,
) -> Result<ConvergenceReport, ExperimentError> {
    if h_list.is_empty() {
        return Err(ExperimentError::BadStudy {
            reason: "empty coarse-step list".into(),
        });
    }
    if n_paths == 0 {
        return Err(ExperimentError::BadStudy {
            reason: "at least one path required".into(),
        });
    }
    let grid_ref = GridSpec::new(t_end, h_ref, params.tau)?;
    let factors = h_list
        .iter()
        .map(|&h| coarsening_factor(grid_ref, h_ref, h))
        .collect::<Result<Vec<_>, _>>()?;

    let gaps_by_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path_index| -> Result<Vec<f64>, ExperimentError> {
            let table = generate(
                grid_ref,
                params.beta,
                SeedPolicy::new(master_seed, path_index),
            )?;
            let reference = simulate_path(Scheme::Bim, params, ctrl, grid_ref, &table, history)?;
            factors
                .iter()
                .map(|&factor| {
                    let coarse = table.aggregate(factor)?;
                    let path =
                        simulate_path(scheme, params, ctrl, coarse.grid(), &coarse, history)?;
                    let gap = reference.terminal() - path.terminal();
                    Ok(gap * gap)
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let entries: Vec<ConvergenceEntry> = factors
        .iter()
        .enumerate()
        .map(|(j, &factor)| {
            let gaps: Vec<f64> = gaps_by_path.iter().map(|per_path| per_path[j]).collect();
            let (strong_error, std_error) = mean_and_se(&gaps);
            ConvergenceEntry {
                h: factor as f64 * h_ref,
                strong_error,
                std_error,
            }
        })
        .collect();

    let slope = log_log_slope(
        entries
            .iter()
            .filter(|e| e.strong_error > 0.0)
            .map(|e| (e.h, e.strong_error)),
    );

    Ok(ConvergenceReport {
        h_ref,
        n_paths,
        entries,
        slope,
    })
}

fn coarsening_factor(grid_ref: GridSpec, h_ref: f64, h: f64) -> Result<usize, ExperimentError> {
    let ratio = h / h_ref;
    let factor = ratio.round();
    if !(factor >= 1.0 && (factor * h_ref - h).abs() <= TIME_SLACK * h.max(1.0)) {
        return Err(ExperimentError::BadStudy {
            reason: format!("coarse step {h} is not an integer multiple of the reference {h_ref}"),
        });
    }
    let factor = factor as usize;
    if !grid_ref.n_steps().is_multiple_of(factor) {
        return Err(DriverError::NonDivisibleFactor {
            factor,
            n_steps: grid_ref.n_steps(),
        }
        .into());
    }
    if !grid_ref.delay_steps().is_multiple_of(factor) {
        return Err(DriverError::DelayMisaligned {
            factor,
            delay_steps: grid_ref.delay_steps(),
        }
        .into());
    }
    Ok(factor)
}

/// Negativity bookkeeping for one scheme over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeCensus {
    pub scheme: Scheme,
    /// Paths whose recorded values contain a negative entry. Zero for the
    /// balanced scheme by construction (outputs are clamped), so its events
    /// show up in the clamp counters instead.
    pub paths_with_negative_values: usize,
    /// Raw scheme outputs that were negative, summed over the ensemble.
    pub negativity_events: usize,
    /// Clamps applied by the balanced scheme, summed over the ensemble.
    pub clamp_events: usize,
    /// Clamps whose pre-step state sat at or above the control threshold.
    pub clamps_from_safe_state: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityCensus {
    pub n_paths: usize,
    pub per_scheme: Vec<SchemeCensus>,
}

/// Runs every requested scheme over the same per-path noise and counts
/// negativity events as defined on [`SchemeCensus`].
#[allow(clippy::too_many_arguments)]
pub fn positivity_census(
    params: &ModelParams,
    ctrl: &ControlConfig,
    schemes: &[Scheme],
    history: &InitialHistory,
    h: f64,
    t_end: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<PositivityCensus, ExperimentError> {
    let grid = GridSpec::new(t_end, h, params.tau)?;
    let per_path: Vec<Vec<PathRecorder>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path_index| -> Result<Vec<PathRecorder>, ExperimentError> {
            let table = generate(grid, params.beta, SeedPolicy::new(master_seed, path_index))?;
            schemes
                .iter()
                .map(|&scheme| Ok(simulate_path(scheme, params, ctrl, grid, &table, history)?))
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let per_scheme = schemes
        .iter()
        .enumerate()
        .map(|(j, &scheme)| {
            let mut census = SchemeCensus {
                scheme,
                paths_with_negative_values: 0,
                negativity_events: 0,
                clamp_events: 0,
                clamps_from_safe_state: 0,
            };
            for recorders in &per_path {
                let rec = &recorders[j];
                if rec.has_negative_value() {
                    census.paths_with_negative_values += 1;
                }
                census.negativity_events += rec.negativity_events;
                census.clamp_events += rec.clamp_applied;
                census.clamps_from_safe_state += rec.clamps_from_safe_state;
            }
            census
        })
        .collect();

    Ok(PositivityCensus {
        n_paths,
        per_scheme,
    })
}

/// Moment trajectories plus the analytic mean bound when it applies.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentStudy {
    pub report: MomentReport,
    /// `None` flags an inapplicable bound (`h >= 2/lambda`), as opposed to an
    /// error: the moments themselves are still reported.
    pub mean_bound: Option<MeanBoundCurve>,
}

/// Ensemble mean/second-moment trajectories with the bound overlay.
#[allow(clippy::too_many_arguments)]
pub fn moment_study(
    params: &ModelParams,
    ctrl: &ControlConfig,
    scheme: Scheme,
    history: &InitialHistory,
    h: f64,
    t_end: f64,
    n_paths: usize,
    p_list: &[f64],
    master_seed: u64,
) -> Result<MomentStudy, ExperimentError> {
    let grid = GridSpec::new(t_end, h, params.tau)?;
    let paths = simulate_ensemble(scheme, params, ctrl, history, grid, n_paths, master_seed)?;
    let report = moment_report(&paths, p_list)?;
    let mean_bound = if mean_bound_applicable(params, h) {
        let xi0 = history.value_at(0.0, params.tau)?;
        Some(MeanBoundCurve::new(params, h, xi0, grid.n_steps()))
    } else {
        None
    };
    Ok(MomentStudy { report, mean_bound })
}

/// Sample mean and standard error of the mean, accumulated in slice order.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ordinary least squares on `(ln x, ln y)`.
fn log_log_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let logs: Vec<(f64, f64)> = points.map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return f64::NAN;
    }
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in logs {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    cov / var
}
