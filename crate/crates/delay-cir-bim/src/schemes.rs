//! One-step schemes and whole-path simulation with the delay buffer.
//!
//! The balanced implicit step damps the explicit update by
//! `C_n = c0*h + C1(s_n, s_{n-m})*|dW_n| + c2*|dÑ_n|` and solves the implicit
//! relation in closed form:
//!
//! ```text
//! s_{n+1} = s_n + [lambda*(mu - s_n)*h
//!                  + sigma*s_{n-m}^gamma*sqrt(s_n)*dW_n
//!                  + delta*s_n*dÑ_n] / (1 + C_n).
//! ```
//!
//! With `c0 >= lambda`, `c2 >= delta` and the diffusion control of
//! [`control_c1`], every step taken from a state at or above the `epsilon`
//! threshold lands at a nonnegative value, for arbitrary Brownian increments
//! and jump counts.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::driver::{GridSpec, IncrementTable};
use crate::model::{InitialHistory, ModelError, ModelParams};
use crate::TIME_SLACK;

/// Default threshold for the diffusion-control branch switch. Small enough
/// not to distort unit-scale paths, large enough that `epsilon^(-1/2)` stays
/// moderate.
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("negative state in a positivity-controlled step: state {state}, delayed {delayed}")]
    NegativeState { state: f64, delayed: f64 },
    #[error("increment table grid does not match the simulation grid")]
    GridMismatch,
    #[error("grid delay {grid_tau} does not match the model delay {tau}")]
    DelayMisaligned { grid_tau: f64, tau: f64 },
    #[error("invalid control configuration: {reason}")]
    BadControl { reason: String },
    #[error(transparent)]
    History(#[from] ModelError),
}

/// Constants of the balancing controls: `c0` weighs the time step, `c2` the
/// compensated jump increment, and `epsilon` switches the diffusion-control
/// branch. Positivity from `epsilon`-safe states needs `c0 >= lambda` and
/// `c2 >= delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub c0: f64,
    pub c2: f64,
    pub epsilon: f64,
}

impl ControlConfig {
    pub fn new(c0: f64, c2: f64) -> Self {
        Self {
            c0,
            c2,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_epsilon(c0: f64, c2: f64, epsilon: f64) -> Self {
        Self { c0, c2, epsilon }
    }

    pub fn validate_for(&self, params: &ModelParams) -> Result<(), SchemeError> {
        if !(self.c0.is_finite() && self.c0 >= params.lambda) {
            return Err(SchemeError::BadControl {
                reason: format!(
                    "c0 = {} must satisfy c0 >= lambda = {}",
                    self.c0, params.lambda
                ),
            });
        }
        if !(self.c2.is_finite() && self.c2 >= params.delta) {
            return Err(SchemeError::BadControl {
                reason: format!(
                    "c2 = {} must satisfy c2 >= delta = {}",
                    self.c2, params.delta
                ),
            });
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(SchemeError::BadControl {
                reason: format!("epsilon = {} must be positive", self.epsilon),
            });
        }
        Ok(())
    }
}

/// Which one-step scheme drives the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Bim,
    Euler,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Bim => "bim",
            Scheme::Euler => "euler",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bim" => Ok(Scheme::Bim),
            "euler" => Ok(Scheme::Euler),
            other => Err(format!(
                "unknown scheme `{other}` (expected `bim` or `euler`)"
            )),
        }
    }
}

/// Diffusion control:
///
/// ```text
/// C1 = sigma * s_delay^gamma * epsilon^(-1/2)   if s_n < epsilon,
/// C1 = sigma * s_delay^gamma / sqrt(s_n)        if s_n >= epsilon,
/// ```
///
/// continuous at `s_n = epsilon` and bounded as `s_n` approaches zero.
pub fn control_c1(
    state: f64,
    delayed: f64,
    sigma: f64,
    gamma: f64,
    epsilon: f64,
) -> Result<f64, SchemeError> {
    if state < 0.0 || delayed < 0.0 {
        return Err(SchemeError::NegativeState { state, delayed });
    }
    let scale = sigma * delayed.powf(gamma);
    let root = if state < epsilon {
        epsilon.sqrt()
    } else {
        state.sqrt()
    };
    Ok(scale / root)
}

/// One balanced implicit step in its rearranged explicit form. The result is
/// nonnegative whenever `state >= ctrl.epsilon` (and can only go negative
/// after a sub-threshold excursion).
pub fn bim_step(
    state: f64,
    delayed: f64,
    dw: f64,
    dn_tilde: f64,
    params: &ModelParams,
    ctrl: &ControlConfig,
    h: f64,
) -> Result<f64, SchemeError> {
    let c1 = control_c1(state, delayed, params.sigma, params.gamma, ctrl.epsilon)?;
    let damping = ctrl.c0 * h + c1 * dw.abs() + ctrl.c2 * dn_tilde.abs();
    let drift = params.lambda * (params.mu - state) * h;
    let diffusion = params.sigma * delayed.powf(params.gamma) * state.sqrt() * dw;
    let jump = params.delta * state * dn_tilde;
    Ok(state + (drift + diffusion + jump) / (1.0 + damping))
}

/// One Euler-Maruyama step. Negative outputs are legal (the caller counts
/// them); the square root reads `max(state, 0)` so the step stays real on
/// negative states. The delayed state must be nonnegative.
pub fn euler_step(
    state: f64,
    delayed: f64,
    dw: f64,
    dn_tilde: f64,
    params: &ModelParams,
    h: f64,
) -> f64 {
    let drift = params.lambda * (params.mu - state) * h;
    let diffusion = params.sigma * delayed.powf(params.gamma) * state.max(0.0).sqrt() * dw;
    let jump = params.delta * state * dn_tilde;
    state + drift + diffusion + jump
}

/// Grid values seen so far plus the initial segment, addressed by step index.
/// The delayed lookup `s_{n-m}` always succeeds: it returns a stored value
/// once `n >= m` and the initial history at `t_{n-m}` before that.
pub struct DelayBuffer<'a> {
    history: &'a InitialHistory,
    grid: GridSpec,
    tau: f64,
    values: Vec<f64>,
}

impl<'a> DelayBuffer<'a> {
    /// Seeds the buffer with `s_0 = xi(0)`.
    pub fn new(history: &'a InitialHistory, grid: GridSpec, tau: f64) -> Result<Self, ModelError> {
        let mut values = Vec::with_capacity(grid.n_steps() + 1);
        values.push(history.value_at(0.0, tau)?);
        Ok(Self {
            history,
            grid,
            tau,
            values,
        })
    }

    /// `s_{n-m}` for the step currently being taken from node `n`.
    pub fn delayed(&self, n: usize) -> Result<f64, ModelError> {
        let m = self.grid.delay_steps();
        if n >= m {
            Ok(self.values[n - m])
        } else {
            self.history
                .value_at(self.grid.time_signed(n as i64 - m as i64), self.tau)
        }
    }

    pub fn latest(&self) -> f64 {
        *self.values.last().expect("buffer seeded at construction")
    }

    pub fn push(&mut self, value: f64) {
        self.values.push(value);
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// One simulated path: grid values `s_0..s_N` plus positivity event counters.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecorder {
    pub grid: GridSpec,
    /// One value per grid node, `s_0 = xi(0)`.
    pub values: Vec<f64>,
    /// Steps whose raw scheme output was negative (pre-clamp for the balanced
    /// scheme, recorded as-is for Euler).
    pub negativity_events: usize,
    /// Negative balanced-scheme outputs replaced by zero before recording.
    pub clamp_applied: usize,
    /// Clamps whose pre-step state was at or above the control threshold.
    /// Zero whenever the controls satisfy `c0 >= lambda` and `c2 >= delta`.
    pub clamps_from_safe_state: usize,
}

impl PathRecorder {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("paths hold at least s_0")
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn has_negative_value(&self) -> bool {
        self.values.iter().any(|&v| v < 0.0)
    }
}

/// Iterates the chosen scheme over the whole grid. Balanced-scheme outputs
/// that come out negative (possible only after a sub-`epsilon` excursion) are
/// clamped to zero before being recorded and counted on the recorder, so the
/// recorded path and every delayed lookup stay nonnegative. Euler outputs are
/// recorded as they come; a negative delayed value enters the diffusion
/// coefficient clamped at zero.
pub fn simulate_path(
    scheme: Scheme,
    params: &ModelParams,
    ctrl: &ControlConfig,
    grid: GridSpec,
    increments: &IncrementTable,
    history: &InitialHistory,
) -> Result<PathRecorder, SchemeError> {
    if increments.grid() != grid {
        return Err(SchemeError::GridMismatch);
    }
    let grid_tau = grid.tau();
    if (grid_tau - params.tau).abs() > TIME_SLACK * params.tau.max(1.0) {
        return Err(SchemeError::DelayMisaligned {
            grid_tau,
            tau: params.tau,
        });
    }
    ctrl.validate_for(params)?;

    let mut buffer = DelayBuffer::new(history, grid, params.tau)?;
    let mut negativity_events = 0;
    let mut clamp_applied = 0;
    let mut clamps_from_safe_state = 0;

    for n in 0..grid.n_steps() {
        let state = buffer.latest();
        let delayed = buffer.delayed(n)?.max(0.0);
        let dw = increments.brownian()[n];
        let dn_tilde = increments.compensated_jump(n);
        let next = match scheme {
            Scheme::Bim => {
                let raw = bim_step(state, delayed, dw, dn_tilde, params, ctrl, grid.h())?;
                if raw < 0.0 {
                    negativity_events += 1;
                    clamp_applied += 1;
                    if state >= ctrl.epsilon {
                        clamps_from_safe_state += 1;
                    }
                    0.0
                } else {
                    raw
                }
            }
            Scheme::Euler => {
                let raw = euler_step(state, delayed, dw, dn_tilde, params, grid.h());
                if raw < 0.0 {
                    negativity_events += 1;
                }
                raw
            }
        };
        buffer.push(next);
    }

    Ok(PathRecorder {
        grid,
        values: buffer.into_values(),
        negativity_events,
        clamp_applied,
        clamps_from_safe_state,
    })
}
