//! Model parameters and the initial history segment.

use thiserror::Error;

use crate::TIME_SLACK;

/// Coefficients of the delay CIR model with jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Mean-reversion speed (> 0).
    pub lambda: f64,
    /// Long-run level (> 0).
    pub mu: f64,
    /// Diffusion coefficient (> 0).
    pub sigma: f64,
    /// Exponent on the delayed state in the diffusion term (> 0).
    pub gamma: f64,
    /// Jump coefficient (>= 0).
    pub delta: f64,
    /// Intensity of the Poisson jump driver (>= 0).
    pub beta: f64,
    /// Delay length (> 0).
    pub tau: f64,
}

/// Initial segment `xi(t)` on `[-tau, 0]`. All levels must stay strictly
/// positive for the positivity-controlled scheme to apply.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialHistory {
    /// `xi(t) = value` on the whole segment.
    Constant(f64),
    /// Piecewise-constant segment: `(time, level)` nodes with strictly
    /// increasing times running from `-tau` to `0`. Between nodes the value
    /// of the greatest node time at or before `t` applies (right-open cells,
    /// exact at nodes).
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` must be {constraint}, got {value}")]
    NonPositiveParameter {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("initial history must be strictly positive, got {value}")]
    NonPositiveHistory { value: f64 },
    #[error("bad history grid: {reason}")]
    BadHistoryGrid { reason: String },
    #[error("time {t} outside the history range [{lo}, 0]")]
    OutOfHistoryRange { t: f64, lo: f64 },
}

/// Accepts iff every parameter and history invariant holds; the error names
/// the first violated constraint.
pub fn validate(params: &ModelParams, history: &InitialHistory) -> Result<(), ModelError> {
    let strictly_positive = [
        ("lambda", params.lambda),
        ("mu", params.mu),
        ("sigma", params.sigma),
        ("gamma", params.gamma),
        ("tau", params.tau),
    ];
    for (name, value) in strictly_positive {
        if !(value.is_finite() && value > 0.0) {
            return Err(ModelError::NonPositiveParameter {
                name,
                constraint: "strictly positive and finite",
                value,
            });
        }
    }
    for (name, value) in [("delta", params.delta), ("beta", params.beta)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ModelError::NonPositiveParameter {
                name,
                constraint: "nonnegative and finite",
                value,
            });
        }
    }
    validate_history(history, params.tau)
}

fn validate_history(history: &InitialHistory, tau: f64) -> Result<(), ModelError> {
    match history {
        InitialHistory::Constant(value) => {
            if !(value.is_finite() && *value > 0.0) {
                return Err(ModelError::NonPositiveHistory { value: *value });
            }
            Ok(())
        }
        InitialHistory::Tabulated(nodes) => {
            if nodes.is_empty() {
                return Err(ModelError::BadHistoryGrid {
                    reason: "empty table".into(),
                });
            }
            for &(_, level) in nodes {
                if !(level.is_finite() && level > 0.0) {
                    return Err(ModelError::NonPositiveHistory { value: level });
                }
            }
            for &(time, _) in nodes {
                if !time.is_finite() {
                    return Err(ModelError::BadHistoryGrid {
                        reason: format!("node time {time} is not finite"),
                    });
                }
            }
            let slack = TIME_SLACK * tau.max(1.0);
            let first = nodes[0].0;
            let last = nodes[nodes.len() - 1].0;
            if (first + tau).abs() > slack {
                return Err(ModelError::BadHistoryGrid {
                    reason: format!("first node time {first} is not -tau = {}", -tau),
                });
            }
            if last.abs() > slack {
                return Err(ModelError::BadHistoryGrid {
                    reason: format!("last node time {last} is not 0"),
                });
            }
            for pair in nodes.windows(2) {
                if pair[0].0 >= pair[1].0 {
                    return Err(ModelError::BadHistoryGrid {
                        reason: format!(
                            "node times must be strictly increasing, got {} then {}",
                            pair[0].0, pair[1].0
                        ),
                    });
                }
            }
            Ok(())
        }
    }
}

impl InitialHistory {
    /// `xi(t)` for `t` in `[-tau, 0]`. Times within [`TIME_SLACK`] of the
    /// segment ends are clamped onto it; anything farther out is an error.
    pub fn value_at(&self, t: f64, tau: f64) -> Result<f64, ModelError> {
        let lo = -tau;
        let slack = TIME_SLACK * tau.max(1.0);
        if !t.is_finite() || t < lo - slack || t > slack {
            return Err(ModelError::OutOfHistoryRange { t, lo });
        }
        let t = t.clamp(lo, 0.0);
        match self {
            InitialHistory::Constant(value) => Ok(*value),
            InitialHistory::Tabulated(nodes) => {
                let mut level = nodes[0].1;
                for &(node_t, node_level) in nodes {
                    if node_t <= t {
                        level = node_level;
                    } else {
                        break;
                    }
                }
                Ok(level)
            }
        }
    }
}
