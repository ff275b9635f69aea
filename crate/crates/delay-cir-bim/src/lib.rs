//! Simulation of the delay CIR model with jumps.
//!
//! The state follows
//!
//! ```text
//! dS(t) = lambda*(mu - S(t))*dt
//!       + sigma*S(t - tau)^gamma*sqrt(S(t))*dW(t)
//!       + delta*S(t)*dÑ(t),          t >= 0,
//! S(t)  = xi(t),                     t in [-tau, 0],
//! ```
//!
//! where `W` is a standard Brownian motion and `Ñ(t) = N(t) - beta*t`
//! compensates a Poisson process of intensity `beta`. The diffusion
//! coefficient reads the state `tau` time units in the past, so the model is
//! a stochastic delay differential equation with jumps.
//!
//! The crate provides:
//!
//! - [`schemes`]: a balanced implicit one-step scheme whose control functions
//!   keep iterates nonnegative, an Euler-Maruyama baseline, and whole-path
//!   simulation with the delay buffer;
//! - [`driver`]: seeded Brownian/Poisson increment tables that aggregate to
//!   coarser grids for coupled refinement studies;
//! - [`observables`]: the piecewise-constant step process, ensemble moment
//!   statistics, the analytic mean bound, and bond / up-and-out call
//!   estimators;
//! - [`experiments`]: strong-convergence measurement against a fine reference,
//!   positivity census, and moment-trajectory studies;
//! - [`cli`]: a flat `key = value` configuration format and the command
//!   runner behind the `delay-cir-bim` binary.
//!
//! The runnable examples are the quickest tour:
//!
//! ```bash
//! cargo run --example positivity_paths
//! cargo run --example strong_convergence
//! cargo run --example moment_trajectories
//! cargo run --example bond_pricing
//! cargo run --example barrier_option
//! cargo run --example increment_tables
//! ```

pub mod cli;
pub mod driver;
pub mod experiments;
pub mod model;
pub mod observables;
pub mod schemes;

pub use driver::{generate, GridSpec, IncrementTable, SeedPolicy};
pub use model::{validate, InitialHistory, ModelError, ModelParams};
pub use observables::{
    barrier_option_price, bond_price, mean_bound, moment_report, MeanBoundCurve, MomentReport,
    StepProcessView,
};
pub use schemes::{
    bim_step, control_c1, euler_step, simulate_path, ControlConfig, DelayBuffer, PathRecorder,
    Scheme,
};

/// Absolute slack used when a time quantity must be an integer multiple of a
/// step up to float rounding (mesh checks, history endpoints).
pub(crate) const TIME_SLACK: f64 = 1e-9;
