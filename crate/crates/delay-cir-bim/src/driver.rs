//! Seeded Brownian and Poisson increments on a uniform mesh, aggregable to
//! coarser grids so that coarse and fine simulations share the same
//! underlying noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::TIME_SLACK;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriverError {
    #[error("invalid grid: {reason}")]
    BadGrid { reason: String },
    #[error("jump intensity must be nonnegative and finite, got {beta}")]
    BadIntensity { beta: f64 },
    #[error("aggregation factor {factor} does not divide {n_steps} steps")]
    NonDivisibleFactor { factor: usize, n_steps: usize },
    #[error("aggregation factor {factor} does not divide the {delay_steps}-step delay")]
    DelayMisaligned { factor: usize, delay_steps: usize },
}

/// Uniform mesh `t_n = n*h` on `[0, t_end]` with the delay resolved by a
/// whole number of steps (`tau = delay_steps * h`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    h: f64,
    n_steps: usize,
    delay_steps: usize,
}

impl GridSpec {
    /// Both `t_end/h` and `tau/h` must be positive integers up to rounding
    /// slack; the grid then treats `t_end` as exactly `n_steps * h`.
    pub fn new(t_end: f64, h: f64, tau: f64) -> Result<Self, DriverError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(DriverError::BadGrid {
                reason: format!("step size must be positive and finite, got {h}"),
            });
        }
        let n_steps = integer_ratio(t_end, h).ok_or_else(|| DriverError::BadGrid {
            reason: format!("horizon {t_end} is not a positive whole number of steps {h}"),
        })?;
        let delay_steps = integer_ratio(tau, h).ok_or_else(|| DriverError::BadGrid {
            reason: format!("delay {tau} is not a positive whole number of steps {h}"),
        })?;
        Ok(Self {
            h,
            n_steps,
            delay_steps,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Delay offset `m` with `tau = m*h`.
    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.h
    }

    pub fn tau(&self) -> f64 {
        self.delay_steps as f64 * self.h
    }

    /// Node time `t_n = n*h`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.h
    }

    pub(crate) fn time_signed(&self, n: i64) -> f64 {
        n as f64 * self.h
    }
}

/// `ratio = num/den` rounded to the nearest integer, accepted only when the
/// product lands back on `num` within slack.
fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    if !num.is_finite() {
        return None;
    }
    let k = (num / den).round();
    if k < 1.0 || k > usize::MAX as f64 {
        return None;
    }
    let slack = TIME_SLACK * num.abs().max(1.0);
    ((k * den - num).abs() <= slack).then_some(k as usize)
}

/// Deterministic mapping from (master seed, path index) to an RNG.
///
/// The master seed keys the generator and the path index selects its stream,
/// so distinct paths draw from independent streams and a path's increments do
/// not depend on how many paths run or on the execution schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPolicy {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedPolicy {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.path_index);
        rng
    }
}

/// Per-step Brownian increments and Poisson jump counts at one resolution.
///
/// Compensated jump increments `dÑ_n = dN_n - beta*h` are derived on demand,
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementTable {
    grid: GridSpec,
    dw: Vec<f64>,
    dn: Vec<u64>,
    beta: f64,
}

/// Draws one table on `grid`: all Brownian increments first (mean 0,
/// variance `h` each), then all jump counts (mean `beta*h` each). The draw
/// order is part of the determinism contract.
pub fn generate(
    grid: GridSpec,
    beta: f64,
    seed: SeedPolicy,
) -> Result<IncrementTable, DriverError> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(DriverError::BadIntensity { beta });
    }
    let mut rng = seed.rng();
    let normal = Normal::new(0.0, grid.h().sqrt()).expect("positive step size");
    let dw: Vec<f64> = (0..grid.n_steps())
        .map(|_| normal.sample(&mut rng))
        .collect();
    let dn: Vec<u64> = if beta > 0.0 {
        let poisson = Poisson::new(beta * grid.h()).expect("positive jump mean");
        (0..grid.n_steps())
            .map(|_| poisson.sample(&mut rng) as u64)
            .collect()
    } else {
        vec![0; grid.n_steps()]
    };
    Ok(IncrementTable { grid, dw, dn, beta })
}

impl IncrementTable {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn brownian(&self) -> &[f64] {
        &self.dw
    }

    pub fn jump_counts(&self) -> &[u64] {
        &self.dn
    }

    /// Compensated jump increment for step `n`: `dN_n - beta*h`.
    pub fn compensated_jump(&self, n: usize) -> f64 {
        self.dn[n] as f64 - self.beta * self.grid.h()
    }

    /// Sums increments over blocks of `factor` steps, producing the table of
    /// the same noise on the grid with step `factor * h`.
    ///
    /// Composite factors run as a chain of ascending prime-factor passes, so
    /// chaining aggregations agrees bitwise with aggregating once by the
    /// product.
    pub fn aggregate(&self, factor: usize) -> Result<IncrementTable, DriverError> {
        if factor == 0 || !self.grid.n_steps.is_multiple_of(factor) {
            return Err(DriverError::NonDivisibleFactor {
                factor,
                n_steps: self.grid.n_steps,
            });
        }
        if !self.grid.delay_steps.is_multiple_of(factor) {
            return Err(DriverError::DelayMisaligned {
                factor,
                delay_steps: self.grid.delay_steps,
            });
        }
        let mut table = self.clone();
        for prime in prime_factors(factor) {
            table = table.aggregate_pass(prime);
        }
        Ok(table)
    }

    fn aggregate_pass(&self, factor: usize) -> IncrementTable {
        let n = self.grid.n_steps / factor;
        let dw = (0..n)
            .map(|j| self.dw[j * factor..(j + 1) * factor].iter().sum::<f64>())
            .collect();
        let dn = (0..n)
            .map(|j| self.dn[j * factor..(j + 1) * factor].iter().sum::<u64>())
            .collect();
        IncrementTable {
            grid: GridSpec {
                h: self.grid.h * factor as f64,
                n_steps: n,
                delay_steps: self.grid.delay_steps / factor,
            },
            dw,
            dn,
            beta: self.beta,
        }
    }
}

/// Prime factorization in ascending order with repetition.
fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}
