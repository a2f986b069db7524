//! Fixed-step classical Runge–Kutta integration on a uniform time grid.

use std::ops::{Add, Mul};

use crate::error::{SimError, SimResult};

/// Upper bound on the number of steps of a single integration.
pub const MAX_STEPS: u64 = 100_000_000;

/// A state vector RK4 can combine linearly.
pub trait OdeState: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn is_finite(&self) -> bool;
}

/// Uniform grid `t_k = t0 + k·dt`, `k = 0..=n_steps`, ending exactly at `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    /// Grid from `t0` to `t1` whose step is the largest value `<= dt` that
    /// divides the span into an integer number of steps.
    pub fn new(t0: f64, t1: f64, dt: f64) -> SimResult<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::invalid(format!("time step must be positive, got {dt:e}")));
        }
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(SimError::invalid(format!("time span [{t0:e}, {t1:e}] is empty")));
        }
        let ratio = (t1 - t0) / dt;
        if ratio > MAX_STEPS as f64 {
            return Err(SimError::invalid(format!("{ratio:e} steps exceeds the {MAX_STEPS} step cap")));
        }
        let n_steps = ((ratio - 1e-9).ceil() as usize).max(1);
        Ok(Self { t0, t1, dt: (t1 - t0) / n_steps as f64, n_steps })
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t1
        } else {
            self.t0 + self.dt * k as f64
        }
    }
}

pub fn rk4_step<S: OdeState>(f: &impl Fn(f64, &S) -> S, t: f64, y: &S, h: f64) -> S {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(*y + k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(*y + k2 * (0.5 * h)));
    let k4 = f(t + h, &(*y + k3 * h));
    *y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrate over `grid`, calling `observe(k, t_k, &y_k)` for the initial
/// state and after every step. Returns the final state.
pub fn integrate<S, F, O>(f: F, initial: S, grid: &TimeGrid, mut observe: O) -> SimResult<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
    O: FnMut(usize, f64, &S),
{
    let mut y = initial;
    observe(0, grid.t0, &y);
    for k in 0..grid.n_steps {
        let t = grid.time(k);
        y = rk4_step(&f, t, &y, grid.time(k + 1) - t);
        if !y.is_finite() {
            return Err(SimError::Diverged { t: grid.time(k + 1) });
        }
        observe(k + 1, grid.time(k + 1), &y);
    }
    Ok(y)
}

impl OdeState for f64 {
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}
