//! Untruncated semiclassical equations in the frame rotating with the coupling
//! lasers. The probe enters cavity 1 as `E_p(t)·e^{-iδt}`, so the fast beat at
//! `δ` has to be resolved by the step size.

use std::f64::consts::TAU;
use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;

use super::EnvelopeState;
use crate::error::{SimError, SimResult};
use crate::ode::{integrate, OdeState, TimeGrid};
use crate::params::{DriveConfig, SystemParams};

const I: C64 = C64::new(0.0, 1.0);

/// Minimum number of steps per beat period `2π/δ`.
pub const MIN_STEPS_PER_PERIOD: f64 = 50.0;
/// Default number of steps per beat period.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FullState {
    pub q: f64,
    pub p: f64,
    pub a1: C64,
    pub a2: C64,
}

impl Add for FullState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { q: self.q + o.q, p: self.p + o.p, a1: self.a1 + o.a1, a2: self.a2 + o.a2 }
    }
}

impl Mul<f64> for FullState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self { q: self.q * s, p: self.p * s, a1: self.a1 * s, a2: self.a2 * s }
    }
}

impl OdeState for FullState {
    fn is_finite(&self) -> bool {
        self.q.is_finite()
            && self.p.is_finite()
            && self.a1.re.is_finite()
            && self.a1.im.is_finite()
            && self.a2.re.is_finite()
            && self.a2.im.is_finite()
    }
}

impl FullState {
    /// Recombine envelopes into the physical variables at time `t`.
    pub fn from_envelope(s: &EnvelopeState, t: f64, delta: f64) -> Self {
        let down = C64::from_polar(1.0, -delta * t);
        let up = down.conj();
        Self {
            q: s.q0.re + 2.0 * (s.q_plus * down).re,
            p: s.p0.re + 2.0 * (s.p_plus * down).re,
            a1: s.a10 + s.a1_plus * down + s.a1_minus * up,
            a2: s.a20 + s.a2_plus * down + s.a2_minus * up,
        }
    }
}

pub fn full_derivatives(s: &FullState, t: f64, params: &SystemParams, drives: &DriveConfig) -> FullState {
    let det1 = params.omega1 - drives.omega_l - params.g1 * s.q;
    let det2 = params.omega2 - drives.omega_r + params.g2 * s.q;
    let probe = drives.probe(t) * C64::from_polar(1.0, -drives.delta * t);
    FullState {
        q: params.omega_m * s.p,
        p: params.g1 * s.a1.norm_sqr() - params.g2 * s.a2.norm_sqr() - params.omega_m * s.q - params.gamma_m * s.p,
        a1: -(I * det1 + params.kappa1) * s.a1 + drives.coupling_l(t) + probe,
        a2: -(I * det2 + params.kappa2) * s.a2 + drives.coupling_r(t),
    }
}

/// Default step `2π/(100·δ)`.
pub fn default_full_dt(delta: f64) -> f64 {
    TAU / (DEFAULT_STEPS_PER_PERIOD * delta.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullSeries {
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    pub dt: f64,
    pub record_every: usize,
}

impl FullSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn a1(&self) -> Vec<C64> {
        self.states.iter().map(|s| s.a1).collect()
    }

    pub fn a2(&self) -> Vec<C64> {
        self.states.iter().map(|s| s.a2).collect()
    }

    pub fn q(&self) -> Vec<C64> {
        self.states.iter().map(|s| C64::from(s.q)).collect()
    }
}

/// RK4 on the full equations. `dt` must resolve the beat: `dt <= 2π/(50·δ)`.
/// Records every step unless `record_every` says otherwise.
pub fn simulate_full(
    initial: FullState,
    t0: f64,
    t1: f64,
    dt: f64,
    params: &SystemParams,
    drives: &DriveConfig,
    record_every: Option<usize>,
) -> SimResult<FullSeries> {
    if drives.delta == 0.0 {
        return Err(SimError::invalid("full model needs a non-zero probe detuning"));
    }
    let limit = TAU / (MIN_STEPS_PER_PERIOD * drives.delta.abs());
    if dt > limit {
        return Err(SimError::invalid(format!("full-model step {dt:e} s exceeds 2pi/(50 delta) = {limit:e} s")));
    }
    let grid = TimeGrid::new(t0, t1, dt)?;
    let stride = record_every.unwrap_or(1);
    if stride == 0 {
        return Err(SimError::invalid("record_every must be at least 1"));
    }
    if grid.n_steps / stride + 1 > super::MAX_RECORDED_SAMPLES {
        return Err(SimError::invalid(format!(
            "recording every {stride} of {} steps exceeds {} rows",
            grid.n_steps,
            super::MAX_RECORDED_SAMPLES
        )));
    }
    let mut series = FullSeries {
        times: Vec::with_capacity(grid.n_steps / stride + 1),
        states: Vec::with_capacity(grid.n_steps / stride + 1),
        dt: grid.dt,
        record_every: stride,
    };
    integrate(
        |t, s: &FullState| full_derivatives(s, t, params, drives),
        initial,
        &grid,
        |k, t, s| {
            if k % stride == 0 {
                series.times.push(t);
                series.states.push(*s);
            }
        },
    )?;
    Ok(series)
}
