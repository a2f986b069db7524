//! Time-domain dynamics.
//!
//! The envelope model expands every dynamical variable as
//! `X(t) = X_0(t) + X_+(t)e^{-iδt} + X_-(t)e^{+iδt}` and keeps terms to first
//! order in the probe, giving ten coupled complex envelopes that are integrated
//! with fixed-step RK4. [`full`] integrates the untruncated nonlinear equations
//! and [`demod`] extracts envelopes from its output for cross-checks.

pub mod demod;
pub mod full;

use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;

use crate::error::{SimError, SimResult};
use crate::ode::{integrate, OdeState, TimeGrid};
use crate::params::{DriveConfig, Lobes, PulseEnvelope, SystemParams};
use crate::steady_state::{OperatingPoint, ProbeResponse};

pub use demod::{demodulate, Demodulated, Window};
pub use full::{simulate_full, FullSeries, FullState};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Target minimum number of recorded samples per trajectory.
pub const MIN_RECORDED_SAMPLES: usize = 1000;
/// Maximum number of recorded samples per trajectory.
pub const MAX_RECORDED_SAMPLES: usize = 1_000_000;

/// Pulse value at `t`; see [`PulseEnvelope::value`].
pub fn envelope(t: f64, env: &PulseEnvelope, which: Lobes) -> f64 {
    env.value(t, which)
}

/// Harmonic-balance envelopes, all dimensionless.
///
/// `q0`/`p0` carry the DC mechanical pair; they are integrated as complex
/// numbers and their imaginary parts should stay at roundoff level.
/// `Q_-` and `P_-` are the conjugates of `Q_+`, `P_+` and are not stored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvelopeState {
    pub q0: C64,
    pub p0: C64,
    pub q_plus: C64,
    pub p_plus: C64,
    pub a10: C64,
    pub a1_plus: C64,
    pub a1_minus: C64,
    pub a20: C64,
    pub a2_plus: C64,
    pub a2_minus: C64,
}

macro_rules! envelope_fields {
    ($mac:ident) => {
        $mac!(q0, p0, q_plus, p_plus, a10, a1_plus, a1_minus, a20, a2_plus, a2_minus)
    };
}

impl Add for EnvelopeState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        macro_rules! add {
            ($($f:ident),*) => { Self { $($f: self.$f + o.$f),* } };
        }
        envelope_fields!(add)
    }
}

impl Mul<f64> for EnvelopeState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        macro_rules! scale {
            ($($f:ident),*) => { Self { $($f: self.$f * s),* } };
        }
        envelope_fields!(scale)
    }
}

impl OdeState for EnvelopeState {
    fn is_finite(&self) -> bool {
        self.components().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl EnvelopeState {
    pub const FIELD_NAMES: [&'static str; 10] =
        ["q0", "p0", "qplus", "pplus", "a10", "a1plus", "a1minus", "a20", "a2plus", "a2minus"];

    pub fn components(&self) -> [C64; 10] {
        macro_rules! arr {
            ($($f:ident),*) => { [$(self.$f),*] };
        }
        envelope_fields!(arr)
    }

    /// The stationary state of the envelope equations under constant drives,
    /// assembled from the analytic steady state.
    pub fn from_steady_state(op: &OperatingPoint, resp: &ProbeResponse, omega_m: f64) -> Self {
        Self {
            q0: C64::from(op.q0),
            p0: ZERO,
            q_plus: resp.q_plus,
            p_plus: resp.p_plus(omega_m),
            a10: op.a10,
            a1_plus: resp.a1_plus,
            a1_minus: resp.a1_minus,
            a20: op.a20,
            a2_plus: resp.a2_plus,
            a2_minus: resp.a2_minus,
        }
    }

    /// Largest `|Im Q0|`, `|Im P0|` relative to `1 + |Q0|`.
    pub fn dc_imaginary_drift(&self) -> f64 {
        self.q0.im.abs().max(self.p0.im.abs()) / (1.0 + self.q0.norm())
    }
}

/// Time derivative of the envelopes.
///
/// Zeroth order is driven by the coupling lasers, first order by the probe and
/// by products of one zeroth- and one first-order amplitude; `e^{±2iδt}` terms
/// and products of two first-order amplitudes are dropped. With constant drives
/// the stationary point is the analytic steady state.
pub fn envelope_derivatives(s: &EnvelopeState, t: f64, params: &SystemParams, drives: &DriveConfig) -> EnvelopeState {
    let SystemParams { omega_m: wm, gamma_m: gm, kappa1: k1, kappa2: k2, g1, g2, .. } = *params;
    let delta = drives.delta;
    let e_l = drives.coupling_l(t);
    let e_r = drives.coupling_r(t);
    let e_p = drives.probe(t);

    // Instantaneous effective detunings, shifted by the (slowly varying) DC displacement.
    let det1 = (params.omega1 - drives.omega_l) - g1 * s.q0;
    let det2 = (params.omega2 - drives.omega_r) + g2 * s.q0;

    let force0 = g1 * s.a10.norm_sqr() - g2 * s.a20.norm_sqr();
    let force_plus = g1 * (s.a10.conj() * s.a1_plus + s.a10 * s.a1_minus.conj())
        - g2 * (s.a20.conj() * s.a2_plus + s.a20 * s.a2_minus.conj());
    let qm = s.q_plus.conj();

    EnvelopeState {
        q0: wm * s.p0,
        p0: force0 - wm * s.q0 - gm * s.p0,
        q_plus: I * delta * s.q_plus + wm * s.p_plus,
        p_plus: I * delta * s.p_plus + force_plus - wm * s.q_plus - gm * s.p_plus,
        a10: -(I * det1 + k1) * s.a10 + e_l,
        a1_plus: (I * (delta - det1) - k1) * s.a1_plus + I * g1 * s.a10 * s.q_plus + e_p,
        a1_minus: (-I * (delta + det1) - k1) * s.a1_minus + I * g1 * s.a10 * qm,
        a20: -(I * det2 + k2) * s.a20 + e_r,
        a2_plus: (I * (delta - det2) - k2) * s.a2_plus - I * g2 * s.a20 * s.q_plus,
        a2_minus: (-I * (delta + det2) - k2) * s.a2_minus - I * g2 * s.a20 * qm,
    }
}

/// Normalized powers derived from one envelope sample. Normalization is to the
/// peak probe amplitude (or 1 if the probe is off).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerivedPowers {
    /// `|(2κ1·a1+ − E_p(t))/E_p|²`
    pub left_output: f64,
    /// `|κ1·Q+/E_p|²`
    pub phonon: f64,
    /// `|2κ2·a2−/E_p|²`
    pub stokes: f64,
    /// `|2κ2·a2+/E_p|²`
    pub antistokes: f64,
}

impl DerivedPowers {
    pub fn compute(s: &EnvelopeState, t: f64, params: &SystemParams, drives: &DriveConfig) -> Self {
        let norm = probe_norm(drives);
        Self {
            left_output: ((2.0 * params.kappa1 * s.a1_plus - drives.probe(t)) / norm).norm_sqr(),
            phonon: (params.kappa1 * s.q_plus / norm).norm_sqr(),
            stokes: (2.0 * params.kappa2 * s.a2_minus / norm).norm_sqr(),
            antistokes: (2.0 * params.kappa2 * s.a2_plus / norm).norm_sqr(),
        }
    }
}

fn probe_norm(drives: &DriveConfig) -> f64 {
    let peak = drives.envelope_p.map_or(drives.amp_p, |e| e.envelope.peak_amplitude);
    if peak > 0.0 {
        peak
    } else {
        1.0
    }
}

/// Recorded envelope samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EnvelopeState>,
    pub derived: Vec<DerivedPowers>,
    /// Integration step actually used.
    pub dt: f64,
    pub record_every: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&EnvelopeState> {
        self.states.last()
    }
}

/// Default stride: at least [`MIN_RECORDED_SAMPLES`] samples, at most
/// [`MAX_RECORDED_SAMPLES`].
pub fn default_record_every(n_steps: usize) -> usize {
    let stride = (n_steps / MIN_RECORDED_SAMPLES).max(1);
    stride.max(n_steps.div_ceil(MAX_RECORDED_SAMPLES))
}

/// Default envelope step `min(τ_p, 1/κ_max, 1/ω_m)/50`; `tau_p` is ignored when
/// the probe is constant.
pub fn default_envelope_dt(params: &SystemParams, tau_p: Option<f64>) -> f64 {
    let kappa_max = params.kappa1.max(params.kappa2);
    let mut scale = (1.0 / kappa_max).min(1.0 / params.omega_m);
    if let Some(tp) = tau_p {
        scale = scale.min(tp);
    }
    scale / 50.0
}

/// Envelope integration with an observer called on every step (including the
/// initial state). Returns the final state.
pub fn integrate_envelope_with<O>(
    initial: EnvelopeState,
    grid: &TimeGrid,
    params: &SystemParams,
    drives: &DriveConfig,
    observe: O,
) -> SimResult<EnvelopeState>
where
    O: FnMut(usize, f64, &EnvelopeState),
{
    integrate(|t, s: &EnvelopeState| envelope_derivatives(s, t, params, drives), initial, grid, observe)
}

/// Classical RK4 on the envelope equations from `t0` to `t1`, recording every
/// `record_every` steps (default from [`default_record_every`]).
pub fn integrate_rk4(
    initial: EnvelopeState,
    t0: f64,
    t1: f64,
    dt: f64,
    params: &SystemParams,
    drives: &DriveConfig,
    record_every: Option<usize>,
) -> SimResult<Trajectory> {
    integrate_rk4_observed(initial, t0, t1, dt, params, drives, record_every, |_, _, _| {})
}

/// As [`integrate_rk4`], additionally calling `on_step(t, state, powers)` on
/// every step, recorded or not.
#[allow(clippy::too_many_arguments)]
pub fn integrate_rk4_observed<O>(
    initial: EnvelopeState,
    t0: f64,
    t1: f64,
    dt: f64,
    params: &SystemParams,
    drives: &DriveConfig,
    record_every: Option<usize>,
    mut on_step: O,
) -> SimResult<Trajectory>
where
    O: FnMut(f64, &EnvelopeState, &DerivedPowers),
{
    let grid = TimeGrid::new(t0, t1, dt)?;
    let stride = match record_every {
        Some(0) => return Err(SimError::invalid("record_every must be at least 1")),
        Some(s) => s,
        None => default_record_every(grid.n_steps),
    };
    if grid.n_steps / stride + 1 > MAX_RECORDED_SAMPLES {
        return Err(SimError::invalid(format!(
            "recording every {stride} of {} steps exceeds {MAX_RECORDED_SAMPLES} rows",
            grid.n_steps
        )));
    }
    let capacity = grid.n_steps / stride + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        derived: Vec::with_capacity(capacity),
        dt: grid.dt,
        record_every: stride,
    };
    integrate_envelope_with(initial, &grid, params, drives, |k, t, s| {
        let powers = DerivedPowers::compute(s, t, params, drives);
        on_step(t, s, &powers);
        if k % stride == 0 {
            traj.times.push(t);
            traj.states.push(*s);
            traj.derived.push(powers);
        }
    })?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{reference_device, reference_drives};
    use crate::steady_state::{probe_response, solve_operating_point};

    #[test]
    fn analytic_steady_state_is_stationary() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.4e-3);
        let op = solve_operating_point(&p, &d).unwrap();
        let resp = probe_response(&op, &p, &d, d.delta);
        let s = EnvelopeState::from_steady_state(&op, &resp, p.omega_m);
        let ds = envelope_derivatives(&s, 0.0, &p, &d);
        // zeroth- and first-order groups are scaled separately
        let comps = s.components();
        let dcomps = ds.components();
        let zeroth = [0, 1, 4, 7];
        let scale0 = zeroth.iter().map(|&k| comps[k].norm()).fold(0.0, f64::max) * p.omega_m;
        let scale1 = (0..10).filter(|k| !zeroth.contains(k)).map(|k| comps[k].norm()).fold(0.0, f64::max) * p.omega_m;
        for (k, dz) in dcomps.iter().enumerate() {
            let scale = if zeroth.contains(&k) { scale0 } else { scale1 };
            assert!(dz.norm() < 1e-9 * scale, "component {k}: {dz} vs scale {scale:e}");
        }
    }

    #[test]
    fn free_decay_rates() {
        let p = reference_device();
        let d = reference_drives(&p, 0.0, 0.0).with_probe_amplitude(&p, 0.0);
        let mut s = EnvelopeState::default();
        s.a10 = C64::new(3.0, 1.0);
        s.a20 = C64::new(-2.0, 0.5);
        // slow eigenvector of the Q+/P+ block at δ = ω_m
        let wd = (p.omega_m.powi(2) - p.gamma_m.powi(2) / 4.0).sqrt();
        s.q_plus = C64::new(1.0, 0.0);
        s.p_plus = C64::new(-p.gamma_m / 2.0, -wd) / p.omega_m * s.q_plus;
        let t1 = 5.0 / p.kappa1;
        let traj = integrate_rk4(s, 0.0, t1, default_envelope_dt(&p, None), &p, &d, None).unwrap();
        let end = traj.last().unwrap();
        let t_end = *traj.times.last().unwrap();
        assert!((end.a10.norm() / (s.a10.norm() * (-p.kappa1 * t_end).exp()) - 1.0).abs() < 1e-3);
        assert!((end.a20.norm() / (s.a20.norm() * (-p.kappa2 * t_end).exp()) - 1.0).abs() < 1e-3);

        let t_mech = 5.0 * 2.0 / p.gamma_m;
        let grid = TimeGrid::new(0.0, t_mech, default_envelope_dt(&p, None)).unwrap();
        let fin = integrate_envelope_with(s, &grid, &p, &d, |_, _, _| {}).unwrap();
        let expect = (-p.gamma_m * t_mech / 2.0).exp();
        assert!((fin.q_plus.norm() / expect - 1.0).abs() < 1e-3, "{} vs {}", fin.q_plus.norm(), expect);
    }

    #[test]
    fn no_probe_keeps_sidebands_zero() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.4e-3).with_probe_amplitude(&p, 0.0);
        let traj = integrate_rk4(EnvelopeState::default(), 0.0, 1e-6, 1e-10, &p, &d, Some(100)).unwrap();
        for s in &traj.states {
            for z in [s.q_plus, s.p_plus, s.a1_plus, s.a1_minus, s.a2_plus, s.a2_minus] {
                assert_eq!(z, ZERO);
            }
        }
        assert!(traj.states.last().unwrap().a10.norm() > 0.0);
    }

    #[test]
    fn zero_field_gives_zero_trajectory() {
        let mut p = reference_device();
        p.g1 = 0.0;
        p.g2 = 0.0;
        let d = reference_drives(&p, 0.0, 0.0).with_probe_amplitude(&p, 0.0);
        let traj = integrate_rk4(EnvelopeState::default(), 0.0, 1e-7, 1e-10, &p, &d, None).unwrap();
        assert!(traj.states.iter().all(|s| *s == EnvelopeState::default()));
        assert!(traj.len() >= MIN_RECORDED_SAMPLES);
    }

    #[test]
    fn time_grid_recorded_uniformly() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.0);
        let traj = integrate_rk4(EnvelopeState::default(), 0.0, 2e-7, 1e-10, &p, &d, Some(7)).unwrap();
        let h = traj.times[1] - traj.times[0];
        for w in traj.times.windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] - w[0]) / h - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn probe_linearity_of_envelope_model() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.4e-3)
            .with_pulse_l(0.5e-6, None, 0.2e-6, 2, Lobes::Write)
            .unwrap()
            .with_pulse_p(0.5e-6, 0.2e-6)
            .unwrap();
        let half = d.with_probe_amplitude(&p, 0.5 * d.amp_p);
        let a = integrate_rk4(EnvelopeState::default(), 0.0, 1e-6, 2e-10, &p, &d, None).unwrap();
        let b = integrate_rk4(EnvelopeState::default(), 0.0, 1e-6, 2e-10, &p, &half, None).unwrap();
        let (sa, sb) = (a.last().unwrap(), b.last().unwrap());
        for (za, zb) in [(sa.a1_plus, sb.a1_plus), (sa.q_plus, sb.q_plus), (sa.a2_minus, sb.a2_minus)] {
            assert!((za - 2.0 * zb).norm() <= 1e-10 * za.norm());
        }
        assert_eq!(sa.a10, sb.a10);
        assert!(a.states.iter().all(|s| s.dc_imaginary_drift() < 1e-8));
    }

    #[test]
    fn record_limits() {
        assert_eq!(default_record_every(500), 1);
        assert_eq!(default_record_every(74_000), 74);
        assert!(default_record_every(5_000_000_000) >= 5_000);
        let p = reference_device();
        let d = reference_drives(&p, 0.0, 0.0);
        assert!(integrate_rk4(EnvelopeState::default(), 0.0, 1e-7, 1e-10, &p, &d, Some(0)).is_err());
    }
}
