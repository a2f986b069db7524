//! Analytic steady state: the zeroth-order operating point under constant
//! pumps and the first-order response to a weak probe at detuning `δ`.
//!
//! Sideband convention: `+` is the `e^{-iδt}` component (frequency `ω + δ`),
//! `−` the `e^{+iδt}` component. The mechanical coordinate is real, so its
//! `−` component is the conjugate of `Q_+`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{SimError, SimResult};
use crate::params::{DriveConfig, SystemParams};

const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_MAX_ITER: usize = 10_000;
const FIXED_POINT_TOL: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

/// Zeroth-order steady state under constant pumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub a10: C64,
    pub a20: C64,
    /// Static mirror displacement (normalized coordinate).
    pub q0: f64,
    /// `ω1 − ω_L − g1·Q0`
    pub delta1: f64,
    /// `ω2 − ω_R + g2·Q0`
    pub delta2: f64,
}

impl OperatingPoint {
    /// Relative residual of the displacement balance
    /// `ω_m·Q0 = g1|a10|² − g2|a20|²` with the field amplitudes recomputed
    /// from `Q0`.
    pub fn self_consistency_residual(&self, params: &SystemParams, drives: &DriveConfig) -> f64 {
        let rhs = displacement_rhs(params, drives, self.q0);
        let scale = self.q0.abs().max(rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (rhs - self.q0).abs() / scale
        }
    }
}

fn bare_detunings(params: &SystemParams, drives: &DriveConfig) -> (f64, f64) {
    (params.omega1 - drives.omega_l, params.omega2 - drives.omega_r)
}

fn field_amplitudes(params: &SystemParams, drives: &DriveConfig, q0: f64) -> (C64, C64, f64, f64) {
    let (d1, d2) = bare_detunings(params, drives);
    let delta1 = d1 - params.g1 * q0;
    let delta2 = d2 + params.g2 * q0;
    let a10 = C64::from(drives.amp_l) / C64::new(params.kappa1, delta1);
    let a20 = C64::from(drives.amp_r) / C64::new(params.kappa2, delta2);
    (a10, a20, delta1, delta2)
}

fn displacement_rhs(params: &SystemParams, drives: &DriveConfig, q0: f64) -> f64 {
    let (a10, a20, _, _) = field_amplitudes(params, drives, q0);
    (params.g1 * a10.norm_sqr() - params.g2 * a20.norm_sqr()) / params.omega_m
}

/// Self-consistent `(a10, a20, Q0, Δ1, Δ2)` by damped fixed-point iteration on
/// `Q0`, starting from zero. Uses the peak (constant) drive amplitudes.
pub fn solve_operating_point(params: &SystemParams, drives: &DriveConfig) -> SimResult<OperatingPoint> {
    let mut q = 0.0_f64;
    let mut previous = q;
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let rhs = displacement_rhs(params, drives, q);
        let next = (1.0 - FIXED_POINT_DAMPING) * q + FIXED_POINT_DAMPING * rhs;
        if !next.is_finite() {
            return Err(SimError::PossiblyBistable { last: next, previous: q });
        }
        previous = q;
        q = next;
        if (q - previous).abs() <= FIXED_POINT_TOL * q.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SimError::PossiblyBistable { last: q, previous });
    }
    let (a10, a20, delta1, delta2) = field_amplitudes(params, drives, q);
    Ok(OperatingPoint { a10, a20, q0: q, delta1, delta2 })
}

/// `κ + iΔ − iδ`, the cavity response denominator of the `+` sideband. The `−`
/// sideband uses `cavity_denominator(κ, Δ, −δ)`.
pub(crate) fn cavity_denominator(kappa: f64, detuning: f64, delta: f64) -> C64 {
    C64::new(kappa, detuning - delta)
}

/// `d(δ) = Σ_i 2Δ_i g_i²|a_i0|² / ((κ_i − iδ)² + Δ_i²) − (ω_m² − δ² − iδγ_m)/ω_m`.
pub fn denominator(op: &OperatingPoint, params: &SystemParams, delta: f64) -> C64 {
    let cavity = |kappa: f64, det: f64, g: f64, a0: C64| {
        let k = C64::new(kappa, -delta);
        C64::from(2.0 * det * g * g * a0.norm_sqr()) / (k * k + det * det)
    };
    let wm = params.omega_m;
    cavity(params.kappa1, op.delta1, params.g1, op.a10) + cavity(params.kappa2, op.delta2, params.g2, op.a20)
        - C64::new(wm * wm - delta * delta, -delta * params.gamma_m) / wm
}

/// First-order sideband amplitudes at one probe detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResponse {
    pub delta: f64,
    pub q_plus: C64,
    pub d: C64,
    pub a1_plus: C64,
    pub a1_minus: C64,
    pub a2_plus: C64,
    pub a2_minus: C64,
    /// `|d(δ)| < 1e-6·ω_m`: the linear response is close to a pole.
    pub near_singular: bool,
}

impl ProbeResponse {
    /// Mechanical momentum sideband, from `Q̇ = ω_m P` in steady state.
    pub fn p_plus(&self, omega_m: f64) -> C64 {
        -I * self.delta * self.q_plus / omega_m
    }
}

/// Sideband amplitudes `Q_+`, `a1±`, `a2±` to first order in the probe.
pub fn probe_response(op: &OperatingPoint, params: &SystemParams, drives: &DriveConfig, delta: f64) -> ProbeResponse {
    if drives.amp_l > 0.0 && drives.amp_p > 0.1 * drives.amp_l {
        log::warn!("probe amplitude {:e} is not small against the coupling amplitude {:e}", drives.amp_p, drives.amp_l);
    }
    let d = denominator(op, params, delta);
    let near_singular = d.norm() < 1e-6 * params.omega_m;
    if near_singular {
        log::warn!("near-singular response: |d(delta)| = {:e} at delta = {:e}", d.norm(), delta);
    }
    let ep = C64::from(drives.amp_p);
    let den1p = cavity_denominator(params.kappa1, op.delta1, delta);
    let den1m = cavity_denominator(params.kappa1, op.delta1, -delta);
    let den2p = cavity_denominator(params.kappa2, op.delta2, delta);
    let den2m = cavity_denominator(params.kappa2, op.delta2, -delta);

    let q_plus = -(params.g1 * op.a10.conj() * ep) / (den1p * d);
    let a1_plus = (I * params.g1 * op.a10 * q_plus + ep) / den1p;
    let a1_minus = I * params.g1 * op.a10 * q_plus.conj() / den1m;
    let a2_plus = -I * params.g2 * op.a20 * q_plus / den2p;
    let a2_minus = -I * params.g2 * op.a20 * q_plus.conj() / den2m;
    ProbeResponse { delta, q_plus, d, a1_plus, a1_minus, a2_plus, a2_minus, near_singular }
}

/// Output-field spectral components (amplitudes in s⁻¹, carriers in rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputComponents {
    /// Left port at `ω_L + δ = ω_p`: `2κ1·a1+ − E_p`.
    pub left_probe: C64,
    /// Left port at `ω_L − δ`: `2κ1·a1−`.
    pub left_image: C64,
    /// Right port at `ω_R + δ` (anti-Stokes): `2κ2·a2+`.
    pub right_antistokes: C64,
    /// Right port at `ω_R − δ` (Stokes): `2κ2·a2−`.
    pub right_stokes: C64,
    pub freq_left_probe: f64,
    pub freq_left_image: f64,
    pub freq_right_antistokes: f64,
    pub freq_right_stokes: f64,
}

impl OutputComponents {
    fn norm(amp_p: f64, c: C64) -> f64 {
        (c / amp_p).norm_sqr()
    }

    pub fn left_probe_norm(&self, amp_p: f64) -> f64 {
        Self::norm(amp_p, self.left_probe)
    }

    pub fn right_antistokes_norm(&self, amp_p: f64) -> f64 {
        Self::norm(amp_p, self.right_antistokes)
    }

    pub fn right_stokes_norm(&self, amp_p: f64) -> f64 {
        Self::norm(amp_p, self.right_stokes)
    }
}

pub fn output_fields(resp: &ProbeResponse, params: &SystemParams, drives: &DriveConfig) -> OutputComponents {
    let delta = resp.delta;
    OutputComponents {
        left_probe: 2.0 * params.kappa1 * resp.a1_plus - drives.amp_p,
        left_image: 2.0 * params.kappa1 * resp.a1_minus,
        right_antistokes: 2.0 * params.kappa2 * resp.a2_plus,
        right_stokes: 2.0 * params.kappa2 * resp.a2_minus,
        freq_left_probe: drives.omega_l + delta,
        freq_left_image: drives.omega_l - delta,
        freq_right_antistokes: drives.omega_r + delta,
        freq_right_stokes: drives.omega_r - delta,
    }
}

/// Transparency-window width `γ_m/2 + g1²|a10|²/κ1` of cavity 1.
pub fn eit_width(op: &OperatingPoint, params: &SystemParams) -> f64 {
    params.gamma_m / 2.0 + params.g1 * params.g1 * op.a10.norm_sqr() / params.kappa1
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub result: SimResult<(ProbeResponse, OutputComponents)>,
}

/// Probe response on `n_points` uniformly spaced detunings in
/// `[range.0, range.1]`. A failure at a point is recorded in that row.
pub fn spectrum_sweep(
    params: &SystemParams,
    drives: &DriveConfig,
    range: (f64, f64),
    n_points: usize,
) -> SimResult<Vec<SweepRow>> {
    let (start, stop) = range;
    if n_points == 0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(SimError::invalid(format!(
            "sweep needs n_points >= 1 and a finite increasing range, got {n_points} points on [{start:e}, {stop:e}]"
        )));
    }
    if n_points >= 2 && stop == start {
        return Err(SimError::invalid("sweep range is empty"));
    }
    let op = solve_operating_point(params, drives);
    let step = if n_points > 1 { (stop - start) / (n_points - 1) as f64 } else { 0.0 };
    let rows = (0..n_points)
        .into_par_iter()
        .map(|k| {
            let delta = if k + 1 == n_points && n_points > 1 { stop } else { start + step * k as f64 };
            let result = op.clone().map(|op| {
                let resp = probe_response(&op, params, drives, delta);
                (resp, output_fields(&resp, params, drives))
            });
            SweepRow { delta, result }
        })
        .collect();
    Ok(rows)
}

/// Location, depth and full width at half depth of the deepest dip of `ys(xs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipAnalysis {
    pub center: f64,
    pub minimum: f64,
    /// Lower of the two flanking maxima.
    pub baseline: f64,
    pub fwhm: f64,
}

/// Full width of the global minimum of `ys` at half depth between the minimum
/// and the lower flanking maximum. Crossings are linearly interpolated.
/// `None` if the dip does not rise back above half depth on both sides.
pub fn dip_fwhm(xs: &[f64], ys: &[f64]) -> Option<DipAnalysis> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let (imin, &minimum) = ys.iter().enumerate().filter(|(_, y)| y.is_finite()).min_by(|a, b| a.1.total_cmp(b.1))?;
    let left_max = ys[..=imin].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let right_max = ys[imin..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let baseline = left_max.min(right_max);
    if baseline <= minimum {
        return None;
    }
    let half = 0.5 * (baseline + minimum);
    let crossing = |i: usize, j: usize| xs[i] + (half - ys[i]) * (xs[j] - xs[i]) / (ys[j] - ys[i]);

    let mut lo = imin;
    while lo > 0 && ys[lo] < half {
        lo -= 1;
    }
    let mut hi = imin;
    while hi + 1 < ys.len() && ys[hi] < half {
        hi += 1;
    }
    if ys[lo] < half || ys[hi] < half {
        return None;
    }
    let left = crossing(lo, lo + 1);
    let right = crossing(hi - 1, hi);
    Some(DipAnalysis { center: xs[imin], minimum, baseline, fwhm: right - left })
}

/// Dip of the normalized probe-frequency output power `|(2κ1a1+ − E_p)/E_p|²`
/// across a sweep. Rows that failed are skipped.
pub fn probe_output_dip(rows: &[SweepRow], amp_p: f64) -> Option<DipAnalysis> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|(_, out)| (r.delta, out.left_probe_norm(amp_p))))
        .unzip();
    dip_fwhm(&xs, &ys)
}
