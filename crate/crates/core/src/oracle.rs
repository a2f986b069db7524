//! Cross-checks between independent routes to the same quantity:
//!
//! * analytic steady state vs. the long-time limit of the envelope integrator;
//! * envelope integrator vs. the untruncated model, compared after passing
//!   both through the same demodulation filter;
//! * Routh–Hurwitz vs. eigenvalue stability verdicts on random draws.
//!
//! Draws use a seeded ChaCha generator so every check is reproducible.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::full::{default_full_dt, simulate_full, FullState};
use crate::dynamics::{default_envelope_dt, demodulate, integrate_envelope_with, integrate_rk4, EnvelopeState, Window};
use crate::error::{SimError, SimResult};
use crate::ode::TimeGrid;
use crate::params::{DriveConfig, Lobes, SystemParams};
use crate::protocols::PulseProtocol;
use crate::stability::{eigen_report, is_stable_routh_hurwitz, linearize, Verdict};
use crate::steady_state::{probe_response, solve_operating_point};

/// Relative tolerance per component for the analytic/envelope comparison.
pub const FIXED_POINT_TOL: f64 = 1e-6;
/// Pointwise tolerance, relative to the peak, for the envelope/full comparison.
pub const CROSS_MODEL_TOL: f64 = 1e-2;
/// Half-width of the band around `Re λ = 0` (units of ω_m) in which the two
/// stability verdicts may differ.
pub const MARGINAL_BAND: f64 = 1e-6;
/// Settling time in units of the slowest decay time.
pub const SETTLE_DECAY_TIMES: f64 = 25.0;
/// Demodulation window for cross-model checks, in beat periods.
pub const DEMOD_PERIODS: f64 = 10.0;

/// Outcome of one oracle check.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error (or disagreement count).
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Worst per-component relative error of `got` against `reference`. `P0` is
/// measured against `|Q0|` because its reference value is zero.
pub fn fixed_point_error(got: &EnvelopeState, reference: &EnvelopeState) -> f64 {
    let g = got.components();
    let r = reference.components();
    let mut worst = 0.0_f64;
    for k in 0..g.len() {
        let scale = if k == 1 { r[0].norm() } else { r[k].norm() };
        let err = (g[k] - r[k]).norm();
        let rel = if scale > 0.0 {
            err / scale
        } else if err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(rel);
    }
    worst
}

/// Analytic steady state and the envelope integrator's state after settling
/// from a cold start under constant drives.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointComparison {
    pub analytic: EnvelopeState,
    pub integrated: EnvelopeState,
    pub settle_time: f64,
    pub error: f64,
}

pub fn compare_fixed_point(params: &SystemParams, drives: &DriveConfig) -> SimResult<FixedPointComparison> {
    let drives = drives.constant();
    let op = solve_operating_point(params, &drives)?;
    let sys = linearize(params, &op);
    let eig = eigen_report(&sys)?;
    if !eig.stable {
        return Err(SimError::Unstable {
            verdict: Verdict::Unstable,
            detail: format!("max Re(lambda) = {:e} s^-1", eig.max_real),
        });
    }
    let slowest = eig.eigenvalues.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
    let settle_time = SETTLE_DECAY_TIMES / slowest;
    let resp = probe_response(&op, params, &drives, drives.delta);
    let analytic = EnvelopeState::from_steady_state(&op, &resp, params.omega_m);
    let grid = TimeGrid::new(0.0, settle_time, default_envelope_dt(params, None))?;
    let integrated = integrate_envelope_with(EnvelopeState::default(), &grid, params, &drives, |_, _, _| {})?;
    let error = fixed_point_error(&integrated, &analytic);
    Ok(FixedPointComparison { analytic, integrated, settle_time, error })
}

fn scale(rng: &mut ChaCha8Rng, spread: f64) -> f64 {
    rng.random_range(1.0 - spread..1.0 + spread)
}

/// A random red-detuned configuration near `base`: rates and couplings within
/// ±30 %, ω_m within ±5 %, `P_L` in [0.5, 2] mW, `P_R` in [0, 1] mW, both bare
/// detunings within ±10 % of ω_m and δ within ±2 % of ω_m.
pub fn draw_near(
    rng: &mut ChaCha8Rng,
    base: &SystemParams,
    base_drives: &DriveConfig,
) -> SimResult<(SystemParams, DriveConfig)> {
    let mut p = *base;
    p.omega_m *= scale(rng, 0.05);
    p.gamma_m *= scale(rng, 0.3);
    p.kappa1 *= scale(rng, 0.3);
    p.kappa2 *= scale(rng, 0.3);
    p.g1 *= scale(rng, 0.3);
    p.g2 *= scale(rng, 0.3);
    p.omega1 = base_drives.omega_l + p.omega_m * scale(rng, 0.1);
    p.omega2 = base_drives.omega_r + p.omega_m * scale(rng, 0.1);
    let power_l = rng.random_range(0.5e-3..2e-3);
    let power_r = rng.random_range(0.0..1e-3);
    let delta = p.omega_m * scale(rng, 0.02);
    let d =
        DriveConfig::new(&p, base_drives.omega_l, base_drives.omega_r, delta, power_l, power_r, base_drives.power_p)?;
    Ok((p, d))
}

/// Envelope long-time limits against the analytic steady state on `n` random
/// stable draws near `base`.
pub fn analytic_vs_envelope(base: &SystemParams, base_drives: &DriveConfig, n: usize, seed: u64) -> OracleCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut failure = None;
    while accepted < n && rejected < 20 * n.max(1) {
        let Ok((p, d)) = draw_near(&mut rng, base, base_drives) else {
            rejected += 1;
            continue;
        };
        match compare_fixed_point(&p, &d) {
            Ok(c) => {
                accepted += 1;
                worst = worst.max(c.error);
            }
            Err(SimError::Unstable { .. }) | Err(SimError::PossiblyBistable { .. }) => rejected += 1,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    let passed = failure.is_none() && accepted == n && worst < FIXED_POINT_TOL;
    let detail = match failure {
        Some(e) => format!("integration failed: {e}"),
        None => format!("{accepted} stable draws ({rejected} rejected), worst relative error {worst:.3e}"),
    };
    OracleCheck { name: "analytic_vs_envelope", passed, metric: worst, tolerance: FIXED_POINT_TOL, detail }
}

/// Worst pointwise mismatches, relative to the peak of the envelope side, of
/// the demodulated sidebands over the write stage.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossModelComparison {
    pub a1_plus: f64,
    pub a1_minus: f64,
    pub q_plus: f64,
    pub samples: usize,
    pub full_steps: usize,
}

impl CrossModelComparison {
    pub fn worst(&self) -> f64 {
        self.a1_plus.max(self.a1_minus).max(self.q_plus)
    }
}

fn max_rel_mismatch(got: &[C64], reference: &[C64], mask: &[bool]) -> f64 {
    let peak = reference.iter().zip(mask).filter(|(_, m)| **m).map(|(z, _)| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    got.iter()
        .zip(reference)
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|((a, b), _)| (a - b).norm() / peak)
        .fold(0.0, f64::max)
}

/// Runs the memory write stage with both models on a shared time grid,
/// rebuilds the physical signals from the envelopes, demodulates both with the
/// same boxcar filter, and compares the sidebands over
/// `[t_write − 3τ_L, t_write + 3τ_L]`. Cavity 2 is left undriven.
pub fn envelope_vs_full(
    params: &SystemParams,
    drives: &DriveConfig,
    protocol: &PulseProtocol,
    full_dt: Option<f64>,
) -> SimResult<CrossModelComparison> {
    let base = drives.constant().without_r();
    let pulsed = base
        .with_pulse_l(protocol.t_write, Some(protocol.t_read), protocol.tau_l, protocol.beta, Lobes::Both)?
        .with_pulse_p(protocol.t_write, protocol.tau_p)?;
    let window = crate::dynamics::demod::periods(pulsed.delta, DEMOD_PERIODS);
    let t0 = protocol.t_start();
    let stage_end = protocol.t_write + 3.0 * protocol.tau_l;
    let t1 = stage_end + window;

    let dt_full = full_dt.unwrap_or_else(|| default_full_dt(pulsed.delta));
    let full = simulate_full(FullState::default(), t0, t1, dt_full, params, &pulsed, None)?;
    let sub = (full.dt / default_envelope_dt(params, Some(protocol.tau_p))).ceil().max(1.0) as usize;
    let env = integrate_rk4(EnvelopeState::default(), t0, t1, full.dt / sub as f64, params, &pulsed, Some(sub))?;
    if env.len() != full.len() || env.times.iter().zip(&full.times).any(|(a, b)| (a - b).abs() > 1e-3 * full.dt) {
        return Err(SimError::invalid("envelope and full-model grids do not align"));
    }

    let rebuilt: Vec<FullState> =
        env.times.iter().zip(&env.states).map(|(&t, s)| FullState::from_envelope(s, t, pulsed.delta)).collect();
    let a1_env: Vec<C64> = rebuilt.iter().map(|s| s.a1).collect();
    let q_env: Vec<C64> = rebuilt.iter().map(|s| C64::from(s.q)).collect();

    let d_a1_full = demodulate(&full.times, &full.a1(), pulsed.delta, window, Window::Boxcar)?;
    let d_a1_env = demodulate(&env.times, &a1_env, pulsed.delta, window, Window::Boxcar)?;
    let d_q_full = demodulate(&full.times, &full.q(), pulsed.delta, window, Window::Boxcar)?;
    let d_q_env = demodulate(&env.times, &q_env, pulsed.delta, window, Window::Boxcar)?;

    let lo = protocol.t_write - 3.0 * protocol.tau_l;
    let mask: Vec<bool> = d_a1_full.times.iter().map(|&t| t >= lo && t <= stage_end).collect();
    Ok(CrossModelComparison {
        a1_plus: max_rel_mismatch(&d_a1_full.plus, &d_a1_env.plus, &mask),
        a1_minus: max_rel_mismatch(&d_a1_full.minus, &d_a1_env.minus, &mask),
        q_plus: max_rel_mismatch(&d_q_full.plus, &d_q_env.plus, &mask),
        samples: mask.iter().filter(|m| **m).count(),
        full_steps: full.len() - 1,
    })
}

pub fn envelope_vs_full_check(
    params: &SystemParams,
    drives: &DriveConfig,
    protocol: &PulseProtocol,
    full_dt: Option<f64>,
) -> OracleCheck {
    match envelope_vs_full(params, drives, protocol, full_dt) {
        Ok(c) => OracleCheck {
            name: "envelope_vs_full",
            passed: c.worst() < CROSS_MODEL_TOL,
            metric: c.worst(),
            tolerance: CROSS_MODEL_TOL,
            detail: format!(
                "a1+ {:.3e}, a1- {:.3e}, Q+ {:.3e} over {} samples ({} full-model steps)",
                c.a1_plus, c.a1_minus, c.q_plus, c.samples, c.full_steps
            ),
        },
        Err(e) => OracleCheck {
            name: "envelope_vs_full",
            passed: false,
            metric: f64::INFINITY,
            tolerance: CROSS_MODEL_TOL,
            detail: e.to_string(),
        },
    }
}

/// Tally of Routh–Hurwitz against eigenvalue verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StabilityTally {
    pub draws: usize,
    pub stable: usize,
    pub unstable: usize,
    /// Draws with `|max Re λ| < MARGINAL_BAND·ω_m`.
    pub in_marginal_band: usize,
    /// Disagreements outside the marginal band.
    pub disagreements: usize,
    /// Draws skipped because the operating point did not converge.
    pub skipped: usize,
}

/// A random draw spanning stable and unstable regions: bare detunings in
/// `[−2ω_m, 2ω_m]`, powers log-uniform in `[1 µW, 10 mW]`, couplings and
/// rates within ±50 % of `base`.
pub fn draw_wide(
    rng: &mut ChaCha8Rng,
    base: &SystemParams,
    base_drives: &DriveConfig,
) -> SimResult<(SystemParams, DriveConfig)> {
    let mut p = *base;
    p.gamma_m *= scale(rng, 0.5);
    p.kappa1 *= scale(rng, 0.5);
    p.kappa2 *= scale(rng, 0.5);
    p.g1 *= scale(rng, 0.5);
    p.g2 *= scale(rng, 0.5);
    p.omega1 = base_drives.omega_l + p.omega_m * rng.random_range(-2.0..2.0);
    p.omega2 = base_drives.omega_r + p.omega_m * rng.random_range(-2.0..2.0);
    let log_power = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-6.0..-2.0));
    let power_l = log_power(rng);
    let power_r = log_power(rng);
    let d = DriveConfig::new(&p, base_drives.omega_l, base_drives.omega_r, base_drives.delta, power_l, power_r, 0.0)?;
    Ok((p, d))
}

pub fn routh_vs_eigen(
    base: &SystemParams,
    base_drives: &DriveConfig,
    n: usize,
    seed: u64,
) -> SimResult<StabilityTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = StabilityTally::default();
    while tally.draws < n {
        let (p, d) = draw_wide(&mut rng, base, base_drives)?;
        let op = match solve_operating_point(&p, &d) {
            Ok(op) => op,
            Err(SimError::PossiblyBistable { .. }) => {
                tally.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let sys = linearize(&p, &op);
        let routh = is_stable_routh_hurwitz(&sys);
        let eig = eigen_report(&sys)?;
        tally.draws += 1;
        if eig.stable {
            tally.stable += 1;
        } else {
            tally.unstable += 1;
        }
        if eig.max_real.abs() < MARGINAL_BAND * p.omega_m {
            tally.in_marginal_band += 1;
        } else if routh.verdict.is_stable() != eig.stable {
            tally.disagreements += 1;
        }
    }
    Ok(tally)
}

pub fn routh_vs_eigen_check(base: &SystemParams, base_drives: &DriveConfig, n: usize, seed: u64) -> OracleCheck {
    match routh_vs_eigen(base, base_drives, n, seed) {
        Ok(t) => OracleCheck {
            name: "routh_vs_eigen",
            passed: t.disagreements == 0 && t.draws == n,
            metric: t.disagreements as f64,
            tolerance: 0.0,
            detail: format!(
                "{} draws: {} stable, {} unstable, {} in marginal band, {} disagreements, {} skipped (bistable)",
                t.draws, t.stable, t.unstable, t.in_marginal_band, t.disagreements, t.skipped
            ),
        },
        Err(e) => OracleCheck {
            name: "routh_vs_eigen",
            passed: false,
            metric: f64::INFINITY,
            tolerance: 0.0,
            detail: e.to_string(),
        },
    }
}

/// Number of fixed-point draws used by [`verify_suite`].
pub const VERIFY_FIXED_POINT_DRAWS: usize = 10;

/// The three oracle checks on a configuration: fixed-point draws near the
/// configured device, one cross-model run of the memory write stage, and
/// `stability_draws` stability draws.
pub fn verify_suite(
    params: &SystemParams,
    drives: &DriveConfig,
    protocol: &PulseProtocol,
    full_dt: Option<f64>,
    stability_draws: usize,
    seed: u64,
) -> Vec<OracleCheck> {
    vec![
        analytic_vs_envelope(params, drives, VERIFY_FIXED_POINT_DRAWS, seed),
        envelope_vs_full_check(params, drives, protocol, full_dt),
        routh_vs_eigen_check(params, drives, stability_draws, seed.wrapping_add(1)),
    ]
}
