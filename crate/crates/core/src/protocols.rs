//! Pulsed write/store/read protocols on top of the envelope integrator.
//!
//! Memory: a probe pulse and the first lobe of a coupling pulse on cavity 1
//! write the probe into the mechanical sideband `Q_+`; a second coupling lobe
//! after the delay reads it back out of cavity 1.
//!
//! Transduction: the write lobe drives cavity 1 only and the read lobe drives
//! cavity 2 only, whose bare detuning selects which output sideband is
//! resonant.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::dynamics::{default_envelope_dt, integrate_rk4_observed, EnvelopeState, Trajectory};
use crate::error::{SimError, SimResult};
use crate::params::{DriveConfig, Lobes, SystemParams};
use crate::stability::{eigen_report, is_stable_routh_hurwitz, linearize, Verdict};
use crate::steady_state::{eit_width, solve_operating_point};

/// Delay between write and read used when none is given, seconds.
pub const DEFAULT_DELAY_S: f64 = 1.5e-6;
/// Lead-in and tail around the pulses, in units of `τ_L`.
pub const PADDING_WIDTHS: f64 = 5.0;
/// Half-width of the read window, in units of `τ_L`.
pub const READ_WINDOW_WIDTHS: f64 = 3.0;
/// Largest tolerated transient amplification of an unstable stage, `ln(1e3)`.
pub fn max_transient_gain_exponent() -> f64 {
    1e3_f64.ln()
}

/// Pulse timing and shape shared by both protocols. The probe is always
/// Gaussian; `beta` applies to the coupling pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseProtocol {
    pub t_write: f64,
    pub t_read: f64,
    pub tau_p: f64,
    pub tau_l: f64,
    pub beta: u32,
}

impl PulseProtocol {
    /// Write at `5τ_L`, read [`DEFAULT_DELAY_S`] later.
    pub fn new(tau_p: f64, tau_l: f64, beta: u32) -> Self {
        let t_write = PADDING_WIDTHS * tau_l;
        Self { t_write, t_read: t_write + DEFAULT_DELAY_S, tau_p, tau_l, beta }
    }

    pub fn with_delay(mut self, delay: f64) -> Self {
        self.t_read = self.t_write + delay;
        self
    }

    pub fn delay(&self) -> f64 {
        self.t_read - self.t_write
    }

    pub fn t_start(&self) -> f64 {
        self.t_write - PADDING_WIDTHS * self.tau_l
    }

    pub fn t_end(&self) -> f64 {
        self.t_read + PADDING_WIDTHS * self.tau_l
    }

    pub fn read_window(&self) -> (f64, f64) {
        let h = READ_WINDOW_WIDTHS * self.tau_l;
        (self.t_read - h, self.t_read + h)
    }

    fn validate(&self) -> SimResult<()> {
        for (name, v) in [("tau_p", self.tau_p), ("tau_l", self.tau_l)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::invalid(format!("{name} must be positive, got {v:e}")));
            }
        }
        if !(self.t_write.is_finite() && self.t_read.is_finite() && self.t_read > self.t_write) {
            return Err(SimError::invalid(format!(
                "read time {:e} s must come after write time {:e} s",
                self.t_read, self.t_write
            )));
        }
        Ok(())
    }

    /// Default step for this protocol, see [`default_envelope_dt`].
    pub fn default_dt(&self, params: &SystemParams) -> f64 {
        default_envelope_dt(params, Some(self.tau_p))
    }
}

/// Integration controls; `None` picks the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Numerics {
    pub dt: Option<f64>,
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryResult {
    pub trajectory: Trajectory,
    /// Peak of the normalized left output power inside the read window.
    pub retrieval_efficiency: f64,
    /// Peak of the normalized phonon signal.
    pub storage_peak: f64,
    pub t_write: f64,
    pub t_read: f64,
    pub read_window: (f64, f64),
    pub dt: f64,
    /// State at the end of the run, whether or not it was recorded.
    pub final_state: EnvelopeState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetuningCase {
    Red,
    Resonant,
    Blue,
}

impl DetuningCase {
    pub const ALL: [DetuningCase; 3] = [DetuningCase::Red, DetuningCase::Resonant, DetuningCase::Blue];

    /// Bare detuning `ω2 − ω_R` of cavity 2 for this case.
    pub fn bare_detuning(self, omega_m: f64) -> f64 {
        match self {
            DetuningCase::Red => omega_m,
            DetuningCase::Resonant => 0.0,
            DetuningCase::Blue => -omega_m,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DetuningCase::Red => "red",
            DetuningCase::Resonant => "resonant",
            DetuningCase::Blue => "blue",
        }
    }
}

impl fmt::Display for DetuningCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetuningCase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "red" => Ok(DetuningCase::Red),
            "resonant" => Ok(DetuningCase::Resonant),
            "blue" => Ok(DetuningCase::Blue),
            _ => Err(format!("expected red, resonant or blue, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransductionResult {
    pub trajectory: Trajectory,
    pub case: DetuningCase,
    /// Peak of `|2κ2·a2−/E_p|²`.
    pub stokes_peak: f64,
    /// Peak of `|2κ2·a2+/E_p|²`.
    pub antistokes_peak: f64,
    /// Peak of the normalized phonon signal inside the read window.
    pub read_phonon_peak: f64,
    /// Peak of the normalized phonon signal overall.
    pub storage_peak: f64,
    /// `ω_R − δ`, rad/s.
    pub stokes_frequency: f64,
    /// `ω_R + δ`, rad/s.
    pub antistokes_frequency: f64,
    pub dt: f64,
}

impl TransductionResult {
    /// The larger of the two output peaks.
    pub fn dominant_peak(&self) -> f64 {
        self.stokes_peak.max(self.antistokes_peak)
    }
}

/// Stability verdict of one stage held at its peak drive, and the growth
/// exponent accumulated over one lobe if the stage is unstable.
#[derive(Debug, Clone, PartialEq)]
pub struct StageCheck {
    pub stage: &'static str,
    pub verdict: Verdict,
    pub max_real: f64,
    pub gain_exponent: f64,
}

/// Checks one stage. Stable stages pass. Unstable or marginal stages pass
/// with a warning if `max Re λ · ∫shape²dt` stays below
/// [`max_transient_gain_exponent`], and are refused otherwise.
pub fn check_stage(
    params: &SystemParams,
    stage_drives: &DriveConfig,
    lobe_time: f64,
    stage: &'static str,
) -> SimResult<StageCheck> {
    let op = solve_operating_point(params, stage_drives)?;
    let sys = linearize(params, &op);
    let routh = is_stable_routh_hurwitz(&sys);
    let eig = eigen_report(&sys)?;
    let gain_exponent = eig.max_real.max(0.0) * lobe_time;
    let check = StageCheck { stage, verdict: routh.verdict, max_real: eig.max_real, gain_exponent };
    if routh.verdict.is_stable() {
        return Ok(check);
    }
    if gain_exponent > max_transient_gain_exponent() {
        return Err(SimError::Unstable {
            verdict: routh.verdict,
            detail: format!(
                "{stage} stage at peak drive has max Re(lambda) = {:e} s^-1; growth exponent {:.3} over the pulse exceeds ln(1e3)",
                eig.max_real, gain_exponent
            ),
        });
    }
    warn!(
        "{stage} stage is {} at peak drive (max Re(lambda) = {:e} s^-1) but the pulse is short enough: growth exponent {:.3}",
        routh.verdict, eig.max_real, gain_exponent
    );
    Ok(check)
}

struct Peaks {
    last: EnvelopeState,
    left_in_window: f64,
    phonon: f64,
    phonon_in_window: f64,
    stokes: f64,
    antistokes: f64,
}

fn run_pulsed(
    params: &SystemParams,
    drives: &DriveConfig,
    protocol: &PulseProtocol,
    numerics: &Numerics,
) -> SimResult<(Trajectory, Peaks)> {
    let dt = numerics.dt.unwrap_or_else(|| protocol.default_dt(params));
    let (w0, w1) = protocol.read_window();
    let mut peaks = Peaks {
        last: EnvelopeState::default(),
        left_in_window: 0.0,
        phonon: 0.0,
        phonon_in_window: 0.0,
        stokes: 0.0,
        antistokes: 0.0,
    };
    let traj = integrate_rk4_observed(
        EnvelopeState::default(),
        protocol.t_start(),
        protocol.t_end(),
        dt,
        params,
        drives,
        numerics.record_every,
        |t, s, p| {
            peaks.last = *s;
            let in_window = t >= w0 && t <= w1;
            if in_window {
                peaks.left_in_window = peaks.left_in_window.max(p.left_output);
                peaks.phonon_in_window = peaks.phonon_in_window.max(p.phonon);
            }
            peaks.phonon = peaks.phonon.max(p.phonon);
            peaks.stokes = peaks.stokes.max(p.stokes);
            peaks.antistokes = peaks.antistokes.max(p.antistokes);
        },
    )?;
    Ok((traj, peaks))
}

fn lobe_time(protocol: &PulseProtocol) -> SimResult<f64> {
    Ok(crate::params::PulseEnvelope::new(1.0, protocol.t_write, None, protocol.tau_l, protocol.beta)?
        .lobe_energy_time())
}

/// Single-cavity storage and retrieval. `drives` gives the peak powers and
/// frequencies; any cavity-2 drive is switched off.
pub fn run_memory(
    params: &SystemParams,
    drives: &DriveConfig,
    protocol: &PulseProtocol,
    numerics: &Numerics,
) -> SimResult<MemoryResult> {
    params.validate()?;
    protocol.validate()?;
    let mut base = drives.constant();
    if base.power_r > 0.0 {
        warn!("memory protocol uses cavity 1 only; ignoring power_r = {:e} W", base.power_r);
        base = base.without_r();
    }

    let write_stage = base.with_probe_amplitude(params, 0.0);
    check_stage(params, &write_stage, lobe_time(protocol)?, "write/read")?;
    let op = solve_operating_point(params, &write_stage)?;
    let width = eit_width(&op, params);
    if 1.0 / protocol.tau_p >= width {
        warn!(
            "probe bandwidth 1/tau_p = {:e} s^-1 is not below the transparency width {:e} s^-1",
            1.0 / protocol.tau_p,
            width
        );
    }

    let pulsed = base
        .with_pulse_l(protocol.t_write, Some(protocol.t_read), protocol.tau_l, protocol.beta, Lobes::Both)?
        .with_pulse_p(protocol.t_write, protocol.tau_p)?;
    let (trajectory, peaks) = run_pulsed(params, &pulsed, protocol, numerics)?;
    Ok(MemoryResult {
        dt: trajectory.dt,
        trajectory,
        retrieval_efficiency: peaks.left_in_window,
        storage_peak: peaks.phonon,
        t_write: protocol.t_write,
        t_read: protocol.t_read,
        read_window: protocol.read_window(),
        final_state: peaks.last,
    })
}

/// Parameters with cavity 2 placed according to `case` relative to the
/// reading laser.
pub fn transduction_params(params: &SystemParams, drives: &DriveConfig, case: DetuningCase) -> SystemParams {
    SystemParams { omega2: drives.omega_r + case.bare_detuning(params.omega_m), ..*params }
}

/// Write through cavity 1, read through cavity 2 with its bare detuning set by
/// `case`. `params.omega2` is overridden.
pub fn run_transduction(
    params: &SystemParams,
    drives: &DriveConfig,
    protocol: &PulseProtocol,
    case: DetuningCase,
    numerics: &Numerics,
) -> SimResult<TransductionResult> {
    params.validate()?;
    protocol.validate()?;
    let params = transduction_params(params, drives, case);
    let base = drives.constant();
    if base.power_r <= 0.0 {
        return Err(SimError::invalid("transduction needs a reading laser: power_r must be positive"));
    }
    let lobe = lobe_time(protocol)?;
    let probe_off = base.with_probe_amplitude(&params, 0.0);
    check_stage(&params, &probe_off.without_r(), lobe, "write")?;
    check_stage(&params, &probe_off.without_l(), lobe, "read")?;

    let pulsed = base
        .with_pulse_l(protocol.t_write, Some(protocol.t_read), protocol.tau_l, protocol.beta, Lobes::Write)?
        .with_pulse_r(protocol.t_write, Some(protocol.t_read), protocol.tau_l, protocol.beta, Lobes::Read)?
        .with_pulse_p(protocol.t_write, protocol.tau_p)?;
    let (trajectory, peaks) = run_pulsed(&params, &pulsed, protocol, numerics)?;
    Ok(TransductionResult {
        dt: trajectory.dt,
        trajectory,
        case,
        stokes_peak: peaks.stokes,
        antistokes_peak: peaks.antistokes,
        read_phonon_peak: peaks.phonon_in_window,
        storage_peak: peaks.phonon,
        stokes_frequency: base.omega_r - base.delta,
        antistokes_frequency: base.omega_r + base.delta,
    })
}

/// Which protocol a scan repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanProtocol {
    Memory,
    Transduce(DetuningCase),
}

impl fmt::Display for ScanProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanProtocol::Memory => f.write_str("memory"),
            ScanProtocol::Transduce(c) => write!(f, "transduce_{c}"),
        }
    }
}

impl FromStr for ScanProtocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "memory" => Ok(ScanProtocol::Memory),
            _ => match s.strip_prefix("transduce_") {
                Some(case) => case.parse().map(ScanProtocol::Transduce),
                None => Err(format!("expected memory, transduce_red, transduce_resonant or transduce_blue, got '{s}'")),
            },
        }
    }
}

/// Metrics of one scan point. Fields that do not apply to the protocol are
/// `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanMetrics {
    pub retrieval_efficiency: Option<f64>,
    pub storage_peak: f64,
    pub stokes_peak: Option<f64>,
    pub antistokes_peak: Option<f64>,
}

impl ScanMetrics {
    /// Retrieval efficiency for memory runs, the larger output peak for
    /// transduction runs.
    pub fn headline(&self) -> f64 {
        self.retrieval_efficiency
            .unwrap_or_else(|| self.stokes_peak.unwrap_or(0.0).max(self.antistokes_peak.unwrap_or(0.0)))
    }
}

impl From<&MemoryResult> for ScanMetrics {
    fn from(r: &MemoryResult) -> Self {
        Self {
            retrieval_efficiency: Some(r.retrieval_efficiency),
            storage_peak: r.storage_peak,
            stokes_peak: None,
            antistokes_peak: None,
        }
    }
}

impl From<&TransductionResult> for ScanMetrics {
    fn from(r: &TransductionResult) -> Self {
        Self {
            retrieval_efficiency: None,
            storage_peak: r.storage_peak,
            stokes_peak: Some(r.stokes_peak),
            antistokes_peak: Some(r.antistokes_peak),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub value: f64,
    pub result: SimResult<ScanMetrics>,
}

/// One scan point: parameters, drives and timing for a protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub params: SystemParams,
    pub drives: DriveConfig,
    pub protocol: PulseProtocol,
    pub numerics: Numerics,
}

/// Runs `which` once per value. `build` maps a scan value to the run inputs;
/// a failure there or in the run is recorded in that row. Rows keep the order
/// of `values`. `threads` caps the worker count (`None`: rayon default).
pub fn efficiency_scan<B>(
    which: ScanProtocol,
    values: &[f64],
    build: B,
    threads: Option<usize>,
) -> SimResult<Vec<ScanRow>>
where
    B: Fn(f64) -> SimResult<ScanPoint> + Sync,
{
    let run_one = |value: f64| {
        let result = build(value).and_then(|pt| match which {
            ScanProtocol::Memory => run_memory(&pt.params, &pt.drives, &pt.protocol, &pt.numerics).map(|r| (&r).into()),
            ScanProtocol::Transduce(case) => {
                run_transduction(&pt.params, &pt.drives, &pt.protocol, case, &pt.numerics).map(|r| (&r).into())
            }
        });
        ScanRow { value, result }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(SimError::invalid("thread count must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| SimError::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| values.par_iter().map(|&v| run_one(v)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{reference_device, reference_drives};

    fn coarse() -> Numerics {
        Numerics { dt: Some(2e-10), record_every: None }
    }

    #[test]
    fn protocol_timing() {
        let p = PulseProtocol::new(0.3e-6, 0.3e-6, 2);
        assert!((p.t_write - 1.5e-6).abs() < 1e-18);
        assert!((p.delay() - 1.5e-6).abs() < 1e-15);
        assert_eq!(p.t_start(), 0.0);
        let (a, b) = p.read_window();
        assert!((b - a - 1.8e-6).abs() < 1e-15);
        assert!(p.with_delay(-1e-6).validate().is_err());
    }

    #[test]
    fn case_names_round_trip() {
        for c in DetuningCase::ALL {
            assert_eq!(c.name().parse::<DetuningCase>().unwrap(), c);
            let s = ScanProtocol::Transduce(c);
            assert_eq!(s.to_string().parse::<ScanProtocol>().unwrap(), s);
        }
        assert_eq!("memory".parse::<ScanProtocol>().unwrap(), ScanProtocol::Memory);
        assert!("transduce_green".parse::<ScanProtocol>().is_err());
    }

    #[test]
    fn memory_stores_and_retrieves() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.0);
        let r = run_memory(&p, &d, &PulseProtocol::new(0.3e-6, 0.3e-6, 2), &coarse()).unwrap();
        assert!(r.retrieval_efficiency > 0.1 && r.retrieval_efficiency < 1.5, "{}", r.retrieval_efficiency);
        assert!(r.storage_peak > 0.0);
        // phonon persists between the pulses
        let mid = 0.5 * (r.t_write + r.t_read);
        let k = r.trajectory.times.iter().position(|&t| t >= mid).unwrap();
        assert!(r.trajectory.derived[k].phonon > 0.1 * r.storage_peak);
        assert!(r.trajectory.states.iter().all(|s| s.dc_imaginary_drift() < 1e-8));
    }

    #[test]
    fn memory_ignores_cavity_two() {
        let p = reference_device();
        let with_r = reference_drives(&p, 1e-3, 0.4e-3);
        let without = reference_drives(&p, 1e-3, 0.0);
        let proto = PulseProtocol::new(0.3e-6, 0.3e-6, 2);
        let a = run_memory(&p, &with_r, &proto, &coarse()).unwrap();
        let b = run_memory(&p, &without, &proto, &coarse()).unwrap();
        assert_eq!(a.retrieval_efficiency, b.retrieval_efficiency);
    }

    #[test]
    fn carrier_frequencies() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.4e-3);
        let r = run_transduction(&p, &d, &PulseProtocol::new(0.3e-6, 0.3e-6, 2), DetuningCase::Red, &coarse()).unwrap();
        assert_eq!(r.antistokes_frequency, d.omega_r + d.delta);
        assert_eq!(r.stokes_frequency, d.omega_r - d.delta);
        assert!(r.antistokes_peak > r.stokes_peak);
    }

    #[test]
    fn transduction_requires_reading_laser() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.0);
        let proto = PulseProtocol::new(0.3e-6, 0.3e-6, 2);
        assert!(run_transduction(&p, &d, &proto, DetuningCase::Red, &coarse()).is_err());
    }

    #[test]
    fn strongly_unstable_stage_is_refused() {
        let p = reference_device();
        // blue-detuned coupling on cavity 1 held for a long pulse
        let mut blue = p;
        blue.omega1 = crate::presets::laser_omega() - p.omega_m;
        let d = reference_drives(&blue, 5e-3, 0.0);
        let err = run_memory(&blue, &d, &PulseProtocol::new(0.3e-6, 20e-6, 2), &coarse()).unwrap_err();
        assert!(matches!(err, SimError::Unstable { .. }), "{err:?}");
    }

    #[test]
    fn scan_preserves_order_and_single_value_matches() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.0);
        let proto = PulseProtocol::new(0.3e-6, 0.3e-6, 2);
        let build = |delay: f64| {
            if delay <= 0.0 {
                return Err(SimError::invalid("delay must be positive"));
            }
            Ok(ScanPoint { params: p, drives: d, protocol: proto.with_delay(delay), numerics: coarse() })
        };
        let rows = efficiency_scan(ScanProtocol::Memory, &[1.0e-6, -1.0, 1.5e-6], build, Some(2)).unwrap();
        assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), vec![1.0e-6, -1.0, 1.5e-6]);
        assert!(rows[1].result.is_err());
        let direct = run_memory(&p, &d, &proto, &coarse()).unwrap();
        assert_eq!(rows[2].result.as_ref().unwrap().retrieval_efficiency, Some(direct.retrieval_efficiency));
    }
}
