//! Physical parameters of the two-cavity device and its drives.
//!
//! Everything here is angular: frequencies and decay rates in rad/s, times in
//! seconds, powers in watts. Drive amplitudes carry units of s⁻¹ so that
//! `|a|²` of an intracavity field is a photon number.

use crate::error::{SimError, SimResult};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.0545718e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Mechanical and optical constants of the double-cavity device.
///
/// `kappa1`/`kappa2` are amplitude decay rates; the photon leakage rate of
/// cavity `i` is `2·kappa_i`. The couplings `g1`, `g2` may be zero (that
/// decouples the cavity from the mirror), every other quantity must be
/// strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub mass: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub g1: f64,
    pub g2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl SystemParams {
    pub fn validate(&self) -> SimResult<()> {
        let positive = [
            ("mass", self.mass),
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(SimError::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("g1", self.g1), ("g2", self.g2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::invalid(format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        if !self.is_resolved_sideband() {
            log::warn!(
                "outside the resolved-sideband regime: omega_m = {:e} rad/s is not > 10·max(kappa1, kappa2) = {:e}",
                self.omega_m,
                10.0 * self.kappa1.max(self.kappa2)
            );
        }
        Ok(())
    }

    /// `ω_m > 10·max(κ1, κ2)`.
    pub fn is_resolved_sideband(&self) -> bool {
        self.omega_m > 10.0 * self.kappa1.max(self.kappa2)
    }
}

/// Which lobe(s) of a two-lobe write/read pulse a drive follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lobes {
    Write,
    Read,
    Both,
}

/// A (super-)Gaussian pulse `peak·exp(-½((t-t0)/τ)^β)` centred on the write
/// time and, optionally, a second lobe at the read time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEnvelope {
    pub peak_amplitude: f64,
    pub t_write: f64,
    pub t_read: Option<f64>,
    pub tau: f64,
    pub beta: u32,
}

impl PulseEnvelope {
    pub fn new(peak_amplitude: f64, t_write: f64, t_read: Option<f64>, tau: f64, beta: u32) -> SimResult<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(SimError::invalid(format!("pulse width must be positive, got {tau}")));
        }
        if beta < 2 || !beta.is_multiple_of(2) {
            return Err(SimError::invalid(format!("pulse exponent must be even and >= 2, got {beta}")));
        }
        if !peak_amplitude.is_finite() || !t_write.is_finite() || t_read.is_some_and(|t| !t.is_finite()) {
            return Err(SimError::invalid("pulse amplitude and centres must be finite"));
        }
        Ok(Self { peak_amplitude, t_write, t_read, tau, beta })
    }

    fn lobe(&self, t: f64, centre: f64) -> f64 {
        let x = (t - centre) / self.tau;
        // β is even, so the integer power is non-negative.
        (-0.5 * x.powi(self.beta as i32)).exp()
    }

    /// Dimensionless pulse shape (peak 1 per lobe).
    pub fn shape(&self, t: f64, lobes: Lobes) -> f64 {
        let write = || self.lobe(t, self.t_write);
        let read = || self.t_read.map_or(0.0, |c| self.lobe(t, c));
        match lobes {
            Lobes::Write => write(),
            Lobes::Read => read(),
            Lobes::Both => write() + read(),
        }
    }

    pub fn value(&self, t: f64, lobes: Lobes) -> f64 {
        self.peak_amplitude * self.shape(t, lobes)
    }

    /// `∫ shape(t)² dt` over one lobe: `shape² = exp(-((t-t0)/τ)^β)` integrates
    /// to `2·τ·Γ(1 + 1/β)`.
    pub fn lobe_energy_time(&self) -> f64 {
        let b = self.beta as f64;
        2.0 * self.tau * gamma_1_to_2(1.0 + 1.0 / b)
    }
}

/// Γ(x) for x in [1, 2] (Lanczos, g = 7).
fn gamma_1_to_2(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let z = x - 1.0;
    let mut acc = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// A pulse attached to one drive, together with the lobes that drive follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveEnvelope {
    pub envelope: PulseEnvelope,
    pub lobes: Lobes,
}

impl DriveEnvelope {
    fn at(&self, t: f64) -> f64 {
        self.envelope.value(t, self.lobes)
    }
}

/// Laser and probe drives. Amplitudes `amp_*` are derived from the powers
/// with [`drive_amplitude`]; drives without an envelope are constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub omega_l: f64,
    pub omega_r: f64,
    pub omega_p: f64,
    pub power_l: f64,
    pub power_r: f64,
    pub power_p: f64,
    /// Probe-pump detuning `ω_p − ω_L`.
    pub delta: f64,
    pub amp_l: f64,
    pub amp_r: f64,
    pub amp_p: f64,
    pub envelope_l: Option<DriveEnvelope>,
    pub envelope_r: Option<DriveEnvelope>,
    pub envelope_p: Option<DriveEnvelope>,
}

impl DriveConfig {
    /// Constant drives. The probe frequency is `omega_l + delta`.
    pub fn new(
        params: &SystemParams,
        omega_l: f64,
        omega_r: f64,
        delta: f64,
        power_l: f64,
        power_r: f64,
        power_p: f64,
    ) -> SimResult<Self> {
        for (name, p) in [("power_l", power_l), ("power_r", power_r), ("power_p", power_p)] {
            if !p.is_finite() || p < 0.0 {
                return Err(SimError::invalid(format!("{name} must be non-negative, got {p}")));
            }
        }
        if !delta.is_finite() {
            return Err(SimError::invalid("delta must be finite"));
        }
        let omega_p = omega_l + delta;
        let drives = Self {
            omega_l,
            omega_r,
            omega_p,
            power_l,
            power_r,
            power_p,
            delta,
            amp_l: drive_amplitude(params.kappa1, power_l, omega_l)?,
            amp_r: drive_amplitude(params.kappa2, power_r, omega_r)?,
            amp_p: drive_amplitude(params.kappa1, power_p, omega_p)?,
            envelope_l: None,
            envelope_r: None,
            envelope_p: None,
        };
        drives.check_delta()?;
        Ok(drives)
    }

    /// `delta` and `omega_p − omega_l` agree up to the rounding of `omega_p`.
    pub fn check_delta(&self) -> SimResult<()> {
        let ulp_scale = 4.0 * f64::EPSILON * self.omega_p.abs().max(self.omega_l.abs());
        if ((self.omega_p - self.omega_l) - self.delta).abs() > ulp_scale {
            return Err(SimError::invalid(format!(
                "delta = {:e} does not equal omega_p - omega_l = {:e}",
                self.delta,
                self.omega_p - self.omega_l
            )));
        }
        Ok(())
    }

    pub fn coupling_l(&self, t: f64) -> f64 {
        self.envelope_l.map_or(self.amp_l, |e| e.at(t))
    }

    pub fn coupling_r(&self, t: f64) -> f64 {
        self.envelope_r.map_or(self.amp_r, |e| e.at(t))
    }

    pub fn probe(&self, t: f64) -> f64 {
        self.envelope_p.map_or(self.amp_p, |e| e.at(t))
    }

    pub fn with_pulse_l(
        mut self,
        t_write: f64,
        t_read: Option<f64>,
        tau: f64,
        beta: u32,
        lobes: Lobes,
    ) -> SimResult<Self> {
        let envelope = PulseEnvelope::new(self.amp_l, t_write, t_read, tau, beta)?;
        self.envelope_l = Some(DriveEnvelope { envelope, lobes });
        Ok(self)
    }

    pub fn with_pulse_r(
        mut self,
        t_write: f64,
        t_read: Option<f64>,
        tau: f64,
        beta: u32,
        lobes: Lobes,
    ) -> SimResult<Self> {
        let envelope = PulseEnvelope::new(self.amp_r, t_write, t_read, tau, beta)?;
        self.envelope_r = Some(DriveEnvelope { envelope, lobes });
        Ok(self)
    }

    pub fn with_pulse_p(mut self, t_write: f64, tau: f64) -> SimResult<Self> {
        let envelope = PulseEnvelope::new(self.amp_p, t_write, None, tau, 2)?;
        self.envelope_p = Some(DriveEnvelope { envelope, lobes: Lobes::Write });
        Ok(self)
    }

    /// Same drives with every envelope removed (peak amplitudes held constant).
    pub fn constant(&self) -> Self {
        Self { envelope_l: None, envelope_r: None, envelope_p: None, ..*self }
    }

    /// Replace the probe amplitude, keeping the power consistent.
    pub fn with_probe_amplitude(mut self, params: &SystemParams, amp_p: f64) -> Self {
        self.amp_p = amp_p;
        self.power_p = amp_p * amp_p * HBAR * self.omega_p / (2.0 * params.kappa1);
        if let Some(e) = self.envelope_p.as_mut() {
            e.envelope.peak_amplitude = amp_p;
        }
        self
    }

    /// Switch cavity-2 drive off entirely.
    pub fn without_r(mut self) -> Self {
        self.power_r = 0.0;
        self.amp_r = 0.0;
        self.envelope_r = None;
        self
    }

    /// Switch cavity-1 coupling drive off entirely.
    pub fn without_l(mut self) -> Self {
        self.power_l = 0.0;
        self.amp_l = 0.0;
        self.envelope_l = None;
        self
    }
}

/// `√(2κP/(ħω))`, the input amplitude of a laser of power `power` at `omega`
/// coupled through a port with amplitude decay rate `kappa`.
pub fn drive_amplitude(kappa: f64, power: f64, omega: f64) -> SimResult<f64> {
    if !(kappa.is_finite() && power.is_finite() && omega.is_finite()) {
        return Err(SimError::invalid("drive amplitude inputs must be finite"));
    }
    if power < 0.0 || kappa <= 0.0 || omega <= 0.0 {
        return Err(SimError::invalid(format!(
            "drive amplitude needs kappa > 0, omega > 0, power >= 0 (got {kappa:e}, {omega:e}, {power:e})"
        )));
    }
    Ok((2.0 * kappa * power / (HBAR * omega)).sqrt())
}

/// Single-photon optomechanical coupling `(ω_i/L_i)·√(ħ/(2mω_m))` of a cavity of
/// length `length` closed by a mirror of mass `mass`.
pub fn coupling_from_geometry(omega_i: f64, length: f64, mass: f64, omega_m: f64) -> SimResult<f64> {
    for (name, v) in [("omega_i", omega_i), ("length", length), ("mass", mass), ("omega_m", omega_m)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(SimError::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(omega_i / length * (HBAR / (2.0 * mass * omega_m)).sqrt())
}

/// Angular spectral width `0.44/τ_p` of a transform-limited Gaussian pulse.
pub fn pulse_bandwidth(tau_p: f64) -> SimResult<f64> {
    if !(tau_p.is_finite() && tau_p > 0.0) {
        return Err(SimError::invalid(format!("pulse width must be positive, got {tau_p}")));
    }
    Ok(0.44 / tau_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn zero_power_gives_zero_amplitude() {
        assert_eq!(drive_amplitude(TAU * 1.5e6, 0.0, 2.4e15).unwrap(), 0.0);
    }

    #[test]
    fn paper_coupling_laser_amplitude() {
        // hand evaluation: 2κP = 2·(2π·1.5e6)·1e-3 = 1.884956e4;
        // ħω = 1.0545718e-34·2π·c/775e-9 = 2.563187e-19 J; ratio 7.35396e22, sqrt 2.711819e11
        let omega = 2.0 * PI * SPEED_OF_LIGHT / 775e-9;
        let e = drive_amplitude(TAU * 1.5e6, 1e-3, omega).unwrap();
        assert!((e / 2.7118e11 - 1.0).abs() < 1e-4, "{e:e}");
    }

    #[test]
    fn amplitude_square_root_law() {
        let a = drive_amplitude(9.4e6, 1e-3, 2.4e15).unwrap();
        let b = drive_amplitude(9.4e6, 2e-3, 2.4e15).unwrap();
        assert!((b / a / 2f64.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_rejects_non_finite() {
        assert!(drive_amplitude(f64::NAN, 1e-3, 2.4e15).is_err());
        assert!(drive_amplitude(9.4e6, f64::INFINITY, 2.4e15).is_err());
    }

    #[test]
    fn geometry_coupling_scaling() {
        let g = coupling_from_geometry(2.43e15, 1e-3, 20e-12, TAU * 51.8e6).unwrap();
        let g_long = coupling_from_geometry(2.43e15, 2e-3, 20e-12, TAU * 51.8e6).unwrap();
        let g_heavy = coupling_from_geometry(2.43e15, 1e-3, 80e-12, TAU * 51.8e6).unwrap();
        assert!((g_long / g - 0.5).abs() < 1e-14);
        assert!((g_heavy / g - 0.5).abs() < 1e-14);
        // ħ/(2mω_m) = 1.0545718e-34/(2·2e-11·3.2546900e8) = 8.10039e-33, sqrt = 9.00022e-17,
        // times ω/L = 2.43e18 gives 218.705 rad/s
        assert!((g / 218.705 - 1.0).abs() < 1e-5, "{g}");
        assert!(coupling_from_geometry(2.43e15, 0.0, 20e-12, 1.0).is_err());
    }

    #[test]
    fn bandwidth_matches_quoted_values() {
        let w15 = pulse_bandwidth(0.15e-6).unwrap() / TAU / 1e6;
        let w30 = pulse_bandwidth(0.3e-6).unwrap() / TAU / 1e6;
        assert!((w15 - 0.47).abs() < 0.005, "{w15}");
        assert!((w30 - 0.23).abs() < 0.005, "{w30}");
        assert!((pulse_bandwidth(0.6e-6).unwrap() * 2.0 - pulse_bandwidth(0.3e-6).unwrap()).abs() < 1e-6);
        assert!(pulse_bandwidth(0.0).is_err());
    }

    #[test]
    fn envelope_shapes() {
        let g = PulseEnvelope::new(3.0, 1.0, Some(5.0), 0.5, 2).unwrap();
        let s = PulseEnvelope::new(3.0, 1.0, Some(5.0), 0.5, 4).unwrap();
        assert_eq!(g.value(1.0, Lobes::Write), 3.0);
        assert!((g.value(1.5, Lobes::Write) - 3.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((s.value(1.5, Lobes::Write) - 3.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(g.value(1.0, Lobes::Read), 3.0 * (-0.5 * 64.0f64).exp());
        assert!(PulseEnvelope::new(1.0, 0.0, None, 1.0, 3).is_err());
        assert!(PulseEnvelope::new(1.0, 0.0, None, -1.0, 2).is_err());
    }

    #[test]
    fn lobe_energy_time_closed_form() {
        // Gaussian: ∫exp(-t²/τ²) = √π τ
        let g = PulseEnvelope::new(1.0, 0.0, None, 0.3, 2).unwrap();
        assert!((g.lobe_energy_time() / (PI.sqrt() * 0.3) - 1.0).abs() < 1e-12);
        // β = 4 against a midpoint sum
        let s = PulseEnvelope::new(1.0, 0.0, None, 0.3, 4).unwrap();
        let n = 200_000;
        let h = 6.0 / n as f64;
        let sum: f64 = (0..n).map(|k| s.shape(-3.0 + (k as f64 + 0.5) * h, Lobes::Write).powi(2)).sum::<f64>() * h;
        assert!((s.lobe_energy_time() / sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn delta_invariant_checked() {
        let p = SystemParams {
            mass: 1e-11,
            omega_m: 3e8,
            gamma_m: 2e5,
            kappa1: 9e6,
            kappa2: 9e6,
            g1: 1e4,
            g2: 1e4,
            omega1: 2.4e15,
            omega2: 2.4e15,
        };
        let mut d = DriveConfig::new(&p, 2.4e15, 2.4e15, 3e8, 1e-3, 0.0, 1e-9).unwrap();
        assert!(d.check_delta().is_ok());
        d.delta += 1e3;
        assert!(d.check_delta().is_err());
    }
}
