//! The 20 ng, 51.8 MHz mirror device used for the memory and transduction
//! runs, with both cavities at 775 nm.

use std::f64::consts::{PI, TAU};

use crate::params::{DriveConfig, SystemParams, SPEED_OF_LIGHT};

pub const MASS_KG: f64 = 20e-12;
pub const OMEGA_M: f64 = TAU * 51.8e6;
pub const GAMMA_M: f64 = TAU * 41e3;
pub const KAPPA: f64 = TAU * 1.5e6;
pub const G: f64 = TAU * 1.55e3;
pub const WAVELENGTH_M: f64 = 775e-9;
/// Default probe power, 10⁻⁴ of a 1 mW coupling laser.
pub const PROBE_POWER_W: f64 = 1e-7;

pub fn laser_omega() -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / WAVELENGTH_M
}

/// Both cavities red-detuned by `ω_m` from their (equal-frequency) lasers.
pub fn reference_device() -> SystemParams {
    SystemParams {
        mass: MASS_KG,
        omega_m: OMEGA_M,
        gamma_m: GAMMA_M,
        kappa1: KAPPA,
        kappa2: KAPPA,
        g1: G,
        g2: G,
        omega1: laser_omega() + OMEGA_M,
        omega2: laser_omega() + OMEGA_M,
    }
}

/// Constant drives with the probe on the cavity-1 resonance (`δ = ω_m`).
pub fn reference_drives(params: &SystemParams, power_l: f64, power_r: f64) -> DriveConfig {
    DriveConfig::new(params, laser_omega(), laser_omega(), OMEGA_M, power_l, power_r, PROBE_POWER_W)
        .expect("reference drives are valid")
}
