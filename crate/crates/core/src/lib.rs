//! Semiclassical simulation of single- and double-cavity optomechanical systems.
//!
//! The crate covers the analytic steady state of a two-cavity device sharing one
//! doubly-reflective mechanical mirror, the stability of its operating point, a
//! harmonic-balance envelope integrator for pulsed write/read protocols, and a
//! full nonlinear integrator used to cross-check the envelope reduction.
//!
//! All internal quantities are angular (rad/s). Configuration files quote
//! ordinary frequencies in Hz and are converted on load, see [`config`].

pub mod config;
pub mod dynamics;
pub mod error;
pub mod ode;
pub mod oracle;
pub mod params;
pub mod presets;
pub mod protocols;
pub mod report;
pub mod stability;
pub mod steady_state;

pub use num_complex::Complex64 as C64;

pub use dynamics::{
    demodulate, envelope, envelope_derivatives, integrate_rk4, integrate_rk4_observed, simulate_full, Demodulated,
    DerivedPowers, EnvelopeState, FullSeries, FullState, Trajectory, Window,
};
pub use error::{SimError, SimResult};
pub use params::{
    coupling_from_geometry, drive_amplitude, pulse_bandwidth, DriveConfig, DriveEnvelope, Lobes, PulseEnvelope,
    SystemParams, HBAR, SPEED_OF_LIGHT,
};
pub use protocols::{
    efficiency_scan, run_memory, run_transduction, DetuningCase, MemoryResult, Numerics, PulseProtocol, ScanMetrics,
    ScanPoint, ScanProtocol, ScanRow, TransductionResult,
};
pub use stability::{is_stable_eigen, is_stable_routh_hurwitz, linearize, LinearizedSystem, Verdict};
pub use steady_state::{
    denominator, eit_width, output_fields, probe_response, solve_operating_point, spectrum_sweep, OperatingPoint,
    OutputComponents, ProbeResponse, SweepRow,
};
