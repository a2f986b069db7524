//! Sliding-window demodulation of a sampled signal into its `e^{0}`,
//! `e^{-iδt}` and `e^{+iδt}` components.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;

use crate::error::{SimError, SimResult};

/// Smallest window accepted, in beat periods.
pub const MIN_WINDOW_PERIODS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Boxcar,
    Hann,
}

impl Window {
    fn weight(self, x: f64) -> f64 {
        // x in [-1/2, 1/2]
        match self {
            Window::Boxcar => 1.0,
            Window::Hann => 0.5 * (1.0 + (TAU * x).cos()),
        }
    }
}

/// Components of a demodulated signal, sampled at `times` (the window centres).
///
/// `plus` is the coefficient of `e^{-iδt}`, `minus` that of `e^{+iδt}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Demodulated {
    pub times: Vec<f64>,
    pub zero: Vec<C64>,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

/// Weighted sliding average of `x(s)·e^{inδs}` for `n ∈ {0, +1, −1}` over a
/// window of width `window` centred on each sample, using the trapezoid rule.
///
/// Samples must be uniformly spaced. Only centres whose window lies entirely
/// inside the record are returned.
pub fn demodulate(times: &[f64], values: &[C64], delta: f64, window: f64, shape: Window) -> SimResult<Demodulated> {
    if times.len() != values.len() {
        return Err(SimError::invalid("times and values differ in length"));
    }
    if times.len() < 3 {
        return Err(SimError::invalid("need at least three samples to demodulate"));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(SimError::invalid("demodulation needs a finite non-zero delta"));
    }
    let period = TAU / delta.abs();
    if !(window >= MIN_WINDOW_PERIODS * period * (1.0 - 1e-9)) {
        return Err(SimError::invalid(format!(
            "window {window:e} s is shorter than {MIN_WINDOW_PERIODS} periods of 2pi/delta = {period:e} s"
        )));
    }
    let h = times[1] - times[0];
    if !(h > 0.0) {
        return Err(SimError::invalid("sample times must increase"));
    }
    let uniform_tol = 1e-6 * h;
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > uniform_tol.max(1e-9 * w[1].abs())) {
        return Err(SimError::invalid("samples must be uniformly spaced"));
    }
    let half = (window / (2.0 * h)).round() as usize;
    if half == 0 || 2 * half >= times.len() {
        return Err(SimError::invalid("window is longer than the record"));
    }

    let weights: Vec<f64> = (0..=2 * half)
        .map(|j| {
            let trap = if j == 0 || j == 2 * half { 0.5 } else { 1.0 };
            let x = (j as f64 - half as f64) / (2 * half) as f64;
            trap * shape.weight(x)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let rot: Vec<C64> = times.iter().map(|&t| C64::from_polar(1.0, delta * t)).collect();

    let n_out = times.len() - 2 * half;
    let mut out = Demodulated {
        times: Vec::with_capacity(n_out),
        zero: Vec::with_capacity(n_out),
        plus: Vec::with_capacity(n_out),
        minus: Vec::with_capacity(n_out),
    };
    for c in half..times.len() - half {
        let (mut z, mut p, mut m) = (C64::default(), C64::default(), C64::default());
        for (j, w) in weights.iter().enumerate() {
            let k = c + j - half;
            let v = values[k] * *w;
            z += v;
            p += v * rot[k];
            m += v * rot[k].conj();
        }
        out.times.push(times[c]);
        out.zero.push(z / total);
        out.plus.push(p / total);
        out.minus.push(m / total);
    }
    Ok(out)
}

/// Window of `periods` whole beat periods.
pub fn periods(delta: f64, periods: f64) -> f64 {
    periods * 2.0 * PI / delta.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(n: usize, h: f64, delta: f64, a0: C64, ap: C64, am: C64) -> (Vec<f64>, Vec<C64>) {
        let t: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let x = t
            .iter()
            .map(|&s| a0 + ap * C64::from_polar(1.0, -delta * s) + am * C64::from_polar(1.0, delta * s))
            .collect();
        (t, x)
    }

    #[test]
    fn recovers_constant_components() {
        let delta = 2.0;
        let h = TAU / delta / 100.0;
        let (a0, ap, am) = (C64::new(1.0, -0.5), C64::new(0.3, 0.2), C64::new(-0.1, 0.05));
        let (t, x) = signal(2000, h, delta, a0, ap, am);
        for shape in [Window::Boxcar, Window::Hann] {
            let d = demodulate(&t, &x, delta, periods(delta, 4.0), shape).unwrap();
            assert_eq!(d.times.len(), 2000 - 400);
            for k in 0..d.times.len() {
                assert!((d.zero[k] - a0).norm() < 1e-12);
                assert!((d.plus[k] - ap).norm() < 1e-12);
                assert!((d.minus[k] - am).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn short_window_rejected() {
        let delta = 1.0;
        let (t, x) = signal(1000, 0.05, delta, C64::from(1.0), C64::default(), C64::default());
        assert!(demodulate(&t, &x, delta, periods(delta, 2.5), Window::Boxcar).is_err());
        assert!(demodulate(&t, &x, delta, periods(delta, 3.0), Window::Boxcar).is_ok());
    }
}
