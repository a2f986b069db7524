//! Linear stability of the operating point.
//!
//! The semiclassical equations are linearized about the zeroth-order steady
//! state in the real coordinates `(Q, P, Re a1, Im a1, Re a2, Im a2)`. The
//! radiation-pressure force is `g1|a1|² − g2|a2|²`: the shared mirror
//! lengthens one cavity while it shortens the other, which is what makes the
//! analytic steady state a stationary solution of the dynamics.
//!
//! Two independent verdicts are offered: the Routh–Hurwitz test on the
//! characteristic polynomial (built by Householder reduction to Hessenberg
//! form and the Hessenberg determinant recurrence) and a Schur-based
//! eigenvalue computation.

use std::fmt;

use nalgebra::{Matrix6, Schur};
use num_complex::Complex64 as C64;

use crate::error::{SimError, SimResult};
use crate::params::SystemParams;
use crate::steady_state::OperatingPoint;

/// Eigenvalue verdict threshold: max Re λ < −1e-9·ω_m.
pub const EIGEN_MARGIN: f64 = 1e-9;
/// Relative epsilon substituted for an isolated zero in the Routh first column.
const ROUTH_EPSILON: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn is_stable(self) -> bool {
        self == Verdict::Stable
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

/// Jacobian of the probe-free dynamics at an operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    pub matrix: Matrix6<f64>,
    pub omega_m: f64,
    pub operating_point: OperatingPoint,
}

pub fn linearize(params: &SystemParams, op: &OperatingPoint) -> LinearizedSystem {
    let (g1, g2) = (params.g1, params.g2);
    let (k1, k2) = (params.kappa1, params.kappa2);
    let (d1, d2) = (op.delta1, op.delta2);
    let (x1, y1) = (op.a10.re, op.a10.im);
    let (x2, y2) = (op.a20.re, op.a20.im);
    let wm = params.omega_m;
    #[rustfmt::skip]
    let matrix = Matrix6::new(
        0.0,       wm,              0.0,       0.0,       0.0,        0.0,
        -wm,       -params.gamma_m, 2.0*g1*x1, 2.0*g1*y1, -2.0*g2*x2, -2.0*g2*y2,
        -g1 * y1,  0.0,             -k1,       d1,        0.0,        0.0,
        g1 * x1,   0.0,             -d1,       -k1,       0.0,        0.0,
        g2 * y2,   0.0,             0.0,       0.0,       -k2,        d2,
        -g2 * x2,  0.0,             0.0,       0.0,       -d2,        -k2,
    );
    LinearizedSystem { matrix, omega_m: wm, operating_point: *op }
}

impl LinearizedSystem {
    /// Monic characteristic polynomial `det(sI − A)`, coefficients in
    /// descending powers (`c[0] = 1`).
    pub fn characteristic_polynomial(&self) -> [f64; 7] {
        let scaled = scaled_charpoly(&self.matrix, self.omega_m);
        let mut c = [0.0; 7];
        for (k, v) in scaled.iter().enumerate() {
            c[k] = v * self.omega_m.powi(k as i32);
        }
        c
    }
}

/// Characteristic polynomial of `A/scale`.
fn scaled_charpoly(a: &Matrix6<f64>, scale: f64) -> [f64; 7] {
    let mut h = [[0.0_f64; 6]; 6];
    for (i, row) in h.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[(i, j)] / scale;
        }
    }
    householder_hessenberg(&mut h);
    hessenberg_charpoly(&h)
}

/// In-place orthogonal similarity reduction to upper Hessenberg form.
fn householder_hessenberg(h: &mut [[f64; 6]; 6]) {
    const N: usize = 6;
    for k in 0..N - 2 {
        let norm = (k + 1..N).map(|i| h[i][k] * h[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0_f64; N];
        v[k + 1] = h[k + 1][k] - alpha;
        for i in k + 2..N {
            v[i] = h[i][k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H ← (I − 2vvᵀ/vᵀv) H (I − 2vvᵀ/vᵀv)
        for j in 0..N {
            let s: f64 = (k + 1..N).map(|i| v[i] * h[i][j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k + 1..N {
                h[i][j] -= s * v[i];
            }
        }
        for row in h.iter_mut() {
            let s: f64 = (k + 1..N).map(|j| row[j] * v[j]).sum::<f64>() * 2.0 / vnorm2;
            for j in k + 1..N {
                row[j] -= s * v[j];
            }
        }
        h[k + 1][k] = alpha;
        for row in h.iter_mut().skip(k + 2) {
            row[k] = 0.0;
        }
    }
}

/// Determinant recurrence for `det(xI − H)` of an upper Hessenberg matrix.
fn hessenberg_charpoly(h: &[[f64; 6]; 6]) -> [f64; 7] {
    const N: usize = 6;
    // p[k] holds det of the leading k×k block, ascending coefficients.
    let mut p: Vec<Vec<f64>> = vec![vec![1.0]];
    for k in 1..=N {
        let prev = &p[k - 1];
        let mut next = vec![0.0; k + 1];
        for (i, c) in prev.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= h[k - 1][k - 1] * c;
        }
        let mut subdiag = 1.0;
        for i in (1..k).rev() {
            subdiag *= h[i][i - 1];
            let coef = h[i - 1][k - 1] * subdiag;
            for (j, c) in p[i - 1].iter().enumerate() {
                next[j] -= coef * c;
            }
        }
        p.push(next);
    }
    let asc = &p[N];
    let mut desc = [0.0; 7];
    for (k, v) in desc.iter_mut().enumerate() {
        *v = asc[N - k];
    }
    desc
}

/// Routh–Hurwitz outcome on the characteristic polynomial of `A/ω_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RouthReport {
    pub verdict: Verdict,
    /// Smallest first-column entry (dimensionless, in units of ω_m).
    pub margin: f64,
    pub first_column: Vec<f64>,
}

pub fn is_stable_routh_hurwitz(sys: &LinearizedSystem) -> RouthReport {
    let coeffs = scaled_charpoly(&sys.matrix, sys.omega_m);
    routh(&coeffs)
}

/// Routh array of a polynomial given in descending powers.
pub fn routh(coeffs: &[f64]) -> RouthReport {
    let sign = if coeffs[0] < 0.0 { -1.0 } else { 1.0 };
    let c: Vec<f64> = coeffs.iter().map(|v| v * sign).collect();
    let n = c.len() - 1;
    let width = n / 2 + 1;
    let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; width], vec![0.0; width]];
    for (k, v) in c.iter().enumerate() {
        rows[k % 2][k / 2] = *v;
    }
    let mut marginal = false;
    for r in 2..=n {
        let mut pivot = rows[r - 1][0];
        if pivot == 0.0 {
            if rows[r - 1].iter().all(|&v| v == 0.0) {
                marginal = true;
                break;
            }
            pivot = ROUTH_EPSILON * scale;
            rows[r - 1][0] = pivot;
        }
        let (upper, lower) = (&rows[r - 2], &rows[r - 1]);
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            next[j] = (pivot * upper[j + 1] - upper[0] * lower[j + 1]) / pivot;
        }
        rows.push(next);
    }
    let first_column: Vec<f64> = rows.iter().take(n + 1).map(|r| r[0]).collect();
    let margin = first_column.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if marginal || first_column.len() < n + 1 {
        Verdict::Marginal
    } else if first_column.iter().all(|&v| v > 0.0) {
        Verdict::Stable
    } else if first_column.iter().any(|&v| v < 0.0) {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    };
    RouthReport { verdict, margin, first_column }
}

/// Eigenvalues and the derived verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Sorted by descending real part, then imaginary part.
    pub eigenvalues: Vec<C64>,
    pub max_real: f64,
    pub stable: bool,
}

pub fn eigen_report(sys: &LinearizedSystem) -> SimResult<EigenReport> {
    let scaled = sys.matrix / sys.omega_m;
    let schur = Schur::try_new(scaled, f64::EPSILON, 10_000).ok_or(SimError::EigenNonConvergence)?;
    let mut eigenvalues: Vec<C64> =
        schur.complex_eigenvalues().iter().map(|z| C64::new(z.re * sys.omega_m, z.im * sys.omega_m)).collect();
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SimError::EigenNonConvergence);
    }
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let max_real = eigenvalues[0].re;
    Ok(EigenReport { eigenvalues, max_real, stable: max_real < -EIGEN_MARGIN * sys.omega_m })
}

/// True iff every eigenvalue has real part below `−1e-9·ω_m`.
pub fn is_stable_eigen(sys: &LinearizedSystem) -> SimResult<bool> {
    eigen_report(sys).map(|r| r.stable)
}
