//! CSV rendering. All numbers use `{:.8e}` (nine significant digits) and rows
//! follow the input order, so identical inputs give identical bytes.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::dynamics::{EnvelopeState, Trajectory};
use crate::protocols::{MemoryResult, ScanRow, TransductionResult};
use crate::stability::{EigenReport, RouthReport};
use crate::steady_state::{OperatingPoint, SweepRow};

/// Hex characters of the config digest used in output file names.
pub const HASH_PREFIX_LEN: usize = 12;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

fn push_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(&f);
        first = false;
    }
    out.push('\n');
}

/// Leading hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(digest)[..HASH_PREFIX_LEN].to_string()
}

/// `<stem>_<hash>.csv`
pub fn output_file_name(stem: &str, hash: &str) -> String {
    format!("{stem}_{hash}.csv")
}

pub const SWEEP_HEADER: &str = "delta_rad_s,re_qplus,im_qplus,re_d,im_d,re_a1p,im_a1p,re_a1m,im_a1m,re_a2p,im_a2p,re_a2m,im_a2m,p_out_left_probe_norm,p_out_right_as_norm,p_out_right_s_norm";

/// Steady-state sweep; failed rows are written as `NaN`.
pub fn sweep_csv(rows: &[SweepRow], amp_p: f64) -> String {
    let mut out = String::with_capacity(rows.len() * 256);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let mut fields = vec![fmt_num(row.delta)];
        match &row.result {
            Ok((r, o)) => {
                for z in [r.q_plus, r.d, r.a1_plus, r.a1_minus, r.a2_plus, r.a2_minus] {
                    fields.push(fmt_num(z.re));
                    fields.push(fmt_num(z.im));
                }
                fields.push(fmt_num(o.left_probe_norm(amp_p)));
                fields.push(fmt_num(o.right_antistokes_norm(amp_p)));
                fields.push(fmt_num(o.right_stokes_norm(amp_p)));
            }
            Err(_) => fields.extend(std::iter::repeat_n(fmt_num(f64::NAN), 15)),
        }
        push_row(&mut out, fields);
    }
    out
}

pub fn trajectory_header() -> String {
    let mut cols = vec!["t_s".to_string()];
    for name in EnvelopeState::FIELD_NAMES {
        cols.push(format!("re_{name}"));
        cols.push(format!("im_{name}"));
    }
    cols.extend(["p_left_norm", "p_phonon_norm", "p_stokes_norm", "p_antistokes_norm"].map(String::from));
    cols.join(",")
}

/// Trajectory rows, keeping every `stride`-th recorded sample.
pub fn trajectory_csv(traj: &Trajectory, stride: usize) -> String {
    let stride = stride.max(1);
    let mut out = String::with_capacity(traj.len() / stride * 400 + 512);
    out.push_str(&trajectory_header());
    out.push('\n');
    for k in (0..traj.len()).step_by(stride) {
        let mut fields = Vec::with_capacity(25);
        fields.push(fmt_num(traj.times[k]));
        for z in traj.states[k].components() {
            fields.push(fmt_num(z.re));
            fields.push(fmt_num(z.im));
        }
        let d = &traj.derived[k];
        fields.extend([d.left_output, d.phonon, d.stokes, d.antistokes].map(fmt_num));
        push_row(&mut out, fields);
    }
    out
}

/// Downsampled series for plotting: time and the four derived powers.
pub fn plot_data_csv(traj: &Trajectory, max_rows: usize) -> String {
    let stride = traj.len().div_ceil(max_rows.max(1)).max(1);
    let mut out = String::from("t_s,p_left_norm,p_phonon_norm,p_stokes_norm,p_antistokes_norm\n");
    for k in (0..traj.len()).step_by(stride) {
        let d = &traj.derived[k];
        push_row(&mut out, [traj.times[k], d.left_output, d.phonon, d.stokes, d.antistokes].map(fmt_num));
    }
    out
}

/// Steady-state sweep reduced to the three normalized output powers.
pub fn sweep_plot_csv(rows: &[SweepRow], amp_p: f64) -> String {
    let mut out = String::from("delta_rad_s,p_out_left_probe_norm,p_out_right_as_norm,p_out_right_s_norm\n");
    for row in rows {
        let vals = match &row.result {
            Ok((_, o)) => [o.left_probe_norm(amp_p), o.right_antistokes_norm(amp_p), o.right_stokes_norm(amp_p)],
            Err(_) => [f64::NAN; 3],
        };
        push_row(&mut out, [row.delta, vals[0], vals[1], vals[2]].map(fmt_num));
    }
    out
}

/// One-row stability summary with the operating point and all six eigenvalues.
pub fn stability_csv(op: &OperatingPoint, routh: &RouthReport, eig: &EigenReport) -> String {
    let mut out = String::from("verdict,routh_margin,eigen_stable,max_real_rad_s,q0,delta1_rad_s,delta2_rad_s");
    for k in 1..=eig.eigenvalues.len() {
        let _ = write!(out, ",re_lambda{k},im_lambda{k}");
    }
    out.push('\n');
    let mut fields = vec![
        routh.verdict.to_string(),
        fmt_num(routh.margin),
        eig.stable.to_string(),
        fmt_num(eig.max_real),
        fmt_num(op.q0),
        fmt_num(op.delta1),
        fmt_num(op.delta2),
    ];
    for z in &eig.eigenvalues {
        fields.push(fmt_num(z.re));
        fields.push(fmt_num(z.im));
    }
    push_row(&mut out, fields);
    out
}

pub fn memory_summary_csv(r: &MemoryResult) -> String {
    let mut out = String::from("retrieval_efficiency,storage_peak,t_write_s,t_read_s,read_start_s,read_end_s,dt_s\n");
    push_row(
        &mut out,
        [r.retrieval_efficiency, r.storage_peak, r.t_write, r.t_read, r.read_window.0, r.read_window.1, r.dt]
            .map(fmt_num),
    );
    out
}

pub fn transduction_summary_csv(results: &[TransductionResult]) -> String {
    let mut out = String::from(
        "case,stokes_peak,antistokes_peak,antistokes_over_stokes,read_phonon_peak,storage_peak,stokes_freq_rad_s,antistokes_freq_rad_s,dt_s\n",
    );
    for r in results {
        let mut fields = vec![r.case.to_string()];
        fields.extend(
            [
                r.stokes_peak,
                r.antistokes_peak,
                r.antistokes_peak / r.stokes_peak,
                r.read_phonon_peak,
                r.storage_peak,
                r.stokes_frequency,
                r.antistokes_frequency,
                r.dt,
            ]
            .map(fmt_num),
        );
        push_row(&mut out, fields);
    }
    out
}

/// Scan table; failing rows carry `error` and a sanitized message.
pub fn scan_csv(key: &str, rows: &[ScanRow]) -> String {
    let mut out = format!("{key},status,retrieval_efficiency,storage_peak,stokes_peak,antistokes_peak,message\n");
    let opt = |x: Option<f64>| x.map_or_else(String::new, fmt_num);
    for row in rows {
        let mut fields = vec![fmt_num(row.value)];
        match &row.result {
            Ok(m) => fields.extend([
                "ok".to_string(),
                opt(m.retrieval_efficiency),
                fmt_num(m.storage_peak),
                opt(m.stokes_peak),
                opt(m.antistokes_peak),
                String::new(),
            ]),
            Err(e) => {
                fields.push("error".to_string());
                fields.extend(std::iter::repeat_n(String::new(), 4));
                fields.push(sanitize(&e.to_string()));
            }
        }
        push_row(&mut out, fields);
    }
    out
}

/// Makes free text safe for a single CSV field.
pub fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c == ',' || c == '\n' || c == '"' { ';' } else { c }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{reference_device, reference_drives};
    use crate::steady_state::spectrum_sweep;

    #[test]
    fn number_format_has_nine_digits() {
        assert_eq!(fmt_num(1.0), "1.00000000e0");
        assert_eq!(fmt_num(-2.5e-7), "-2.50000000e-7");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01");
        assert_eq!(output_file_name("memory", "ba7816bf8f01"), "memory_ba7816bf8f01.csv");
    }

    #[test]
    fn sweep_columns() {
        let p = reference_device();
        let d = reference_drives(&p, 1e-3, 0.0);
        let rows = spectrum_sweep(&p, &d, (0.9 * p.omega_m, 1.1 * p.omega_m), 3).unwrap();
        let csv = sweep_csv(&rows, d.amp_p);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split(',').count(), 16);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 16));
    }

    #[test]
    fn trajectory_header_columns() {
        assert_eq!(trajectory_header().split(',').count(), 1 + 20 + 4);
    }
}
