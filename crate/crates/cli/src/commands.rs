use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use omsim_core::config::{ConfigError, RunConfig};
use omsim_core::dynamics::full::default_full_dt;
use omsim_core::oracle::verify_suite;
use omsim_core::protocols::{efficiency_scan, run_memory, run_transduction, ScanPoint};
use omsim_core::report::{self, config_hash, fmt_num, output_file_name, sanitize};
use omsim_core::stability::eigen_report;
use omsim_core::{is_stable_routh_hurwitz, linearize, solve_operating_point, spectrum_sweep, SimError};

use crate::{Cli, Command};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_UNSTABLE: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;
pub const EXIT_VERIFY: u8 = 5;

/// Rows kept in `--plot-data` files.
const PLOT_ROWS: usize = 2000;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub line: Option<usize>,
    pub key: Option<String>,
}

impl Failure {
    /// `error code=<n> kind=<k> [line=<n>] [key=<k>] message="<text>"`
    pub fn machine_line(&self) -> String {
        let mut s = format!("error code={} kind={}", self.code, self.kind);
        if let Some(l) = self.line {
            s.push_str(&format!(" line={l}"));
        }
        if let Some(k) = &self.key {
            s.push_str(&format!(" key={k}"));
        }
        s.push_str(&format!(" message=\"{}\"", self.message.replace('"', "'")));
        s
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: EXIT_CONFIG, kind: "io", message: format!("{}: {e}", path.display()), line: None, key: None }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: EXIT_CONFIG,
            kind: e.kind(),
            line: e.line(),
            key: e.key().map(String::from),
            message: e.to_string(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let (code, kind) = match &e {
            SimError::InvalidParameter(_) => (EXIT_CONFIG, "invalid_parameter"),
            SimError::PossiblyBistable { .. } => (EXIT_UNSTABLE, "possibly_bistable"),
            SimError::Unstable { .. } => (EXIT_UNSTABLE, "unstable"),
            SimError::Diverged { .. } => (EXIT_DIVERGED, "diverged"),
            SimError::EigenNonConvergence => (EXIT_DIVERGED, "eigen_nonconvergence"),
        };
        Failure { code, kind, message: e.to_string(), line: None, key: None }
    }
}

struct Output {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Output {
    fn write(&mut self, stem: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(output_file_name(stem, &self.hash));
        fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let Some(path) = &cli.config else {
        return Err(Failure {
            code: EXIT_CONFIG,
            kind: "missing_config",
            message: "--config <path> is required".into(),
            line: None,
            key: None,
        });
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut overrides = cli.overrides.clone();
    if let Some(dt) = &cli.dt {
        overrides.push(format!("dt_s={dt}"));
    }
    Ok(RunConfig::from_text_with_overrides(&text, &overrides)?)
}

fn scan_threads() -> Result<Option<usize>, Failure> {
    parse_threads(std::env::var("OMSIM_THREADS").ok().as_deref())
}

fn parse_threads(value: Option<&str>) -> Result<Option<usize>, Failure> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure {
                code: EXIT_CONFIG,
                kind: "invalid_env",
                message: format!("OMSIM_THREADS must be a positive integer, got '{v}'"),
                line: None,
                key: Some("OMSIM_THREADS".into()),
            }),
        },
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let resolved = cfg.resolved_text();
    fs::create_dir_all(&cli.out).map_err(|e| Failure::io(&cli.out, e))?;
    let resolved_path = cli.out.join("resolved_config");
    fs::write(&resolved_path, &resolved).map_err(|e| Failure::io(&resolved_path, e))?;
    let mut out = Output { dir: cli.out.clone(), hash: config_hash(&resolved), written: Vec::new() };

    let result = dispatch(cli.command, &cfg, cli.plot_data, &mut out);
    for p in &out.written {
        println!("wrote {}", p.display());
    }
    result
}

fn dispatch(cmd: Command, cfg: &RunConfig, plot: bool, out: &mut Output) -> Result<(), Failure> {
    let params = cfg.system_params();
    params.validate()?;
    let drives = cfg.drives()?;
    let name = cmd.name();
    match cmd {
        Command::Spectrum => {
            let op = solve_operating_point(&params, &drives)?;
            let routh = is_stable_routh_hurwitz(&linearize(&params, &op));
            if !routh.verdict.is_stable() {
                warn!("operating point is {}; the steady-state spectrum is not physical", routh.verdict);
            }
            let rows = spectrum_sweep(&params, &drives, cfg.sweep_range(), cfg.sweep_points)?;
            out.write(name, &report::sweep_csv(&rows, drives.amp_p))?;
            if plot {
                out.write("spectrum_plot", &report::sweep_plot_csv(&rows, drives.amp_p))?;
            }
        }
        Command::Stability => {
            let op = solve_operating_point(&params, &drives)?;
            let sys = linearize(&params, &op);
            let routh = is_stable_routh_hurwitz(&sys);
            let eig = eigen_report(&sys)?;
            println!("verdict {} (eigenvalues: {})", routh.verdict, if eig.stable { "stable" } else { "not stable" });
            out.write(name, &report::stability_csv(&op, &routh, &eig))?;
        }
        Command::Memory => {
            let r = run_memory(&params, &drives, &cfg.protocol(), &cfg.numerics())?;
            println!("retrieval_efficiency {}", fmt_num(r.retrieval_efficiency));
            out.write(name, &report::memory_summary_csv(&r))?;
            out.write("memory_trajectory", &report::trajectory_csv(&r.trajectory, 1))?;
            if plot {
                out.write("memory_plot", &report::plot_data_csv(&r.trajectory, PLOT_ROWS))?;
            }
        }
        Command::Transduce => {
            let mut results = Vec::new();
            let mut first_failure = None;
            for case in cfg.transduce_case.cases() {
                match run_transduction(&params, &drives, &cfg.protocol(), case, &cfg.numerics()) {
                    Ok(r) => {
                        out.write(&format!("transduce_{case}_trajectory"), &report::trajectory_csv(&r.trajectory, 1))?;
                        if plot {
                            out.write(
                                &format!("transduce_{case}_plot"),
                                &report::plot_data_csv(&r.trajectory, PLOT_ROWS),
                            )?;
                        }
                        results.push(r);
                    }
                    Err(e) => {
                        eprintln!("{case}: {e}");
                        first_failure.get_or_insert(e);
                    }
                }
            }
            if !results.is_empty() {
                out.write(name, &report::transduction_summary_csv(&results))?;
            }
            if let Some(e) = first_failure {
                return Err(e.into());
            }
        }
        Command::Scan => {
            let Some(key) = cfg.scan_key.clone() else {
                return Err(Failure {
                    code: EXIT_CONFIG,
                    kind: "missing_key",
                    message: "scan needs scan_key and scan_values".into(),
                    line: None,
                    key: Some("scan_key".into()),
                });
            };
            let build = |value: f64| -> Result<ScanPoint, SimError> {
                let c = cfg
                    .with_value(&key, &format!("{value:e}"))
                    .map_err(|e| SimError::InvalidParameter(e.to_string()))?;
                Ok(ScanPoint {
                    params: c.system_params(),
                    drives: c.drives()?,
                    protocol: c.protocol(),
                    numerics: c.numerics(),
                })
            };
            let rows = efficiency_scan(cfg.scan_protocol, &cfg.scan_values, build, scan_threads()?)?;
            out.write(name, &report::scan_csv(&key, &rows))?;
        }
        Command::Verify => {
            let full_dt = cfg.full_dt_s.unwrap_or_else(|| default_full_dt(drives.delta));
            let checks = verify_suite(&params, &drives, &cfg.protocol(), Some(full_dt), cfg.verify_draws, cfg.seed);
            let mut csv = String::from("check,passed,metric,tolerance,detail\n");
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.name,
                    c.passed,
                    fmt_num(c.metric),
                    fmt_num(c.tolerance),
                    sanitize(&c.detail)
                ));
            }
            out.write(name, &csv)?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            if !failed.is_empty() {
                return Err(Failure {
                    code: EXIT_VERIFY,
                    kind: "verify_failed",
                    message: format!("failed checks: {}", failed.join(" ")),
                    line: None,
                    key: None,
                });
            }
        }
    }
    Ok(())
}
