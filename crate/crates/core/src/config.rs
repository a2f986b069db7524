//! Run configuration: a flat `key = value` file with `#` comments.
//!
//! Every dimensional key carries its unit as a suffix (`_hz`, `_s`, `_w`, `_m`,
//! `_kg`). Frequencies are ordinary frequencies and are multiplied by 2π on
//! use. Some keys accept `auto`, meaning a default derived from other keys at
//! run time. [`RunConfig::resolved_text`] writes every key back out in a
//! canonical form that parses to the same configuration.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::error::SimResult;
use crate::params::{DriveConfig, SystemParams, SPEED_OF_LIGHT};
use crate::protocols::{DetuningCase, Numerics, PulseProtocol, ScanProtocol, DEFAULT_DELAY_S, PADDING_WIDTHS};

const UNIT_SUFFIXES: [&str; 5] = ["_hz", "_kg", "_m", "_w", "_s"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Strictly positive number.
    Positive,
    /// Number `>= 0`.
    NonNegative,
    /// Any finite number.
    Real,
    /// Positive number or `auto`.
    AutoPositive,
    /// Any finite number or `auto`.
    AutoReal,
    /// Positive integer or `auto`.
    AutoCount,
    Count,
    Seed,
    Shape,
    Beta,
    Case,
    ScanKey,
    ScanValues,
    ScanProtocol,
}

impl Kind {
    fn is_scannable(self) -> bool {
        matches!(self, Kind::Positive | Kind::NonNegative | Kind::Real | Kind::AutoPositive | Kind::AutoReal)
    }
}

struct KeyDef {
    name: &'static str,
    kind: Kind,
    default: Option<&'static str>,
}

const fn req(name: &'static str, kind: Kind) -> KeyDef {
    KeyDef { name, kind, default: None }
}

const fn opt(name: &'static str, kind: Kind, default: &'static str) -> KeyDef {
    KeyDef { name, kind, default: Some(default) }
}

/// All recognised keys in canonical order.
const KEYS: &[KeyDef] = &[
    req("mass_kg", Kind::Positive),
    req("omega_m_hz", Kind::Positive),
    req("gamma_m_hz", Kind::Positive),
    req("kappa1_hz", Kind::Positive),
    req("kappa2_hz", Kind::Positive),
    req("g1_hz", Kind::NonNegative),
    req("g2_hz", Kind::NonNegative),
    req("lambda_l_m", Kind::Positive),
    opt("lambda_r_m", Kind::AutoPositive, "auto"),
    req("power_l_w", Kind::NonNegative),
    req("power_r_w", Kind::NonNegative),
    req("power_p_w", Kind::NonNegative),
    req("delta_hz", Kind::Real),
    req("detuning1_hz", Kind::Real),
    req("detuning2_hz", Kind::Real),
    opt("tau_p_s", Kind::Positive, "3e-7"),
    opt("tau_l_s", Kind::Positive, "3e-7"),
    opt("t_write_s", Kind::AutoReal, "auto"),
    opt("t_read_s", Kind::AutoReal, "auto"),
    opt("shape", Kind::Shape, "gaussian"),
    opt("beta", Kind::Beta, "auto"),
    opt("dt_s", Kind::AutoPositive, "auto"),
    opt("full_dt_s", Kind::AutoPositive, "auto"),
    opt("record_every", Kind::AutoCount, "auto"),
    opt("sweep_start_hz", Kind::AutoReal, "auto"),
    opt("sweep_stop_hz", Kind::AutoReal, "auto"),
    opt("sweep_points", Kind::Count, "401"),
    opt("transduce_case", Kind::Case, "all"),
    opt("scan_key", Kind::ScanKey, "none"),
    opt("scan_values", Kind::ScanValues, "none"),
    opt("scan_protocol", Kind::ScanProtocol, "memory"),
    opt("seed", Kind::Seed, "0"),
    opt("verify_draws", Kind::Count, "200"),
];

fn key_def(name: &str) -> Option<&'static KeyDef> {
    KEYS.iter().find(|k| k.name == name)
}

/// Names of all recognised keys in canonical order.
pub fn key_names() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|k| k.name)
}

/// Where a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Override => f.write_str("override"),
            Location::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("{location}: expected 'key = value', got '{text}'")]
    Syntax { location: Location, text: String },

    #[error("missing required key '{key}'")]
    Missing { key: String },

    #[error("{location}: unknown key '{key}'{}", suggestion.as_ref().map(|s| format!(" (did you mean '{s}'?)")).unwrap_or_default())]
    Unknown { key: String, location: Location, suggestion: Option<String> },

    #[error("{location}: key '{key}' has the wrong unit suffix, expected '{expected}'")]
    UnitMismatch { key: String, location: Location, expected: String },

    #[error("{location}: key '{key}' given more than once")]
    Duplicate { key: String, location: Location },

    #[error("{location}: cannot parse '{value}' for '{key}': {reason}")]
    Parse { key: String, location: Location, value: String, reason: String },

    #[error("{location}: invalid value for '{key}': {reason}")]
    Invalid { key: String, location: Location, reason: String },
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } | ConfigError::Syntax { .. } => None,
            ConfigError::Missing { key }
            | ConfigError::Unknown { key, .. }
            | ConfigError::UnitMismatch { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::Parse { key, .. }
            | ConfigError::Invalid { key, .. } => Some(key),
        }
    }

    /// Line number in the config file, when the error points at one.
    pub fn line(&self) -> Option<usize> {
        let loc = match self {
            ConfigError::Syntax { location, .. }
            | ConfigError::Unknown { location, .. }
            | ConfigError::UnitMismatch { location, .. }
            | ConfigError::Duplicate { location, .. }
            | ConfigError::Parse { location, .. }
            | ConfigError::Invalid { location, .. } => *location,
            _ => return None,
        };
        match loc {
            Location::Line(n) => Some(n),
            _ => None,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "io",
            ConfigError::Syntax { .. } => "syntax",
            ConfigError::Missing { .. } => "missing_key",
            ConfigError::Unknown { .. } => "unknown_key",
            ConfigError::UnitMismatch { .. } => "unit_suffix",
            ConfigError::Duplicate { .. } => "duplicate_key",
            ConfigError::Parse { .. } => "parse",
            ConfigError::Invalid { .. } => "invalid_value",
        }
    }
}

fn unknown_key(key: &str, location: Location) -> ConfigError {
    for s in KEYS {
        let Some(suffix) = UNIT_SUFFIXES.iter().find(|suf| s.name.ends_with(*suf)) else {
            continue;
        };
        let stem = &s.name[..s.name.len() - suffix.len()];
        let rest = key.strip_prefix(stem);
        let same_stem = match rest {
            Some("") => true,
            Some(r) => r.starts_with('_') && r.len() > 1 && !r[1..].contains('_'),
            None => false,
        };
        if same_stem {
            return ConfigError::UnitMismatch { key: key.to_string(), location, expected: s.name.to_string() };
        }
    }
    let suggestion = KEYS
        .iter()
        .map(|s| (strsim::levenshtein(key, s.name), s.name))
        .filter(|(d, _)| *d <= 3)
        .min()
        .map(|(_, n)| n.to_string());
    ConfigError::Unknown { key: key.to_string(), location, suggestion }
}

/// Unvalidated key/value pairs with their origin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Location)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let location = Location::Line(idx + 1);
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { location, text: content.to_string() });
            };
            let (key, value) = (k.trim(), v.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { location, text: content.to_string() });
            }
            if raw.entries.contains_key(key) {
                return Err(ConfigError::Duplicate { key: key.to_string(), location });
            }
            raw.insert(key, value, location)?;
        }
        Ok(raw)
    }

    fn insert(&mut self, key: &str, value: &str, location: Location) -> Result<(), ConfigError> {
        if key_def(key).is_none() {
            return Err(unknown_key(key, location));
        }
        self.entries.insert(key.to_string(), (value.to_string(), location));
        Ok(())
    }

    /// Apply `key=value`, replacing any existing value.
    pub fn apply_override(&mut self, text: &str) -> Result<(), ConfigError> {
        let Some((k, v)) = text.split_once('=') else {
            return Err(ConfigError::Syntax { location: Location::Override, text: text.to_string() });
        };
        self.insert(k.trim(), v.trim(), Location::Override)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Gaussian,
    SuperGaussian,
}

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Gaussian => "gaussian",
            Shape::SuperGaussian => "supergaussian",
        }
    }
}

/// `transduce_case`: one detuning case or all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseSelection {
    One(DetuningCase),
    All,
}

impl CaseSelection {
    pub fn cases(self) -> Vec<DetuningCase> {
        match self {
            CaseSelection::One(c) => vec![c],
            CaseSelection::All => DetuningCase::ALL.to_vec(),
        }
    }
}

/// Validated configuration in file units (Hz, s, W, m, kg).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass_kg: f64,
    pub omega_m_hz: f64,
    pub gamma_m_hz: f64,
    pub kappa1_hz: f64,
    pub kappa2_hz: f64,
    pub g1_hz: f64,
    pub g2_hz: f64,
    pub lambda_l_m: f64,
    pub lambda_r_m: Option<f64>,
    pub power_l_w: f64,
    pub power_r_w: f64,
    pub power_p_w: f64,
    pub delta_hz: f64,
    pub detuning1_hz: f64,
    pub detuning2_hz: f64,
    pub tau_p_s: f64,
    pub tau_l_s: f64,
    pub t_write_s: Option<f64>,
    pub t_read_s: Option<f64>,
    pub shape: Shape,
    pub beta: Option<u32>,
    pub dt_s: Option<f64>,
    pub full_dt_s: Option<f64>,
    pub record_every: Option<usize>,
    pub sweep_start_hz: Option<f64>,
    pub sweep_stop_hz: Option<f64>,
    pub sweep_points: usize,
    pub transduce_case: CaseSelection,
    pub scan_key: Option<String>,
    pub scan_values: Vec<f64>,
    pub scan_protocol: ScanProtocol,
    pub seed: u64,
    pub verify_draws: usize,
    raw: RawConfig,
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl Reader<'_> {
    fn text(&self, key: &'static str) -> Result<(&str, Location), ConfigError> {
        match self.raw.entries.get(key) {
            Some((v, loc)) => Ok((v.as_str(), *loc)),
            None => match key_def(key).and_then(|s| s.default) {
                Some(d) => Ok((d, Location::Default)),
                None => Err(ConfigError::Missing { key: key.to_string() }),
            },
        }
    }

    fn parse_err(key: &str, location: Location, value: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Parse { key: key.to_string(), location, value: value.to_string(), reason: reason.into() }
    }

    fn invalid(key: &str, location: Location, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.to_string(), location, reason: reason.into() }
    }

    fn number(key: &str, location: Location, v: &str) -> Result<f64, ConfigError> {
        let x: f64 = v.parse().map_err(|_| Self::parse_err(key, location, v, "not a number"))?;
        if !x.is_finite() {
            return Err(Self::parse_err(key, location, v, "not a finite number"));
        }
        Ok(x)
    }

    fn check(key: &str, location: Location, x: f64, kind: Kind) -> Result<f64, ConfigError> {
        match kind {
            Kind::Positive | Kind::AutoPositive if x <= 0.0 => {
                Err(Self::invalid(key, location, format!("must be positive, got {x:e}")))
            }
            Kind::NonNegative if x < 0.0 => {
                Err(Self::invalid(key, location, format!("must be non-negative, got {x:e}")))
            }
            _ => Ok(x),
        }
    }

    fn float(&self, key: &'static str) -> Result<f64, ConfigError> {
        let (v, loc) = self.text(key)?;
        let kind = key_def(key).map(|s| s.kind).unwrap_or(Kind::Real);
        Self::check(key, loc, Self::number(key, loc, v)?, kind)
    }

    fn auto_float(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        let (v, loc) = self.text(key)?;
        if v == "auto" {
            return Ok(None);
        }
        let kind = key_def(key).map(|s| s.kind).unwrap_or(Kind::Real);
        Self::check(key, loc, Self::number(key, loc, v)?, kind).map(Some)
    }

    fn count(key: &str, loc: Location, v: &str) -> Result<usize, ConfigError> {
        let n: usize = v.parse().map_err(|_| Self::parse_err(key, loc, v, "not a non-negative integer"))?;
        if n == 0 {
            return Err(Self::invalid(key, loc, "must be at least 1"));
        }
        Ok(n)
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_text(&text)
    }

    /// Parse with `key=value` overrides applied in order.
    pub fn from_text_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::parse(text)?;
        for o in overrides {
            raw.apply_override(o.as_ref())?;
        }
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let r = Reader { raw: &raw };
        let f = |k| r.float(k);

        let (shape_text, shape_loc) = r.text("shape")?;
        let shape = match shape_text {
            "gaussian" => Shape::Gaussian,
            "supergaussian" => Shape::SuperGaussian,
            other => return Err(Reader::parse_err("shape", shape_loc, other, "expected gaussian or supergaussian")),
        };
        let (beta_text, beta_loc) = r.text("beta")?;
        let beta = if beta_text == "auto" {
            None
        } else {
            let b: u32 =
                beta_text.parse().map_err(|_| Reader::parse_err("beta", beta_loc, beta_text, "not an integer"))?;
            if b < 2 || !b.is_multiple_of(2) {
                return Err(Reader::invalid("beta", beta_loc, format!("must be even and >= 2, got {b}")));
            }
            if shape == Shape::Gaussian && b != 2 {
                return Err(Reader::invalid("beta", beta_loc, format!("gaussian shape needs beta = 2, got {b}")));
            }
            Some(b)
        };

        let (rec_text, rec_loc) = r.text("record_every")?;
        let record_every =
            if rec_text == "auto" { None } else { Some(Reader::count("record_every", rec_loc, rec_text)?) };
        let (sp_text, sp_loc) = r.text("sweep_points")?;
        let sweep_points = Reader::count("sweep_points", sp_loc, sp_text)?;
        let (vd_text, vd_loc) = r.text("verify_draws")?;
        let verify_draws = Reader::count("verify_draws", vd_loc, vd_text)?;
        let (seed_text, seed_loc) = r.text("seed")?;
        let seed: u64 = seed_text
            .parse()
            .map_err(|_| Reader::parse_err("seed", seed_loc, seed_text, "not a non-negative integer"))?;

        let (case_text, case_loc) = r.text("transduce_case")?;
        let transduce_case = if case_text == "all" {
            CaseSelection::All
        } else {
            CaseSelection::One(
                case_text.parse().map_err(|e: String| Reader::parse_err("transduce_case", case_loc, case_text, e))?,
            )
        };
        let (sp_text, sp_loc) = r.text("scan_protocol")?;
        let scan_protocol: ScanProtocol =
            sp_text.parse().map_err(|e: String| Reader::parse_err("scan_protocol", sp_loc, sp_text, e))?;

        let (sk_text, sk_loc) = r.text("scan_key")?;
        let scan_key = if sk_text == "none" {
            None
        } else {
            match key_def(sk_text) {
                Some(s) if s.kind.is_scannable() => Some(sk_text.to_string()),
                Some(_) => {
                    return Err(Reader::invalid("scan_key", sk_loc, format!("'{sk_text}' is not a numeric key")))
                }
                None => return Err(unknown_key(sk_text, sk_loc)),
            }
        };
        let (sv_text, sv_loc) = r.text("scan_values")?;
        let scan_values = if sv_text == "none" {
            Vec::new()
        } else {
            sv_text
                .split(',')
                .map(|v| Reader::number("scan_values", sv_loc, v.trim()))
                .collect::<Result<Vec<_>, _>>()?
        };
        if scan_key.is_some() && scan_values.is_empty() {
            return Err(Reader::invalid("scan_values", sv_loc, "scan_key is set but no values are given"));
        }
        if scan_key.is_none() && !scan_values.is_empty() {
            return Err(Reader::invalid("scan_key", sk_loc, "scan_values are given but no scan_key"));
        }

        let cfg = RunConfig {
            mass_kg: f("mass_kg")?,
            omega_m_hz: f("omega_m_hz")?,
            gamma_m_hz: f("gamma_m_hz")?,
            kappa1_hz: f("kappa1_hz")?,
            kappa2_hz: f("kappa2_hz")?,
            g1_hz: f("g1_hz")?,
            g2_hz: f("g2_hz")?,
            lambda_l_m: f("lambda_l_m")?,
            lambda_r_m: r.auto_float("lambda_r_m")?,
            power_l_w: f("power_l_w")?,
            power_r_w: f("power_r_w")?,
            power_p_w: f("power_p_w")?,
            delta_hz: f("delta_hz")?,
            detuning1_hz: f("detuning1_hz")?,
            detuning2_hz: f("detuning2_hz")?,
            tau_p_s: f("tau_p_s")?,
            tau_l_s: f("tau_l_s")?,
            t_write_s: r.auto_float("t_write_s")?,
            t_read_s: r.auto_float("t_read_s")?,
            shape,
            beta,
            dt_s: r.auto_float("dt_s")?,
            full_dt_s: r.auto_float("full_dt_s")?,
            record_every,
            sweep_start_hz: r.auto_float("sweep_start_hz")?,
            sweep_stop_hz: r.auto_float("sweep_stop_hz")?,
            sweep_points,
            transduce_case,
            scan_key,
            scan_values,
            scan_protocol,
            seed,
            verify_draws,
            raw: raw.clone(),
        };

        let loc = |k: &str| raw.entries.get(k).map_or(Location::Default, |(_, l)| *l);
        if cfg.t_read() <= cfg.t_write() {
            return Err(Reader::invalid(
                "t_read_s",
                loc("t_read_s"),
                format!("read time {:e} s must be after write time {:e} s", cfg.t_read(), cfg.t_write()),
            ));
        }
        match (cfg.sweep_start_hz, cfg.sweep_stop_hz) {
            (Some(a), Some(b)) if b < a || (b == a && cfg.sweep_points > 1) => {
                return Err(Reader::invalid("sweep_stop_hz", loc("sweep_stop_hz"), "must exceed sweep_start_hz"));
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(Reader::invalid(
                    "sweep_start_hz",
                    loc("sweep_start_hz"),
                    "give both sweep_start_hz and sweep_stop_hz, or neither",
                ));
            }
            _ => {}
        }
        cfg.drives().map_err(|e| Reader::invalid("power_l_w", Location::Default, e.to_string()))?;
        Ok(cfg)
    }

    /// A copy with one key replaced, re-validated.
    pub fn with_value(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        raw.insert(key, value, Location::Override)?;
        Self::from_raw(raw)
    }

    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    pub fn t_write(&self) -> f64 {
        self.t_write_s.unwrap_or(PADDING_WIDTHS * self.tau_l_s)
    }

    pub fn t_read(&self) -> f64 {
        self.t_read_s.unwrap_or(self.t_write() + DEFAULT_DELAY_S)
    }

    pub fn beta(&self) -> u32 {
        self.beta.unwrap_or(match self.shape {
            Shape::Gaussian => 2,
            Shape::SuperGaussian => 4,
        })
    }

    pub fn omega_l(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / self.lambda_l_m
    }

    pub fn omega_r(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / self.lambda_r_m.unwrap_or(self.lambda_l_m)
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            mass: self.mass_kg,
            omega_m: TAU * self.omega_m_hz,
            gamma_m: TAU * self.gamma_m_hz,
            kappa1: TAU * self.kappa1_hz,
            kappa2: TAU * self.kappa2_hz,
            g1: TAU * self.g1_hz,
            g2: TAU * self.g2_hz,
            omega1: self.omega_l() + TAU * self.detuning1_hz,
            omega2: self.omega_r() + TAU * self.detuning2_hz,
        }
    }

    /// Constant drives at the configured peak powers.
    pub fn drives(&self) -> SimResult<DriveConfig> {
        DriveConfig::new(
            &self.system_params(),
            self.omega_l(),
            self.omega_r(),
            TAU * self.delta_hz,
            self.power_l_w,
            self.power_r_w,
            self.power_p_w,
        )
    }

    pub fn protocol(&self) -> PulseProtocol {
        PulseProtocol {
            t_write: self.t_write(),
            t_read: self.t_read(),
            tau_p: self.tau_p_s,
            tau_l: self.tau_l_s,
            beta: self.beta(),
        }
    }

    pub fn numerics(&self) -> Numerics {
        Numerics { dt: self.dt_s, record_every: self.record_every }
    }

    /// Sweep range in rad/s; `auto` spans `ω_m ± 5κ1`.
    pub fn sweep_range(&self) -> (f64, f64) {
        match (self.sweep_start_hz, self.sweep_stop_hz) {
            (Some(a), Some(b)) => (TAU * a, TAU * b),
            _ => (TAU * (self.omega_m_hz - 5.0 * self.kappa1_hz), TAU * (self.omega_m_hz + 5.0 * self.kappa1_hz)),
        }
    }

    /// Canonical listing of every key, suitable for re-parsing.
    pub fn resolved_text(&self) -> String {
        let num = |x: f64| format!("{x:e}");
        let auto = |x: Option<f64>| x.map_or_else(|| "auto".to_string(), num);
        let mut out = String::from("# resolved configuration\n");
        for s in KEYS {
            let v = match s.name {
                "mass_kg" => num(self.mass_kg),
                "omega_m_hz" => num(self.omega_m_hz),
                "gamma_m_hz" => num(self.gamma_m_hz),
                "kappa1_hz" => num(self.kappa1_hz),
                "kappa2_hz" => num(self.kappa2_hz),
                "g1_hz" => num(self.g1_hz),
                "g2_hz" => num(self.g2_hz),
                "lambda_l_m" => num(self.lambda_l_m),
                "lambda_r_m" => auto(self.lambda_r_m),
                "power_l_w" => num(self.power_l_w),
                "power_r_w" => num(self.power_r_w),
                "power_p_w" => num(self.power_p_w),
                "delta_hz" => num(self.delta_hz),
                "detuning1_hz" => num(self.detuning1_hz),
                "detuning2_hz" => num(self.detuning2_hz),
                "tau_p_s" => num(self.tau_p_s),
                "tau_l_s" => num(self.tau_l_s),
                "t_write_s" => auto(self.t_write_s),
                "t_read_s" => auto(self.t_read_s),
                "shape" => self.shape.name().to_string(),
                "beta" => self.beta.map_or_else(|| "auto".to_string(), |b| b.to_string()),
                "dt_s" => auto(self.dt_s),
                "full_dt_s" => auto(self.full_dt_s),
                "record_every" => self.record_every.map_or_else(|| "auto".to_string(), |n| n.to_string()),
                "sweep_start_hz" => auto(self.sweep_start_hz),
                "sweep_stop_hz" => auto(self.sweep_stop_hz),
                "sweep_points" => self.sweep_points.to_string(),
                "transduce_case" => match self.transduce_case {
                    CaseSelection::All => "all".to_string(),
                    CaseSelection::One(c) => c.to_string(),
                },
                "scan_key" => self.scan_key.clone().unwrap_or_else(|| "none".to_string()),
                "scan_values" => {
                    if self.scan_values.is_empty() {
                        "none".to_string()
                    } else {
                        self.scan_values.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", ")
                    }
                }
                "scan_protocol" => self.scan_protocol.to_string(),
                "seed" => self.seed.to_string(),
                "verify_draws" => self.verify_draws.to_string(),
                other => unreachable!("key {other} missing from resolved_text"),
            };
            out.push_str(s.name);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

/// Configuration of the reference device with the memory-protocol defaults.
pub fn reference_config_text() -> String {
    "\
# reference single/double-cavity device
mass_kg = 20e-12
omega_m_hz = 51.8e6
gamma_m_hz = 41e3
kappa1_hz = 1.5e6
kappa2_hz = 1.5e6
g1_hz = 1.55e3
g2_hz = 1.55e3
lambda_l_m = 775e-9
power_l_w = 1e-3
power_r_w = 0.4e-3
power_p_w = 1e-7
delta_hz = 51.8e6
detuning1_hz = 51.8e6
detuning2_hz = 51.8e6
"
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn reference() -> RunConfig {
        RunConfig::from_text(&reference_config_text()).unwrap()
    }

    #[test]
    fn reference_matches_presets() {
        let c = reference();
        let p = c.system_params();
        let q = presets::reference_device();
        for (a, b) in [
            (p.mass, q.mass),
            (p.omega_m, q.omega_m),
            (p.gamma_m, q.gamma_m),
            (p.kappa1, q.kappa1),
            (p.g1, q.g1),
            (p.omega1, q.omega1),
        ] {
            assert!((a / b - 1.0).abs() < 1e-12, "{a} vs {b}");
        }
        let d = c.drives().unwrap();
        assert!((d.delta - q.omega_m).abs() < 1e-6);
        assert_eq!(c.t_write(), 1.5e-6);
        assert!((c.t_read() - 3.0e-6).abs() < 1e-18);
        assert_eq!(c.beta(), 2);
    }

    #[test]
    fn resolved_text_round_trips() {
        let c = RunConfig::from_text_with_overrides(
            &reference_config_text(),
            &["shape = supergaussian", "scan_key=t_read_s", "scan_values = 2e-6, 2.5e-6", "dt_s=1e-10"],
        )
        .unwrap();
        let text = c.resolved_text();
        let again = RunConfig::from_text(&text).unwrap();
        assert_eq!(again.resolved_text(), text);
        assert_eq!(again.system_params(), c.system_params());
        assert_eq!(again.beta(), 4);
        assert_eq!(again.scan_values, vec![2e-6, 2.5e-6]);
    }

    #[test]
    fn negative_kappa_rejected_with_line() {
        let text = reference_config_text().replace("kappa1_hz = 1.5e6", "kappa1_hz = -1");
        let err = RunConfig::from_text(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }), "{err}");
        assert_eq!(err.line(), Some(5));
        assert_eq!(err.key(), Some("kappa1_hz"));
    }

    #[test]
    fn unknown_key_suggests() {
        let text = reference_config_text().replace("kappa1_hz", "kapa1_hz");
        let err = RunConfig::from_text(&text).unwrap_err();
        match &err {
            ConfigError::Unknown { suggestion, location, .. } => {
                assert_eq!(suggestion.as_deref(), Some("kappa1_hz"));
                assert_eq!(*location, Location::Line(5));
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains("did you mean 'kappa1_hz'"));
    }

    #[test]
    fn unit_suffix_mismatch() {
        for bad in ["kappa1_mhz = 1.5", "kappa1 = 1.5e6", "power_l_mw = 1"] {
            let text = reference_config_text() + bad + "\n";
            let err = RunConfig::from_text(&text).unwrap_err();
            assert!(matches!(err, ConfigError::UnitMismatch { .. }), "{bad}: {err}");
            assert_eq!(err.line(), Some(16));
        }
    }

    #[test]
    fn missing_and_unparsable() {
        let text = reference_config_text().replace("mass_kg = 20e-12\n", "");
        assert_eq!(RunConfig::from_text(&text).unwrap_err(), ConfigError::Missing { key: "mass_kg".into() });
        let text = reference_config_text().replace("20e-12", "twenty");
        let err = RunConfig::from_text(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
        assert_eq!(err.line(), Some(2));
        let text = reference_config_text() + "mass_kg = 1\n";
        assert!(matches!(RunConfig::from_text(&text).unwrap_err(), ConfigError::Duplicate { .. }));
        let text = reference_config_text() + "just some words\n";
        assert!(matches!(RunConfig::from_text(&text).unwrap_err(), ConfigError::Syntax { .. }));
    }

    #[test]
    fn value_constraints() {
        let base = reference_config_text();
        for o in [
            "beta = 3",
            "beta = 4",
            "t_read_s = 1e-6",
            "scan_key = shape",
            "scan_key = t_read_s",
            "sweep_start_hz = 1e6",
            "power_p_w = -1e-9",
            "record_every = 0",
            "transduce_case = green",
        ] {
            assert!(RunConfig::from_text_with_overrides(&base, &[o]).is_err(), "{o}");
        }
        assert!(RunConfig::from_text_with_overrides(&base, &["shape = supergaussian", "beta = 6"]).is_ok());
        let err = RunConfig::from_text_with_overrides(&base, &["tau_l_s = 0"]).unwrap_err();
        assert_eq!(err.line(), None);
        assert!(err.to_string().starts_with("override"));
    }

    #[test]
    fn with_value_replaces_key() {
        let c = reference();
        let d = c.with_value("power_r_w", "1e-3").unwrap();
        assert_eq!(d.power_r_w, 1e-3);
        assert!(c.with_value("not_a_key", "1").is_err());
    }
}
