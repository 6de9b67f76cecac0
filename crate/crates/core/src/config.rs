//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment. Energies are in units of the
//! cutoff frequency and times in its inverse. Unset keys take defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Beta, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Adaptive,
    Fixed,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "adaptive" => Ok(Mode::Adaptive),
            "fixed" => Ok(Mode::Fixed),
            other => Err(Error::Config(format!(
                "mode must be 'adaptive' or 'fixed', got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Adaptive => "adaptive",
            Mode::Fixed => "fixed",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub model: ModelParams,
    pub dt: f64,
    pub t_max: f64,
    pub mode: Mode,
    /// Precision `p` of the bond update; `inf` disables growth.
    pub precision: f64,
    pub d_lim: usize,
    /// Bond dimension of the fixed-mode embedding.
    pub d_max: Option<usize>,
    pub trial_margin: usize,
    pub krylov_tol: f64,
    pub krylov_max_dim: usize,
    pub output_dir: Option<PathBuf>,
    /// Record every n-th step (the last step is always recorded).
    pub output_every: usize,
    pub write_fcurves: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            dt: 0.05,
            t_max: 10.0,
            mode: Mode::Adaptive,
            precision: 1e-6,
            d_lim: 60,
            d_max: None,
            trial_margin: 8,
            krylov_tol: 1e-12,
            krylov_max_dim: 30,
            output_dir: None,
            output_every: 1,
            write_fcurves: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "omega0",
    "alpha",
    "omega_c",
    "beta_a",
    "beta_b",
    "chain_len_a",
    "chain_len_b",
    "fock_dim",
    "dt",
    "t_max",
    "mode",
    "precision",
    "d_lim",
    "d_max",
    "trial_margin",
    "krylov_tol",
    "krylov_max_dim",
    "output_dir",
    "output_every",
    "write_fcurves",
];

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
}

fn parse_float(key: &str, raw: &str) -> Result<f64> {
    match raw {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => parse_value(key, raw),
    }
}

fn parse_beta(key: &str, raw: &str) -> Result<Beta> {
    raw.parse::<Beta>()
        .map_err(|_| Error::Config(format!("{key}: must be a positive number or 'inf', got {raw:?}")))
}

/// Reads a configuration document, applying defaults for absent keys.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    let mut unknown = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got {line:?}",
                lineno + 1
            )));
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !KEYS.contains(&k.as_str()) {
            unknown.push(k);
            continue;
        }
        if entries.insert(k.clone(), v).is_some() {
            return Err(Error::Config(format!("{k}: given more than once")));
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }

    let mut c = SimulationConfig::default();
    for (k, v) in &entries {
        let (k, v) = (k.as_str(), v.as_str());
        match k {
            "omega0" => c.model.omega0 = parse_float(k, v)?,
            "alpha" => c.model.alpha = parse_float(k, v)?,
            "omega_c" => c.model.omega_c = parse_float(k, v)?,
            "beta_a" => c.model.beta_a = parse_beta(k, v)?,
            "beta_b" => c.model.beta_b = parse_beta(k, v)?,
            "chain_len_a" => c.model.chain_len_a = parse_value(k, v)?,
            "chain_len_b" => c.model.chain_len_b = parse_value(k, v)?,
            "fock_dim" => c.model.fock_dim = parse_value(k, v)?,
            "dt" => c.dt = parse_float(k, v)?,
            "t_max" => c.t_max = parse_float(k, v)?,
            "mode" => c.mode = v.parse()?,
            "precision" => c.precision = parse_float(k, v)?,
            "d_lim" => c.d_lim = parse_value(k, v)?,
            "d_max" => c.d_max = Some(parse_value(k, v)?),
            "trial_margin" => c.trial_margin = parse_value(k, v)?,
            "krylov_tol" => c.krylov_tol = parse_float(k, v)?,
            "krylov_max_dim" => c.krylov_max_dim = parse_value(k, v)?,
            "output_dir" => c.output_dir = Some(PathBuf::from(v)),
            "output_every" => c.output_every = parse_value(k, v)?,
            "write_fcurves" => c.write_fcurves = parse_value(k, v)?,
            _ => unreachable!("key list checked above"),
        }
    }
    c.validate()?;
    Ok(c)
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, constraint: &str| Err(Error::Config(format!("{field}: {constraint}")));
        self.model
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive and finite");
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return bad("t_max", "must be finite and at least dt");
        }
        if self.precision.is_nan() || self.precision < 0.0 {
            return bad("precision", "must be non-negative");
        }
        if self.d_lim == 0 {
            return bad("d_lim", "must be at least 1");
        }
        if self.mode == Mode::Fixed && self.d_max.is_none() {
            return bad("d_max", "required when mode = fixed");
        }
        if self.d_max == Some(0) {
            return bad("d_max", "must be at least 1");
        }
        if !(self.krylov_tol > 0.0) {
            return bad("krylov_tol", "must be positive");
        }
        if self.krylov_max_dim == 0 {
            return bad("krylov_max_dim", "must be at least 1");
        }
        if self.output_every == 0 {
            return bad("output_every", "must be at least 1");
        }
        Ok(())
    }

    /// Number of steps of length `dt` covering `[0, t_max]`.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }

    /// The resolved configuration as `key=value` lines, in the order of [`KEYS`].
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let _ = writeln!(s, "omega0={}", m.omega0);
        let _ = writeln!(s, "alpha={}", m.alpha);
        let _ = writeln!(s, "omega_c={}", m.omega_c);
        let _ = writeln!(s, "beta_a={}", m.beta_a);
        let _ = writeln!(s, "beta_b={}", m.beta_b);
        let _ = writeln!(s, "chain_len_a={}", m.chain_len_a);
        let _ = writeln!(s, "chain_len_b={}", m.chain_len_b);
        let _ = writeln!(s, "fock_dim={}", m.fock_dim);
        let _ = writeln!(s, "dt={}", self.dt);
        let _ = writeln!(s, "t_max={}", self.t_max);
        let _ = writeln!(s, "mode={}", self.mode);
        let _ = writeln!(s, "precision={}", self.precision);
        let _ = writeln!(s, "d_lim={}", self.d_lim);
        if let Some(d) = self.d_max {
            let _ = writeln!(s, "d_max={d}");
        }
        let _ = writeln!(s, "trial_margin={}", self.trial_margin);
        let _ = writeln!(s, "krylov_tol={:e}", self.krylov_tol);
        let _ = writeln!(s, "krylov_max_dim={}", self.krylov_max_dim);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "output_dir={}", dir.display());
        }
        let _ = writeln!(s, "output_every={}", self.output_every);
        let _ = writeln!(s, "write_fcurves={}", self.write_fcurves);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, SimulationConfig::default());
        assert_eq!(c.model.omega0, 0.2);
        assert_eq!(c.model.alpha, 0.2);
        assert_eq!(c.model.beta_a, Beta::Finite(100.0));
        assert_eq!(c.model.beta_b, Beta::Finite(1.0));
        assert_eq!(c.model.fock_dim, 15);
        assert_eq!(c.d_lim, 60);
        assert_eq!(c.model.chain_len_a, 40);
    }

    #[test]
    fn fixed_mode_needs_d_max() {
        let e = parse_config("mode = fixed").unwrap_err();
        assert!(e.to_string().contains("d_max"));
        assert!(parse_config("mode = fixed\nd_max = 20").is_ok());
    }

    #[test]
    fn negative_dt_is_rejected() {
        let e = parse_config("dt=-0.1").unwrap_err();
        assert!(e.to_string().contains("dt"));
    }

    #[test]
    fn unknown_keys_are_listed() {
        let e = parse_config("foo=1\nbar=2\ndt=0.1").unwrap_err().to_string();
        assert!(e.contains("foo") && e.contains("bar"));
    }

    #[test]
    fn comments_and_infinity() {
        let c = parse_config("# zero temperature\nbeta_a = inf  # cold\nprecision=inf").unwrap();
        assert_eq!(c.model.beta_a, Beta::Infinite);
        assert!(c.precision.is_infinite());
    }

    #[test]
    fn round_trip_through_text() {
        let c = parse_config("mode=fixed\nd_max=7\nbeta_b=inf\nt_max=3.5\noutput_every=2").unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn step_count() {
        let c = parse_config("dt=0.01\nt_max=2").unwrap();
        assert_eq!(c.steps(), 200);
    }
}
