//! `key = value` run configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Missing
//! keys take the defaults of [`RunConfig::default`]; unknown keys and
//! repeated keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use ksflux::integrator::{Scheme, StepControl};
use ksflux::model::{InitCells, InitSignal, Params, Tau};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}; valid keys are: {}", KEYS.join(", "))]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key}: {reason}")]
    Value {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },
}

/// Every recognised key, in canonical order.
pub const KEYS: &[&str] = &[
    "n",
    "R",
    "tau",
    "alpha",
    "kappa",
    "M",
    "init_u",
    "mass",
    "init_v",
    "N",
    "cfl",
    "dt_min",
    "dt_max",
    "u_cap",
    "t_end",
    "record_every",
    "record_growth",
    "floor_patience",
    "max_steps",
    "scheme",
    "cutoff",
    "snapshot_every",
    "seed",
];

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: Params,
    /// Number of grid cells `N`.
    pub cells: usize,
    pub control: StepControl,
    /// Every `k`-th frame is written to `snapshots.csv` (the last frame always is).
    pub snapshot_every: usize,
    /// Seed for randomised harnesses; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params::default(),
            cells: 512,
            control: StepControl::default(),
            snapshot_every: 1,
            seed: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_auto(s: &str) -> Result<Option<f64>, String> {
    if s == "auto" {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

/// Splits `name(a,b,c)` into the name and its numeric arguments.
fn call(s: &str) -> Result<(&str, Vec<f64>), String> {
    let Some(open) = s.find('(') else {
        return Ok((s, Vec::new()));
    };
    let inner = s[open + 1..].strip_suffix(')').ok_or("missing closing parenthesis")?;
    let args = inner
        .split(',')
        .map(|a| parse_num::<f64>(a.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((s[..open].trim(), args))
}

pub fn parse_init_cells(s: &str) -> Result<InitCells, String> {
    match call(s)? {
        ("constant", a) if a.len() == 1 => Ok(InitCells::Constant { value: a[0] }),
        ("gaussian", a) if a.len() == 3 => Ok(InitCells::Gaussian {
            amplitude: a[0],
            center: a[1],
            width: a[2],
        }),
        ("ring", a) if a.len() == 3 => Ok(InitCells::Ring {
            amplitude: a[0],
            r0: a[1],
            width: a[2],
        }),
        _ => Err("expected constant(c), gaussian(amplitude,center,width) or ring(amplitude,r0,width)".into()),
    }
}

pub fn parse_init_signal(s: &str) -> Result<InitSignal, String> {
    match call(s)? {
        ("uniform", a) if a.is_empty() => Ok(InitSignal::Uniform),
        ("quadratic", a) if a.len() == 1 => Ok(InitSignal::Quadratic { amplitude: a[0] }),
        _ => Err("expected uniform or quadratic(amplitude)".into()),
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let p = &mut self.params;
        let c = &mut self.control;
        match key {
            "n" => p.n = parse_num(value)?,
            "R" => p.radius = parse_num(value)?,
            "tau" => p.tau = Tau::from_int(parse_num(value)?).map_err(|e| e.to_string())?,
            "alpha" => p.alpha = parse_num(value)?,
            "kappa" => p.kappa = parse_num(value)?,
            "M" => p.boundary_signal = parse_num(value)?,
            "init_u" => p.init_u = parse_init_cells(value)?,
            "mass" => p.u0_mass = if value == "none" { None } else { Some(parse_num(value)?) },
            "init_v" => p.init_v = parse_init_signal(value)?,
            "N" => self.cells = parse_num(value)?,
            "cfl" => c.cfl = parse_num(value)?,
            "dt_min" => c.dt_min = parse_auto(value)?,
            "dt_max" => c.dt_max = parse_num(value)?,
            "u_cap" => c.u_cap = parse_auto(value)?,
            "t_end" => c.t_end = parse_num(value)?,
            "record_every" => c.record_every = parse_num(value)?,
            "record_growth" => c.record_growth = parse_num(value)?,
            "floor_patience" => c.floor_patience = parse_num(value)?,
            "max_steps" => c.max_steps = parse_num(value)?,
            "scheme" => c.scheme = value.parse::<Scheme>().map_err(|e| e.to_string())?,
            "cutoff" => c.cutoff = parse_num(value)?,
            "snapshot_every" => self.snapshot_every = parse_num(value)?,
            "seed" => self.seed = parse_num(value)?,
            _ => unreachable!("key checked against KEYS"),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let (p, c) = (&self.params, &self.control);
        let auto = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        match key {
            "n" => p.n.to_string(),
            "R" => p.radius.to_string(),
            "tau" => p.tau.as_int().to_string(),
            "alpha" => p.alpha.to_string(),
            "kappa" => p.kappa.to_string(),
            "M" => p.boundary_signal.to_string(),
            "init_u" => p.init_u.to_string(),
            "mass" => p.u0_mass.map_or_else(|| "none".to_string(), |m| m.to_string()),
            "init_v" => p.init_v.to_string(),
            "N" => self.cells.to_string(),
            "cfl" => c.cfl.to_string(),
            "dt_min" => auto(c.dt_min),
            "dt_max" => c.dt_max.to_string(),
            "u_cap" => auto(c.u_cap),
            "t_end" => c.t_end.to_string(),
            "record_every" => c.record_every.to_string(),
            "record_growth" => c.record_growth.to_string(),
            "floor_patience" => c.floor_patience.to_string(),
            "max_steps" => c.max_steps.to_string(),
            "scheme" => c.scheme.to_string(),
            "cutoff" => c.cutoff.to_string(),
            "snapshot_every" => self.snapshot_every.to_string(),
            "seed" => self.seed.to_string(),
            _ => unreachable!("key checked against KEYS"),
        }
    }

    /// Checks the combined configuration, including the grid size.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: ksflux::Error| ConfigError::Invalid(e.to_string());
        self.params.validate().map_err(invalid)?;
        self.control.validate().map_err(invalid)?;
        if self.cells < 4 {
            return Err(ConfigError::Invalid(format!(
                "N must be at least 4, got {}",
                self.cells
            )));
        }
        if self.snapshot_every == 0 {
            return Err(ConfigError::Invalid("snapshot_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical text form: every key in [`KEYS`] order.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key));
        }
        out
    }

    /// `(key, value)` pairs in canonical order.
    pub fn entries(&self) -> Vec<(String, String)> {
        KEYS.iter().map(|k| (k.to_string(), self.get(k))).collect()
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        }
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        };
        if seen.contains(&known) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        seen.push(known);
        config.set(known, value).map_err(|reason| ConfigError::Value {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        })?;
    }
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}
