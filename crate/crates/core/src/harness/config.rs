//! `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Every key must appear in [`DEFAULTS`]. Values layer as defaults, then the
//! config file, then command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// Every recognised key with its default and a one-line description.
pub const DEFAULTS: &[(&str, &str, &str)] = &[
    ("family", "B", "exact family, A (swirl k/r) or B (swirl k r tau^2a)"),
    ("a", "1", "straining strength"),
    ("k", "1", "swirl amplitude"),
    ("t_star", "1", "blowup time"),
    ("nu", "0.1", "viscosity"),
    ("r_min", "auto", "inner radius; auto = 0 for B, 0.5 for A"),
    ("r_max", "2", "outer radius"),
    ("z_min", "-1", "lower z edge"),
    ("z_max", "1", "upper z edge"),
    ("nr", "65", "radial nodes"),
    ("nz", "65", "axial nodes"),
    ("t_end", "0.5", "final time of simulate and convergence runs"),
    ("dt", "cfl", "fixed step, or cfl for the stability rule"),
    ("cfl_safety", "0.4", "safety factor of the stability rule"),
    ("scheme", "rk2_explicit", "rk2_explicit or imex_diffusion"),
    ("advection", "central", "central or upwind1"),
    ("max_steps", "2000000", "step budget per run"),
    ("delta_floor", "0.001", "smallest T* - t_end as a fraction of T*"),
    ("poisson.method", "direct", "direct, gauss_seidel_sor or conjugate_gradient_like"),
    ("poisson.tol", "1e-10", "relative residual tolerance of the Poisson solve"),
    ("poisson.max_iters", "50000", "iteration cap of iterative Poisson methods"),
    ("poisson.sor_omega", "1.7", "over-relaxation factor"),
    ("scan.n_samples", "1000", "sample points of residual-scan and pressure-check"),
    ("scan.seed", "42", "sampling seed"),
    ("scan.abs_tol", "1e-14", "absolute residual floor"),
    ("scan.rel_tol", "1e-6", "normalized residual tolerance"),
    ("scan.fd_step", "1e-4", "finite-difference step"),
    ("scan.richardson_step", "1e-2", "companion step of the Richardson ratios"),
    ("convergence.levels", "33,65,129", "nodes per axis of each level"),
    ("convergence.dt_scaling", "square", "square (dt ~ h^2) or linear"),
    ("chase.deltas", "0.2,0.1,0.05,0.025", "distances to blowup, decreasing"),
    ("chase.quantity", "vr_sup_at_rmax", "vr_sup_at_rmax or v1_sup"),
    ("energy.radii", "1,2,4", "ball radii"),
    ("energy.t", "0", "evaluation time"),
    ("energy.r_min", "auto", "axis cutoff; auto = 0 for B, 0.1 for A"),
    ("energy.quad_n", "64", "Gauss-Legendre nodes per dimension"),
    ("accept.order_min", "1.7", "lowest accepted observed order"),
    ("accept.order_max", "2.3", "highest accepted observed order"),
    ("accept.omega1_factor", "10", "omega1 bound as a multiple of poisson.tol"),
    ("accept.v1_err_max", "0.05", "final v1 error bound of simulate"),
    ("accept.phi1_err_max", "1e-8", "final phi1 error bound of simulate"),
    ("accept.exponent", "-1", "expected blowup exponent"),
    ("accept.exponent_tol", "0.05", "accepted deviation of the blowup exponent"),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("cannot read {file}: {message}")]
    Io { file: String, message: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid value for '{key}': '{value}' ({message})")]
    InvalidValue { key: String, value: String, message: String },
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Where a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

/// Resolved key/value table.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<&'static str, (String, Source)>,
}

fn known(key: &str) -> Option<&'static str> {
    DEFAULTS.iter().find(|(k, _, _)| *k == key).map(|(k, _, _)| *k)
}

impl Default for Config {
    fn default() -> Self {
        Self { values: DEFAULTS.iter().map(|(k, v, _)| (*k, (v.to_string(), Source::Default))).collect() }
    }
}

impl Config {
    /// Apply `key = value` lines; `file` names the origin in errors.
    pub fn merge_str(&mut self, text: &str, file: &str) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| ConfigError::Parse { file: file.to_string(), line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) =
                body.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{body}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = known(key).ok_or_else(|| err(format!("unknown key '{key}'")))?;
            if value.is_empty() {
                return Err(err(format!("empty value for '{key}'")));
            }
            if let Some(prev) = seen.insert(key, line) {
                return Err(err(format!("duplicate key '{key}' (first set on line {prev})")));
            }
            self.values.insert(key, (value.to_string(), Source::File));
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { file: name.clone(), message: e.to_string() })?;
        self.merge_str(&text, &name)
    }

    /// Command-line override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = known(key).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        self.values.insert(key, (value.trim().to_string(), Source::Flag));
        Ok(())
    }

    /// `key=value` override as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::InvalidValue {
            key: pair.into(),
            value: String::new(),
            message: "expected key=value".into(),
        })?;
        self.set(k.trim(), v)
    }

    pub fn raw(&self, key: &str) -> &str {
        &self.values.get(key).unwrap_or_else(|| panic!("'{key}' is not in the defaults table")).0
    }

    pub fn source(&self, key: &str) -> Source {
        self.values.get(key).map_or(Source::Default, |v| v.1)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse::<T>().map_err(|e| ConfigError::InvalidValue {
            key: key.into(),
            value: raw.into(),
            message: e.to_string(),
        })
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.split(',')
            .map(|s| {
                s.trim().parse::<T>().map_err(|e| ConfigError::InvalidValue {
                    key: key.into(),
                    value: raw.into(),
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// `None` for the literal `auto`.
    pub fn auto<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if self.raw(key) == "auto" {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    /// All keys in table order, for echoing into reports.
    pub fn echo(&self) -> String {
        DEFAULTS.iter().map(|(k, _, _)| format!("{k}={}", self.raw(k))).collect::<Vec<_>>().join(" ")
    }
}

/// The defaults table as a commented config file.
pub fn defaults_file() -> String {
    let mut out = String::from("# blowlab configuration; every key is optional\n");
    for (k, v, doc) in DEFAULTS {
        out.push_str(&format!("# {doc}\n{k} = {v}\n"));
    }
    out
}
