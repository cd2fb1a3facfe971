//! Run configuration: a flat `key = value` file with dotted keys.
//!
//! ```text
//! d = 3
//! omega.min = 100
//! grid.r_max = 12
//! potential.kind = bump
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Missing keys keep
//! their defaults; unknown or repeated keys are errors.

use std::collections::BTreeSet;
use std::path::PathBuf;

use ou_resolvent::fundsys::{default_r_max, OdeOptions, PotentialKind, RadialPotential, SolverOptions};
use ou_resolvent::resolvent::{log_spaced, ScanConfig};
use ou_resolvent::Real;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: cannot parse {value:?} for {key}")]
    BadValue { line: usize, key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: u32,
    pub b: Real,
    pub omega_min: Real,
    pub omega_max: Real,
    pub omega_steps: usize,
    pub ell_max: u32,
    pub potential: RadialPotential,
    pub r_max: Real,
    pub n_inner: usize,
    pub n_outer: usize,
    pub tol_ode: Real,
    /// Tolerance of the adaptive quadrature behind the phase functions.
    pub tol_quad: Real,
    pub tol_volterra: Real,
    pub omega0: Real,
    pub c: Real,
    pub nu0: Real,
    pub override_omega_floor: bool,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            d: 3,
            b: 1.0,
            omega_min: 1e2,
            omega_max: 1e4,
            omega_steps: 7,
            ell_max: 50,
            potential: RadialPotential::zero(),
            r_max: default_r_max(1e-6),
            n_inner: 200,
            n_outer: 200,
            tol_ode: OdeOptions::default().rtol,
            tol_quad: 1e-12,
            tol_volterra: solver.volterra.tol,
            omega0: solver.omega0,
            c: solver.c,
            nu0: solver.nu0,
            override_omega_floor: false,
            output: None,
        }
    }
}

/// Serialisation order; `parse` accepts the same keys.
pub const KEYS: [&str; 21] = [
    "d",
    "b",
    "omega.min",
    "omega.max",
    "omega.steps",
    "ell.max",
    "potential.kind",
    "potential.amplitude",
    "potential.phase",
    "grid.r_max",
    "grid.n_inner",
    "grid.n_outer",
    "tol.ode",
    "tol.quad",
    "tol.volterra",
    "threshold.omega0",
    "threshold.c",
    "threshold.nu0",
    "override_omega_floor",
    "output",
    "schema",
];

const SCHEMA: &str = "ou-resolvent-config/1";

fn value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError::BadValue { line, key: key.to_string(), value: raw.to_string() })
}

impl RunConfig {
    /// Parse without validating; see [`RunConfig::validate`].
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            // `#` starts a comment anywhere on the line
            let trimmed = raw.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() {
                continue;
            }
            let Some((k, v)) = trimmed.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey { line, key: k.to_string() });
            }
            if !seen.insert(k.to_string()) {
                return Err(ConfigError::DuplicateKey { line, key: k.to_string() });
            }
            match k {
                "d" => cfg.d = value(line, k, v)?,
                "b" => cfg.b = value(line, k, v)?,
                "omega.min" => cfg.omega_min = value(line, k, v)?,
                "omega.max" => cfg.omega_max = value(line, k, v)?,
                "omega.steps" => cfg.omega_steps = value(line, k, v)?,
                "ell.max" => cfg.ell_max = value(line, k, v)?,
                "potential.kind" => {
                    cfg.potential.kind = PotentialKind::parse(v).ok_or_else(|| ConfigError::BadValue {
                        line,
                        key: k.to_string(),
                        value: v.to_string(),
                    })?
                }
                "potential.amplitude" => cfg.potential.amplitude = value(line, k, v)?,
                "potential.phase" => cfg.potential.phase = value(line, k, v)?,
                "grid.r_max" => cfg.r_max = value(line, k, v)?,
                "grid.n_inner" => cfg.n_inner = value(line, k, v)?,
                "grid.n_outer" => cfg.n_outer = value(line, k, v)?,
                "tol.ode" => cfg.tol_ode = value(line, k, v)?,
                "tol.quad" => cfg.tol_quad = value(line, k, v)?,
                "tol.volterra" => cfg.tol_volterra = value(line, k, v)?,
                "threshold.omega0" => cfg.omega0 = value(line, k, v)?,
                "threshold.c" => cfg.c = value(line, k, v)?,
                "threshold.nu0" => cfg.nu0 = value(line, k, v)?,
                "override_omega_floor" => cfg.override_omega_floor = value(line, k, v)?,
                "output" => cfg.output = Some(PathBuf::from(v)),
                "schema" if v == SCHEMA => {}
                _ => return Err(ConfigError::BadValue { line, key: k.to_string(), value: v.to_string() }),
            }
        }
        Ok(cfg)
    }

    /// Every key in [`KEYS`] order. Floats use the shortest representation
    /// that parses back to the same value.
    pub fn serialize(&self) -> String {
        let mut out = format!("schema = {SCHEMA}\n");
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("d", self.d.to_string());
        put("b", self.b.to_string());
        put("omega.min", self.omega_min.to_string());
        put("omega.max", self.omega_max.to_string());
        put("omega.steps", self.omega_steps.to_string());
        put("ell.max", self.ell_max.to_string());
        put("potential.kind", self.potential.kind.name().to_string());
        put("potential.amplitude", self.potential.amplitude.to_string());
        put("potential.phase", self.potential.phase.to_string());
        put("grid.r_max", self.r_max.to_string());
        put("grid.n_inner", self.n_inner.to_string());
        put("grid.n_outer", self.n_outer.to_string());
        put("tol.ode", self.tol_ode.to_string());
        put("tol.quad", self.tol_quad.to_string());
        put("tol.volterra", self.tol_volterra.to_string());
        put("threshold.omega0", self.omega0.to_string());
        put("threshold.c", self.c.to_string());
        put("threshold.nu0", self.nu0.to_string());
        put("override_omega_floor", self.override_omega_floor.to_string());
        if let Some(p) = &self.output {
            put("output", p.display().to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.d < 3 || self.d.is_multiple_of(2) {
            return bad(format!("d must be odd and at least 3, got {}", self.d));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return bad(format!("b must be finite and nonnegative, got {}", self.b));
        }
        for (name, t) in [("tol.ode", self.tol_ode), ("tol.quad", self.tol_quad), ("tol.volterra", self.tol_volterra)] {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("{name} must be positive, got {t}"));
            }
        }
        if !(self.omega_min > 0.0 && self.omega_min <= self.omega_max && self.omega_max.is_finite()) {
            return bad(format!("need 0 < omega.min <= omega.max, got {} and {}", self.omega_min, self.omega_max));
        }
        if self.omega_steps == 0 {
            return bad("omega.steps must be at least 1".into());
        }
        if self.omega_min < self.omega0 && !self.override_omega_floor {
            return bad(format!(
                "omega.min = {} is below threshold.omega0 = {}; pass --override-omega-floor to run anyway",
                self.omega_min, self.omega0
            ));
        }
        if !(self.r_max > 1.0 && self.r_max.is_finite()) {
            return bad(format!("grid.r_max must exceed 1, got {}", self.r_max));
        }
        if self.n_inner < 2 || self.n_outer < 2 {
            return bad("grid.n_inner and grid.n_outer must be at least 2".into());
        }
        if !(self.c >= 1.0 && self.nu0 > 0.0 && self.omega0 > 0.0) {
            return bad(format!("need c >= 1, nu0 > 0, omega0 > 0 (c={}, nu0={}, omega0={})", self.c, self.nu0, self.omega0));
        }
        if !(self.potential.amplitude.is_finite() && self.potential.phase.is_finite()) {
            return bad("potential amplitude and phase must be finite".into());
        }
        Ok(())
    }

    pub fn omegas(&self) -> Vec<Real> {
        log_spaced(self.omega_min, self.omega_max, self.omega_steps)
    }

    /// First, geometric middle and last frequency (deduplicated).
    pub fn omega_triple(&self) -> Vec<Real> {
        let mut w = vec![self.omega_min, (self.omega_min * self.omega_max).sqrt(), self.omega_max];
        w.dedup();
        w
    }

    pub fn solver(&self) -> SolverOptions {
        let mut s = SolverOptions { r_max: self.r_max, c: self.c, nu0: self.nu0, omega0: self.omega0, ..SolverOptions::default() };
        s.volterra.tol = self.tol_volterra;
        s
    }

    pub fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.tol_ode, atol: 1e-2 * self.tol_ode, ..OdeOptions::default() }
    }

    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            d: self.d,
            b: self.b,
            omegas: self.omegas(),
            ells: (0..=self.ell_max).collect(),
            potential: self.potential,
            n_inner: self.n_inner,
            n_outer: self.n_outer,
            solver: self.solver(),
            allow_low_omega: self.override_omega_floor,
            ..ScanConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::parse(&cfg.serialize()).unwrap(), cfg);
        assert_eq!(cfg.omegas().len(), 7);
    }

    #[test]
    fn dotted_keys_comments_and_blank_lines() {
        let cfg = RunConfig::parse("# scan\n\ngrid.r_max = 12 # wide\npotential.kind = bump\n  potential.amplitude=0.5 \n").unwrap();
        assert_eq!(cfg.r_max, 12.0);
        assert_eq!(cfg.potential, RadialPotential::bump(0.5));
        assert_eq!(cfg.d, 3);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(RunConfig::parse("d 3"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse("grid.rmax = 3"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(RunConfig::parse("d = 3\nd = 5"), Err(ConfigError::DuplicateKey { line: 2, .. })));
        assert!(matches!(RunConfig::parse("b = one"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(RunConfig::parse("potential.kind = cubic"), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn validation_rules() {
        let ok = RunConfig::default();
        for broken in [
            RunConfig { d: 4, ..ok.clone() },
            RunConfig { d: 1, ..ok.clone() },
            RunConfig { tol_ode: 0.0, ..ok.clone() },
            RunConfig { tol_quad: -1e-9, ..ok.clone() },
            RunConfig { tol_volterra: Real::NAN, ..ok.clone() },
            RunConfig { omega_min: 50.0, ..ok.clone() },
            RunConfig { omega_max: 10.0, ..ok.clone() },
        ] {
            assert!(broken.validate().is_err(), "{broken:?}");
        }
        RunConfig { omega_min: 50.0, override_omega_floor: true, ..ok }.validate().unwrap();
    }
}
