//! Simulation configuration: paper-default parameter set, a desk-scale
//! preset, and a plain-text `key = value` config file parser.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Sharp,
    Diffuse,
    Both,
}

impl Solver {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Solver::Sharp),
            "diffuse" => Ok(Solver::Diffuse),
            "both" => Ok(Solver::Both),
            other => Err(Error::Config(format!(
                "unknown solver '{other}' (expected sharp, diffuse, or both)"
            ))),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Sharp => "sharp",
            Solver::Diffuse => "diffuse",
            Solver::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Initial liquid supersaturation.
    pub omega0: f64,
    /// Stagnant-film thickness (geometric probe offset).
    pub delta: f64,
    /// Side length of the square domain.
    pub a_m: f64,
    /// Initial grain radius.
    pub r_d: f64,
    /// Node spacing on the envelope.
    pub h_d: f64,
    /// Node spacing far from the envelope.
    pub h_m: f64,
    /// Stencil size for the meshless operators.
    pub stencil: usize,
    /// Time step.
    pub dt: f64,
    /// Total simulated time.
    pub t_tot: f64,
    /// Rediscretize the node set every this many steps. Rediscretizing every
    /// step accumulates interpolation dissipation in the transferred field
    /// (each transfer smooths the near-envelope depletion layer a little);
    /// results are cadence-converged from ~5 upward.
    pub cadence: usize,
    /// Append a time-series record every this many steps.
    pub record_every: usize,
    /// Times at which envelope (and optionally field) snapshots are taken.
    pub snapshots: Vec<f64>,
    /// Also write full concentration-field snapshots.
    pub write_field: bool,
    /// Grid spacing of the diffuse-interface reference solver.
    pub h_g: f64,
    /// RNG seed for node generation.
    pub seed: u64,
    pub solver: Solver,
}

const VALID_KEYS: &[&str] = &[
    "omega0",
    "delta",
    "a_m",
    "r_d",
    "h_d",
    "h_m",
    "stencil",
    "dt",
    "t_tot",
    "cadence",
    "record_every",
    "snapshots",
    "write_field",
    "h_g",
    "seed",
    "solver",
];

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            omega0: 0.18,
            delta: 1.0,
            a_m: 20.0,
            r_d: 0.22,
            h_d: 0.05,
            h_m: 0.15,
            stencil: 12,
            dt: 1e-4,
            t_tot: 12.0,
            cadence: 5,
            record_every: 100,
            snapshots: vec![2.0, 6.0, 12.0],
            write_field: false,
            h_g: 0.05,
            seed: 1,
            solver: Solver::Sharp,
        }
    }
}

impl SimConfig {
    /// Scaled-down parameters sized for minutes, not hours.
    pub fn desk() -> Self {
        SimConfig {
            a_m: 10.0,
            h_d: 0.1,
            h_m: 0.3,
            dt: 5e-4,
            t_tot: 3.0,
            h_g: 0.025,
            snapshots: vec![1.0, 2.0, 3.0],
            ..SimConfig::default()
        }
    }

    /// Set one field from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} value '{value}'"));
        match key {
            "omega0" => self.omega0 = value.parse().map_err(|_| bad(key))?,
            "delta" => self.delta = value.parse().map_err(|_| bad(key))?,
            "a_m" => self.a_m = value.parse().map_err(|_| bad(key))?,
            "r_d" => self.r_d = value.parse().map_err(|_| bad(key))?,
            "h_d" => self.h_d = value.parse().map_err(|_| bad(key))?,
            "h_m" => self.h_m = value.parse().map_err(|_| bad(key))?,
            "stencil" => self.stencil = value.parse().map_err(|_| bad(key))?,
            "dt" => self.dt = value.parse().map_err(|_| bad(key))?,
            "t_tot" => self.t_tot = value.parse().map_err(|_| bad(key))?,
            "cadence" => self.cadence = value.parse().map_err(|_| bad(key))?,
            "record_every" => self.record_every = value.parse().map_err(|_| bad(key))?,
            "snapshots" => {
                self.snapshots = value
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| bad(key)))
                    .collect::<Result<_>>()?;
            }
            "write_field" => self.write_field = value.parse().map_err(|_| bad(key))?,
            "h_g" => self.h_g = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "solver" => self.solver = Solver::parse(value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key '{other}' (valid keys: {})",
                    VALID_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Apply `key = value` lines (with `#` comments) on top of self.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                let msg = match e {
                    Error::Config(m) => m,
                    other => other.to_string(),
                };
                Error::Config(format!("line {}: {msg}", lineno + 1))
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta", self.delta),
            ("a_m", self.a_m),
            ("r_d", self.r_d),
            ("h_d", self.h_d),
            ("h_m", self.h_m),
            ("dt", self.dt),
            ("h_g", self.h_g),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        // omega0 = 0 is the zero-growth limit; 1 saturates the kinetics
        if !(0.0..1.0).contains(&self.omega0) {
            return Err(Error::Config(format!(
                "omega0 must be in [0, 1), got {}",
                self.omega0
            )));
        }
        if self.t_tot < 0.0 || !self.t_tot.is_finite() {
            return Err(Error::Config(format!(
                "t_tot must be nonnegative, got {}",
                self.t_tot
            )));
        }
        if self.h_d > self.h_m {
            return Err(Error::Config(format!(
                "h_d = {} must not exceed h_m = {}",
                self.h_d, self.h_m
            )));
        }
        if 2.0 * self.r_d >= self.a_m {
            return Err(Error::Config(format!(
                "initial grain (r_d = {}) does not fit in the domain (a_m = {})",
                self.r_d, self.a_m
            )));
        }
        if self.stencil < 6 {
            return Err(Error::Config(format!(
                "stencil must be at least 6, got {}",
                self.stencil
            )));
        }
        if self.cadence == 0 || self.record_every == 0 {
            return Err(Error::Config(
                "cadence and record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
