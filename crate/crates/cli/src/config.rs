//! Run configuration: file sections, flag overrides and validation.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use steklov_core::experiments::{PullbackConfig, Regime, SweepConfig};
use steklov_core::fem::SolverConfig;
use steklov_core::geometry::{cells_for_eps, ChartFn, DomainKind, OscillationSpec, Profile};
use steklov_core::windows::OptimizerConfig;
use steklov_core::{Error, Result};

/// Window search settings; the solver settings come from the `solver` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub max_iter: usize,
    pub restarts: usize,
    pub scan_starts: usize,
    pub penalty: f64,
    pub penalty_levels: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            max_iter: d.max_iter,
            restarts: d.restarts,
            scan_starts: d.scan_starts,
            penalty: d.penalty,
            penalty_levels: d.penalty_levels,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub regime: Option<Regime>,
    pub a: Option<f64>,
    pub alpha: f64,
    pub p: f64,
    pub k: Vec<usize>,
    /// Single period for `solve`, `optimize` and `check-transform`; must be `1/k`.
    pub eps: Option<f64>,
    pub profile: Profile,
    pub phi: ChartFn,
    pub phi_slope: Option<f64>,
    pub domain: DomainKind,
    pub h: Option<f64>,
    pub h_factor: f64,
    pub h_min: f64,
    pub boundary_refine: usize,
    pub band_refine: usize,
    pub delta: f64,
    pub intervals: usize,
    pub samples: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    pub optimizer: OptimizerSection,
    pub output: Option<PathBuf>,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepConfig::default();
        Self {
            regime: None,
            a: None,
            alpha: sweep.alpha,
            p: sweep.p,
            k: sweep.ks,
            eps: None,
            profile: sweep.profile,
            phi: sweep.phi,
            phi_slope: None,
            domain: DomainKind::SquareTopChart,
            h: None,
            h_factor: sweep.h_factor,
            h_min: sweep.h_min,
            boundary_refine: sweep.boundary_refine,
            band_refine: PullbackConfig::default().band_refine,
            delta: sweep.delta,
            intervals: 256,
            samples: 32,
            seed: 0,
            solver: SolverConfig::default(),
            optimizer: OptimizerSection::default(),
            output: None,
            verbosity: 0,
        }
    }
}

/// Every key with its default, for `--help`.
pub const KEY_TABLE: &str = "\
Config keys (file or flag; flags win), with defaults:
  regime            none; subcritical | critical | supercritical (sets a to 0.5, 1 or 2)
  a                 1 unless regime is given; oscillation amplitude exponent
  alpha             0.3; window fraction in (0, 1)
  p                 2; exponent, at least 2
  k                 [4, 8, 16, 32]; cell counts, eps = 1/k, ascending
  eps               none; single period 1/k for solve, optimize, check-transform
  profile           sin_squared; zero | sin_squared | fourier {cos, sin} (file only)
  phi               [1.0]; polynomial coefficients of the chart height
  phi_slope         none; replaces phi by 1 + slope x
  domain            square_top_chart | unit_disk (solve and optimize only)
  h                 eps/8 capped below at 1/512 on oscillating domains, else 1/32
  h_factor          0.125; mesh size per period
  h_min             0.001953125; smallest mesh size of a sweep
  boundary_refine   4; boundary vertices per mesh size in sweeps
  band_refine       2; cutoff-layer refinement of pullback meshes
  delta             0.2; transition width of the subcritical test function
  intervals         256; grid intervals of the weight table
  samples           32; samples per axis in check-transform
  seed              0; also replaces solver.seed
  output            none; output path (stdout where a stream makes sense)
  verbosity         0
  [solver]          tol_lambda 1e-8, tol_residual 1e-6, max_iter 1000,
                    max_descent_iter 20000, block 4, armijo 1e-4
  [optimizer]       max_iter 50, restarts 3, scan_starts 64, penalty 16,
                    penalty_levels 10
Environment: STEKLOV_THREADS caps the worker count (0 = all cores).";

fn parse_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::config("config", format!("{}: {msg}", path.display()))
}

impl RunConfig {
    /// Reads a TOML file (by extension) or JSON otherwise.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| parse_err(path, e))?;
        if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| parse_err(path, e))
        } else {
            serde_json::from_str(&text).map_err(|e| parse_err(path, e))
        }
    }

    pub fn amplitude_exponent(&self) -> f64 {
        self.a.or(self.regime.map(Regime::default_a)).unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.amplitude_exponent();
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::config("a", format!("amplitude exponent must be positive, got {a}")));
        }
        if let Some(r) = self.regime {
            if Regime::of(a) != r {
                return Err(Error::config("regime", format!("a = {a} is not in the {r:?} regime")));
            }
        }
        if let Some(eps) = self.eps {
            cells_for_eps(eps)?;
        }
        if let Some(h) = self.h {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config("h", format!("mesh size must be positive, got {h}")));
            }
        }
        if self.intervals == 0 {
            return Err(Error::config("intervals", "must be at least 1"));
        }
        if self.band_refine == 0 {
            return Err(Error::config("band_refine", "must be at least 1"));
        }
        self.solver.validate()?;
        self.sweep().validate()
    }

    pub fn oscillation(&self) -> Result<OscillationSpec> {
        OscillationSpec::new(self.profile.clone(), self.amplitude_exponent())
    }

    pub fn chart(&self) -> ChartFn {
        match self.phi_slope {
            Some(s) => ChartFn::affine(self.phi.value(0.0), s),
            None => self.phi.clone(),
        }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            solver: SolverConfig { seed: self.seed, ..self.solver.clone() },
            max_iter: o.max_iter,
            restarts: o.restarts,
            scan_starts: o.scan_starts,
            penalty: o.penalty,
            penalty_levels: o.penalty_levels,
        }
    }

    /// Cell counts to use: `eps` wins over `k` when both are set.
    pub fn cells(&self) -> Result<Vec<usize>> {
        match self.eps {
            Some(eps) => Ok(vec![cells_for_eps(eps)?]),
            None => Ok(self.k.clone()),
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            a: self.amplitude_exponent(),
            alpha: self.alpha,
            p: self.p,
            ks: self.k.clone(),
            profile: self.profile.clone(),
            phi: self.chart(),
            h_factor: self.h_factor,
            h_min: self.h_min,
            boundary_refine: self.boundary_refine,
            delta: self.delta,
            seed: self.seed,
            optimizer: self.optimizer_config(),
        }
    }
}
