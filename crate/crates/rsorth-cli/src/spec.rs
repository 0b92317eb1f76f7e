//! Experiment specification: file schema, defaults, and flag overrides.
//!
//! The config file is JSON with every field optional; command-line flags
//! override file values, and anything still unset falls back to the
//! documented default. Surface sizes default to the smallest feasible
//! dimensions at the chosen `(M, K)`: `N = M·K` for the diagonal surface and
//! the phase-only baseline, `N = M` for the full-matrix surface.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use rsorth::orthogonalizer::SurfaceKind;
use rsorth::power_opt::OptimizerConfig;
use rsorth::ris_baseline::RisOptConfig;
use serde::{Deserialize, Serialize};

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentSpec {
    pub m: usize,
    pub k: usize,
    pub n_aris: usize,
    pub n_fris: usize,
    pub n_ris: usize,
    pub e0_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub es: f64,
    pub n0: f64,
    pub optimizer: OptimizerSettings,
    pub ris_optimizer: RisOptimizerSettings,
}

/// Manifold-descent knobs as they appear in the config file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    pub restarts: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            initial_step: d.initial_step,
            restarts: d.restarts,
        }
    }
}

impl OptimizerSettings {
    pub fn to_config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            initial_step: self.initial_step,
            restarts: self.restarts,
            seed,
        }
    }
}

/// Phase-torus-descent knobs as they appear in the config file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RisOptimizerSettings {
    pub restarts: usize,
    pub max_iters: usize,
    pub fd_step: f64,
    pub initial_step: f64,
    pub step_decay: f64,
}

impl Default for RisOptimizerSettings {
    fn default() -> Self {
        let d = RisOptConfig::default();
        Self {
            restarts: d.restarts,
            max_iters: d.max_iters,
            fd_step: d.fd_step,
            initial_step: d.initial_step,
            step_decay: d.step_decay,
        }
    }
}

impl RisOptimizerSettings {
    pub fn to_config(&self, seed: u64) -> RisOptConfig {
        RisOptConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            fd_step: self.fd_step,
            initial_step: self.initial_step,
            step_decay: self.step_decay,
            seed,
        }
    }
}

/// On-disk schema: everything optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecFile {
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub n_aris: Option<usize>,
    pub n_fris: Option<usize>,
    pub n_ris: Option<usize>,
    pub e0_grid: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub es: Option<f64>,
    pub n0: Option<f64>,
    pub optimizer: Option<OptimizerSettings>,
    pub ris_optimizer: Option<RisOptimizerSettings>,
}

impl SpecFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Values coming from command-line flags; all optional, highest precedence.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m: Option<usize>,
    pub k: Option<usize>,
    /// Applies to the surface selected by `kind` (all kinds when `None`).
    pub n: Option<usize>,
    pub kind: Option<SurfaceKind>,
    pub e0: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

/// Default logarithmic grid spanning `1e-2 .. 1e2` (half-decade steps).
pub fn default_e0_grid() -> Vec<f64> {
    (0..=8).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect()
}

impl ExperimentSpec {
    /// Resolves file values and flag overrides onto the defaults.
    pub fn resolve(file: SpecFile, over: &Overrides) -> anyhow::Result<Self> {
        let m = over.m.or(file.m).unwrap_or(4);
        let k = over.k.or(file.k).unwrap_or(2);
        let mut n_aris = file.n_aris.unwrap_or(m * k);
        let mut n_fris = file.n_fris.unwrap_or(m);
        let mut n_ris = file.n_ris.unwrap_or(m * k);
        match (over.n, over.kind) {
            (Some(n), Some(SurfaceKind::Aris)) => n_aris = n,
            (Some(n), Some(SurfaceKind::Fris)) => n_fris = n,
            (Some(n), Some(SurfaceKind::Ris)) => n_ris = n,
            (Some(n), None) => {
                n_aris = n;
                n_fris = n;
                n_ris = n;
            }
            (None, _) => {}
        }
        let e0_grid = match over.e0 {
            Some(e0) => vec![e0],
            None => file.e0_grid.unwrap_or_else(default_e0_grid),
        };
        let spec = Self {
            m,
            k,
            n_aris,
            n_fris,
            n_ris,
            e0_grid,
            trials: over.trials.or(file.trials).unwrap_or(50),
            seed: over.seed.or(file.seed).unwrap_or(0),
            es: file.es.unwrap_or(1.0),
            n0: file.n0.unwrap_or(0.0),
            optimizer: file.optimizer.unwrap_or_default(),
            ris_optimizer: file.ris_optimizer.unwrap_or_default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.m <= self.k || self.k == 0 {
            bail!("need M > K >= 1, got M={}, K={}", self.m, self.k);
        }
        if self.e0_grid.is_empty() {
            bail!("E0 grid must be non-empty");
        }
        if self.e0_grid.iter().any(|e| !e.is_finite() || *e < 0.0) {
            bail!("E0 grid values must be finite and >= 0");
        }
        if self.trials == 0 {
            bail!("trials must be >= 1");
        }
        if !(self.es > 0.0) {
            bail!("Es must be > 0");
        }
        if self.n0 < 0.0 || !self.n0.is_finite() {
            bail!("N0 must be finite and >= 0");
        }
        Ok(())
    }

    /// Element count used for the given surface kind.
    pub fn n_for(&self, kind: SurfaceKind) -> usize {
        match kind {
            SurfaceKind::Aris => self.n_aris,
            SurfaceKind::Fris => self.n_fris,
            SurfaceKind::Ris => self.n_ris,
        }
    }
}
