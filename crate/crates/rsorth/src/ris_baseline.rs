//! Phase-only baseline: approximate orthogonalization by minimizing the
//! condition number of the effective channel over the phase torus.
//!
//! Perfect orthogonalization is generally out of reach for a unit-modulus
//! diagonal surface, and κ is non-smooth at repeated singular values, so the
//! optimizer is a derivative-free-friendly finite-difference descent with
//! backtracking and multi-start. Best effort by construction; results far
//! from the optimum are possible.

use crate::channel::{effective_channel, ChannelSet};
use crate::linalg::{condition_number, CMatrix};
use crate::orthogonalizer::RsConfig;
use crate::rng::{derive_seed, stream_rng, PHASE_STREAM};
use rand::Rng;
use std::f64::consts::TAU;

/// Knobs of the phase-torus descent.
#[derive(Debug, Clone)]
pub struct RisOptConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Central-difference step for the phase gradient (radians).
    pub fd_step: f64,
    pub initial_step: f64,
    /// Multiplier applied to the step on non-improvement.
    pub step_decay: f64,
    pub seed: u64,
}

impl Default for RisOptConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 300,
            fd_step: 1e-4,
            initial_step: 0.5,
            step_decay: 0.5,
            seed: 0,
        }
    }
}

impl RisOptConfig {
    fn validate(&self) {
        assert!(self.restarts > 0, "restarts must be positive");
        assert!(self.max_iters > 0, "max_iters must be positive");
        assert!(self.fd_step > 0.0, "fd_step must be positive");
        assert!(self.initial_step > 0.0, "initial_step must be positive");
        assert!(
            self.step_decay > 0.0 && self.step_decay < 1.0,
            "step_decay must be in (0, 1)"
        );
    }
}

/// Outcome of the κ minimization: best phases, their κ, and the κ values of
/// the accepted steps of the winning restart.
#[derive(Debug, Clone)]
pub struct RisOptResult {
    pub phases: Vec<f64>,
    pub kappa: f64,
    pub trace: Vec<f64>,
}

/// κ of the effective channel for unit-modulus phases.
///
/// Panics if `phases.len() != N`; a (measure-zero) all-cancelling channel
/// reports `+∞`.
pub fn kappa_objective(cs: &ChannelSet, phases: &[f64]) -> f64 {
    assert_eq!(phases.len(), cs.n(), "expected one phase per surface element");
    let config = RsConfig::Ris {
        phases: phases.to_vec(),
    };
    let h = effective_channel(cs, &config).expect("dimensions checked above");
    condition_number(&h).unwrap_or(f64::INFINITY)
}

/// Multi-start finite-difference descent of [`kappa_objective`] over the
/// phase torus; returns the best phases found and their κ.
pub fn minimize_condition_number(cs: &ChannelSet, cfg: &RisOptConfig) -> RisOptResult {
    cfg.validate();
    let n = cs.n();
    if n == 0 {
        let kappa = kappa_objective(cs, &[]);
        return RisOptResult {
            phases: Vec::new(),
            kappa,
            trace: vec![kappa],
        };
    }
    let mut best: Option<RisOptResult> = None;
    for restart in 0..cfg.restarts {
        let phases0 = if restart == 0 {
            vec![0.0; n]
        } else {
            let mut rng = stream_rng(derive_seed(cfg.seed, &[restart as u64]), PHASE_STREAM);
            (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
        };
        let run = descend(cs, phases0, cfg);
        if best.as_ref().is_none_or(|b| run.kappa < b.kappa) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

fn descend(cs: &ChannelSet, mut phases: Vec<f64>, cfg: &RisOptConfig) -> RisOptResult {
    let n = phases.len();
    let mut kappa = kappa_objective(cs, &phases);
    let mut trace = vec![kappa];
    let mut step = cfg.initial_step;
    let mut probe = phases.clone();
    for _ in 0..cfg.max_iters {
        // Central finite differences on the torus.
        let mut grad = vec![0.0; n];
        for i in 0..n {
            probe.copy_from_slice(&phases);
            probe[i] = wrap(phases[i] + cfg.fd_step);
            let up = kappa_objective(cs, &probe);
            probe[i] = wrap(phases[i] - cfg.fd_step);
            let down = kappa_objective(cs, &probe);
            grad[i] = (up - down) / (2.0 * cfg.fd_step);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        // Backtrack until the move improves κ.
        let mut improved = false;
        while step >= 1e-10 {
            let candidate: Vec<f64> = phases
                .iter()
                .zip(&grad)
                .map(|(&p, &g)| wrap(p - step * g))
                .collect();
            let cand_kappa = kappa_objective(cs, &candidate);
            if cand_kappa < kappa {
                phases = candidate;
                kappa = cand_kappa;
                trace.push(kappa);
                improved = true;
                break;
            }
            step *= cfg.step_decay;
        }
        if !improved {
            break;
        }
    }
    RisOptResult {
        phases,
        kappa,
        trace,
    }
}

fn wrap(phase: f64) -> f64 {
    phase.rem_euclid(TAU)
}

/// Per-user channel gains: eigenvalues of `HᴴH`, ascending. Equal gains (up
/// to κ²) mean the surface has nearly orthogonalized the channel.
pub fn per_ue_gains(cs: &ChannelSet, phases: &[f64]) -> Vec<f64> {
    let config = RsConfig::Ris {
        phases: phases.to_vec(),
    };
    let h = effective_channel(cs, &config).expect("dimensions checked by caller");
    gains_of(&h)
}

/// Eigenvalues of `HᴴH`, ascending.
pub fn gains_of(h: &CMatrix) -> Vec<f64> {
    let gram = h.adjoint() * h;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut gains: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    gains.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    gains
}
