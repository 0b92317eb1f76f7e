//! Surface sum-power objectives and their minimization over the semi-unitary
//! manifold.
//!
//! Both surface families admit the same scalar structure: the power needed
//! to reach the target `√β·Ũ` is `P(β, Ũ) = β·g(Ũ) − 2√β·f(Ũ) + c`, a
//! parabola in `√β` whose vertex `β = (f/g)²` is eliminated analytically at
//! every step. The remaining objective `P(β_opt(Ũ), Ũ) = c + b·f²/g` with
//! `b = 1 − 2·sign(f)` is minimized by steepest descent along geodesics of
//! the unitary group with Armijo step control; the analytic gradients are
//! validated against a central finite-difference oracle.

use crate::channel::ChannelSet;
use crate::error::Error;
use crate::linalg::{
    expm_skew_hermitian, orthonormality_defect, random_semi_unitary, unvec, vec, CMatrix,
    SemiUnitary, C64,
};
use crate::orthogonalizer::{build_cascade_matrix, SurfaceKind};
use crate::rng::derive_seed;
use crate::Result;

/// Cached quadratic-form operators for one channel realization.
///
/// Construction inverts the relevant Gram operators once and verifies they
/// are Hermitian positive definite; all later evaluations are matrix-vector
/// products.
#[derive(Debug, Clone)]
pub struct PowerObjective {
    kind: SurfaceKind,
    m: usize,
    k: usize,
    constant: f64,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    /// Diagonal surface: `G12⁻¹` (MK × MK) and `G12⁻¹·vec(H0)`.
    Aris { g12_inv: CMatrix, w: CMatrix },
    /// Full-matrix surface: `G1⁻¹` (M × M), `G2⁻¹` (K × K) and
    /// `A = G1⁻¹·H0·G2⁻¹`.
    Fris {
        g1_inv: CMatrix,
        g2_inv: CMatrix,
        a: CMatrix,
    },
}

impl PowerObjective {
    pub fn new(cs: &ChannelSet, kind: SurfaceKind) -> Result<Self> {
        let (m, k, n) = (cs.m(), cs.k(), cs.n());
        match kind {
            SurfaceKind::Aris => {
                if n < m * k {
                    return Err(Error::InfeasibleN { n, required: m * k });
                }
                let cascade = build_cascade_matrix(cs.h1(), cs.h2())?;
                let g12 = &cascade * cascade.adjoint();
                let g12_inv = crate::linalg::invert_hermitian(&g12).ok_or_else(|| {
                    Error::NotPositiveDefinite("cascade Gram operator".into())
                })?;
                let vec_h0 = vec(cs.h0());
                let w = &g12_inv * &vec_h0;
                let constant = (vec_h0.adjoint() * &w)[(0, 0)].re;
                Ok(Self {
                    kind,
                    m,
                    k,
                    constant,
                    repr: Repr::Aris { g12_inv, w },
                })
            }
            SurfaceKind::Fris => {
                if n < m {
                    return Err(Error::InfeasibleN { n, required: m });
                }
                let g1 = cs.h1() * cs.h1().adjoint();
                let g1_inv = crate::linalg::invert_hermitian(&g1)
                    .ok_or_else(|| Error::NotPositiveDefinite("H1·H1ᴴ".into()))?;
                let g2 = cs.h2().adjoint() * cs.h2();
                let g2_inv = crate::linalg::invert_hermitian(&g2)
                    .ok_or_else(|| Error::NotPositiveDefinite("H2ᴴ·H2".into()))?;
                let a = &g1_inv * cs.h0() * &g2_inv;
                let constant = frobenius_inner(cs.h0(), &a).re;
                Ok(Self {
                    kind,
                    m,
                    k,
                    constant,
                    repr: Repr::Fris { g1_inv, g2_inv, a },
                })
            }
            SurfaceKind::Ris => Err(Error::NotApplicable(
                "power objective for a phase-only surface".into(),
            )),
        }
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The constant term `c` of the power parabola (power of nulling the
    /// direct channel entirely).
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `(f, g)` coefficients at an arbitrary `M × K` point (not necessarily
    /// on the manifold, which the finite-difference oracle relies on).
    pub fn coefficients(&self, u: &CMatrix) -> (f64, f64) {
        match &self.repr {
            Repr::Aris { g12_inv, w } => {
                let v = vec(u);
                let f = (v.adjoint() * w)[(0, 0)].re;
                let g = (v.adjoint() * (g12_inv * &v))[(0, 0)].re;
                (f, g)
            }
            Repr::Fris { g1_inv, g2_inv, a } => {
                let f = frobenius_inner(u, a).re;
                let g = frobenius_inner(u, &(g1_inv * u * g2_inv)).re;
                (f, g)
            }
        }
    }

    /// Sum power `β·g − 2√β·f + c` required to reach `√β·u`.
    pub fn power(&self, beta: f64, u: &CMatrix) -> f64 {
        let (f, g) = self.coefficients(u);
        beta * g - 2.0 * beta.sqrt() * f + self.constant
    }

    /// Stationary gain `β = (f/g)²` of the parabola in `√β`.
    pub fn beta_opt_at(&self, u: &CMatrix) -> f64 {
        let (f, g) = self.coefficients(u);
        (f / g).powi(2)
    }

    /// The β-eliminated objective `P(β_opt(u), u) = c + b·f²/g`.
    pub fn power_at_beta_opt(&self, u: &CMatrix) -> f64 {
        let (f, g) = self.coefficients(u);
        self.constant + sign_factor(f) * f * f / g
    }

    /// Euclidean (Wirtinger, `∂/∂Ũ*`) gradient of [`Self::power_at_beta_opt`],
    /// `(b/g²)·(−f²·∇g·/1 + f·g·∇f·2)` assembled per surface kind.
    pub fn euclidean_grad(&self, u: &CMatrix) -> CMatrix {
        let (f, g) = self.coefficients(u);
        let b = sign_factor(f);
        let scale = b / (g * g);
        match &self.repr {
            Repr::Aris { g12_inv, w } => {
                let v = vec(u);
                let grad_vec = (w.map(|z| z * (f * g)) - (g12_inv * v).map(|z| z * (f * f)))
                    .map(|z| z * scale);
                unvec(&grad_vec, self.m, self.k).expect("gradient reshape")
            }
            Repr::Fris { g1_inv, g2_inv, a } => {
                let quad = g1_inv * u * g2_inv;
                (a.map(|z| z * (f * g)) - quad.map(|z| z * (f * f))).map(|z| z * scale)
            }
        }
    }
}

/// `b = 1 − 2·sign(f)`: −1 when the linear coefficient is positive, +3 when
/// negative, +1 at zero (where the gradient vanishes anyway).
fn sign_factor(f: f64) -> f64 {
    if f > 0.0 {
        -1.0
    } else if f < 0.0 {
        3.0
    } else {
        1.0
    }
}

/// `tr(Xᴴ·Y)`, the Frobenius inner product.
fn frobenius_inner(x: &CMatrix, y: &CMatrix) -> C64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// Diagonal-surface sum power `P_A(β, Ũ)`.
///
/// Panics if `obj` was built for another surface kind.
pub fn pa_power(obj: &PowerObjective, beta: f64, u: &SemiUnitary) -> f64 {
    assert_eq!(obj.kind(), SurfaceKind::Aris, "objective kind mismatch");
    obj.power(beta, u.matrix())
}

/// Full-matrix-surface sum power `P_F(β, Ũ)`.
pub fn pf_power(obj: &PowerObjective, beta: f64, u: &SemiUnitary) -> f64 {
    assert_eq!(obj.kind(), SurfaceKind::Fris, "objective kind mismatch");
    obj.power(beta, u.matrix())
}

/// Power-minimizing gain `β = (f/g)²` for a fixed target direction.
pub fn beta_opt(obj: &PowerObjective, u: &SemiUnitary) -> f64 {
    obj.beta_opt_at(u.matrix())
}

/// Analytic gradient of the β-optimized diagonal-surface power.
pub fn euclidean_grad_pa(obj: &PowerObjective, u: &SemiUnitary) -> CMatrix {
    assert_eq!(obj.kind(), SurfaceKind::Aris, "objective kind mismatch");
    obj.euclidean_grad(u.matrix())
}

/// Analytic gradient of the β-optimized full-matrix-surface power.
pub fn euclidean_grad_pf(obj: &PowerObjective, u: &SemiUnitary) -> CMatrix {
    assert_eq!(obj.kind(), SurfaceKind::Fris, "objective kind mismatch");
    obj.euclidean_grad(u.matrix())
}

/// Central finite differences of a real function of a complex matrix,
/// assembled in the Wirtinger `∂/∂X*` convention
/// (`½(∂/∂Re + i·∂/∂Im)` per entry).
pub fn fd_wirtinger<F>(func: F, x: &CMatrix, step: f64) -> CMatrix
where
    F: Fn(&CMatrix) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut grad = CMatrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + C64::new(step, 0.0);
            let fp = func(&probe);
            probe[(i, j)] = orig - C64::new(step, 0.0);
            let fm = func(&probe);
            let d_re = (fp - fm) / (2.0 * step);
            probe[(i, j)] = orig + C64::new(0.0, step);
            let fp = func(&probe);
            probe[(i, j)] = orig - C64::new(0.0, step);
            let fm = func(&probe);
            let d_im = (fp - fm) / (2.0 * step);
            probe[(i, j)] = orig;
            grad[(i, j)] = C64::new(0.5 * d_re, 0.5 * d_im);
        }
    }
    grad
}

/// Finite-difference oracle for the β-optimized power objective.
pub fn finite_diff_grad(obj: &PowerObjective, u: &SemiUnitary, step: f64) -> CMatrix {
    fd_wirtinger(|x| obj.power_at_beta_opt(x), u.matrix(), step)
}

/// Knobs of the geodesic descent.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop when the Riemannian direction `‖ΓŨᴴ − ŨΓᴴ‖_fro` falls below this.
    pub grad_tol: f64,
    pub initial_step: f64,
    /// Number of initializations tried (the given start plus Haar-random
    /// restarts); the best final value wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: 1e-6,
            initial_step: 1e-2,
            restarts: 8,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) {
        assert!(self.max_iters > 0, "max_iters must be positive");
        assert!(self.grad_tol > 0.0, "grad_tol must be positive");
        assert!(self.initial_step > 0.0, "initial_step must be positive");
        assert!(self.restarts > 0, "restarts must be positive");
    }
}

/// One accepted descent iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Outcome of a descent run (best restart when several were tried).
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub u_star: SemiUnitary,
    pub beta_star: f64,
    pub p_min: f64,
    pub trace: Vec<TracePoint>,
    pub converged: bool,
}

/// Step size below which the Armijo search declares stagnation.
const MIN_STEP: f64 = 1e-12;

/// Orthonormality drift that triggers re-orthonormalization of the iterate.
const DRIFT_LIMIT: f64 = 1e-10;

/// Steepest descent along geodesics of the unitary group, from `u0` plus
/// `cfg.restarts − 1` Haar-random initializations; returns the best run.
///
/// Non-convergence is reported through [`OptimResult::converged`], never as
/// an error.
pub fn riemannian_descent(
    obj: &PowerObjective,
    u0: &SemiUnitary,
    cfg: &OptimizerConfig,
) -> OptimResult {
    cfg.validate();
    let mut best = descent_from(obj, u0.matrix().clone(), cfg);
    for restart in 1..cfg.restarts {
        let seed = derive_seed(cfg.seed, &[restart as u64]);
        let init = random_semi_unitary(obj.m(), obj.k(), seed);
        let run = descent_from(obj, init.into_matrix(), cfg);
        if run.p_min < best.p_min {
            best = run;
        }
    }
    best
}

/// Single descent run.
///
/// The objective depends only on the first `K` columns of the full unitary
/// iterate, and for a zero-padded gradient `Γ_full = [Γ 0]` the direction
/// satisfies `Γ_full·Uᴴ − U·Γ_fullᴴ = Γ·Ũᴴ − Ũ·Γᴴ`, so only the `M × K`
/// block is ever materialized.
fn descent_from(obj: &PowerObjective, mut u: CMatrix, cfg: &OptimizerConfig) -> OptimResult {
    let mut mu = cfg.initial_step;
    let mut objective = obj.power_at_beta_opt(&u);
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 0..cfg.max_iters {
        let gamma = obj.euclidean_grad(&u);
        let direction = &gamma * u.adjoint() - &u * gamma.adjoint();
        let dir_norm_sq = direction.norm_squared();
        let dir_norm = dir_norm_sq.sqrt();
        trace.push(TracePoint {
            iteration,
            objective,
            grad_norm: dir_norm,
            step: mu,
        });
        if dir_norm < cfg.grad_tol {
            converged = true;
            break;
        }

        let Some((new_mu, rotation, candidate_obj)) =
            armijo_search(obj, &u, objective, &direction, dir_norm_sq, mu)
        else {
            break; // stagnated: no acceptable step above MIN_STEP
        };
        mu = new_mu;
        let mut candidate = rotation * &u;
        let mut cand_obj = candidate_obj;
        if orthonormality_defect(&candidate) > DRIFT_LIMIT {
            candidate = crate::linalg::orthonormalize(&candidate).into_matrix();
            cand_obj = obj.power_at_beta_opt(&candidate);
        }
        if cand_obj > objective {
            break; // re-orthonormalization ate the decrease; stop honestly
        }
        u = candidate;
        objective = cand_obj;
    }

    let beta_star = obj.beta_opt_at(&u);
    let u_star = if orthonormality_defect(&u) > DRIFT_LIMIT {
        crate::linalg::orthonormalize(&u)
    } else {
        SemiUnitary::new(u).expect("iterate drifted off the manifold")
    };
    OptimResult {
        u_star,
        beta_star,
        p_min: objective,
        trace,
        converged,
    }
}

/// Armijo step control over geodesics: double `μ` while the decrease at `2μ`
/// beats `μ·‖G‖²`, halve while the decrease at `μ` misses `(μ/2)·‖G‖²`.
///
/// Returns `(μ, exp(−μG), objective at the stepped point)`, or `None` when
/// `μ` would fall below [`MIN_STEP`].
fn armijo_search(
    obj: &PowerObjective,
    u: &CMatrix,
    objective: f64,
    direction: &CMatrix,
    dir_norm_sq: f64,
    mut mu: f64,
) -> Option<(f64, CMatrix, f64)> {
    let rot = |step: f64| {
        expm_skew_hermitian(&direction.map(|z| z * C64::new(-step, 0.0)))
            .expect("descent direction is skew-Hermitian by construction")
    };
    let eval = |r: &CMatrix| obj.power_at_beta_opt(&(r * u));

    let mut r_mu = rot(mu);
    let mut p_mu = eval(&r_mu);
    let mut r_2mu = &r_mu * &r_mu;
    let mut p_2mu = eval(&r_2mu);

    if objective - p_2mu >= mu * dir_norm_sq {
        while objective - p_2mu >= mu * dir_norm_sq && mu.is_finite() {
            mu *= 2.0;
            r_mu = r_2mu;
            p_mu = p_2mu;
            r_2mu = &r_mu * &r_mu;
            p_2mu = eval(&r_2mu);
        }
        return Some((mu, r_mu, p_mu));
    }

    while objective - p_mu < 0.5 * mu * dir_norm_sq {
        mu *= 0.5;
        if mu < MIN_STEP {
            return None;
        }
        r_mu = rot(mu);
        p_mu = eval(&r_mu);
    }
    Some((mu, r_mu, p_mu))
}

/// Minimum surface sum power for orthogonalizing one channel realization:
/// builds the objective, runs the multi-start geodesic descent, and reports
/// the best `(β*, Ũ*, P_min)` found.
pub fn minimize_power(
    cs: &ChannelSet,
    kind: SurfaceKind,
    cfg: &OptimizerConfig,
) -> Result<OptimResult> {
    let obj = PowerObjective::new(cs, kind)?;
    let u0 = random_semi_unitary(cs.m(), cs.k(), derive_seed(cfg.seed, &[0]));
    Ok(riemannian_descent(&obj, &u0, cfg))
}
