//! Desk-scale consistency checks across module boundaries.
//!
//! Each check exercises an identity two independent code paths must agree
//! on: the closed-form solvers against the power expressions, the analytic
//! gradients against finite differences, and the noiseless protocols against
//! the true channels. `corrupt_gradient` flips the analytic gradient's sign
//! before the comparison, as a negative control that the gradient check can
//! actually fail.

use std::time::Instant;

use rsorth::channel::generate_iid_rayleigh;
use rsorth::estimation::{end_to_end_configure, PilotPlan};
use rsorth::linalg::{expm_skew_hermitian, random_semi_unitary, right_pinv, CMatrix};
use rsorth::orthogonalizer::{rs_sum_power, solve_aris, solve_fris, SurfaceKind, TargetChannel};
use rsorth::power_opt::{finite_diff_grad, PowerObjective};
use rsorth::rng::stream_rng;

/// One check's outcome.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

/// Full selftest outcome.
#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
    pub wall_time_s: f64,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn worst(mut acc: f64, v: f64) -> f64 {
    if v.is_nan() {
        return f64::NAN;
    }
    if acc.is_nan() {
        acc = v;
    }
    acc.max(v)
}

/// Runs every cross-module oracle at `(M, K) = (4, 2)` desk scale.
pub fn run_selftest(seed: u64, corrupt_gradient: bool) -> SelftestReport {
    let started = Instant::now();
    let mut checks = Vec::new();
    let plan = PilotPlan::identity(2, 0.0, 1.0).expect("valid plan");
    let grad_sign = if corrupt_gradient { -1.0 } else { 1.0 };

    // Power expression vs squared norm of the closed-form solution.
    for (kind, n, name) in [
        (SurfaceKind::Aris, 8, "power_identity_aris"),
        (SurfaceKind::Fris, 4, "power_identity_fris"),
    ] {
        let mut measured = f64::NAN;
        for t in 0..10u64 {
            let cs = generate_iid_rayleigh(4, 2, n, 1.0, seed ^ (t + 1)).unwrap();
            let obj = PowerObjective::new(&cs, kind).unwrap();
            let u = random_semi_unitary(4, 2, seed ^ (100 + t));
            let beta = 0.5 + 0.3 * t as f64;
            let target = TargetChannel::new(beta, u.clone()).unwrap();
            let config = match kind {
                SurfaceKind::Aris => solve_aris(&cs, &target).unwrap(),
                _ => solve_fris(&cs, &target).unwrap(),
            };
            let direct = rs_sum_power(&config);
            let rel = (obj.power(beta, u.matrix()) - direct).abs() / direct;
            measured = worst(measured, rel);
        }
        checks.push(CheckResult {
            name,
            passed: measured <= 1e-9,
            measured,
            tolerance: 1e-9,
        });
    }

    // Analytic gradient vs central finite differences.
    for (kind, n, name) in [
        (SurfaceKind::Aris, 8, "gradient_fd_aris"),
        (SurfaceKind::Fris, 4, "gradient_fd_fris"),
    ] {
        let mut measured = f64::NAN;
        for t in 0..5u64 {
            let cs = generate_iid_rayleigh(4, 2, n, 1.0, seed ^ (200 + t)).unwrap();
            let obj = PowerObjective::new(&cs, kind).unwrap();
            let u = random_semi_unitary(4, 2, seed ^ (300 + t));
            let analytic = obj.euclidean_grad(u.matrix()).map(|z| z * grad_sign);
            let fd = finite_diff_grad(&obj, &u, 1e-6);
            measured = worst(measured, (&analytic - &fd).norm() / fd.norm());
        }
        checks.push(CheckResult {
            name,
            passed: measured <= 1e-4,
            measured,
            tolerance: 1e-4,
        });
    }

    // Noiseless protocol round-trips, slot ledger included.
    for (kind, n, slots, name) in [
        (SurfaceKind::Aris, 8, 18, "protocol_roundtrip_aris"),
        (SurfaceKind::Fris, 4, 8, "protocol_roundtrip_fris"),
    ] {
        let mut measured = f64::NAN;
        let mut ledger_ok = true;
        for t in 0..5u64 {
            let cs = generate_iid_rayleigh(4, 2, n, 1.0, seed ^ (400 + t)).unwrap();
            let target =
                TargetChannel::new(1.0, random_semi_unitary(4, 2, seed ^ (500 + t))).unwrap();
            let report = end_to_end_configure(&cs, kind, &target, &plan, seed ^ (600 + t)).unwrap();
            measured = worst(measured, report.residual);
            ledger_ok &= report.pilot_slots_used == slots;
        }
        checks.push(CheckResult {
            name,
            passed: measured <= 1e-7 && ledger_ok,
            measured,
            tolerance: 1e-7,
        });
    }

    // Pseudo-inverse residual.
    {
        let mut rng = stream_rng(seed, 9);
        let a = rsorth::linalg::standard_complex_gaussian(2, 4, &mut rng);
        let p = right_pinv(&a).unwrap();
        let measured = (&a * p - CMatrix::identity(2, 2)).norm();
        checks.push(CheckResult {
            name: "right_pinv_residual",
            passed: measured <= 1e-10,
            measured,
            tolerance: 1e-10,
        });
    }

    // Geodesic rotation unitarity.
    {
        let mut rng = stream_rng(seed, 10);
        let a = rsorth::linalg::standard_complex_gaussian(4, 4, &mut rng);
        let g = &a - a.adjoint();
        let e = expm_skew_hermitian(&g).unwrap();
        let measured = (e.adjoint() * &e - CMatrix::identity(4, 4)).norm();
        checks.push(CheckResult {
            name: "expm_unitarity",
            passed: measured <= 1e-10,
            measured,
            tolerance: 1e-10,
        });
    }

    SelftestReport {
        checks,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}
