//! Closed-form surface configurations achieving `H = √β·Ũ`.
//!
//! The diagonal-surface solver works entirely through the cascade matrix
//! whose columns are the vectorized rank-1 element responses, so it can be
//! fed either true channels or the estimates produced by the pilot
//! protocols. Feasibility (element-count) failures are reported before
//! numerical rank failures, with distinct errors.

use crate::channel::ChannelSet;
use crate::error::Error;
use crate::linalg::{left_pinv, right_pinv, unvec, vec, CMatrix, SemiUnitary, C64};
use crate::Result;

/// Reconfigurable-surface families compared throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    /// Phase-only surface: `Θ = diag(e^{jφ})`.
    Ris,
    /// Amplitude-and-phase surface: `Θ = diag(α)`, arbitrary complex `α`.
    Aris,
    /// Fully reconfigurable surface: arbitrary `N × N` complex `Θ`.
    Fris,
}

impl SurfaceKind {
    pub fn label(&self) -> &'static str {
        match self {
            SurfaceKind::Ris => "ris",
            SurfaceKind::Aris => "aris",
            SurfaceKind::Fris => "fris",
        }
    }
}

impl std::str::FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ris" => Ok(SurfaceKind::Ris),
            "aris" => Ok(SurfaceKind::Aris),
            "fris" => Ok(SurfaceKind::Fris),
            other => Err(Error::Parse(format!("unknown surface kind `{other}`"))),
        }
    }
}

/// A concrete surface configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum RsConfig {
    Ris { phases: Vec<f64> },
    Aris { gains: Vec<C64> },
    Fris { theta: CMatrix },
}

impl RsConfig {
    /// Number of surface elements.
    pub fn n(&self) -> usize {
        match self {
            RsConfig::Ris { phases } => phases.len(),
            RsConfig::Aris { gains } => gains.len(),
            RsConfig::Fris { theta } => theta.nrows(),
        }
    }

    pub fn kind(&self) -> SurfaceKind {
        match self {
            RsConfig::Ris { .. } => SurfaceKind::Ris,
            RsConfig::Aris { .. } => SurfaceKind::Aris,
            RsConfig::Fris { .. } => SurfaceKind::Fris,
        }
    }

    /// The full `N × N` reflection matrix this configuration applies.
    pub fn reflection_matrix(&self) -> CMatrix {
        match self {
            RsConfig::Ris { phases } => CMatrix::from_fn(phases.len(), phases.len(), |i, j| {
                if i == j {
                    C64::new(phases[i].cos(), phases[i].sin())
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            RsConfig::Aris { gains } => CMatrix::from_fn(gains.len(), gains.len(), |i, j| {
                if i == j {
                    gains[i]
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            RsConfig::Fris { theta } => theta.clone(),
        }
    }
}

/// Desired orthogonal channel `√β·Ũ` with per-user gain `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetChannel {
    beta: f64,
    u_tilde: SemiUnitary,
}

impl TargetChannel {
    pub fn new(beta: f64, u_tilde: SemiUnitary) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidDims(format!(
                "target gain must be finite and > 0, got {beta}"
            )));
        }
        Ok(Self { beta, u_tilde })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn u_tilde(&self) -> &SemiUnitary {
        &self.u_tilde
    }

    /// The implied channel matrix `√β·Ũ`, which satisfies `HᴴH = β·I_K`.
    pub fn matrix(&self) -> CMatrix {
        let s = self.beta.sqrt();
        self.u_tilde.matrix().map(|z| z * s)
    }
}

/// The `MK × N` cascade matrix: column `n` is `vec(h_{1n}·h_{2n}ᵀ)` for
/// column `n` of `H1` and row `n` of `H2` (plain transpose, no conjugation).
///
/// Satisfies `𝓗12·α = vec(H1·diag(α)·H2)` for every `α`.
pub fn build_cascade_matrix(h1: &CMatrix, h2: &CMatrix) -> Result<CMatrix> {
    if h1.ncols() != h2.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "H1 is {}x{} but H2 is {}x{}",
            h1.nrows(),
            h1.ncols(),
            h2.nrows(),
            h2.ncols()
        )));
    }
    let (m, n) = (h1.nrows(), h1.ncols());
    let k = h2.ncols();
    let mut cascade = CMatrix::zeros(m * k, n);
    for e in 0..n {
        let col = h1.column(e);
        let row = h2.row(e);
        // vec(col·rowᵀ) column-major: entry (i + j·m) = col[i]·row[j].
        for j in 0..k {
            for i in 0..m {
                cascade[(i + j * m, e)] = col[i] * row[j];
            }
        }
    }
    Ok(cascade)
}

/// Diagonal surface gains that turn `(H0, 𝓗12)` into the `desired` channel:
/// the minimum-norm solution `α = 𝓗12†·vec(desired − H0)`.
///
/// This is the arbitrary-target entry point; it is also what the estimation
/// protocol feeds with estimated quantities.
pub fn solve_aris_for_matrix(
    cascade: &CMatrix,
    h0: &CMatrix,
    desired: &CMatrix,
) -> Result<Vec<C64>> {
    if h0.shape() != desired.shape() {
        return Err(Error::DimensionMismatch(format!(
            "H0 is {}x{} but target is {}x{}",
            h0.nrows(),
            h0.ncols(),
            desired.nrows(),
            desired.ncols()
        )));
    }
    let mk = h0.nrows() * h0.ncols();
    if cascade.nrows() != mk {
        return Err(Error::DimensionMismatch(format!(
            "cascade has {} rows, expected M·K = {mk}",
            cascade.nrows()
        )));
    }
    if cascade.ncols() < mk {
        return Err(Error::InfeasibleN {
            n: cascade.ncols(),
            required: mk,
        });
    }
    let rhs = vec(&(desired - h0));
    let alpha = right_pinv(cascade)? * rhs;
    Ok(alpha.column(0).iter().copied().collect())
}

/// Diagonal surface configuration achieving `H = √β·Ũ` exactly.
///
/// Requires `N ≥ M·K` and a full-row-rank cascade matrix; the returned gain
/// vector has minimum norm among all exact solutions.
pub fn solve_aris(cs: &ChannelSet, target: &TargetChannel) -> Result<RsConfig> {
    check_target_dims(cs, target)?;
    let cascade = build_cascade_matrix(cs.h1(), cs.h2())?;
    let gains = solve_aris_for_matrix(&cascade, cs.h0(), &target.matrix())?;
    Ok(RsConfig::Aris { gains })
}

/// Full reflection matrix turning `(H0, H1, H2)` into the `desired` channel:
/// `Θ = H1†·(desired − H0)·H2†` with the right pseudo-inverse of `H1` and
/// the left pseudo-inverse of `H2`.
pub fn solve_fris_for_matrix(
    h0: &CMatrix,
    h1: &CMatrix,
    h2: &CMatrix,
    desired: &CMatrix,
) -> Result<CMatrix> {
    if h0.shape() != desired.shape() {
        return Err(Error::DimensionMismatch(format!(
            "H0 is {}x{} but target is {}x{}",
            h0.nrows(),
            h0.ncols(),
            desired.nrows(),
            desired.ncols()
        )));
    }
    let m = h1.nrows();
    let n = h1.ncols();
    if n < m {
        return Err(Error::InfeasibleN { n, required: m });
    }
    let h1_pinv = right_pinv(h1)?;
    let h2_pinv = left_pinv(h2)?;
    Ok(h1_pinv * (desired - h0) * h2_pinv)
}

/// Full-matrix surface configuration achieving `H = √β·Ũ` exactly.
///
/// Requires `N ≥ M`, `H1` of full row rank and `H2` of full column rank.
pub fn solve_fris(cs: &ChannelSet, target: &TargetChannel) -> Result<RsConfig> {
    check_target_dims(cs, target)?;
    let theta = solve_fris_for_matrix(cs.h0(), cs.h1(), cs.h2(), &target.matrix())?;
    Ok(RsConfig::Fris { theta })
}

fn check_target_dims(cs: &ChannelSet, target: &TargetChannel) -> Result<()> {
    if target.u_tilde().m() != cs.m() || target.u_tilde().k() != cs.k() {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{}, channel set expects {}x{}",
            target.u_tilde().m(),
            target.u_tilde().k(),
            cs.m(),
            cs.k()
        )));
    }
    Ok(())
}

/// Surface sum power `‖Θ‖²_fro`; exactly `N` for the phase-only surface.
pub fn rs_sum_power(theta: &RsConfig) -> f64 {
    match theta {
        RsConfig::Ris { phases } => phases.len() as f64,
        RsConfig::Aris { gains } => gains.iter().map(|g| g.norm_sqr()).sum(),
        RsConfig::Fris { theta } => theta.norm_squared(),
    }
}

/// Minimum number of surface elements for perfect orthogonalization:
/// `M·K` for the diagonal surface, `min(M,K)` for the full-matrix surface,
/// undefined for the phase-only surface.
pub fn min_elements(kind: SurfaceKind, m: usize, k: usize) -> Result<usize> {
    if m <= k {
        return Err(Error::InvalidDims(format!("need M > K, got M={m}, K={k}")));
    }
    match kind {
        SurfaceKind::Aris => Ok(m * k),
        SurfaceKind::Fris => Ok(m.min(k)),
        SurfaceKind::Ris => Err(Error::NotApplicable(
            "perfect orthogonalization with a phase-only surface".into(),
        )),
    }
}

/// Relative residual `‖achieved − desired‖ / ‖desired‖`.
pub fn relative_residual(achieved: &CMatrix, desired: &CMatrix) -> f64 {
    (achieved - desired).norm() / desired.norm()
}

/// `‖HᴴH − β·I_K‖_fro`, the orthogonality defect of an achieved channel.
pub fn orthogonality_defect(h: &CMatrix, beta: f64) -> f64 {
    let k = h.ncols();
    let eye = CMatrix::identity(k, k).map(|z| z * beta);
    (h.adjoint() * h - eye).norm()
}

/// Recovers `unvec` dimensions when applying a cascade-matrix product as a
/// channel perturbation (test and estimation helper).
pub fn cascade_apply(cascade: &CMatrix, gains: &[C64], m: usize, k: usize) -> Result<CMatrix> {
    if cascade.ncols() != gains.len() {
        return Err(Error::DimensionMismatch(format!(
            "cascade has {} columns but {} gains given",
            cascade.ncols(),
            gains.len()
        )));
    }
    let alpha = CMatrix::from_fn(gains.len(), 1, |i, _| gains[i]);
    unvec(&(cascade * alpha), m, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_channel, generate_iid_rayleigh};
    use crate::linalg::random_semi_unitary;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_complex(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = stream_rng(seed, 98);
        crate::linalg::standard_complex_gaussian(rows, cols, &mut rng)
    }

    #[test]
    fn cascade_scalar_case() {
        let h1 = CMatrix::from_element(1, 1, c(2.0, 1.0));
        let h2 = CMatrix::from_element(1, 1, c(-1.0, 3.0));
        let cascade = build_cascade_matrix(&h1, &h2).unwrap();
        assert_eq!(cascade.shape(), (1, 1));
        assert!((cascade[(0, 0)] - c(2.0, 1.0) * c(-1.0, 3.0)).norm() < 1e-15);
    }

    #[test]
    fn cascade_columns_are_vectorized_outer_products() {
        let h1 = random_complex(3, 4, 41);
        let h2 = random_complex(4, 2, 42);
        let cascade = build_cascade_matrix(&h1, &h2).unwrap();
        assert_eq!(cascade.shape(), (6, 4));
        for n in 0..4 {
            let outer = h1.column(n) * h2.row(n);
            let v = vec(&outer.into_owned());
            assert!((cascade.column(n) - v.column(0)).norm() < 1e-14);
        }
    }

    #[test]
    fn cascade_product_matches_diagonal_composition() {
        let h1 = random_complex(3, 5, 43);
        let h2 = random_complex(5, 2, 44);
        let alpha: Vec<C64> = (0..5)
            .map(|i| c(0.3 * i as f64 - 0.7, 0.2 * i as f64 + 0.1))
            .collect();
        let cascade = build_cascade_matrix(&h1, &h2).unwrap();
        let via_cascade = cascade_apply(&cascade, &alpha, 3, 2).unwrap();
        let diag = CMatrix::from_fn(5, 5, |i, j| if i == j { alpha[i] } else { c(0.0, 0.0) });
        let direct = &h1 * diag * &h2;
        assert!((via_cascade - direct).norm() < 1e-12);
    }

    #[test]
    fn solve_aris_zero_when_direct_channel_is_target() {
        let m = 2;
        let k = 1;
        let n = 2;
        let u = random_semi_unitary(m, k, 50);
        let target = TargetChannel::new(2.5, u).unwrap();
        let h0 = target.matrix();
        let cs = ChannelSet::from_parts(h0, random_complex(m, n, 51), random_complex(n, k, 52), 1.0)
            .unwrap();
        let config = solve_aris(&cs, &target).unwrap();
        match &config {
            RsConfig::Aris { gains } => {
                assert!(gains.iter().all(|g| g.norm() < 1e-9));
            }
            _ => panic!("expected diagonal config"),
        }
    }

    #[test]
    fn solve_aris_residual_small() {
        let cs = generate_iid_rayleigh(2, 1, 2, 1.0, 53).unwrap();
        let target = TargetChannel::new(1.0, random_semi_unitary(2, 1, 54)).unwrap();
        let config = solve_aris(&cs, &target).unwrap();
        let h = effective_channel(&cs, &config).unwrap();
        assert!(relative_residual(&h, &target.matrix()) <= 1e-8);
    }

    #[test]
    fn solve_aris_is_minimum_norm() {
        let cs = generate_iid_rayleigh(2, 1, 4, 1.0, 55).unwrap();
        let target = TargetChannel::new(1.0, random_semi_unitary(2, 1, 56)).unwrap();
        let config = solve_aris(&cs, &target).unwrap();
        let gains = match config {
            RsConfig::Aris { gains } => gains,
            _ => unreachable!(),
        };
        let alpha = CMatrix::from_fn(4, 1, |i, _| gains[i]);
        let cascade = build_cascade_matrix(cs.h1(), cs.h2()).unwrap();
        let svd = nalgebra::SVD::new(cascade.clone(), true, true);
        let v = svd.v_t.unwrap().adjoint();
        for seed in 0..4 {
            let raw = random_complex(4, 1, 200 + seed);
            let z = &raw - &v * (v.adjoint() * &raw);
            assert!((&cascade * &z).norm() < 1e-10);
            assert!(alpha.norm() <= (&alpha + z).norm() + 1e-12);
        }
    }

    #[test]
    fn solve_aris_infeasible_when_surface_too_small() {
        let cs = generate_iid_rayleigh(4, 2, 2, 1.0, 57).unwrap();
        let target = TargetChannel::new(1.0, random_semi_unitary(4, 2, 58)).unwrap();
        match solve_aris(&cs, &target) {
            Err(Error::InfeasibleN { n: 2, required: 8 }) => {}
            other => panic!("expected InfeasibleN, got {other:?}"),
        }
    }

    #[test]
    fn solve_fris_zero_when_direct_channel_is_target() {
        let m = 3;
        let k = 2;
        let n = 4;
        let target = TargetChannel::new(0.7, random_semi_unitary(m, k, 60)).unwrap();
        let cs = ChannelSet::from_parts(
            target.matrix(),
            random_complex(m, n, 61),
            random_complex(n, k, 62),
            1.0,
        )
        .unwrap();
        let config = solve_fris(&cs, &target).unwrap();
        match &config {
            RsConfig::Fris { theta } => assert!(theta.norm() < 1e-9),
            _ => panic!("expected full-matrix config"),
        }
    }

    #[test]
    fn solve_fris_residual_small() {
        let cs = generate_iid_rayleigh(3, 2, 4, 1.0, 63).unwrap();
        let target = TargetChannel::new(1.3, random_semi_unitary(3, 2, 64)).unwrap();
        let config = solve_fris(&cs, &target).unwrap();
        let h = effective_channel(&cs, &config).unwrap();
        assert!(relative_residual(&h, &target.matrix()) <= 1e-8);
    }

    #[test]
    fn solve_fris_infeasible_when_surface_too_small() {
        let cs = generate_iid_rayleigh(4, 2, 3, 1.0, 65).unwrap();
        let target = TargetChannel::new(1.0, random_semi_unitary(4, 2, 66)).unwrap();
        match solve_fris(&cs, &target) {
            Err(Error::InfeasibleN { n: 3, required: 4 }) => {}
            other => panic!("expected InfeasibleN, got {other:?}"),
        }
    }

    #[test]
    fn solve_fris_square_case_matches_plain_inverse() {
        let m = 3;
        let k = 2;
        let cs = generate_iid_rayleigh(m, k, m, 1.0, 67).unwrap();
        let target = TargetChannel::new(1.0, random_semi_unitary(m, k, 68)).unwrap();
        let config = solve_fris(&cs, &target).unwrap();
        let theta = match config {
            RsConfig::Fris { theta } => theta,
            _ => unreachable!(),
        };
        let h1_inv = cs.h1().clone().try_inverse().unwrap();
        let h2_pinv = left_pinv(cs.h2()).unwrap();
        let direct = h1_inv * (target.matrix() - cs.h0()) * h2_pinv;
        assert!((theta - direct).norm() < 1e-10);
    }

    #[test]
    fn solvers_achieve_orthogonal_channels() {
        for seed in 0..5 {
            let cs = generate_iid_rayleigh(4, 2, 8, 1.0, 70 + seed).unwrap();
            let target = TargetChannel::new(2.0, random_semi_unitary(4, 2, 80 + seed)).unwrap();
            for config in [solve_aris(&cs, &target).unwrap(), solve_fris(&cs, &target).unwrap()] {
                let h = effective_channel(&cs, &config).unwrap();
                let defect = orthogonality_defect(&h, target.beta());
                assert!(
                    defect <= 1e-7 * target.beta() * cs.k() as f64,
                    "defect {defect} for {:?}",
                    config.kind()
                );
            }
        }
    }

    #[test]
    fn arbitrary_target_channels_are_reachable() {
        // Nothing in the construction needs orthogonality of the target.
        let cs = generate_iid_rayleigh(3, 2, 6, 1.0, 90).unwrap();
        let g = random_complex(3, 2, 91);
        let cascade = build_cascade_matrix(cs.h1(), cs.h2()).unwrap();
        let gains = solve_aris_for_matrix(&cascade, cs.h0(), &g).unwrap();
        let h = effective_channel(&cs, &RsConfig::Aris { gains }).unwrap();
        assert!(relative_residual(&h, &g) <= 1e-8);

        let cs = generate_iid_rayleigh(3, 2, 4, 1.0, 92).unwrap();
        let g = random_complex(3, 2, 93);
        let theta = solve_fris_for_matrix(cs.h0(), cs.h1(), cs.h2(), &g).unwrap();
        let h = effective_channel(&cs, &RsConfig::Fris { theta }).unwrap();
        assert!(relative_residual(&h, &g) <= 1e-8);
    }

    #[test]
    fn sum_power_values() {
        let ris = RsConfig::Ris {
            phases: vec![0.3; 7],
        };
        assert_eq!(rs_sum_power(&ris), 7.0);
        let aris = RsConfig::Aris {
            gains: vec![c(1.0, 0.0), c(0.0, 2.0)],
        };
        assert_relative_eq!(rs_sum_power(&aris), 5.0);
        let fris = RsConfig::Fris {
            theta: CMatrix::identity(4, 4),
        };
        assert_relative_eq!(rs_sum_power(&fris), 4.0);
    }

    #[test]
    fn min_elements_table() {
        assert_eq!(min_elements(SurfaceKind::Aris, 4, 2).unwrap(), 8);
        assert_eq!(min_elements(SurfaceKind::Fris, 4, 2).unwrap(), 2);
        assert!(matches!(
            min_elements(SurfaceKind::Ris, 4, 2),
            Err(Error::NotApplicable(_))
        ));
    }
}
