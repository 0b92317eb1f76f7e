//! Complex dense linear algebra primitives.
//!
//! Everything operates on [`CMatrix`] (dynamically sized, `Complex<f64>`).
//! Pseudo-inverses go through a Gram-matrix solve guarded by a reciprocal
//! condition threshold; near-degenerate inputs fall back to an SVD-based
//! pseudo-inverse and genuinely rank-deficient ones error out, so behavior
//! on random channels stays deterministic.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::rng::{stream_rng, INIT_STREAM};
use crate::Result;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;

/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;

/// Reciprocal-condition threshold below which the Gram solve is abandoned.
pub const GRAM_RCOND_THRESHOLD: f64 = 1e-12;

/// Singular values below `RANK_CUTOFF * σ_max` count as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Tall matrix with orthonormal columns (`ŨᴴŨ = I_K`).
///
/// Construction verifies the invariant to `1e-10` in Frobenius norm; the
/// manifold descent re-checks it after every geodesic step.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiUnitary {
    matrix: CMatrix,
}

impl SemiUnitary {
    /// Wraps `matrix`, verifying `ŨᴴŨ = I` to `1e-10` Frobenius.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() < matrix.ncols() || matrix.ncols() == 0 {
            return Err(Error::InvalidDims(format!(
                "semi-unitary must be tall, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = orthonormality_defect(&matrix);
        if defect > 1e-10 {
            return Err(Error::InvalidDims(format!(
                "columns not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// `‖AᴴA − I‖` in Frobenius norm; zero for matrices with orthonormal columns.
pub fn orthonormality_defect(a: &CMatrix) -> f64 {
    let k = a.ncols();
    (a.adjoint() * a - CMatrix::identity(k, k)).norm()
}

/// Right pseudo-inverse `Aᴴ(AAᴴ)⁻¹` of a full-row-rank matrix.
///
/// `A · right_pinv(A) = I_rows` to `1e-10`, and `right_pinv(A)·b` is the
/// minimum-norm solution of `A·x = b`.
pub fn right_pinv(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() > a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "right pseudo-inverse needs rows <= cols, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let gram = a * a.adjoint();
    match invert_hermitian(&gram) {
        Some(gram_inv) => Ok(a.adjoint() * gram_inv),
        // The Gram matrix squares the condition number, so a borderline rcond
        // here may still be a full-rank A. Decide on A's own singular values.
        None => svd_pinv(a, a.nrows()),
    }
}

/// Left pseudo-inverse `(AᴴA)⁻¹Aᴴ` of a full-column-rank matrix.
///
/// `left_pinv(A) · A = I_cols` to `1e-10`.
pub fn left_pinv(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() < a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "left pseudo-inverse needs rows >= cols, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    // (AᴴA)⁻¹Aᴴ = (right_pinv(Aᴴ))ᴴ, Gram inverses being Hermitian.
    Ok(right_pinv(&a.adjoint())?.adjoint())
}

/// Inverts a Hermitian PSD matrix through its eigendecomposition, or returns
/// `None` when its reciprocal condition falls below [`GRAM_RCOND_THRESHOLD`].
pub(crate) fn invert_hermitian(g: &CMatrix) -> Option<CMatrix> {
    let eig = nalgebra::SymmetricEigen::new(g.clone());
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let lam_min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if lam_max <= 0.0 || lam_min / lam_max < GRAM_RCOND_THRESHOLD {
        return None;
    }
    let inv_diag = CMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| C64::new(1.0 / l, 0.0))
            .column(0)
            .into_owned(),
    );
    Some(&eig.eigenvectors * inv_diag * eig.eigenvectors.adjoint())
}

/// SVD pseudo-inverse, erroring with [`Error::SingularGram`] when the rank
/// drops below `required_rank` under the [`RANK_CUTOFF`] threshold.
fn svd_pinv(a: &CMatrix, required_rank: usize) -> Result<CMatrix> {
    let svd = nalgebra::SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = RANK_CUTOFF * smax;
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > cutoff && smax > 0.0)
        .count();
    if rank < required_rank {
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        return Err(Error::SingularGram {
            rcond: if smax > 0.0 { (smin / smax).powi(2) } else { 0.0 },
            threshold: GRAM_RCOND_THRESHOLD,
        });
    }
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let sigma_pinv = DMatrix::from_diagonal(
        &svd.singular_values
            .map(|s| {
                if s > cutoff {
                    C64::new(1.0 / s, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .column(0)
            .into_owned(),
    );
    Ok(v_t.adjoint() * sigma_pinv * u.adjoint())
}

/// Column-major vectorization: stacks the columns of `a` into a single
/// column, so `vec(a·bᵀ) = b ⊗ a` holds for the cascade construction.
pub fn vec(a: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(a.nrows() * a.ncols(), 1, a.as_slice())
}

/// Inverse of [`vec`]: reshapes a `rows·cols` column vector back into a
/// `rows × cols` matrix.
pub fn unvec(v: &CMatrix, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.ncols() != 1 || v.nrows() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "unvec expects a {}x1 vector, got {}x{}",
            rows * cols,
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Condition number `σ_max/σ_min`; `+∞` for singular nonzero matrices.
pub fn condition_number(a: &CMatrix) -> Result<f64> {
    if a.norm() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let svd = nalgebra::SVD::new(a.clone(), false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Haar-distributed semi-unitary matrix from a seeded Gaussian draw.
///
/// Orthonormalizes an `m × k` standard complex Gaussian matrix by QR with the
/// R-diagonal forced positive-real, which makes the factorization (and thus
/// the seed-to-output mapping) unique.
///
/// Panics if `k > m` or `k == 0`.
pub fn random_semi_unitary(m: usize, k: usize, seed: u64) -> SemiUnitary {
    assert!(k >= 1 && k <= m, "need 1 <= k <= m, got m={m}, k={k}");
    let mut rng = stream_rng(seed, INIT_STREAM);
    let g = standard_complex_gaussian(m, k, &mut rng);
    orthonormalize(&g)
}

/// Thin-QR orthonormalization with the positive-real diagonal convention.
///
/// Panics if `a` is (numerically) column-rank deficient, which has
/// probability zero for Gaussian draws.
pub(crate) fn orthonormalize(a: &CMatrix) -> SemiUnitary {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let mag = d.norm();
        let phase = if mag > 0.0 { d / mag } else { C64::new(1.0, 0.0) };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    SemiUnitary::new(q).expect("QR produced non-orthonormal columns")
}

/// Matrix of IID standard complex Gaussian entries (`CN(0, 1)`: real and
/// imaginary parts independent `N(0, 1/2)`).
pub fn standard_complex_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Exponential of a skew-Hermitian matrix via the unitary eigendecomposition
/// of the Hermitian matrix `−iG`; the result is unitary to `1e-10`.
///
/// The symmetry check scales with `max(1, ‖G‖)` so large but exactly
/// constructed descent directions are not rejected for roundoff.
pub fn expm_skew_hermitian(g: &CMatrix) -> Result<CMatrix> {
    if g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expm needs a square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let defect = (g.adjoint() + g).norm();
    if defect > 1e-10 * g.norm().max(1.0) {
        return Err(Error::NotSkewHermitian(defect));
    }
    // H = −iG is Hermitian up to roundoff; symmetrize before the eigensolve.
    let h = g.map(|z| z * C64::new(0.0, -1.0));
    let h = (&h + h.adjoint()).map(|z| z * C64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(h);
    let phases = CMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| C64::new(l.cos(), l.sin()))
            .column(0)
            .into_owned(),
    );
    Ok(&eig.eigenvectors * phases * eig.eigenvectors.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_complex(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = stream_rng(seed, 99);
        standard_complex_gaussian(rows, cols, &mut rng)
    }

    #[test]
    fn right_pinv_identity() {
        let a = CMatrix::identity(3, 3);
        let p = right_pinv(&a).unwrap();
        assert!((p - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn right_pinv_scalar() {
        let a = CMatrix::from_element(1, 1, c(2.0, 0.0));
        let p = right_pinv(&a).unwrap();
        assert_relative_eq!(p[(0, 0)].re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(p[(0, 0)].im, 0.0, max_relative = 1e-12);
    }

    #[test]
    fn right_pinv_residual_random() {
        let a = random_complex(2, 4, 11);
        let p = right_pinv(&a).unwrap();
        assert!((&a * p - CMatrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn right_pinv_minimum_norm_solution() {
        // Any nullspace perturbation must not shrink the solution norm.
        let a = random_complex(2, 4, 13);
        let b = random_complex(2, 1, 14);
        let x = right_pinv(&a).unwrap() * &b;
        for seed in 0..4 {
            let z = nullspace_vector(&a, 100 + seed);
            assert!((&a * &z).norm() < 1e-10, "not a nullspace vector");
            let perturbed = &x + z;
            assert!(x.norm() <= perturbed.norm() + 1e-12);
        }
    }

    /// Projects a random vector onto the nullspace of `a` (row-space
    /// complement via the thin SVD).
    fn nullspace_vector(a: &CMatrix, seed: u64) -> CMatrix {
        let svd = nalgebra::SVD::new(a.clone(), true, true);
        let v = svd.v_t.unwrap().adjoint();
        let raw = random_complex(a.ncols(), 1, seed);
        &raw - &v * (v.adjoint() * &raw)
    }

    #[test]
    fn right_pinv_rank_deficient_errors() {
        // Two identical rows: rank 1 < 2.
        let mut a = CMatrix::zeros(2, 4);
        for j in 0..4 {
            a[(0, j)] = c(j as f64 + 1.0, -1.0);
            a[(1, j)] = a[(0, j)];
        }
        match right_pinv(&a) {
            Err(Error::SingularGram { .. }) => {}
            other => panic!("expected SingularGram, got {other:?}"),
        }
    }

    #[test]
    fn right_pinv_wrong_shape_errors() {
        let a = random_complex(4, 2, 15);
        assert!(matches!(right_pinv(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn left_pinv_identity_and_averaging() {
        let p = left_pinv(&CMatrix::identity(3, 3)).unwrap();
        assert!((p - CMatrix::identity(3, 3)).norm() < 1e-12);

        let ones = CMatrix::from_element(2, 1, c(1.0, 0.0));
        let p = left_pinv(&ones).unwrap();
        assert_relative_eq!(p[(0, 0)].re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(p[(0, 1)].re, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn left_pinv_residual_random() {
        let a = random_complex(5, 2, 17);
        let p = left_pinv(&a).unwrap();
        assert!((p * &a - CMatrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn vec_is_column_major() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = vec(&a);
        let expected = [1.0, 3.0, 2.0, 4.0];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(v[(i, 0)].re, *e);
        }
    }

    #[test]
    fn vec_of_column_vector_is_itself() {
        let a = random_complex(4, 1, 19);
        assert_eq!(vec(&a), a);
    }

    #[test]
    fn vec_unvec_round_trip() {
        let a = random_complex(3, 4, 23);
        let back = unvec(&vec(&a), 3, 4).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn unvec_rejects_bad_length() {
        let v = random_complex(5, 1, 25);
        assert!(matches!(unvec(&v, 2, 3), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn condition_number_identity_and_diag() {
        assert_relative_eq!(condition_number(&CMatrix::identity(4, 4)).unwrap(), 1.0);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)]));
        assert_relative_eq!(condition_number(&d).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn condition_number_scaled_semi_unitary() {
        let u = random_semi_unitary(6, 3, 3);
        let scaled = u.matrix().map(|z| z * c(5.0_f64.sqrt(), 0.0));
        assert_relative_eq!(condition_number(&scaled).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn condition_number_zero_matrix_errors() {
        assert!(matches!(
            condition_number(&CMatrix::zeros(2, 2)),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn condition_number_scale_invariant() {
        let a = random_complex(3, 3, 27);
        let k1 = condition_number(&a).unwrap();
        let k2 = condition_number(&a.map(|z| z * c(0.3, -1.7))).unwrap();
        assert_relative_eq!(k1, k2, max_relative = 1e-9);
    }

    #[test]
    fn random_semi_unitary_scalar_is_unit_modulus() {
        let u = random_semi_unitary(1, 1, 5);
        assert_relative_eq!(u.matrix()[(0, 0)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn random_semi_unitary_orthonormal_and_deterministic() {
        let u1 = random_semi_unitary(6, 3, 42);
        assert!(orthonormality_defect(u1.matrix()) < 1e-10);
        let u2 = random_semi_unitary(6, 3, 42);
        assert_eq!(u1.matrix(), u2.matrix());
        let u3 = random_semi_unitary(6, 3, 43);
        assert_ne!(u1.matrix(), u3.matrix());
    }

    #[test]
    fn expm_zero_is_identity() {
        let e = expm_skew_hermitian(&CMatrix::zeros(3, 3)).unwrap();
        assert!((e - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn expm_euler_identity() {
        let g = CMatrix::from_element(1, 1, c(0.0, std::f64::consts::PI));
        let e = expm_skew_hermitian(&g).unwrap();
        assert!((e[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_inverse_property() {
        let a = random_complex(4, 4, 31);
        let g = &a - a.adjoint();
        let e_pos = expm_skew_hermitian(&g).unwrap();
        let e_neg = expm_skew_hermitian(&g.map(|z| -z)).unwrap();
        assert!((e_pos * e_neg - CMatrix::identity(4, 4)).norm() < 1e-10);
    }

    #[test]
    fn expm_result_is_unitary() {
        let a = random_complex(5, 5, 33);
        let g = &a - a.adjoint();
        let e = expm_skew_hermitian(&g).unwrap();
        assert!((e.adjoint() * &e - CMatrix::identity(5, 5)).norm() < 1e-10);
    }

    #[test]
    fn expm_rejects_non_skew() {
        let a = CMatrix::identity(3, 3);
        assert!(matches!(
            expm_skew_hermitian(&a),
            Err(Error::NotSkewHermitian(_))
        ));
    }

    #[test]
    fn semi_unitary_rejects_non_orthonormal() {
        let a = CMatrix::from_element(3, 2, c(1.0, 0.0));
        assert!(SemiUnitary::new(a).is_err());
    }
}
