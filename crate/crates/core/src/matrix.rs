//! Dense complex matrix helpers shared by all modules.
//!
//! The crate stores forms and transforms as `nalgebra::DMatrix<Complex64>`.
//! This module wraps the handful of numerical decisions (rank, invertibility,
//! null spaces, solves) behind scale-aware thresholds so that every caller
//! makes them the same way. Empty matrices are legal everywhere and treated
//! as vacuous successes; nalgebra's SVD panics on them, so the wrappers
//! guard that case.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{FormError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// A family matrix counts as invertible when its smallest singular value
/// exceeds `INVERTIBILITY_THRESHOLD * max(largest singular value, 1)`.
pub const INVERTIBILITY_THRESHOLD: f64 = 1e-10;

/// Default relative threshold for numerical rank decisions.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Singular values within a factor of `AMBIGUITY_FACTOR` of the rank
/// threshold make the rank decision ambiguous and raise `IllConditioned`.
const AMBIGUITY_FACTOR: f64 = 10.0;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn check_finite(m: &CMatrix, context: &str) -> Result<()> {
    for row in 0..m.nrows() {
        for col in 0..m.ncols() {
            let z = m[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(FormError::NonFinite {
                    context: context.to_string(),
                    row,
                    col,
                });
            }
        }
    }
    Ok(())
}

/// Max-absolute-entry norm; 0 for empty matrices.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Singular values in descending order; empty for empty matrices.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

pub fn largest_singular_value(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Scale-aware invertibility test for square matrices. Empty matrices are
/// vacuously invertible.
pub fn is_invertible(m: &CMatrix, threshold: f64) -> bool {
    debug_assert_eq!(m.nrows(), m.ncols());
    if m.nrows() == 0 {
        return true;
    }
    let sv = singular_values(m);
    let smax = sv[0];
    let smin = sv[sv.len() - 1];
    smin > threshold * smax.max(1.0)
}

/// Returns `Err(SingularMatrix)` when the invertibility test fails.
pub fn require_invertible(m: &CMatrix, threshold: f64, context: &str) -> Result<()> {
    if m.nrows() == 0 {
        return Ok(());
    }
    let sv = singular_values(m);
    let smax = sv[0];
    let smin = sv[sv.len() - 1];
    let bound = threshold * smax.max(1.0);
    if smin > bound {
        Ok(())
    } else {
        Err(FormError::SingularMatrix {
            context: context.to_string(),
            sigma_min: smin,
            threshold: bound,
        })
    }
}

/// Numerical rank with an ambiguity band: singular values are compared to
/// `rel_tol * sigma_max`, and any value within a factor of 10 of that
/// threshold turns the decision into an `IllConditioned` error instead of a
/// silent guess.
pub fn rank_with_gap(m: &CMatrix, rel_tol: f64, context: &str) -> Result<usize> {
    let sv = singular_values(m);
    if sv.is_empty() {
        return Ok(0);
    }
    let smax = sv[0];
    if smax == 0.0 {
        return Ok(0);
    }
    let threshold = rel_tol * smax;
    let ambiguous = sv
        .iter()
        .any(|&s| s > threshold / AMBIGUITY_FACTOR && s < threshold * AMBIGUITY_FACTOR);
    if ambiguous {
        return Err(FormError::IllConditioned {
            reason: format!(
                "rank decision in {context} is ambiguous: singular value inside \
                 ({:.3e}, {:.3e})",
                threshold / AMBIGUITY_FACTOR,
                threshold * AMBIGUITY_FACTOR
            ),
        });
    }
    Ok(sv.iter().filter(|&&s| s > threshold).count())
}

/// Numerical rank against an explicit absolute threshold, with the same
/// ambiguity band as [`rank_with_gap`]. Used for powers of a matrix, whose
/// own largest singular value is no longer a meaningful scale once the
/// power is essentially zero.
pub fn rank_with_gap_at(m: &CMatrix, threshold: f64, context: &str) -> Result<usize> {
    let sv = singular_values(m);
    if sv.is_empty() || threshold <= 0.0 {
        return Ok(sv.iter().filter(|&&s| s > 0.0).count());
    }
    let ambiguous = sv
        .iter()
        .any(|&s| s > threshold / AMBIGUITY_FACTOR && s < threshold * AMBIGUITY_FACTOR);
    if ambiguous {
        return Err(FormError::IllConditioned {
            reason: format!(
                "rank decision in {context} is ambiguous: singular value inside \
                 ({:.3e}, {:.3e})",
                threshold / AMBIGUITY_FACTOR,
                threshold * AMBIGUITY_FACTOR
            ),
        });
    }
    Ok(sv.iter().filter(|&&s| s > threshold).count())
}

/// Plain numerical rank without the ambiguity band.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of the (right) null space of `m` at relative tolerance
/// `rel_tol`, returned as the columns of an `ncols x k` matrix.
///
/// nalgebra only returns `min(nrows, ncols)` right singular vectors, so wide
/// matrices are padded with zero rows (which changes neither row space nor
/// null space) to make the full `V` available.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let ncols = m.ncols();
    if ncols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 || max_abs(m) == 0.0 {
        return CMatrix::identity(ncols, ncols);
    }
    let work = if m.nrows() < ncols {
        let mut padded = CMatrix::zeros(ncols, ncols);
        padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("svd computed with v_t");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let threshold = rel_tol * smax;
    let mut null_cols: Vec<CVector> = Vec::new();
    for i in 0..v_t.nrows() {
        if sv[i] <= threshold {
            null_cols.push(v_t.row(i).transpose().map(|z| z.conj()));
        }
    }
    if null_cols.is_empty() {
        CMatrix::zeros(ncols, 0)
    } else {
        CMatrix::from_columns(&null_cols)
    }
}

/// Solves `X * a = b` for `X` (i.e. `X = b * a^{-1}`) through an LU
/// factorisation of `a^T`, avoiding an explicit inverse.
pub fn solve_right(a: &CMatrix, b: &CMatrix, context: &str) -> Result<CMatrix> {
    debug_assert_eq!(a.nrows(), a.ncols());
    if a.nrows() == 0 {
        return Ok(CMatrix::zeros(b.nrows(), 0));
    }
    let lu = a.transpose().lu();
    match lu.solve(&b.transpose()) {
        Some(xt) => Ok(xt.transpose()),
        None => Err(FormError::SingularMatrix {
            context: context.to_string(),
            sigma_min: smallest_singular_value(a),
            threshold: 0.0,
        }),
    }
}

/// Solves `a * x = b` through LU.
pub fn solve_left(a: &CMatrix, b: &CMatrix, context: &str) -> Result<CMatrix> {
    debug_assert_eq!(a.nrows(), a.ncols());
    if a.nrows() == 0 {
        return Ok(CMatrix::zeros(0, b.ncols()));
    }
    match a.clone().lu().solve(b) {
        Some(x) => Ok(x),
        None => Err(FormError::SingularMatrix {
            context: context.to_string(),
            sigma_min: smallest_singular_value(a),
            threshold: 0.0,
        }),
    }
}

/// Direct sum `diag(a, b)`.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Jordan block `J_n(lambda)` with ones on the superdiagonal.
pub fn jordan_block(n: usize, lambda: Complex64) -> CMatrix {
    let mut j = CMatrix::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = lambda;
        if i + 1 < n {
            j[(i, i + 1)] = cr(1.0);
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_identity_and_zero() {
        let id = CMatrix::identity(3, 3);
        assert_eq!(rank_with_gap(&id, RANK_REL_TOL, "test").unwrap(), 3);
        let z = CMatrix::zeros(3, 3);
        assert_eq!(rank_with_gap(&z, RANK_REL_TOL, "test").unwrap(), 0);
        assert_eq!(rank_with_gap(&CMatrix::zeros(0, 0), RANK_REL_TOL, "test").unwrap(), 0);
    }

    #[test]
    fn rank_ambiguity_is_loud() {
        // singular values 1 and 3e-8 sit inside the band around 1e-8
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.0), cr(3e-8)]));
        let err = rank_with_gap(&m, RANK_REL_TOL, "test").unwrap_err();
        assert!(matches!(err, FormError::IllConditioned { .. }));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        // 1x3 matrix [1, 0, 0]: null space is 2-dimensional
        let m = CMatrix::from_row_slice(1, 3, &[cr(1.0), cr(0.0), cr(0.0)]);
        let ns = null_space(&m, RANK_REL_TOL);
        assert_eq!(ns.shape(), (3, 2));
        assert!(max_abs(&(&m * &ns)) < 1e-12);
    }

    #[test]
    fn null_space_of_zero_and_full_rank() {
        let z = CMatrix::zeros(2, 2);
        assert_eq!(null_space(&z, RANK_REL_TOL).shape(), (2, 2));
        let id = CMatrix::identity(2, 2);
        assert_eq!(null_space(&id, RANK_REL_TOL).ncols(), 0);
    }

    #[test]
    fn solve_right_matches_inverse() {
        let a = CMatrix::from_row_slice(2, 2, &[cr(2.0), cr(1.0), cr(0.0), cr(1.0)]);
        let b = CMatrix::identity(2, 2);
        let x = solve_right(&a, &b, "test").unwrap();
        let recon = &x * &a;
        assert!(max_abs(&(recon - CMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn invertibility_is_scale_aware() {
        // tiny but well-conditioned matrix stays invertible
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1e-9), cr(2e-9)]));
        assert!(is_invertible(&m, INVERTIBILITY_THRESHOLD));
        let s = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.0), cr(1e-14)]));
        assert!(!is_invertible(&s, INVERTIBILITY_THRESHOLD));
        assert!(is_invertible(&CMatrix::zeros(0, 0), INVERTIBILITY_THRESHOLD));
    }

    #[test]
    fn empty_matrix_helpers() {
        let e = CMatrix::zeros(0, 0);
        assert_eq!(max_abs(&e), 0.0);
        assert!(singular_values(&e).is_empty());
        assert_eq!(solve_right(&e, &CMatrix::zeros(0, 0), "test").unwrap().shape(), (0, 0));
    }

    #[test]
    fn jordan_block_layout() {
        let j = jordan_block(3, cr(5.0));
        assert_eq!(j[(0, 0)], cr(5.0));
        assert_eq!(j[(0, 1)], cr(1.0));
        assert_eq!(j[(1, 2)], cr(1.0));
        assert_eq!(j[(2, 0)], cr(0.0));
    }
}
