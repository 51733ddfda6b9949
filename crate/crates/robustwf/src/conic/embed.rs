//! Complex-Hermitian to real-symmetric embedding and symmetric-matrix
//! vectorization.
//!
//! A Hermitian H = A + iB maps to [[A, -B], [B, A]], which is symmetric,
//! preserves positive semidefiniteness, doubles every eigenvalue's
//! multiplicity, and doubles Frobenius inner products. De-embedding averages
//! the two diagonal blocks and the skew part of the off-diagonal block to
//! cancel solver asymmetry.

use num_complex::Complex64;

use crate::conic::ConicError;
use crate::linalg::{hermitian_error, hermitize, CMatrix, RMatrix, RVector};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Embeds a complex Hermitian n x n matrix as a real symmetric 2n x 2n one.
/// Rejects inputs whose Hermitian deviation exceeds 1e-12 (relative to the
/// largest entry).
pub fn hermitian_embed(h: &CMatrix) -> Result<RMatrix, ConicError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(ConicError::Malformed("hermitian_embed: matrix not square".into()));
    }
    let scale = h.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
    let err = hermitian_error(h);
    if err > 1e-12 * scale {
        return Err(ConicError::NotHermitian { deviation: err });
    }
    let mut out = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            out[(i, j)] = v.re;
            out[(n + i, n + j)] = v.re;
            out[(n + i, j)] = v.im;
            out[(i, n + j)] = -v.im;
        }
    }
    // exact symmetry regardless of rounding in the input
    let sym = (&out + out.transpose()) * 0.5;
    Ok(sym)
}

/// Recovers a Hermitian matrix from a (possibly asymmetric) solution of the
/// embedded problem by averaging the two real blocks and symmetrizing.
pub fn de_embed(x: &RMatrix) -> CMatrix {
    let n2 = x.nrows();
    assert!(n2 % 2 == 0, "embedded matrix must have even dimension");
    let n = n2 / 2;
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
            // skew part of the lower-left block: B = (X21 - X21^T)/2
            let im = 0.5 * (x[(n + i, j)] - x[(n + j, i)]);
            h[(i, j)] = Complex64::new(re, im);
        }
    }
    hermitize(&h)
}

/// svec index of entry (i, j) with i <= j, column-major upper triangle.
#[inline]
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packs a symmetric matrix so that dot products of packed vectors equal
/// Frobenius inner products: off-diagonal entries scale by sqrt(2).
pub fn svec(a: &RMatrix) -> RVector {
    let n = a.nrows();
    let mut v = RVector::zeros(svec_len(n));
    for j in 0..n {
        for i in 0..=j {
            v[svec_index(i, j)] = if i == j { a[(i, i)] } else { SQRT2 * 0.5 * (a[(i, j)] + a[(j, i)]) };
        }
    }
    v
}

/// Inverse of [`svec`].
pub fn smat(v: &RVector, n: usize) -> RMatrix {
    assert_eq!(v.len(), svec_len(n));
    let mut a = RMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                a[(i, i)] = x;
            } else {
                a[(i, j)] = x / SQRT2;
                a[(j, i)] = x / SQRT2;
            }
        }
    }
    a
}
