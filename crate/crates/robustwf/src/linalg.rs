//! Small complex linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Kronecker product of two complex matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::ZERO {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Maximum absolute deviation from Hermitian symmetry.
pub fn hermitian_error(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in i..n {
            err = err.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    err
}

/// Symmetrizes a nearly-Hermitian matrix: (A + A^H)/2.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// tr(A^H B) for complex matrices, the Frobenius inner product.
pub fn cinner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.shape(), b.shape());
    let mut acc = Complex64::ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> RVector {
    let eig = hermitize(a).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    RVector::from_vec(vals)
}

/// Eigendecomposition of a Hermitian matrix: (eigenvalues ascending, eigenvectors as columns).
pub fn hermitian_eig(a: &CMatrix) -> (RVector, CMatrix) {
    let eig = hermitize(a).symmetric_eigen();
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = RVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = CMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Lower-triangular factor F with F F^H = A + eps*I. The ridge guards
/// semidefinite rank deficiency when A is a PSD optimizer output.
pub fn psd_factor(a: &CMatrix, eps: f64) -> Option<CMatrix> {
    let n = a.nrows();
    let mut m = hermitize(a);
    for i in 0..n {
        m[(i, i)] += Complex64::new(eps, 0.0);
    }
    m.cholesky().map(|c| c.l())
}

/// Solves A x = b for Hermitian positive definite A via Cholesky.
pub fn hpd_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    hermitize(a).cholesky().map(|c| c.solve(b))
}

pub fn hpd_solve_vec(a: &CMatrix, b: &CVector) -> Option<CVector> {
    hermitize(a).cholesky().map(|c| c.solve(b))
}

/// 10*log10 with a floor for nonpositive inputs.
pub fn to_db(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * x.log10()
    }
}

/// Draws a standard circularly-symmetric complex Gaussian vector: each entry
/// has independent real and imaginary parts of variance 1/2, so E|z_i|^2 = 1.
pub fn standard_complex_gaussian<R: rand::Rng>(rng: &mut R, n: usize) -> CVector {
    use rand_distr::StandardNormal;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Entrywise unit-modulus projection e^{j arg(v_i)}; zero entries map to 1.
pub fn phase_projection(v: &CVector) -> CVector {
    v.map(|c| {
        let m = c.norm();
        if m == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            c / m
        }
    })
}

/// Real quadratic form u^H A u for Hermitian A (imaginary part discarded).
pub fn quad_form(a: &CMatrix, u: &CVector) -> f64 {
    u.dotc(&(a * u)).re
}
