//! Small dense semidefinite programming: problem representation, a
//! complex-Hermitian modeling layer over a real symmetric embedding, and a
//! primal-dual path-following interior-point solver.
//!
//! Problems are stated in primal standard form over a product cone:
//!
//! ```text
//! minimize    c' x
//! subject to  A x = b,   x in K
//! ```
//!
//! where `K` is an ordered product of real symmetric PSD blocks (stored in
//! scaled `svec` packing), a nonnegative orthant, and free variables. All
//! design subproblems in this crate reduce to this form after embedding their
//! complex Hermitian matrix variables as real symmetric blocks of twice the
//! dimension.

pub mod embed;
mod solver;

pub use embed::{de_embed, hermitian_embed, smat, svec, svec_index, svec_len};
pub use solver::solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CMatrix, RMatrix, RVector};

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("solver failed: {0}")]
    Numerical(String),
}

/// One factor of the product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeBlock {
    /// Real symmetric PSD block of the given side length (already embedded
    /// when it models a complex Hermitian variable). Scalarizes to
    /// dim*(dim+1)/2 svec entries.
    Psd { dim: usize },
    NonNegative { count: usize },
    Free { count: usize },
}

impl ConeBlock {
    pub fn scalar_len(&self) -> usize {
        match *self {
            ConeBlock::Psd { dim } => svec_len(dim),
            ConeBlock::NonNegative { count } | ConeBlock::Free { count } => count,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConeSpec {
    pub blocks: Vec<ConeBlock>,
}

impl ConeSpec {
    pub fn scalar_len(&self) -> usize {
        self.blocks.iter().map(|b| b.scalar_len()).sum()
    }
}

/// Sparse equality row: (column, coefficient) pairs over the scalarized
/// variable vector.
pub type SparseRow = Vec<(usize, f64)>;

/// A conic program in primal standard form (minimization sense).
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub objective: RVector,
    pub rows: Vec<SparseRow>,
    pub rhs: RVector,
    pub cone: ConeSpec,
}

impl ConicProgram {
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.cone.scalar_len();
        if self.objective.len() != n {
            return Err(ConicError::Malformed(format!(
                "objective length {} != scalarized variable count {n}",
                self.objective.len()
            )));
        }
        if self.rows.len() != self.rhs.len() {
            return Err(ConicError::Malformed("row count != rhs length".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            for &(col, val) in row {
                if col >= n {
                    return Err(ConicError::Malformed(format!("row {r}: column {col} out of range")));
                }
                if !val.is_finite() {
                    return Err(ConicError::Malformed(format!("row {r}: non-finite coefficient")));
                }
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) || self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(ConicError::Malformed("non-finite data".into()));
        }
        for b in &self.cone.blocks {
            if b.scalar_len() == 0 && !matches!(b, ConeBlock::Free { count: 0 } | ConeBlock::NonNegative { count: 0 }) {
                return Err(ConicError::Malformed("zero-sized PSD block".into()));
            }
        }
        Ok(())
    }

    /// Debug dump for cross-checking against external solvers: objective,
    /// triplet-form equalities, cone list.
    pub fn dump_json(&self) -> serde_json::Value {
        let triplets: Vec<(usize, usize, f64)> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
            .collect();
        serde_json::json!({
            "objective": self.objective.as_slice(),
            "rhs": self.rhs.as_slice(),
            "equalities_triplets": triplets,
            "cones": self.cone.blocks,
        })
    }

    pub fn dump_to_file(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.dump_json()).unwrap())
    }

    /// Residual of `A x = b` for a candidate primal vector.
    pub fn equality_residual(&self, x: &RVector) -> RVector {
        let mut r = self.rhs.clone();
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                r[i] -= v * x[c];
            }
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

/// Relative KKT residuals at exit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Residuals {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub primal: RVector,
    pub dual: RVector,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .primal_infeasibility
            .max(self.residuals.dual_infeasibility)
            .max(self.residuals.duality_gap)
    }
}

/// Handle to a PSD block registered with [`ProgramBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRef {
    index: usize,
    /// Complex side length (0 when the block is native real).
    complex_dim: usize,
    real_dim: usize,
    offset: usize,
}

/// Handle to a scalar (nonnegative or free) variable range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarRef {
    offset: usize,
    count: usize,
}

impl ScalarRef {
    pub fn at(&self, i: usize) -> usize {
        assert!(i < self.count);
        self.offset + i
    }
    pub fn len(&self) -> usize {
        self.count
    }
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Builds standard-form programs from complex Hermitian matrix terms and
/// scalar variables, handling the real embedding and its inner-product
/// factor of two so callers reason purely in complex quantities:
/// a matrix term with coefficient `H` contributes `Re tr(H^H R)` to its row.
#[derive(Default)]
pub struct ProgramBuilder {
    blocks: Vec<ConeBlock>,
    block_refs: Vec<BlockRef>,
    objective: Vec<(usize, f64)>,
    rows: Vec<SparseRow>,
    rhs: Vec<f64>,
    total: usize,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a complex Hermitian PSD matrix variable of side `n`
    /// (embedded as a real symmetric 2n x 2n block).
    pub fn hermitian_psd_block(&mut self, n: usize) -> BlockRef {
        let real_dim = 2 * n;
        let r = BlockRef { index: self.blocks.len(), complex_dim: n, real_dim, offset: self.total };
        self.blocks.push(ConeBlock::Psd { dim: real_dim });
        self.total += svec_len(real_dim);
        self.block_refs.push(r);
        r
    }

    pub fn nonneg_vars(&mut self, count: usize) -> ScalarRef {
        let r = ScalarRef { offset: self.total, count };
        self.blocks.push(ConeBlock::NonNegative { count });
        self.total += count;
        r
    }

    pub fn free_vars(&mut self, count: usize) -> ScalarRef {
        let r = ScalarRef { offset: self.total, count };
        self.blocks.push(ConeBlock::Free { count });
        self.total += count;
        r
    }

    fn matrix_coeffs(block: &BlockRef, h: &CMatrix) -> Vec<(usize, f64)> {
        assert_eq!(h.nrows(), block.complex_dim, "matrix term dimension mismatch");
        let e = hermitian_embed(h).expect("matrix term must be Hermitian");
        // halve so the row evaluates to Re tr(H^H R) rather than twice it
        let v = svec(&e) * 0.5;
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, x)| (block.offset + i, *x))
            .collect()
    }

    /// Adds `Re tr(H^H R_block)` to the objective.
    pub fn objective_matrix(&mut self, block: &BlockRef, h: &CMatrix) {
        self.objective.extend(Self::matrix_coeffs(block, h));
    }

    pub fn objective_scalar(&mut self, var: usize, coeff: f64) {
        self.objective.push((var, coeff));
    }

    /// Starts an equality row with right-hand side `rhs`.
    pub fn constraint(&mut self, rhs: f64) -> RowBuilder<'_> {
        self.rows.push(Vec::new());
        self.rhs.push(rhs);
        RowBuilder { builder: self }
    }

    pub fn build(self) -> ConicProgram {
        let mut objective = RVector::zeros(self.total);
        for (i, v) in self.objective {
            objective[i] += v;
        }
        let program = ConicProgram {
            objective,
            rows: self.rows,
            rhs: RVector::from_vec(self.rhs),
            cone: ConeSpec { blocks: self.blocks },
        };
        debug_assert!(program.validate().is_ok());
        program
    }

    /// Extracts a Hermitian matrix variable from a solution.
    pub fn extract_hermitian(solution: &ConicSolution, block: &BlockRef) -> CMatrix {
        let v = solution
            .primal
            .rows(block.offset, svec_len(block.real_dim))
            .clone_owned();
        de_embed(&smat(&v, block.real_dim))
    }

    pub fn extract_scalar(solution: &ConicSolution, var: usize) -> f64 {
        solution.primal[var]
    }
}

/// In-progress equality row.
pub struct RowBuilder<'a> {
    builder: &'a mut ProgramBuilder,
}

impl RowBuilder<'_> {
    /// Adds `Re tr(H^H R_block)` to the row.
    pub fn matrix(self, block: &BlockRef, h: &CMatrix) -> Self {
        let coeffs = ProgramBuilder::matrix_coeffs(block, h);
        self.builder.rows.last_mut().unwrap().extend(coeffs);
        self
    }

    /// Adds a single embedded-real entry of a PSD block: coefficient `val` on
    /// the svec slot for (i, j) of the embedded block. Used for sparse rows
    /// (e.g. diagonal pinning) without materializing a full matrix.
    pub fn embedded_entry(self, block: &BlockRef, i: usize, j: usize, val: f64) -> Self {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.builder
            .rows
            .last_mut()
            .unwrap()
            .push((block.offset + svec_index(a, b), val));
        self
    }

    pub fn scalar(self, var: usize, coeff: f64) -> Self {
        self.builder.rows.last_mut().unwrap().push((var, coeff));
        self
    }
}

/// Convenience: pins the complex diagonal entry (k,k) of a Hermitian block to
/// `value`, i.e. adds the row (X(k,k) + X(n+k,n+k))/2 = value.
pub fn pin_complex_diagonal(b: &mut ProgramBuilder, block: &BlockRef, k: usize, value: f64) {
    let n = block.complex_dim;
    b.constraint(value)
        .embedded_entry(block, k, k, 0.5)
        .embedded_entry(block, n + k, n + k, 0.5);
}

/// Hermitian coefficient matrix H such that Re tr(H^H X) = Re X(a, b).
pub fn re_extractor(n: usize, a: usize, b: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    if a == b {
        h[(a, a)] = num_complex::Complex64::new(1.0, 0.0);
    } else {
        h[(a, b)] = num_complex::Complex64::new(0.5, 0.0);
        h[(b, a)] = num_complex::Complex64::new(0.5, 0.0);
    }
    h
}

/// Hermitian coefficient matrix H such that Re tr(H^H X) = Im X(a, b).
pub fn im_extractor(n: usize, a: usize, b: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    h[(a, b)] = num_complex::Complex64::new(0.0, 0.5);
    h[(b, a)] = num_complex::Complex64::new(0.0, -0.5);
    h
}

/// Extracts an embedded PSD block as its raw real symmetric matrix.
pub fn extract_real_block(solution: &ConicSolution, block: &BlockRef) -> RMatrix {
    let v = solution.primal.rows(block.offset, svec_len(block.real_dim)).clone_owned();
    smat(&v, block.real_dim)
}
