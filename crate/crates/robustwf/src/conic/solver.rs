//! Primal-dual path-following interior-point method for dense standard-form
//! conic programs with PSD, nonnegative, and free blocks.
//!
//! Uses Nesterov-Todd scaling with a Mehrotra predictor-corrector step. The
//! Schur complement is formed densely (problem sizes here stay below a few
//! hundred rows), with sparse constraint matrices handled by rank-one
//! accumulation instead of full matrix products. Free variables enter the
//! Newton system through a symmetric augmented block rather than a
//! positive-negative split.

use nalgebra::DMatrix;

use crate::conic::embed::{smat, svec, svec_len};
use crate::conic::{
    ConeBlock, ConicError, ConicProgram, ConicSolution, Residuals, SolveStatus,
};
use crate::linalg::{RMatrix, RVector};

const FRACTION_TO_BOUNDARY: f64 = 0.99;
const CERT_CHECK_PERIOD: usize = 5;

/// Solves a standard-form conic program to the requested tolerance.
///
/// A status of `Optimal` guarantees all three relative KKT residuals are at
/// or below `tolerance`. `Infeasible`/`Unbounded` are returned only after an
/// explicit certificate check; `MaxIterations` returns the best iterate seen.
pub fn solve(
    program: &ConicProgram,
    tolerance: f64,
    max_iterations: usize,
) -> Result<ConicSolution, ConicError> {
    program.validate()?;
    if tolerance <= 0.0 {
        return Err(ConicError::Malformed("tolerance must be positive".into()));
    }
    let pre = Preprocessed::build(program);
    let mut state = State::initial(&pre);
    let mut best: Option<(f64, ConicSolution)> = None;

    for iter in 0..max_iterations {
        let res = state.residuals(&pre);
        let sol = state.to_solution(&pre, res, SolveStatus::MaxIterations, iter);
        let worst = sol.max_residual();
        if best.as_ref().map_or(true, |(w, _)| worst < *w) {
            best = Some((worst, sol));
        }
        if worst <= tolerance {
            let mut sol = best.unwrap().1;
            sol.status = SolveStatus::Optimal;
            return Ok(sol);
        }
        if iter % CERT_CHECK_PERIOD == CERT_CHECK_PERIOD - 1 {
            if let Some(status) = state.certificate_check(&pre, tolerance) {
                let mut sol = state.to_solution(&pre, res, status.0, iter);
                sol.residuals = status.1;
                return Ok(sol);
            }
        }
        if !state.step(&pre) {
            // scaling/factorization breakdown: cannot improve further
            break;
        }
    }
    let (_, mut sol) = best.ok_or_else(|| ConicError::Numerical("no iterate produced".into()))?;
    if let Some(status) = state.certificate_check(&pre, tolerance) {
        sol.status = status.0;
        sol.residuals = status.1;
    }
    Ok(sol)
}

struct RowTerm {
    row: usize,
    /// Upper-triangle matrix entries (i <= j, full matrix value).
    trips: Vec<(usize, usize, f64)>,
    /// Materialized when the row is dense on this block.
    dense: Option<RMatrix>,
}

struct PsdInfo {
    dim: usize,
    scalar_offset: usize,
    terms: Vec<RowTerm>,
    /// term index by row for A(x) evaluation
    obj: RMatrix,
}

struct Preprocessed {
    m: usize,
    psd: Vec<PsdInfo>,
    /// Global scalarized columns of nonnegative variables, in cone order.
    nonneg_cols: Vec<usize>,
    free_cols: Vec<usize>,
    rows_lin: Vec<Vec<(usize, f64)>>,
    rows_free: Vec<Vec<(usize, f64)>>,
    c_lin: RVector,
    c_free: RVector,
    b: RVector,
    c_norm: f64,
    b_norm: f64,
    total_scalar: usize,
    degree: usize,
}

fn svec_local_to_ij(local: usize) -> (usize, usize) {
    // invert j*(j+1)/2 + i with i <= j
    let j = ((((8 * local + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
    let j = if (j + 1) * (j + 2) / 2 <= local { j + 1 } else { j };
    let i = local - j * (j + 1) / 2;
    (i, j)
}

impl Preprocessed {
    fn build(p: &ConicProgram) -> Self {
        let m = p.rows.len();
        let mut psd = Vec::new();
        let mut nonneg_cols = Vec::new();
        let mut free_cols = Vec::new();
        // (scalar_offset, block kind) spans in cone order
        let mut spans = Vec::new();
        let mut off = 0usize;
        for blk in &p.cone.blocks {
            match *blk {
                ConeBlock::Psd { dim } => {
                    spans.push((off, off + svec_len(dim), Some(psd.len()), 0usize));
                    psd.push(PsdInfo {
                        dim,
                        scalar_offset: off,
                        terms: Vec::new(),
                        obj: RMatrix::zeros(dim, dim),
                    });
                    off += svec_len(dim);
                }
                ConeBlock::NonNegative { count } => {
                    spans.push((off, off + count, None, nonneg_cols.len()));
                    for k in 0..count {
                        nonneg_cols.push(off + k);
                    }
                    off += count;
                }
                ConeBlock::Free { count } => {
                    spans.push((off, off + count, None, usize::MAX - free_cols.len()));
                    for k in 0..count {
                        free_cols.push(off + k);
                    }
                    off += count;
                }
            }
        }
        let col_to_nonneg: std::collections::HashMap<usize, usize> =
            nonneg_cols.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let col_to_free: std::collections::HashMap<usize, usize> =
            free_cols.iter().enumerate().map(|(k, &c)| (c, k)).collect();

        let mut rows_lin = vec![Vec::new(); m];
        let mut rows_free = vec![Vec::new(); m];
        // per psd block: per row accumulation of triplets
        let mut block_row_trips: Vec<std::collections::HashMap<usize, Vec<(usize, usize, f64)>>> =
            psd.iter().map(|_| std::collections::HashMap::new()).collect();

        let locate = |col: usize| -> usize {
            // span index containing col
            spans
                .binary_search_by(|&(lo, hi, _, _)| {
                    if col < lo {
                        std::cmp::Ordering::Greater
                    } else if col >= hi {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Equal
                    }
                })
                .expect("column within some block")
        };

        for (r, row) in p.rows.iter().enumerate() {
            for &(col, val) in row {
                let span = spans[locate(col)];
                if let Some(bi) = span.2 {
                    let local = col - span.0;
                    let (i, j) = svec_local_to_ij(local);
                    let mat_val = if i == j { val } else { val / std::f64::consts::SQRT_2 };
                    block_row_trips[bi].entry(r).or_default().push((i, j, mat_val));
                } else if let Some(&k) = col_to_nonneg.get(&col) {
                    rows_lin[r].push((k, val));
                } else if let Some(&k) = col_to_free.get(&col) {
                    rows_free[r].push((k, val));
                } else {
                    unreachable!("column not in any block");
                }
            }
        }
        for (bi, rowmap) in block_row_trips.into_iter().enumerate() {
            let dim = psd[bi].dim;
            let mut terms: Vec<RowTerm> = rowmap
                .into_iter()
                .map(|(row, trips)| {
                    let dense = if trips.len() > dim {
                        let mut a = RMatrix::zeros(dim, dim);
                        for &(i, j, v) in &trips {
                            a[(i, j)] += v;
                            if i != j {
                                a[(j, i)] += v;
                            }
                        }
                        Some(a)
                    } else {
                        None
                    };
                    RowTerm { row, trips, dense }
                })
                .collect();
            terms.sort_by_key(|t| t.row);
            psd[bi].terms = terms;
        }

        // split objective
        let mut c_lin = RVector::zeros(nonneg_cols.len());
        let mut c_free = RVector::zeros(free_cols.len());
        for (bi, info) in psd.iter_mut().enumerate() {
            let _ = bi;
            let v = p.objective.rows(info.scalar_offset, svec_len(info.dim)).clone_owned();
            info.obj = smat(&v, info.dim);
        }
        for (k, &c) in nonneg_cols.iter().enumerate() {
            c_lin[k] = p.objective[c];
        }
        for (k, &c) in free_cols.iter().enumerate() {
            c_free[k] = p.objective[c];
        }
        let degree = psd.iter().map(|b| b.dim).sum::<usize>() + nonneg_cols.len();
        Preprocessed {
            m,
            psd,
            nonneg_cols,
            free_cols,
            rows_lin,
            rows_free,
            c_lin,
            c_free,
            b: p.rhs.clone(),
            c_norm: p.objective.norm(),
            b_norm: p.rhs.norm(),
            total_scalar: p.cone.scalar_len(),
            degree: degree.max(1),
        }
    }
}

/// <A, V> for symmetric V using the stored upper-triangle triplets.
fn term_inner(term: &RowTerm, v: &RMatrix) -> f64 {
    let mut acc = 0.0;
    for &(i, j, val) in &term.trips {
        acc += if i == j { val * v[(i, i)] } else { 2.0 * val * v[(i, j)] };
    }
    acc
}

/// W A W for symmetric W, via rank-one accumulation when A is sparse.
fn sandwich(term: &RowTerm, w: &RMatrix) -> RMatrix {
    let n = w.nrows();
    if let Some(a) = &term.dense {
        return w * a * w;
    }
    let mut out = RMatrix::zeros(n, n);
    for &(i, j, v) in &term.trips {
        let wi = w.column(i);
        let wj = w.column(j);
        if i == j {
            out.ger(v, &wi, &wj, 1.0);
        } else {
            out.ger(v, &wi, &wj, 1.0);
            out.ger(v, &wj, &wi, 1.0);
        }
    }
    out
}

struct Scaling {
    g: RMatrix,
    g_inv: RMatrix,
    w: RMatrix,
    /// Scaled spectrum: X_hat = Z_hat = diag(sigma).
    sigma: RVector,
}

struct State {
    x_mat: Vec<RMatrix>,
    z_mat: Vec<RMatrix>,
    x_lin: RVector,
    z_lin: RVector,
    x_free: RVector,
    y: RVector,
}

struct DualResidual {
    mat: Vec<RMatrix>,
    lin: RVector,
    free: RVector,
}

impl State {
    fn initial(pre: &Preprocessed) -> Self {
        let rho_p = pre.b_norm.max(1.0).sqrt().max(1.0);
        let rho_d = pre.c_norm.max(1.0).sqrt().max(1.0);
        State {
            x_mat: pre.psd.iter().map(|b| RMatrix::identity(b.dim, b.dim) * rho_p).collect(),
            z_mat: pre.psd.iter().map(|b| RMatrix::identity(b.dim, b.dim) * rho_d).collect(),
            x_lin: RVector::from_element(pre.nonneg_cols.len(), rho_p),
            z_lin: RVector::from_element(pre.nonneg_cols.len(), rho_d),
            x_free: RVector::zeros(pre.free_cols.len()),
            y: RVector::zeros(pre.m),
        }
    }

    fn apply_a(&self, pre: &Preprocessed) -> RVector {
        let mut out = RVector::zeros(pre.m);
        for (bi, info) in pre.psd.iter().enumerate() {
            for t in &info.terms {
                out[t.row] += term_inner(t, &self.x_mat[bi]);
            }
        }
        for (r, row) in pre.rows_lin.iter().enumerate() {
            for &(k, v) in row {
                out[r] += v * self.x_lin[k];
            }
        }
        for (r, row) in pre.rows_free.iter().enumerate() {
            for &(k, v) in row {
                out[r] += v * self.x_free[k];
            }
        }
        out
    }

    fn a_star_mat(&self, pre: &Preprocessed, bi: usize, y: &RVector) -> RMatrix {
        let info = &pre.psd[bi];
        let mut out = RMatrix::zeros(info.dim, info.dim);
        for t in &info.terms {
            let w = y[t.row];
            if w == 0.0 {
                continue;
            }
            if let Some(d) = &t.dense {
                out += d * w;
            } else {
                for &(i, j, v) in &t.trips {
                    out[(i, j)] += v * w;
                    if i != j {
                        out[(j, i)] += v * w;
                    }
                }
            }
        }
        out
    }

    fn a_star_lin(&self, pre: &Preprocessed, y: &RVector) -> RVector {
        let mut out = RVector::zeros(pre.nonneg_cols.len());
        for (r, row) in pre.rows_lin.iter().enumerate() {
            for &(k, v) in row {
                out[k] += v * y[r];
            }
        }
        out
    }

    fn a_star_free(&self, pre: &Preprocessed, y: &RVector) -> RVector {
        let mut out = RVector::zeros(pre.free_cols.len());
        for (r, row) in pre.rows_free.iter().enumerate() {
            for &(k, v) in row {
                out[k] += v * y[r];
            }
        }
        out
    }

    fn dual_residual(&self, pre: &Preprocessed) -> DualResidual {
        let mat = (0..pre.psd.len())
            .map(|bi| &pre.psd[bi].obj - self.a_star_mat(pre, bi, &self.y) - &self.z_mat[bi])
            .collect();
        let lin = &pre.c_lin - self.a_star_lin(pre, &self.y) - &self.z_lin;
        let free = &pre.c_free - self.a_star_free(pre, &self.y);
        DualResidual { mat, lin, free }
    }

    fn mu(&self, pre: &Preprocessed) -> f64 {
        let mut acc = 0.0;
        for (x, z) in self.x_mat.iter().zip(&self.z_mat) {
            acc += (x * z).trace();
        }
        acc += self.x_lin.dot(&self.z_lin);
        acc / pre.degree as f64
    }

    fn objectives(&self, pre: &Preprocessed) -> (f64, f64) {
        let mut pobj = 0.0;
        for (bi, info) in pre.psd.iter().enumerate() {
            pobj += (&info.obj * &self.x_mat[bi]).trace();
        }
        pobj += pre.c_lin.dot(&self.x_lin) + pre.c_free.dot(&self.x_free);
        let dobj = pre.b.dot(&self.y);
        (pobj, dobj)
    }

    fn residuals(&self, pre: &Preprocessed) -> Residuals {
        let rp = &pre.b - self.apply_a(pre);
        let rd = self.dual_residual(pre);
        let mut rd_norm2 = rd.lin.norm_squared() + rd.free.norm_squared();
        for m in &rd.mat {
            rd_norm2 += m.iter().map(|v| v * v).sum::<f64>();
        }
        let (pobj, dobj) = self.objectives(pre);
        Residuals {
            primal_infeasibility: rp.norm() / (1.0 + pre.b_norm),
            dual_infeasibility: rd_norm2.sqrt() / (1.0 + pre.c_norm),
            duality_gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        }
    }

    fn to_solution(
        &self,
        pre: &Preprocessed,
        residuals: Residuals,
        status: SolveStatus,
        iterations: usize,
    ) -> ConicSolution {
        let mut primal = RVector::zeros(pre.total_scalar);
        for (bi, info) in pre.psd.iter().enumerate() {
            let v = svec(&self.x_mat[bi]);
            primal.rows_mut(info.scalar_offset, v.len()).copy_from(&v);
        }
        for (k, &c) in pre.nonneg_cols.iter().enumerate() {
            primal[c] = self.x_lin[k];
        }
        for (k, &c) in pre.free_cols.iter().enumerate() {
            primal[c] = self.x_free[k];
        }
        let (pobj, _) = self.objectives(pre);
        ConicSolution {
            primal,
            dual: self.y.clone(),
            objective_value: pobj,
            status,
            residuals,
            iterations,
        }
    }

    /// Farkas-style certificate checks. Returns a status and the certificate
    /// residual packed into the matching field.
    fn certificate_check(&self, pre: &Preprocessed, tol: f64) -> Option<(SolveStatus, Residuals)> {
        let cert_tol = tol.sqrt().min(1e-6);
        // primal infeasibility: y with A*(y) <= 0 (cone duals), b'y > 0
        let by = pre.b.dot(&self.y);
        if by > 1e-8 * (1.0 + self.y.norm()) {
            let yhat = &self.y / by;
            let mut viol: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for bi in 0..pre.psd.len() {
                let p = self.a_star_mat(pre, bi, &yhat);
                let eig_max = p.clone().symmetric_eigen().eigenvalues.max();
                viol = viol.max(eig_max);
                scale = scale.max(p.abs().max());
            }
            let lin = self.a_star_lin(pre, &yhat);
            if !lin.is_empty() {
                viol = viol.max(lin.max());
                scale = scale.max(lin.abs().max());
            }
            let fr = self.a_star_free(pre, &yhat);
            if !fr.is_empty() {
                viol = viol.max(fr.abs().max());
                scale = scale.max(fr.abs().max());
            }
            if viol <= cert_tol * scale {
                let r = Residuals {
                    primal_infeasibility: viol.max(0.0),
                    dual_infeasibility: 0.0,
                    duality_gap: 0.0,
                };
                return Some((SolveStatus::Infeasible, r));
            }
        }
        // dual infeasibility / primal unboundedness: x in K with A x ~ 0 and c'x < 0
        let mut xnorm2 = self.x_lin.norm_squared() + self.x_free.norm_squared();
        for x in &self.x_mat {
            xnorm2 += x.iter().map(|v| v * v).sum::<f64>();
        }
        let xnorm = xnorm2.sqrt();
        if xnorm > 1e6 {
            let (pobj, _) = self.objectives(pre);
            let ax = self.apply_a(pre);
            let cx = pobj / xnorm;
            let axn = ax.norm() / xnorm;
            if cx < -1e-10 && axn <= cert_tol {
                let r = Residuals {
                    primal_infeasibility: 0.0,
                    dual_infeasibility: axn,
                    duality_gap: 0.0,
                };
                return Some((SolveStatus::Unbounded, r));
            }
        }
        None
    }

    fn nt_scaling(&self, bi: usize) -> Option<Scaling> {
        let x = &self.x_mat[bi];
        let z = &self.z_mat[bi];
        let n = x.nrows();
        let chol = |m: &RMatrix| -> Option<RMatrix> {
            let mut a = m.clone();
            let mut ridge = 0.0;
            for _ in 0..4 {
                if let Some(c) = a.clone().cholesky() {
                    return Some(c.l());
                }
                ridge = if ridge == 0.0 { 1e-14 * (m.trace().abs() / n as f64 + 1.0) } else { ridge * 100.0 };
                a = m.clone();
                for i in 0..n {
                    a[(i, i)] += ridge;
                }
            }
            None
        };
        let lx = chol(x)?;
        let lz = chol(z)?;
        let svd = (lz.transpose() * &lx).svd(true, true);
        let u = svd.u.as_ref()?;
        let vt = svd.v_t.as_ref()?;
        let _ = u;
        let sigma = svd.singular_values.clone();
        if sigma.min() <= 0.0 {
            return None;
        }
        let mut v_scaled = vt.transpose();
        for (k, mut col) in v_scaled.column_iter_mut().enumerate() {
            col /= sigma[k].sqrt();
        }
        let g = &lx * &v_scaled;
        // g_inv = diag(sqrt(sigma)) * V^T * Lx^{-1}
        let lx_inv = lx.solve_lower_triangular(&RMatrix::identity(n, n))?;
        let mut vt_scaled = vt.clone();
        for (k, mut row) in vt_scaled.row_iter_mut().enumerate() {
            row *= sigma[k].sqrt();
        }
        let g_inv = vt_scaled * lx_inv;
        let w = &g * g.transpose();
        Some(Scaling { g, g_inv, w, sigma })
    }

    /// One predictor-corrector iteration; false on scaling breakdown.
    fn step(&mut self, pre: &Preprocessed) -> bool {
        let nb = pre.psd.len();
        let mut scalings = Vec::with_capacity(nb);
        for bi in 0..nb {
            match self.nt_scaling(bi) {
                Some(s) => scalings.push(s),
                None => return false,
            }
        }
        let g_lin: RVector = self.x_lin.zip_map(&self.z_lin, |x, z| (x / z).sqrt());
        let lam_lin: RVector = self.x_lin.zip_map(&self.z_lin, |x, z| (x * z).sqrt());
        let w_lin: RVector = self.x_lin.component_div(&self.z_lin);

        let rp = &pre.b - self.apply_a(pre);
        let rd = self.dual_residual(pre);
        let mu = self.mu(pre);

        // shared per-iteration pieces: W rd W, w .* rd_lin
        let e_mat: Vec<RMatrix> =
            (0..nb).map(|bi| &scalings[bi].w * &rd.mat[bi] * &scalings[bi].w).collect();
        let e_lin = w_lin.component_mul(&rd.lin);

        // Schur complement over cone parts
        let m = pre.m;
        let nf = pre.free_cols.len();
        let dim_aug = m + nf;
        let mut kkt = RMatrix::zeros(dim_aug, dim_aug);
        for (bi, info) in pre.psd.iter().enumerate() {
            let w = &scalings[bi].w;
            for tq in &info.terms {
                let v = sandwich(tq, w);
                for tp in &info.terms {
                    if tp.row > tq.row {
                        continue;
                    }
                    kkt[(tp.row, tq.row)] += term_inner(tp, &v);
                }
            }
        }
        for (r, row) in pre.rows_lin.iter().enumerate() {
            for &(k, v) in row {
                for (r2, row2) in pre.rows_lin.iter().enumerate().take(r + 1) {
                    let mut acc = 0.0;
                    for &(k2, v2) in row2 {
                        if k2 == k {
                            acc += v2;
                        }
                    }
                    kkt[(r2, r)] += acc * v * w_lin[k];
                }
            }
        }
        for r in 0..m {
            for r2 in 0..r {
                kkt[(r, r2)] = kkt[(r2, r)];
            }
        }
        for (r, row) in pre.rows_free.iter().enumerate() {
            for &(k, v) in row {
                kkt[(r, m + k)] = v;
                kkt[(m + k, r)] = v;
            }
        }
        // static regularization keeps the augmented system factorizable
        for i in 0..m {
            kkt[(i, i)] += 1e-13;
        }
        for i in m..dim_aug {
            kkt[(i, i)] -= 1e-13;
        }
        let lu = kkt.lu();

        let solve_direction = |targets_mat: &[RMatrix], targets_lin: &RVector| -> Option<Direction> {
            // H per block: H_ij = 2 T_ij / (sigma_i + sigma_j); F = G H G'
            let mut f_mat = Vec::with_capacity(nb);
            for (bi, sc) in scalings.iter().enumerate() {
                let t = &targets_mat[bi];
                let n = t.nrows();
                let mut h = RMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        h[(i, j)] = 2.0 * t[(i, j)] / (sc.sigma[i] + sc.sigma[j]);
                    }
                }
                f_mat.push(&sc.g * h * sc.g.transpose());
            }
            let f_lin: RVector = RVector::from_iterator(
                g_lin.len(),
                (0..g_lin.len()).map(|k| g_lin[k] * targets_lin[k] / lam_lin[k]),
            );
            let mut rhs = RVector::zeros(dim_aug);
            for r in 0..m {
                rhs[r] = rp[r];
            }
            for (bi, info) in pre.psd.iter().enumerate() {
                for t in &info.terms {
                    rhs[t.row] += term_inner(t, &e_mat[bi]) - term_inner(t, &f_mat[bi]);
                }
            }
            for (r, row) in pre.rows_lin.iter().enumerate() {
                for &(k, v) in row {
                    rhs[r] += v * (e_lin[k] - f_lin[k]);
                }
            }
            for (k, _) in pre.free_cols.iter().enumerate() {
                rhs[m + k] = rd.free[k];
            }
            let sol = if dim_aug == 0 { RVector::zeros(0) } else { lu.solve(&rhs)? };
            let dy = sol.rows(0, m).clone_owned();
            let dx_free = sol.rows(m, nf).clone_owned();
            let mut dz_mat = Vec::with_capacity(nb);
            let mut dx_mat = Vec::with_capacity(nb);
            for bi in 0..nb {
                let dz = &rd.mat[bi] - self.a_star_mat(pre, bi, &dy);
                let dz = (&dz + dz.transpose()) * 0.5;
                let dx = &f_mat[bi] - &scalings[bi].w * &dz * &scalings[bi].w;
                let dx = (&dx + dx.transpose()) * 0.5;
                dz_mat.push(dz);
                dx_mat.push(dx);
            }
            let dz_lin = &rd.lin - self.a_star_lin(pre, &dy);
            let dx_lin = &f_lin - w_lin.component_mul(&dz_lin);
            Some(Direction { dy, dx_free, dx_mat, dz_mat, dx_lin, dz_lin })
        };

        // predictor: drive X Z -> 0
        let aff_targets_mat: Vec<RMatrix> = scalings
            .iter()
            .map(|sc| {
                let n = sc.sigma.len();
                RMatrix::from_fn(n, n, |i, j| if i == j { -sc.sigma[i] * sc.sigma[i] } else { 0.0 })
            })
            .collect();
        let aff_targets_lin: RVector = lam_lin.map(|l| -l * l);
        let aff = match solve_direction(&aff_targets_mat, &aff_targets_lin) {
            Some(d) => d,
            None => return false,
        };
        let (ap_aff, ad_aff) = self.max_steps(&aff);
        let mu_aff = self.shifted_mu(pre, &aff, ap_aff.min(1.0), ad_aff.min(1.0));
        let sigma = ((mu_aff / mu).max(0.0).powi(3)).clamp(1e-8, 1.0);

        // corrector: sigma*mu target with Mehrotra second-order term
        let mut corr_targets_mat = Vec::with_capacity(nb);
        for (bi, sc) in scalings.iter().enumerate() {
            let dxh = &sc.g_inv * &aff.dx_mat[bi] * sc.g_inv.transpose();
            let dzh = sc.g.transpose() * &aff.dz_mat[bi] * &sc.g;
            let cross = (&dxh * &dzh + &dzh * &dxh) * 0.5;
            let n = sc.sigma.len();
            let mut t = RMatrix::from_fn(n, n, |i, j| {
                if i == j { sigma * mu - sc.sigma[i] * sc.sigma[i] } else { 0.0 }
            });
            t -= cross;
            corr_targets_mat.push(t);
        }
        let corr_targets_lin: RVector = RVector::from_iterator(
            lam_lin.len(),
            (0..lam_lin.len()).map(|k| {
                sigma * mu - lam_lin[k] * lam_lin[k] - aff.dx_lin[k] * aff.dz_lin[k]
            }),
        );
        let dir = match solve_direction(&corr_targets_mat, &corr_targets_lin) {
            Some(d) => d,
            None => return false,
        };
        let (ap_max, ad_max) = self.max_steps(&dir);
        let ap = (FRACTION_TO_BOUNDARY * ap_max).min(1.0);
        let ad = (FRACTION_TO_BOUNDARY * ad_max).min(1.0);
        if ap <= 1e-10 && ad <= 1e-10 {
            return false;
        }
        for bi in 0..nb {
            self.x_mat[bi] += &dir.dx_mat[bi] * ap;
            self.z_mat[bi] += &dir.dz_mat[bi] * ad;
        }
        self.x_lin += &dir.dx_lin * ap;
        self.z_lin += &dir.dz_lin * ad;
        self.x_free += &dir.dx_free * ap;
        self.y += &dir.dy * ad;
        true
    }

    fn shifted_mu(&self, pre: &Preprocessed, d: &Direction, ap: f64, ad: f64) -> f64 {
        let mut acc = 0.0;
        for (bi, (x, z)) in self.x_mat.iter().zip(&self.z_mat).enumerate() {
            let xs = x + &d.dx_mat[bi] * ap;
            let zs = z + &d.dz_mat[bi] * ad;
            acc += (xs * zs).trace();
        }
        let xl = &self.x_lin + &d.dx_lin * ap;
        let zl = &self.z_lin + &d.dz_lin * ad;
        acc += xl.dot(&zl);
        acc / pre.degree as f64
    }

    fn max_steps(&self, d: &Direction) -> (f64, f64) {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for (bi, (x, z)) in self.x_mat.iter().zip(&self.z_mat).enumerate() {
            ap = ap.min(max_psd_step(x, &d.dx_mat[bi]));
            ad = ad.min(max_psd_step(z, &d.dz_mat[bi]));
        }
        for k in 0..self.x_lin.len() {
            if d.dx_lin[k] < 0.0 {
                ap = ap.min(-self.x_lin[k] / d.dx_lin[k]);
            }
            if d.dz_lin[k] < 0.0 {
                ad = ad.min(-self.z_lin[k] / d.dz_lin[k]);
            }
        }
        (ap.min(1e8), ad.min(1e8))
    }
}

struct Direction {
    dy: RVector,
    dx_free: RVector,
    dx_mat: Vec<RMatrix>,
    dz_mat: Vec<RMatrix>,
    dx_lin: RVector,
    dz_lin: RVector,
}

/// Largest alpha with X + alpha D >= 0, via the spectrum of L^-1 D L^-T.
fn max_psd_step(x: &RMatrix, d: &RMatrix) -> f64 {
    let n = x.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let l = match x.clone().cholesky() {
        Some(c) => c.l(),
        None => return 0.0,
    };
    let li = match l.solve_lower_triangular(&DMatrix::identity(n, n)) {
        Some(v) => v,
        None => return 0.0,
    };
    let s = &li * d * li.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let min_eig = s.symmetric_eigen().eigenvalues.min();
    if min_eig >= -1e-16 {
        f64::INFINITY
    } else {
        -1.0 / min_eig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{pin_complex_diagonal, ConeSpec, ProgramBuilder};
    use crate::linalg::{CMatrix, CVector};
    use nalgebra::DVector;
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Adds the row Re X(i,j) = re and Im X(i,j) = im (i < j) to pin an
    /// off-diagonal entry of a Hermitian block.
    fn pin_offdiag(b: &mut ProgramBuilder, blk: &crate::conic::BlockRef, i: usize, j: usize, re: f64, im: f64) {
        let n = blk.complex_dim;
        let mut h_re = CMatrix::zeros(n, n);
        h_re[(i, j)] = cx(0.5, 0.0);
        h_re[(j, i)] = cx(0.5, 0.0);
        b.constraint(re).matrix(blk, &h_re);
        let mut h_im = CMatrix::zeros(n, n);
        h_im[(i, j)] = cx(0.0, 0.5);
        h_im[(j, i)] = cx(0.0, -0.5);
        b.constraint(im).matrix(blk, &h_im);
    }

    #[test]
    fn trace_minimization_with_pinned_diagonal() {
        // min tr X s.t. X(1,1) = 1, X >= 0 (Hermitian 2x2) -> X = e1 e1', obj 1
        let mut b = ProgramBuilder::new();
        let x = b.hermitian_psd_block(2);
        b.objective_matrix(&x, &CMatrix::identity(2, 2));
        pin_complex_diagonal(&mut b, &x, 1, 1.0);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-6, "obj {}", sol.objective_value);
        let xm = ProgramBuilder::extract_hermitian(&sol, &x);
        assert!((xm[(1, 1)].re - 1.0).abs() < 1e-6);
        assert!(xm[(0, 0)].re.abs() < 1e-6);
    }

    #[test]
    fn free_variable_lmi_recovers_spectral_bound() {
        // min t s.t. [[t, 1], [1, t]] >= 0 -> t = 1
        let mut b = ProgramBuilder::new();
        let s = b.hermitian_psd_block(2);
        let t = b.free_vars(1);
        b.objective_scalar(t.at(0), 1.0);
        // S(k,k) - t = 0 for k = 0, 1
        for k in 0..2 {
            let mut h = CMatrix::zeros(2, 2);
            h[(k, k)] = cx(1.0, 0.0);
            b.constraint(0.0).matrix(&s, &h).scalar(t.at(0), -1.0);
        }
        pin_offdiag(&mut b, &s, 0, 1, 1.0, 0.0);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-6, "obj {}", sol.objective_value);
    }

    #[test]
    fn hermitian_offdiagonal_pin_balances_diagonal() {
        // min tr X s.t. X(0,1) = 0.3 - 0.4i, X >= 0 -> a = b = |c| = 0.5, tr = 1
        let mut b = ProgramBuilder::new();
        let x = b.hermitian_psd_block(2);
        b.objective_matrix(&x, &CMatrix::identity(2, 2));
        pin_offdiag(&mut b, &x, 0, 1, 0.3, -0.4);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-6, "obj {}", sol.objective_value);
        let xm = ProgramBuilder::extract_hermitian(&sol, &x);
        assert!((xm[(0, 1)] - cx(0.3, -0.4)).norm() < 1e-6);
    }

    #[test]
    fn unit_trace_sdp_recovers_minimum_eigenvalue() {
        // min <C, X> s.t. tr X = 1, X >= 0 -> lambda_min(C)
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let c = random_hermitian(&mut rng, 4);
            let lam_min = crate::linalg::hermitian_eigenvalues(&c)[0];
            let mut b = ProgramBuilder::new();
            let x = b.hermitian_psd_block(4);
            b.objective_matrix(&x, &c);
            b.constraint(1.0).matrix(&x, &CMatrix::identity(4, 4));
            let p = b.build();
            let sol = solve(&p, 1e-8, 100).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            assert!(
                (sol.objective_value - lam_min).abs() < 1e-6,
                "obj {} vs lambda_min {}",
                sol.objective_value,
                lam_min
            );
        }
    }

    /// Brute-force LP solve by basis enumeration (all m-column subsets).
    fn lp_vertex_enumeration(a: &RMatrix, b: &RVector, c: &RVector) -> f64 {
        let m = a.nrows();
        let n = a.ncols();
        let mut best = f64::INFINITY;
        let mut cols = vec![0usize; m];
        fn rec(
            a: &RMatrix,
            b: &RVector,
            c: &RVector,
            cols: &mut Vec<usize>,
            depth: usize,
            start: usize,
            best: &mut f64,
        ) {
            let m = a.nrows();
            if depth == m {
                let basis = RMatrix::from_fn(m, m, |i, j| a[(i, cols[j])]);
                if let Some(xb) = basis.lu().solve(b) {
                    if xb.iter().all(|&v| v >= -1e-9) {
                        let obj: f64 = (0..m).map(|j| c[cols[j]] * xb[j]).sum();
                        if obj < *best {
                            *best = obj;
                        }
                    }
                }
                return;
            }
            for s in start..a.ncols() {
                cols[depth] = s;
                rec(a, b, c, cols, depth + 1, s + 1, best);
            }
        }
        rec(a, b, c, &mut cols, 0, 0, &mut best);
        let _ = n;
        best
    }

    #[test]
    fn linear_programs_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let m = 3;
            let n = 6;
            let a = RMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
            let x0 = RVector::from_fn(n, |_, _| rng.gen_range(0.2..1.0));
            let b_rhs = &a * &x0;
            let c = RVector::from_fn(n, |_, _| rng.gen_range(0.1..1.0));
            let truth = lp_vertex_enumeration(&a, &b_rhs, &c);
            assert!(truth.is_finite());

            let mut builder = ProgramBuilder::new();
            let vars = builder.nonneg_vars(n);
            for k in 0..n {
                builder.objective_scalar(vars.at(k), c[k]);
            }
            for i in 0..m {
                let mut row = builder.constraint(b_rhs[i]);
                for k in 0..n {
                    row = row.scalar(vars.at(k), a[(i, k)]);
                }
                drop(row);
            }
            let p = builder.build();
            let sol = solve(&p, 1e-8, 200).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            assert!(
                (sol.objective_value - truth).abs() <= 1e-6 * (1.0 + truth.abs()),
                "trial {trial}: ipm {} vs enumeration {}",
                sol.objective_value,
                truth
            );
        }
    }

    #[test]
    fn optimal_certificate_respects_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_hermitian(&mut rng, 5);
        let mut b = ProgramBuilder::new();
        let x = b.hermitian_psd_block(5);
        b.objective_matrix(&x, &c);
        for k in 0..5 {
            pin_complex_diagonal(&mut b, &x, k, 1.0);
        }
        let p = b.build();
        let sol = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.max_residual() <= 1e-9);
        // returned primal satisfies the equality rows
        let resid = p.equality_residual(&sol.primal);
        assert!(resid.norm() <= 1e-7);
        // weak duality: b'y <= <C, X>
        let dual_obj = p.rhs.dot(&sol.dual);
        assert!(dual_obj <= sol.objective_value + 1e-7);
    }

    #[test]
    fn detects_primal_infeasibility() {
        // x >= 0 with x = -1
        let mut b = ProgramBuilder::new();
        let v = b.nonneg_vars(1);
        b.objective_scalar(v.at(0), 1.0);
        b.constraint(-1.0).scalar(v.at(0), 1.0);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_psd_infeasibility() {
        // X >= 0 with X(0,0) = -1
        let mut b = ProgramBuilder::new();
        let x = b.hermitian_psd_block(2);
        b.objective_matrix(&x, &CMatrix::identity(2, 2));
        pin_complex_diagonal(&mut b, &x, 0, -1.0);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min -x1 s.t. x1 - x2 = 0, x >= 0: ray (t, t) drives the objective down
        let mut b = ProgramBuilder::new();
        let v = b.nonneg_vars(2);
        b.objective_scalar(v.at(0), -1.0);
        b.constraint(0.0).scalar(v.at(0), 1.0).scalar(v.at(1), -1.0);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn free_variable_with_slack_bound() {
        // min t s.t. t - s = 5, s >= 0 -> t = 5
        let mut b = ProgramBuilder::new();
        let s = b.nonneg_vars(1);
        let t = b.free_vars(1);
        b.objective_scalar(t.at(0), 1.0);
        b.constraint(5.0).scalar(t.at(0), 1.0).scalar(s.at(0), -1.0);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 5.0).abs() < 1e-6);
    }

    #[test]
    fn mixed_cone_program_with_all_block_kinds() {
        // min tr X + 2 s + t  s.t.  X(0,0) = 1, s + t = 3, tr X - s = 0,
        // X >= 0 (1x1 Hermitian), s >= 0, t free.
        // Eliminate: x = X(0,0) = 1 forces... tr X = x; s = x = 1; t = 2.
        // obj = 1 + 2 + 2 = 5.
        let mut b = ProgramBuilder::new();
        let x = b.hermitian_psd_block(1);
        let s = b.nonneg_vars(1);
        let t = b.free_vars(1);
        b.objective_matrix(&x, &CMatrix::identity(1, 1));
        b.objective_scalar(s.at(0), 2.0);
        b.objective_scalar(t.at(0), 1.0);
        pin_complex_diagonal(&mut b, &x, 0, 1.0);
        b.constraint(3.0).scalar(s.at(0), 1.0).scalar(t.at(0), 1.0);
        b.constraint(0.0)
            .matrix(&x, &CMatrix::identity(1, 1))
            .scalar(s.at(0), -1.0);
        let p = b.build();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 5.0).abs() < 1e-6, "obj {}", sol.objective_value);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let mut b = ProgramBuilder::new();
        let v = b.nonneg_vars(1);
        b.objective_scalar(v.at(0), 1.0);
        b.constraint(1.0).scalar(v.at(0), 1.0);
        let p = b.build();
        assert!(solve(&p, 0.0, 10).is_err());
    }

    #[test]
    fn svec_index_inversion_round_trips() {
        for local in 0..210 {
            let (i, j) = svec_local_to_ij(local);
            assert!(i <= j);
            assert_eq!(j * (j + 1) / 2 + i, local);
        }
    }

    #[test]
    fn random_sdps_satisfy_kkt_at_reported_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for trial in 0..8 {
            let n = 3;
            let m = 4;
            // feasible by construction: b_i = <A_i, X0> with X0 > 0
            let x0 = {
                let g = random_hermitian(&mut rng, n) + CMatrix::identity(n, n) * cx(3.0, 0.0);
                &g * g.adjoint() * cx(0.1, 0.0) + CMatrix::identity(n, n) * cx(0.1, 0.0)
            };
            let a_list: Vec<CMatrix> = (0..m).map(|_| random_hermitian(&mut rng, n)).collect();
            let c = random_hermitian(&mut rng, n) + CMatrix::identity(n, n) * cx(2.0, 0.0);
            let mut b = ProgramBuilder::new();
            let x = b.hermitian_psd_block(n);
            b.objective_matrix(&x, &c);
            for ai in &a_list {
                let rhs = crate::linalg::cinner(ai, &x0).re;
                b.constraint(rhs).matrix(&x, ai);
            }
            let p = b.build();
            let sol = solve(&p, 1e-8, 200).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            let xm = ProgramBuilder::extract_hermitian(&sol, &x);
            let eigs = crate::linalg::hermitian_eigenvalues(&xm);
            assert!(eigs[0] >= -1e-7, "X not PSD: {}", eigs[0]);
            for (k, ai) in a_list.iter().enumerate() {
                let got = crate::linalg::cinner(ai, &xm).re;
                let want = crate::linalg::cinner(ai, &x0).re;
                assert!((got - want).abs() < 1e-6, "trial {trial} row {k}");
            }
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let build = || {
            let mut b = ProgramBuilder::new();
            let x = b.hermitian_psd_block(3);
            b.objective_matrix(&x, &CMatrix::identity(3, 3));
            pin_complex_diagonal(&mut b, &x, 0, 2.0);
            pin_offdiag(&mut b, &x, 0, 2, 0.7, 0.1);
            b.build()
        };
        let s1 = solve(&build(), 1e-8, 100).unwrap();
        let s2 = solve(&build(), 1e-8, 100).unwrap();
        assert_eq!(s1.primal, s2.primal);
        assert_eq!(s1.iterations, s2.iterations);
    }

    #[test]
    fn handles_program_with_no_rows() {
        // min <I, X>, X >= 0, unconstrained -> X = 0
        let p = ConicProgram {
            objective: DVector::from_vec(vec![1.0, 0.0, 1.0]),
            rows: vec![],
            rhs: DVector::zeros(0),
            cone: ConeSpec { blocks: vec![ConeBlock::Psd { dim: 2 }] },
        };
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.objective_value.abs() < 1e-6);
    }

    #[test]
    fn embedded_solution_stays_hermitian_structured() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let c = random_hermitian(&mut rng, 3);
        let mut b = ProgramBuilder::new();
        let x = b.hermitian_psd_block(3);
        b.objective_matrix(&x, &c);
        b.constraint(1.0).matrix(&x, &CMatrix::identity(3, 3));
        let p = b.build();
        let sol = solve(&p, 1e-9, 200).unwrap();
        let raw = crate::conic::extract_real_block(&sol, &x);
        // embedded optimum should commute with the symplectic structure:
        // top-left == bottom-right, top-right == -(bottom-left)
        let n = 3;
        let a11 = raw.view((0, 0), (n, n)).clone_owned();
        let a22 = raw.view((n, n), (n, n)).clone_owned();
        let a21 = raw.view((n, 0), (n, n)).clone_owned();
        let a12 = raw.view((0, n), (n, n)).clone_owned();
        assert!((a11 - a22).norm() < 1e-5);
        assert!((a12 + a21).norm() < 1e-5);
        let _ = CVector::zeros(1);
    }
}
