//! The conic modeling layer and interior-point solver on a problem with a
//! known closed form.
//!
//! Complex Hermitian semidefinite programs are embedded as real symmetric
//! ones internally; the builder exposes complex Hermitian blocks directly.
//! We solve  min tr(C X)  s.t.  tr(X) = 1, X >= 0  for a random Hermitian C,
//! whose optimum is the smallest eigenvalue of C with X the corresponding
//! spectral projector.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustwf::conic::{solve, ProgramBuilder};
use robustwf::linalg::{hermitian_eigenvalues, hermitize, CMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let a = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let c = hermitize(&a);

    let mut b = ProgramBuilder::new();
    let x = b.hermitian_psd_block(n);
    b.objective_matrix(&x, &c); // minimize Re tr(C^H X) = tr(C X)
    b.constraint(1.0).matrix(&x, &CMatrix::identity(n, n)); // tr(X) = 1

    let program = b.build();
    let solution = solve(&program, 1e-9, 200)?;
    let x_opt = ProgramBuilder::extract_hermitian(&solution, &x);

    let lam = hermitian_eigenvalues(&c);
    let lam_min = lam.min();
    println!("solver status    : {:?}", solution.status);
    println!("solver objective : {:.12}", solution.objective_value);
    println!("lambda_min(C)    : {:.12}", lam_min);
    println!("difference       : {:.2e}", (solution.objective_value - lam_min).abs());
    assert!((solution.objective_value - lam_min).abs() <= 1e-7 * lam_min.abs().max(1.0));

    // X should be (numerically) the rank-one projector onto the bottom
    // eigenvector: tr(X) = 1 and tr(C X) = lambda_min.
    let tr_x = x_opt.trace().re;
    let tr_cx = (&c * &x_opt).trace().re;
    println!("tr(X) = {:.12}, tr(C X) = {:.12}", tr_x, tr_cx);
    let mut lam_x: Vec<f64> = hermitian_eigenvalues(&x_opt).iter().copied().collect();
    lam_x.sort_by(|a, b| b.total_cmp(a));
    println!(
        "eigenvalues of X: top {:.6}, second {:.2e} (rank-one projector)",
        lam_x[0], lam_x[1]
    );
    Ok(())
}
