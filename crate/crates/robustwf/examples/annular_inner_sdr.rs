//! The inner problem of the annular design: minimize u^H M u over coefficient
//! vectors whose magnitudes lie in per-path rings, with free phases.
//!
//! The relaxation replaces u u^H by a PSD matrix with bounded diagonal, so it
//! can only go lower than the true minimum. On this small instance we compare
//! against a dense grid over magnitudes and phases and find the relaxation is
//! sandwiched tightly below it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustwf::annular::{inner_min_annular_bruteforce, inner_min_annular_sdr, AnnularSet};
use robustwf::linalg::{hermitian_eigenvalues, hermitize, CMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let b = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let m = hermitize(&(&b * b.adjoint()));
    let set = AnnularSet::new(&[0.8, 0.5, 0.2], &[1.2, 1.0, 0.7]);

    let (relaxed, r_u) = inner_min_annular_sdr(&m, &set, 1e-9)?;
    let grid = inner_min_annular_bruteforce(&m, &set, 48, 9)?;

    println!("relaxation value : {:.10}", relaxed);
    println!("48x9 grid search : {:.10}", grid);
    println!("sandwich slack   : {:.2e}", grid - relaxed);
    assert!(relaxed <= grid * (1.0 + 1e-9) + 1e-12, "relaxation exceeded a feasible value");

    // Diagonal of the relaxed covariance must respect the magnitude rings.
    for k in 0..n {
        let d = r_u[(k, k)].re;
        println!(
            "|u_{k}|^2 in [{:.4}, {:.4}], relaxed diagonal {:.6}",
            set.lower[k] * set.lower[k],
            set.upper[k] * set.upper[k],
            d
        );
    }
    let lam = hermitian_eigenvalues(&r_u);
    println!("min eigenvalue of relaxed covariance: {:.2e} (PSD)", lam.min());
    Ok(())
}
