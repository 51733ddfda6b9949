//! The inner problem of the spherical design: minimize a PSD quadratic form
//! u^H T u over a ball ||u - u0|| <= r.
//!
//! This is a trust-region-style subproblem. It is solved exactly through its
//! one-dimensional concave dual: a secular equation in the multiplier mu,
//! handled by safeguarded Newton iteration. The example checks the solution
//! three ways: the KKT stationarity residual, the dual value (which must
//! match the primal at the solved multiplier — strong duality), and brute
//! random sampling of the ball (which can never do better).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustwf::linalg::{hermitize, CMatrix, CVector};
use robustwf::spherical::{inner_min_spherical, spherical_dual_value, SphericalSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let b = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let t = hermitize(&(&b * b.adjoint())); // random PSD kernel
    let center = CVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let set = SphericalSet { center: center.clone(), radius: 0.7 };

    let (value, minimizer) = inner_min_spherical(&t, &set, 1e-12)?;
    println!("primal minimum: {:.12}", value);

    // The minimizer must sit on the boundary (T is positive definite here,
    // and the center is far enough out that the constraint binds).
    let dist = (&minimizer - &center).norm();
    println!("distance from center: {:.12} (radius {})", dist, set.radius);

    // Recover the multiplier from stationarity (T + mu I) u = mu u0 and check
    // that the dual function equals the primal there.
    let resid = &t * &minimizer;
    let diff = &center - &minimizer;
    // mu = |T u| / |u0 - u| componentwise consistent estimate
    let mu = resid.norm() / diff.norm().max(1e-300);
    let kkt = (&resid - diff.scale(mu)).norm() / resid.norm().max(1.0);
    println!("recovered multiplier mu = {:.6}, KKT residual {:.2e}", mu, kkt);
    let dual = spherical_dual_value(&t, &set, mu);
    println!("dual value at mu: {:.12} (gap {:.2e})", dual, (dual - value).abs());
    assert!((dual - value).abs() <= 1e-8 * value.max(1.0));

    // Random points in the ball can only do worse.
    let mut best = f64::INFINITY;
    for _ in 0..20_000 {
        let dir = CVector::from_fn(n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let u = &center + dir.scale(set.radius * rng.gen_range(0.0..1.0) / dir.norm());
        let v = (u.adjoint() * &t * &u)[(0, 0)].re;
        best = best.min(v);
    }
    println!("best of 20000 random ball points: {:.12}", best);
    assert!(best >= value - 1e-9 * value.abs().max(1.0));
    println!("sampling never beats the certified minimum: ok");
    Ok(())
}
