//! Semidefinite relaxation plus randomization rounding, and how tight it is.
//!
//! The relaxed design variable is a waveform covariance; a constant-modulus
//! code is recovered by drawing Gaussian candidates from that covariance and
//! projecting each entry onto the unit circle. The relaxation optimum is an
//! upper bound on every feasible design, so the best rounded candidate is
//! sandwiched between "what sampling found" and "what the bound allows".

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robustwf::linalg::{psd_factor, to_db, CVector};
use robustwf::spherical::{inner_min_spherical, t_matrix, SphericalSet};
use robustwf::{
    design_spherical, ArrayGeometry, DmsdrConfig, NoiseStructure, PathSpec, ScenarioConfig,
};

/// Draw `count` Gaussian vectors with covariance `f f^H`, unit-modulus
/// projected entrywise — the rounding step of the relaxation.
fn rounded_candidates(
    f: &robustwf::linalg::CMatrix,
    count: usize,
    seed: u64,
) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = f.nrows();
    (0..count)
        .map(|_| {
            let g = CVector::from_fn(d, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) / 2f64.sqrt()
            });
            (f * g).map(|z| {
                if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) }
            })
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = ScenarioConfig {
        geometry: ArrayGeometry { num_tx: 2, num_rx: 2, tx_spacing: 1.0, rx_spacing: 0.5 },
        code_length: 4,
        target_azimuth: 30f64.to_radians(),
        scatterers: vec![PathSpec { azimuth: (-30f64).to_radians(), delay: 2 }],
        noise_power: 2.0,
        noise_correlation: 0.5,
        noise_structure: NoiseStructure::TimeBlock,
    };
    let set = SphericalSet {
        center: CVector::from_vec(vec![Complex64::new(0.8, 0.0), Complex64::new(0.3, 0.4)]),
        radius: 0.3,
    };
    let cfg = DmsdrConfig { randomization_trials: 50, rng_seed: 1, ..Default::default() };
    let result = design_spherical(&scenario, &set, &cfg)?;
    println!(
        "relaxation bound {:.4} dB, rounded design {:.4} dB",
        to_db(result.sdr_bound),
        to_db(result.worst_case_sinr)
    );
    // On this instance the relaxed covariance is already (numerically) rank
    // one, so rounding is exact: the bound is attained. To show what rounding
    // does when the draw actually matters, perturb the optimal waveform into
    // a rank-deficient-but-not-rank-one covariance and round from that.
    let d = result.waveform.len();
    let noise = CVector::from_fn(d, |k, _| Complex64::from_polar(0.4, 1.7 * k as f64));
    let smeared = &result.waveform * result.waveform.adjoint()
        + &noise * noise.adjoint();
    let factor = psd_factor(&smeared, 1e-12).expect("PSD factor");

    println!("\n  Q   best of Q rounded draws (dB)");
    for &q in &[1usize, 5, 25, 125] {
        let mut best = f64::NEG_INFINITY;
        for s in rounded_candidates(&factor, q, 7) {
            let t = t_matrix(&s, &scenario)?;
            let (val, _) = inner_min_spherical(&t, &set, 1e-10)?;
            best = best.max(val);
            assert!(val <= result.sdr_bound * (1.0 + 1e-6), "bound violated");
        }
        println!("{:>3}   {:>10.4}", q, to_db(best));
    }
    println!("\nmore draws close in on the bound; none ever exceed it: ok");
    Ok(())
}
