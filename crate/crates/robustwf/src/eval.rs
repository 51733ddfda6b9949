//! Ground-truth evaluation: exact SINR at a concrete (filter, waveform,
//! coefficient) triple, transmit–receive antenna patterns, and uniform
//! samplers over both uncertainty geometries for empirical dominance checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annular::AnnularSet;
use crate::linalg::{kron, standard_complex_gaussian, to_db, CMatrix, CVector, RVector};
use crate::result::DesignError;
use crate::scenario::{noise_covariance, shift_matrix, steering_vector, ScenarioConfig};
use crate::spherical::SphericalSet;

/// Pointwise transmit–receive gain |w^H (J₀^T ⊗ b(θ) a^T(θ)) s| over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid {
    /// Azimuths in radians.
    pub azimuths: RVector,
    /// Linear (magnitude) gains, one per azimuth.
    pub gains: RVector,
}

impl PatternGrid {
    /// Azimuth of the largest gain.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for i in 1..self.gains.len() {
            if self.gains[i] > self.gains[best] {
                best = i;
            }
        }
        self.azimuths[best]
    }

    /// CSV rendering with one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("azimuth_deg,gain_linear,gain_db\n");
        for i in 0..self.azimuths.len() {
            out.push_str(&format!(
                "{:.4},{:.12e},{:.6}\n",
                self.azimuths[i].to_degrees(),
                self.gains[i],
                to_db(self.gains[i] * self.gains[i])
            ));
        }
        out
    }
}

/// Exact output SINR |w^H Y(s) u|² / (w^H R_n w).
pub fn sinr(
    w: &CVector,
    s: &CVector,
    u: &CVector,
    scenario: &ScenarioConfig,
) -> Result<f64, DesignError> {
    scenario.validate()?;
    if w.norm() == 0.0 {
        return Err(DesignError::Invalid("filter must be nonzero".into()));
    }
    if w.len() != scenario.receive_dim()
        || s.len() != scenario.waveform_dim()
        || u.len() != scenario.num_paths()
    {
        return Err(DesignError::Invalid("dimension mismatch in SINR evaluation".into()));
    }
    let paths = scenario.path_matrices();
    let y = scenario.return_matrix(&paths, s);
    let noise = noise_covariance(scenario);
    let signal = (w.adjoint() * y * u)[(0, 0)].norm_sqr();
    let denom = (w.adjoint() * &noise.data * w)[(0, 0)].re;
    Ok(signal / denom)
}

/// Default pattern grid: 0.25° spacing over [−90°, 90°] (721 points).
pub fn default_azimuth_grid() -> Vec<f64> {
    (0..=720).map(|i| (-90.0 + 0.25 * i as f64).to_radians()).collect()
}

/// Transmit–receive pattern of a waveform-filter pair over an azimuth grid.
pub fn antenna_pattern(
    w: &CVector,
    s: &CVector,
    scenario: &ScenarioConfig,
    azimuth_grid: &[f64],
) -> Result<PatternGrid, DesignError> {
    scenario.validate()?;
    use std::f64::consts::PI;
    if azimuth_grid.iter().any(|t| !(-PI / 2.0..=PI / 2.0).contains(t)) {
        return Err(DesignError::Invalid("pattern azimuth outside [-pi/2, pi/2]".into()));
    }
    if w.len() != scenario.receive_dim() || s.len() != scenario.waveform_dim() {
        return Err(DesignError::Invalid("dimension mismatch in pattern evaluation".into()));
    }
    let j0 = shift_matrix(0, scenario.code_length, scenario.window_len())?;
    let j0t = CMatrix::from_fn(j0.ncols(), j0.nrows(), |i, j| Complex64::new(j0[(j, i)], 0.0));
    let gains: Vec<f64> = azimuth_grid
        .par_iter()
        .map(|&theta| {
            let a = steering_vector(theta, scenario.geometry.num_tx, scenario.geometry.tx_spacing);
            let b = steering_vector(theta, scenario.geometry.num_rx, scenario.geometry.rx_spacing);
            let response = kron(&j0t, &(&b * a.transpose()));
            (w.adjoint() * response * s)[(0, 0)].norm()
        })
        .collect();
    Ok(PatternGrid {
        azimuths: RVector::from_vec(azimuth_grid.to_vec()),
        gains: RVector::from_vec(gains),
    })
}

/// Uniform samples from the coefficient ball ‖u − u₀‖ ≤ r: Gaussian
/// direction scaled by r·U^{1/(2n)} (the ball has real dimension 2n).
pub fn sample_spherical(set: &SphericalSet, count: usize, seed: u64) -> Vec<CVector> {
    let n = set.center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let g = standard_complex_gaussian(&mut rng, n);
            let u: f64 = rng.gen_range(0.0..1.0f64);
            let scale = if g.norm() == 0.0 {
                0.0
            } else {
                set.radius * u.powf(1.0 / (2.0 * n as f64)) / g.norm()
            };
            &set.center + g.map(|v| v * scale)
        })
        .collect()
}

/// Uniform samples from the annular set: amplitude U(η(k), ξ(k)), phase
/// U(−π, π), independently per coefficient.
pub fn sample_annular(set: &AnnularSet, count: usize, seed: u64) -> Vec<CVector> {
    let n = set.lower.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            CVector::from_fn(n, |k, _| {
                let amp = if set.lower[k] == set.upper[k] {
                    set.lower[k]
                } else {
                    rng.gen_range(set.lower[k]..set.upper[k])
                };
                let phase = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                Complex64::from_polar(amp, phase)
            })
        })
        .collect()
}
