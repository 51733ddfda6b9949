//! Deterministic signal-model construction for a colocated narrowband MIMO
//! radar observing an extended target through first-order multipath.
//!
//! Everything downstream (the SDP design problems, SINR evaluation, antenna
//! patterns) is built from the objects constructed here: uniform-linear-array
//! steering vectors, fast-time shift matrices, the per-path linear maps `A_k`
//! from the stacked waveform to the stacked returns, and the
//! interference-plus-noise covariance `R_n`.
//!
//! Scattering reciprocity is assumed throughout, so the direct path and each
//! scatterer contribute one merged coefficient slot: the coefficient vector
//! `u` has `M + 1` entries for `M` scatterers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::linalg::{kron, CMatrix, CVector, RMatrix};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("array geometry invalid: {0}")]
    Geometry(String),
    #[error("path spec invalid: {0}")]
    Path(String),
    #[error("noise model invalid: {0}")]
    Noise(String),
    #[error("shift matrix: delay {l} exceeds window (L={code_len}, P={window})")]
    DelayOutOfWindow { l: usize, code_len: usize, window: usize },
    #[error("path index {k} out of range (scenario has {count} merged paths)")]
    PathIndex { k: usize, count: usize },
    #[error("config field invalid: {0}")]
    Config(String),
}

/// Transmit/receive uniform linear array geometry. Spacings are in
/// wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub num_tx: usize,
    pub num_rx: usize,
    pub tx_spacing: f64,
    pub rx_spacing: f64,
}

impl ArrayGeometry {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.num_tx < 1 || self.num_rx < 1 {
            return Err(ScenarioError::Geometry("antenna counts must be >= 1".into()));
        }
        if self.tx_spacing <= 0.0 || self.rx_spacing <= 0.0 {
            return Err(ScenarioError::Geometry("element spacings must be > 0".into()));
        }
        Ok(())
    }
}

/// One merged multipath: azimuth of the scatterer and its relative fast-time
/// delay in samples. The direct path is implicit (delay 0, target azimuth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    /// Azimuth in radians, within [-pi/2, pi/2].
    pub azimuth: f64,
    /// Relative fast-time delay in samples.
    pub delay: usize,
}

impl PathSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(-PI / 2.0..=PI / 2.0).contains(&self.azimuth) {
            return Err(ScenarioError::Path(format!(
                "azimuth {} outside [-pi/2, pi/2]",
                self.azimuth
            )));
        }
        Ok(())
    }
}

/// Ordering convention of the noise covariance Kronecker product.
///
/// The stacked return vector is `vec(Y)` with `Y` of shape `N_R x P`, so the
/// channel index varies fastest. `TimeBlock` (`R_tilde (x) I_NR`) therefore
/// realizes "correlated within each channel, independent across channels";
/// `ChannelBlock` (`I_NR (x) R_tilde`) is the literal textbook formula under
/// the opposite stacking. `TimeBlock` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NoiseStructure {
    #[serde(rename = "time-block")]
    #[default]
    TimeBlock,
    #[serde(rename = "channel-block")]
    ChannelBlock,
}

/// Full scenario description: the generator of all deterministic model
/// objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioConfigFile", into = "ScenarioConfigFile")]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    /// Code length L per transmit antenna.
    pub code_length: usize,
    /// Target azimuth theta_0, radians.
    pub target_azimuth: f64,
    /// Scatterers producing merged multipath (length M).
    pub scatterers: Vec<PathSpec>,
    /// Noise power sigma^2.
    pub noise_power: f64,
    /// Per-channel lag-1 correlation beta in [0, 1).
    pub noise_correlation: f64,
    pub noise_structure: NoiseStructure,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.geometry.validate()?;
        if self.code_length == 0 {
            return Err(ScenarioError::Config("code_length must be >= 1".into()));
        }
        if !(-PI / 2.0..=PI / 2.0).contains(&self.target_azimuth) {
            return Err(ScenarioError::Config("target azimuth outside [-pi/2, pi/2]".into()));
        }
        for s in &self.scatterers {
            s.validate()?;
        }
        if self.noise_power <= 0.0 {
            return Err(ScenarioError::Noise("noise power must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.noise_correlation) {
            return Err(ScenarioError::Noise("noise correlation must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Recording window length P = L + max delay; P = L with no scatterers.
    pub fn window_len(&self) -> usize {
        self.code_length + self.scatterers.iter().map(|s| s.delay).max().unwrap_or(0)
    }

    /// Number of merged coefficient slots in u: direct path plus one per
    /// scatterer.
    pub fn num_paths(&self) -> usize {
        self.scatterers.len() + 1
    }

    /// Stacked waveform dimension L*N_T.
    pub fn waveform_dim(&self) -> usize {
        self.code_length * self.geometry.num_tx
    }

    /// Stacked receive dimension P*N_R.
    pub fn receive_dim(&self) -> usize {
        self.window_len() * self.geometry.num_rx
    }

    /// All path matrices A_0..A_M.
    pub fn path_matrices(&self) -> Vec<PathMatrix> {
        (0..self.num_paths()).map(|k| path_matrix(self, k).expect("k in range")).collect()
    }

    /// Y(s) = [A_0 s, ..., A_M s], shape (P*N_R) x (M+1).
    pub fn return_matrix(&self, paths: &[PathMatrix], s: &CVector) -> CMatrix {
        assert_eq!(s.len(), self.waveform_dim(), "waveform length mismatch");
        let mut y = CMatrix::zeros(self.receive_dim(), paths.len());
        for (k, a) in paths.iter().enumerate() {
            y.set_column(k, &(&a.data * s));
        }
        y
    }
}

/// On-disk form: angles in degrees, noise fields grouped.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioConfigFile {
    geometry: ArrayGeometry,
    code_length: usize,
    target_azimuth_deg: f64,
    scatterers: Vec<PathSpecFile>,
    noise: NoiseFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PathSpecFile {
    azimuth_deg: f64,
    delay: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NoiseFile {
    power: f64,
    correlation: f64,
    #[serde(default)]
    structure: NoiseStructure,
}

impl TryFrom<ScenarioConfigFile> for ScenarioConfig {
    type Error = ScenarioError;
    fn try_from(f: ScenarioConfigFile) -> Result<Self, Self::Error> {
        let cfg = ScenarioConfig {
            geometry: f.geometry,
            code_length: f.code_length,
            target_azimuth: f.target_azimuth_deg.to_radians(),
            scatterers: f
                .scatterers
                .iter()
                .map(|p| PathSpec { azimuth: p.azimuth_deg.to_radians(), delay: p.delay })
                .collect(),
            noise_power: f.noise.power,
            noise_correlation: f.noise.correlation,
            noise_structure: f.noise.structure,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<ScenarioConfig> for ScenarioConfigFile {
    fn from(c: ScenarioConfig) -> Self {
        ScenarioConfigFile {
            geometry: c.geometry,
            code_length: c.code_length,
            target_azimuth_deg: c.target_azimuth.to_degrees(),
            scatterers: c
                .scatterers
                .iter()
                .map(|p| PathSpecFile { azimuth_deg: p.azimuth.to_degrees(), delay: p.delay })
                .collect(),
            noise: NoiseFile {
                power: c.noise_power,
                correlation: c.noise_correlation,
                structure: c.noise_structure,
            },
        }
    }
}

/// Complex linear map from the stacked waveform to the stacked returns of one
/// merged path, shape (P*N_R) x (L*N_T).
#[derive(Debug, Clone)]
pub struct PathMatrix {
    pub data: CMatrix,
}

/// Interference-plus-noise covariance, Hermitian positive definite of size
/// P*N_R.
#[derive(Debug, Clone)]
pub struct NoiseCovariance {
    pub data: CMatrix,
    pub structure: NoiseStructure,
}

impl NoiseCovariance {
    /// Dense inverse via Cholesky. R_n is PD for beta in [0,1), sigma^2 > 0.
    pub fn inverse(&self) -> CMatrix {
        let n = self.data.nrows();
        self.data
            .clone()
            .cholesky()
            .expect("noise covariance is positive definite")
            .solve(&CMatrix::identity(n, n))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        crate::linalg::hermitian_eigenvalues(&self.data)[0]
    }
}

/// ULA response with phase reference at element 0 and positive phase
/// progression with sin(theta): entry n is e^{j 2 pi d n sin(theta)}.
pub fn steering_vector(azimuth: f64, num_elements: usize, spacing: f64) -> CVector {
    assert!(num_elements >= 1);
    let s = azimuth.sin();
    CVector::from_iterator(
        num_elements,
        (0..num_elements).map(|n| Complex64::from_polar(1.0, 2.0 * PI * spacing * (n as f64) * s)),
    )
}

/// Fast-time shift matrix J_l of shape L x P: J_l(i,j) = 1 iff j = i + l.
/// Rejects delays whose returns fall off the recording window.
pub fn shift_matrix(l: usize, code_len: usize, window: usize) -> Result<RMatrix, ScenarioError> {
    if window < code_len || l > window - code_len {
        return Err(ScenarioError::DelayOutOfWindow { l, code_len, window });
    }
    let mut j = DMatrix::zeros(code_len, window);
    for i in 0..code_len {
        j[(i, i + l)] = 1.0;
    }
    Ok(j)
}

fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Path matrix A_k. k = 0 is the direct path; k >= 1 is the k-th merged
/// multipath under reciprocity:
/// A_k = J_{l_k}^T (x) (b(theta_0) a^T(theta_k) + b(theta_k) a^T(theta_0)).
pub fn path_matrix(config: &ScenarioConfig, k: usize) -> Result<PathMatrix, ScenarioError> {
    let m = config.scatterers.len();
    if k > m {
        return Err(ScenarioError::PathIndex { k, count: m + 1 });
    }
    let g = &config.geometry;
    let window = config.window_len();
    let a0 = steering_vector(config.target_azimuth, g.num_tx, g.tx_spacing);
    let b0 = steering_vector(config.target_azimuth, g.num_rx, g.rx_spacing);
    let (delay, block) = if k == 0 {
        (0, &b0 * a0.transpose())
    } else {
        let path = &config.scatterers[k - 1];
        let ak = steering_vector(path.azimuth, g.num_tx, g.tx_spacing);
        let bk = steering_vector(path.azimuth, g.num_rx, g.rx_spacing);
        (path.delay, &b0 * ak.transpose() + &bk * a0.transpose())
    };
    let j = shift_matrix(delay, config.code_length, window)?;
    let data = kron(&complexify(&j.transpose()), &block);
    Ok(PathMatrix { data })
}

/// Noise covariance: Kronecker product of I_{N_R} and the P x P Toeplitz
/// factor R_tilde(m,n) = sigma^2 beta^|m-n|, ordered per the structure tag.
pub fn noise_covariance(config: &ScenarioConfig) -> NoiseCovariance {
    let p = config.window_len();
    let nr = config.geometry.num_rx;
    let sigma2 = config.noise_power;
    let beta = config.noise_correlation;
    let toeplitz = CMatrix::from_fn(p, p, |i, j| {
        Complex64::new(sigma2 * beta.powi((i as i32 - j as i32).abs()), 0.0)
    });
    let eye = CMatrix::identity(nr, nr);
    let data = match config.noise_structure {
        NoiseStructure::TimeBlock => kron(&toeplitz, &eye),
        NoiseStructure::ChannelBlock => kron(&eye, &toeplitz),
    };
    NoiseCovariance { data, structure: config.noise_structure }
}
