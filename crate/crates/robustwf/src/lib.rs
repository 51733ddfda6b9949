//! Joint transmit-waveform / receive-filter design for colocated MIMO radar
//! with an extended target observed through uncertain multipath returns.
//!
//! The library maximizes worst-case output SINR over a set of admissible
//! path-coefficient vectors, under a constant-modulus constraint on the
//! transmit code. Two uncertainty geometries are supported:
//!
//! * **spherical** — coefficients within a Euclidean ball around a nominal
//!   vector; solved by a single semidefinite relaxation plus Gaussian
//!   randomization ([`spherical`]),
//! * **annular** — per-path magnitude rings with free phase; solved by an
//!   alternating sequence of semidefinite programs ([`annular`]).
//!
//! Supporting modules: [`scenario`] builds the signal model (steering
//! vectors, delay shifts, noise covariance), [`conic`] contains a
//! self-contained interior-point solver for the semidefinite programs,
//! [`eval`] computes SINR and beampattern diagnostics, and [`cli`] backs the
//! `robustwf` binary.

pub mod annular;
pub mod cli;
pub mod conic;
pub mod eval;
pub mod linalg;
pub mod result;
pub mod scenario;
pub mod spherical;

pub use annular::{design_annular, AnnularSet, DmdsdrConfig, IterationTrace};
pub use result::{DesignError, DesignResult, SolveStats};
pub use scenario::{ArrayGeometry, NoiseStructure, PathSpec, ScenarioConfig};
pub use spherical::{design_spherical, DmsdrConfig, SphericalSet};
