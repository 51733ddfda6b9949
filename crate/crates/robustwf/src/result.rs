//! Shared output type for both design algorithms, plus its JSON form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{ConicError, Residuals, SolveStatus};
use crate::linalg::CVector;
use crate::scenario::ScenarioError;

/// Failure modes shared by the two design pipelines.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("{context}: solver returned {status:?} (worst residual {residual:.3e})")]
    SolverFailed { context: String, status: SolveStatus, residual: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("iteration {iteration}: {message}")]
    Diverged { iteration: usize, message: String },
}

/// Status and accuracy record for one semidefinite-program solve performed
/// while producing a design. Kept so callers can audit that every relaxation
/// in the pipeline certified optimality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveStats {
    /// Which program this was ("sdr", "filter-step", "code-step", "trial-17", ...).
    pub label: String,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub duality_gap: f64,
}

impl SolveStats {
    pub fn new(label: impl Into<String>, status: SolveStatus, iterations: usize, r: &Residuals) -> Self {
        SolveStats {
            label: label.into(),
            status,
            iterations,
            primal_infeasibility: r.primal_infeasibility,
            dual_infeasibility: r.dual_infeasibility,
            duality_gap: r.duality_gap,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.primal_infeasibility
            .max(self.dual_infeasibility)
            .max(self.duality_gap)
    }
}

/// Per-run diagnostics attached to a [`DesignResult`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Worst-case SINR achieved by each randomization trial, in trial order.
    pub trial_values: Vec<f64>,
    /// Index of the winning trial, if randomization ran.
    pub best_trial: Option<usize>,
    /// One record per SDP solved while producing this design.
    pub solves: Vec<SolveStats>,
    /// Set when the design is technically valid but vacuous, e.g. the
    /// uncertainty ball contains the origin so the worst case is zero.
    pub degraded: bool,
}

/// A synthesized constant-modulus waveform with its matched receive filter.
#[derive(Debug, Clone)]
pub struct DesignResult {
    /// Transmit code, length L·N_T, every entry on the unit circle.
    pub waveform: CVector,
    /// Receive filter, length P·N_R.
    pub filter: CVector,
    /// Worst-case SINR over the uncertainty set, linear scale.
    pub worst_case_sinr: f64,
    /// Upper bound from the semidefinite relaxation; always ≥ `worst_case_sinr`.
    pub sdr_bound: f64,
    /// Coefficient vector attaining the worst case for the returned design.
    pub worst_u: CVector,
    pub diagnostics: Diagnostics,
}

impl DesignResult {
    /// Worst-case SINR in decibels (−inf for a degraded zero-SINR design).
    pub fn worst_case_sinr_db(&self) -> f64 {
        crate::linalg::to_db(self.worst_case_sinr)
    }

    /// True when every recorded SDP solve certified optimality with all
    /// residuals at or below `tol`.
    pub fn all_solves_optimal(&self, tol: f64) -> bool {
        self.diagnostics
            .solves
            .iter()
            .all(|s| s.status == SolveStatus::Optimal && s.max_residual() <= tol)
    }
}

/// Interleaved [re0, im0, re1, im1, ...] encoding of a complex vector.
pub(crate) fn to_interleaved(v: &CVector) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub(crate) fn from_interleaved(v: &[f64]) -> Result<CVector, String> {
    if v.len() % 2 != 0 {
        return Err("interleaved complex array must have even length".into());
    }
    Ok(CVector::from_iterator(
        v.len() / 2,
        v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])),
    ))
}

#[derive(Serialize, Deserialize)]
struct DesignResultFile {
    waveform: Vec<f64>,
    filter: Vec<f64>,
    worst_case_sinr: f64,
    sdr_bound: f64,
    worst_u: Vec<f64>,
    diagnostics: Diagnostics,
}

impl Serialize for DesignResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DesignResultFile {
            waveform: to_interleaved(&self.waveform),
            filter: to_interleaved(&self.filter),
            worst_case_sinr: self.worst_case_sinr,
            sdr_bound: self.sdr_bound,
            worst_u: to_interleaved(&self.worst_u),
            diagnostics: self.diagnostics.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DesignResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = DesignResultFile::deserialize(d)?;
        let conv = |v: &[f64]| from_interleaved(v).map_err(serde::de::Error::custom);
        Ok(DesignResult {
            waveform: conv(&f.waveform)?,
            filter: conv(&f.filter)?,
            worst_case_sinr: f.worst_case_sinr,
            sdr_bound: f.sdr_bound,
            worst_u: conv(&f.worst_u)?,
            diagnostics: f.diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn json_round_trip_preserves_complex_vectors() {
        let r = DesignResult {
            waveform: CVector::from_vec(vec![
                Complex64::new(0.6, 0.8),
                Complex64::new(-1.0, 0.0),
            ]),
            filter: CVector::from_vec(vec![Complex64::new(0.25, -0.5)]),
            worst_case_sinr: 3.5,
            sdr_bound: 4.0,
            worst_u: CVector::from_vec(vec![Complex64::new(0.1, 0.2)]),
            diagnostics: Diagnostics::default(),
        };
        let text = serde_json::to_string(&r).unwrap();
        let back: DesignResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back.waveform, r.waveform);
        assert_eq!(back.filter, r.filter);
        assert_eq!(back.worst_u, r.worst_u);
        assert_eq!(back.sdr_bound, 4.0);
    }

    #[test]
    fn interleaved_rejects_odd_length() {
        assert!(from_interleaved(&[1.0, 2.0, 3.0]).is_err());
    }
}
