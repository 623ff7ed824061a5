//! Time series of run diagnostics and the summary attached to a run.

use crate::error::Error;
use crate::model::State;

/// One diagnostics sample. The `u` extremes are kept so the deviation from
/// any reference level can be computed after the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub t: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub u_mean: f64,
    pub sup_v: f64,
    pub bc_residual: f64,
    pub energy: f64,
}

impl TimeSample {
    /// `sup |u - r|`
    pub fn sup_u_dev(&self, r: f64) -> f64 {
        (self.u_max - r).max(r - self.u_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Failed(Error),
}

/// Fitted long-time quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub r_inf: f64,
    pub omega: f64,
    pub fit_residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub series: Vec<TimeSample>,
    /// Level used for the `sup_u_dev` column (mean of the last state).
    pub reference: f64,
    pub final_state: Option<State>,
    pub status: RunStatus,
    pub steps: usize,
    pub newton_iterations: usize,
    pub max_abs_u: f64,
    pub fit: Option<DecayFit>,
}

impl ExperimentReport {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn error(&self) -> Option<&Error> {
        match &self.status {
            RunStatus::Failed(e) => Some(e),
            RunStatus::Completed => None,
        }
    }

    pub fn peak_sup_v(&self) -> f64 {
        self.series.iter().map(|s| s.sup_v).fold(0.0, f64::max)
    }
}
