use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The coefficient `c^-2 - 2 gamma u` fell below the configured floor
    /// (or the level is outside the admissible band).
    #[error("degeneracy at node {node:?}, t = {t:?}: coefficient {coefficient:e} below floor {floor:e}")]
    Degeneracy {
        node: Option<usize>,
        t: Option<f64>,
        coefficient: f64,
        floor: f64,
    },

    #[error("state not admissible: max|u| = {max_abs_u} is not below threshold {threshold}")]
    Inadmissible { max_abs_u: f64, threshold: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("newton iteration failed at t = {t}: {reason} (residual history {history:?})")]
    NewtonDivergence { t: f64, reason: String, history: Vec<f64> },

    #[error("singular linear system (zero pivot in column {column})")]
    SingularMatrix { column: usize },

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("rank decision ambiguous: singular value {sigma:e} lies within the band around tolerance {tolerance:e}")]
    RankToleranceAmbiguous { sigma: f64, tolerance: f64 },

    #[error("compatibility enforcement failed: {0}")]
    EnforcementFailure(String),

    #[error("rate fit unreliable: {0}")]
    FitUnreliable(String),

    #[error("probe ambiguous: {0}")]
    ProbeAmbiguous(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Errors raised by the solver itself (as opposed to bad input or IO).
    pub fn is_solver_error(&self) -> bool {
        matches!(
            self,
            Error::Degeneracy { .. }
                | Error::NewtonDivergence { .. }
                | Error::SingularMatrix { .. }
                | Error::EigensolverFailure(_)
                | Error::RankToleranceAmbiguous { .. }
                | Error::EnforcementFailure(_)
                | Error::FitUnreliable(_)
                | Error::ProbeAmbiguous(_)
        )
    }

    /// Short machine-readable tag used in report files.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Degeneracy { .. } => "degeneracy",
            Error::Inadmissible { .. } => "inadmissible",
            Error::Config(_) => "config",
            Error::NewtonDivergence { .. } => "newton_divergence",
            Error::SingularMatrix { .. } => "singular_matrix",
            Error::EigensolverFailure(_) => "eigensolver_failure",
            Error::RankToleranceAmbiguous { .. } => "rank_tolerance_ambiguous",
            Error::EnforcementFailure(_) => "enforcement_failure",
            Error::FitUnreliable(_) => "fit_unreliable",
            Error::ProbeAmbiguous(_) => "probe_ambiguous",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn with_time(self, time: f64) -> Self {
        match self {
            Error::Degeneracy {
                node,
                t: None,
                coefficient,
                floor,
            } => Error::Degeneracy {
                node,
                t: Some(time),
                coefficient,
                floor,
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
