use alloc::string::String;

/// Failures raised by the discretisation, the solver and the run loop.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// The depth condition `inf h > 0` is violated.
    #[error("vacuum state at t = {t}: inf h = {inf_h}{}", stage_suffix(*stage))]
    Vacuum {
        t: f64,
        inf_h: f64,
        /// Runge-Kutta stage (1..=4) at which the depth left the admissible set.
        stage: Option<usize>,
    },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(&'static str),

    #[error("need at least {needed} records, got {found}")]
    TooFewRecords { needed: usize, found: usize },
}

fn stage_suffix(stage: Option<usize>) -> String {
    match stage {
        Some(s) => alloc::format!(" (RK stage {s})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn with_stage(self, stage: usize) -> Self {
        match self {
            Error::Vacuum { t, inf_h, .. } => Error::Vacuum { t, inf_h, stage: Some(stage) },
            other => other,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, Error::Vacuum { .. })
    }
}

pub type Result<T> = core::result::Result<T, Error>;
