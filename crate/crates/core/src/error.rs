use thiserror::Error;

/// Errors raised by fitting, information estimation and selective inference.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid observation {index}: {reason}")]
    InvalidObservation { index: usize, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("every observation is right-censored; no maximal intersections exist")]
    NoFiniteIntervals,

    #[error("degenerate likelihood at subject {subject}: Q(L) - Q(R) underflows")]
    DegenerateLikelihood { subject: usize },

    #[error("{stage} did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence {
        stage: String,
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("KKT violation: {0}")]
    KktViolation(String),

    #[error("pseudo-inverse of the nuisance Gram matrix failed (rank tolerance {tolerance:e})")]
    SingularGram { tolerance: f64 },

    #[error("information block is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("empty truncation region: u={lower}, v={upper}, theta={theta}, sigma={sigma}")]
    EmptyTruncation {
        lower: f64,
        upper: f64,
        theta: f64,
        sigma: f64,
    },

    #[error("could not bracket the confidence limit for target {target}")]
    BracketFailure { target: f64 },

    #[error("conditioning event hit only {accepted} times within {budget} draws")]
    RejectionExhausted { accepted: usize, budget: usize },
}

impl Error {
    /// Short tag used in replication summaries and CLI diagnostics.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidObservation { .. } => "InvalidObservation",
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NoFiniteIntervals => "NoFiniteIntervals",
            Error::DegenerateLikelihood { .. } => "DegenerateLikelihood",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::KktViolation(_) => "KktViolation",
            Error::SingularGram { .. } => "SingularGram",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::EmptyTruncation { .. } => "EmptyTruncation",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::RejectionExhausted { .. } => "RejectionExhausted",
        }
    }

    /// True for errors caused by malformed input rather than numerical trouble.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidObservation { .. }
                | Error::InvalidDataset(_)
                | Error::InvalidArgument(_)
                | Error::NoFiniteIntervals
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
