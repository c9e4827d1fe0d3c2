use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("site index {site} out of range for lattice with {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("integration diverged at t = {time}: {detail}")]
    Divergence { time: f64, detail: String },

    #[error("sweep does not bracket the threshold: {0}")]
    NotBracketed(String),

    #[error("insufficient samples: {got} batches, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("brute-force quadrature supports at most {max} sites, got {got}")]
    TooManySites { got: usize, max: usize },

    #[error("Bessel series truncation could not be certified up to order {0}")]
    Truncation(usize),

    #[error("Hilbert space dimension {dims} exceeds budget {budget}")]
    HilbertBudget { dims: usize, budget: usize },

    #[error("no steady state reached within t = {t_max} (residual {residual:e})")]
    NonConvergence { t_max: f64, residual: f64 },

    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    #[error("linear-response check failed: {0}")]
    Linearity(String),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::InvalidParameter { .. }
                | Error::Json(_)
                | Error::SiteOutOfRange { .. }
                | Error::TooManySites { .. }
                | Error::HilbertBudget { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
