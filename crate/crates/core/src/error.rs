use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The partial-quotient source ran out before the requested index.
    #[error("depth exceeded: partial quotient a_{needed} requested, source supplies {available}")]
    DepthExceeded { needed: usize, available: usize },

    /// A comparison between enclosures could not be settled, even after refinement.
    #[error("undecided at current precision: {context}")]
    Undecided { context: String },

    /// Fixed-point or enclosure precision is too coarse for the request.
    #[error("precision insufficient: {0}")]
    Precision(String),

    #[error("arc cap exceeded: {needed} arcs requested, cap is {cap}")]
    CapExceeded { needed: BigInt, cap: usize },

    #[error("index {index} outside the represented range of the sequence")]
    OutOfRange { index: BigInt },

    #[error("{property} violated at n = {n}")]
    Validation { property: String, n: BigInt },

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("witness not found: {0}")]
    WitnessNotFound(String),

    #[error("continued fraction terminated: f must be irrational to take step {step}")]
    NotIrrational { step: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn undecided(context: impl Into<String>) -> Self {
        Error::Undecided {
            context: context.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors that mean "the computation refused to guess": missing depth,
    /// insufficient precision, unmet hypotheses. Everything else is bad input or a bug.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::DepthExceeded { .. }
                | Error::Undecided { .. }
                | Error::Precision(_)
                | Error::CapExceeded { .. }
                | Error::HypothesisNotMet(_)
                | Error::WitnessNotFound(_)
                | Error::NotIrrational { .. }
        )
    }
}
