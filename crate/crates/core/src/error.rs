use thiserror::Error;

use crate::numeration::Digit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("p={p} and q={q} are not co-prime")]
    NotCoprime { p: i64, q: i64 },

    #[error("base {p}/{q} must satisfy p > q > 1")]
    OrderViolation { p: i64, q: i64 },

    #[error("base {p}/{q} is too large (p must be below 2^31)")]
    BaseTooLarge { p: i64, q: i64 },

    #[error("digit {0} is not in the alphabet B")]
    DigitNotInB(Digit),

    #[error("digit {0} is not in the minimal alphabet A_q")]
    DigitNotInAq(Digit),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("word {0} is not accepted")]
    NotAccepted(String),

    #[error("no match found within a budget of {0}")]
    NotFoundWithinBudget(u64),

    #[error("reachable states of this automaton do not form an interval")]
    NotAnInterval,

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

impl Error {
    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_owned(),
            reason: reason.into(),
        }
    }
}
