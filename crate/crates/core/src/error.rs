use thiserror::Error;

use crate::markov_ifs::Symbol;

/// Errors raised by the geometry, pressure and target routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol {0} is not in the alphabet")]
    UnknownSymbol(Symbol),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point escapes the repeller at iterate {depth}")]
    Escape { depth: usize },

    /// `requested` is `None` when the word count overflows `u64`.
    #[error("enumeration of {} words exceeds the budget of {budget}{}",
        requested.map_or_else(|| "more than 2^64".to_string(), |r| r.to_string()),
        completed_level.map_or_else(String::new, |l| format!(" (deepest completed level {l})")))]
    Budget {
        requested: Option<u64>,
        budget: u64,
        completed_level: Option<usize>,
    },

    #[error("no admissible threshold index found below the search cap {cap}")]
    SearchCap { cap: u64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
