use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::form::FormId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Some right option is `<=` some left option.
    #[error("invalid form: right option {right:?} <= left option {left:?}")]
    InvalidForm { left: FormId, right: FormId },

    #[error("form id {0:?} is not interned in this store")]
    UnknownForm(FormId),

    #[error("empty interval: {lo} >= {hi}")]
    EmptyInterval { lo: Dyadic, hi: Dyadic },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series did not converge")]
    NotConverged,
}
