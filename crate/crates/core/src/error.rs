use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range 1..={max} in {context}")]
    OutOfRange {
        context: &'static str,
        index: usize,
        max: usize,
    },

    #[error("stability guard violated: dt = {dt} exceeds admissible {admissible} ({detail})")]
    StabilityGuard {
        dt: f64,
        admissible: f64,
        detail: &'static str,
    },

    #[error("memory budget exceeded: {required} lattice cells > budget {budget}; evaluate at sample points instead")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("measure is not normalized: total mass {mass}")]
    Unnormalized { mass: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }

    /// True for violations of numeric guards (CFL, stability, budgets) as
    /// opposed to malformed input.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(
            self,
            Error::StabilityGuard { .. } | Error::BudgetExceeded { .. }
        )
    }
}
