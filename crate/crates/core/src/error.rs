//! Error type shared by every module of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across model construction, fitting,
/// asymptotic prediction, weight design, budgeted sampling and sweeps.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A constructor or operation argument failed validation. `field` names
    /// the offending input so callers (and the CLI) can point at it.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// Root bracketing or refinement failed; usually a sign of a malformed
    /// configuration (e.g. a function with no zero crossing to the right of
    /// its last pole).
    #[error("root search failed: {0}")]
    RootSearch(String),

    /// A rational spectral function was evaluated exactly at one of its
    /// poles.
    #[error("evaluation at a pole of the weighted spectrum (x = {0})")]
    AtPole(f64),

    /// Amplitude debiasing was asked to invert an observation at or below
    /// the bulk edge, where the map is not invertible.
    #[error(
        "observed amplitude {observed} is not above the bulk edge {edge}; \
         the spike is below the phase transition"
    )]
    BelowTransition { observed: f64, edge: f64 },

    /// The SVD kernel reported non-convergence (effectively unreachable for
    /// finite inputs, but surfaced rather than panicking).
    #[error("singular value decomposition did not converge")]
    SvdFailed,

    /// Vertex enumeration is exponential in the number of sources and is
    /// capped to keep the search tractable.
    #[error("vertex enumeration supports at most {limit} sources, got {got}")]
    TooManySources { got: usize, limit: usize },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
