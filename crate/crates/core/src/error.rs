use thiserror::Error;

/// Errors shared across the simulator, solver and ensemble layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation; carries the offending field.
    #[error("invalid parameter `{field}`: {reason}")]
    Param { field: &'static str, reason: String },

    /// A run would exceed a configured resource limit (detected up front).
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An exhaustive computation was asked for more work than it supports.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An argument fell outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The trajectory was simulated without jump records, which this
    /// diagnostic needs.
    #[error("trajectory has no jump records; rerun the simulation with jump recording enabled")]
    MissingJumpRecord,

    /// The integrator produced a nonfinite or nonpositive value.
    #[error("solver diverged at t = {t}: {detail}")]
    Divergence { t: f64, detail: String },

    /// A replica of an ensemble failed; carries enough to reproduce it.
    #[error("replica {index} (seed {seed}) failed: {source}")]
    ReplicaFailed {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Param {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
