//! Error type shared by all modules.

use std::path::PathBuf;

/// Everything that can go wrong outside of plain I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Plane-wave spinor normalisation `√((E+m)/2Vm)` requires `m > 0`.
    #[error("plane-wave spinors are normalised per unit mass; m must be > 0 (got {mass})")]
    MasslessSpinor { mass: f64 },

    /// A parameter failed a structural constraint (positivity, power of two, …).
    #[error("invalid {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
        value: String,
    },

    /// A requested state space exceeds the hard qubit/size guard.
    #[error("state space needs {required} fermionic modes but at most {limit} are supported (dimension 2^{required})")]
    ModeGuard { required: usize, limit: usize },

    /// A requested array would exceed the configured memory budget.
    #[error("state of {needed_mb:.1} MiB exceeds the memory budget of {budget_mb} MiB; reduce N, ω or the photon cutoff")]
    MemoryBudget { needed_mb: f64, budget_mb: usize },

    /// A spatial point does not lie on the grid.
    #[error("point {x} is not a grid point (spacing {spacing}, length {length})")]
    OffGrid { x: f64, spacing: f64, length: f64 },

    /// Antisymmetrisation annihilated the initial state.
    #[error("packets are linearly dependent: the antisymmetrised state has norm {norm:.3e}; choose distinct packets")]
    DegeneratePackets { norm: f64 },

    /// The per-step norm monitor tripped.
    #[error("norm drifted by {drift:.3e} at step {step} (threshold {threshold:.3e}); the evolution is not unitary at this resolution")]
    Instability {
        step: u64,
        drift: f64,
        threshold: f64,
    },

    /// A run configuration failed validation; `path` names the offending field.
    #[error("config constraint violated at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A run configuration file could not be parsed.
    #[error("cannot parse config {file}: {message}")]
    ConfigParse { file: PathBuf, message: String },

    /// An internal cross-check failed; indicates a bug, not bad input.
    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: &'static str, value: impl ToString) -> Self {
        Error::InvalidParameter {
            name,
            reason,
            value: value.to_string(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
