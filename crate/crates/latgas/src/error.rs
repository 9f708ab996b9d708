//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The CLI maps variants to process exit codes: parameter/usage problems
/// (`Param`, `Domain`, `Move`, `Parse`, `Bookkeeping`) exit with code 2,
/// capacity problems (`Capacity`) with 2, and a truncation-dominated study
/// reports exit code 3 at the harness level (not through this enum).
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violates its admissible range; the message names
    /// the violated bound.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// An operation was called outside its mathematical domain
    /// (e.g. non-quasi-square dimensions, start state not in a chain).
    #[error("domain error: {0}")]
    Domain(String),

    /// A particle exchange that is not a valid move (occupancy mismatch or
    /// non-adjacent sites).
    #[error("invalid move: {0}")]
    Move(String),

    /// Malformed text input; carries the 1-based line number when known.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A requested object exceeds a configured resource cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A torus set spans half the lattice or more, so its unwrapped
    /// bounding box is ambiguous.
    #[error("wrap ambiguity: {0}")]
    WrapAmbiguity(String),

    /// The dynamics has no executable move (every particle is blocked).
    #[error("frozen state: {0}")]
    Frozen(String),

    /// Internal bookkeeping was asked about an unknown entity
    /// (e.g. a particle id that was never registered).
    #[error("bookkeeping error: {0}")]
    Bookkeeping(String),

    /// An analysis was invoked on data that does not satisfy its premise
    /// (e.g. exit classification on a trajectory that never exits).
    #[error("analysis error: {0}")]
    Analysis(String),

    /// A numerical routine failed or two redundant computation routes
    /// disagreed beyond tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
