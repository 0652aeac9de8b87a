use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("malformed solution: {0}")]
    MalformedSolution(String),

    #[error("generation failed: {0}")]
    GenerationFailed(String),

    #[error("no fractional perfect matching exists")]
    Infeasible,

    #[error("duplication blow-up {size} exceeds cap {cap}")]
    BlowupExceeded { size: u128, cap: u128 },

    #[error("resource degree {realized} exceeds target {target} after trimming")]
    DegreeOverflow { realized: usize, target: usize },

    #[error("configuration {config} has {size} resource(s) and cannot be trimmed")]
    EdgeTooSmall { config: usize, size: usize },

    #[error("hierarchy not certified after {attempts} attempt(s)")]
    CertificationFailed { attempts: usize },

    #[error("assignment lift collapsed at level {level}")]
    LiftCollapsed { level: usize },

    #[error("finalization infeasible for {} configuration(s)", deficient.len())]
    FinalizeInfeasible { deficient: Vec<usize> },

    #[error("instance too large for exhaustive search: {selections} selections > {limit}")]
    TooLarge { selections: u128, limit: u128 },

    #[error("no perfect matching exists (LP infeasible)")]
    NoPerfectMatching,

    #[error("pull-back failed: {0}")]
    PullbackFailed(String),

    #[error("bad OPT guess: {0}")]
    BadGuess(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
