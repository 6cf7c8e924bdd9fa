use alloc::string::String;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("solver error at shift {shift}: {reason}")]
    Solver { shift: f64, reason: String },
    #[error("incomplete spectrum in [{lo}, {hi}]: inertia counts {expected}, found {found}")]
    IncompleteSpectrum { lo: f64, hi: f64, expected: usize, found: usize },
    #[error("singular resolvent at z = {re}{im:+}i: {reason}")]
    SingularResolvent { re: f64, im: f64, reason: String },
    #[error("degeneracy error: {0}")]
    Degeneracy(String),
    #[error("hypothesis 1 violated: left {left} and right {right} within {tolerance}")]
    Hypothesis1 { left: f64, right: f64, tolerance: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = core::result::Result<T, Error>;
