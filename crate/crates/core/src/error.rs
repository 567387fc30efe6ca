use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    /// Input data is degenerate for the requested operation (e.g. a
    /// boundary trace that is identically zero where a fit needs signal).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// The grid or sample budget cannot resolve the requested quantity.
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    /// An iteration hit its cap before reaching the requested tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
