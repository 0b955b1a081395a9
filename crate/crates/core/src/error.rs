//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation requested exactly at a kernel singularity.
    #[error("evaluation at singularity: {0}")]
    Singularity(String),

    /// A non-finite number reached an entry point.
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    /// Derivative order above what the evaluator supports.
    #[error("unsupported derivative order {requested} (max {max})")]
    UnsupportedOrder { requested: usize, max: usize },

    /// The subdivision budget ran out before the tolerance was met.
    /// Carries the best available estimate and its error bound.
    #[error("quadrature tolerance not met (best {value:.6e} +/- {error:.2e})")]
    ToleranceNotMet { value: f64, error: f64 },

    /// A caller violated an interface contract.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Time step rejected by the CFL condition.
    #[error("CFL violation: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput(what.to_string()))
    }
}
