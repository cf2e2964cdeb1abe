use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures reported by the numerical core.
///
/// Variants carry plain numbers only so the error stays `Copy`-cheap and
/// usable without `std`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(&'static str),

    #[error("point coincides with corner S{0}; polar angle undefined")]
    AtCorner(usize),

    #[error("invalid mesh parameters: {0}")]
    InvalidMeshParameters(&'static str),

    #[error("mesh audit failed: {what} (value {value})")]
    MeshAudit { what: &'static str, value: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },

    #[error("L2 norm {0:e} too small to normalize")]
    Normalization(f64),

    #[error("quadrature drift {drift:e} exceeds tolerance")]
    QuadratureDrift { drift: f64 },

    #[error("invalid fit request: {0}")]
    InvalidFit(&'static str),

    #[error("fit residual {residual:e} above threshold {threshold:e}")]
    FitResidual { residual: f64, threshold: f64 },

    #[error("point ({0}, {1}) is outside the mesh")]
    OutsideMesh(f64, f64),

    #[error("fields live on different meshes")]
    MeshMismatch,
}
