//! Dense symmetric linear algebra for small matrices (dim <= a few dozen),
//! plus closed-form spectra of the structured block matrices used by the
//! stability certificates.
//!
//! Everything here is generic over the scalar type so the same formulas run
//! in `f32` or `f64`; the rest of the crate pins `f64` through the aliases at
//! the crate root.

mod cholesky;
mod jacobi;
mod spectra;
mod sym;

pub use cholesky::{chol_solve, AppliedJitter, CholFactor, JitterPolicy};
pub use jacobi::{sym_eig, SpectralDecomp};
pub use spectra::{
    assemble_block_metric, assemble_upsilon, metric_eigs_closed, upsilon_eigs_closed,
    upsilon_min_eig,
};
pub use sym::SymMatrix;

use thiserror::Error;

/// Scalar trait for the generic numerics layer: `f32` and `f64` qualify.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + nalgebra::Scalar + core::fmt::Display + 'static
{
    /// Convenience conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Errors from the dense numeric kernels.
#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("non-finite entry at ({row}, {col}) in {what}")]
    NonFinite { what: &'static str, row: usize, col: usize },
    #[error("dimension mismatch: {what} ({left} vs {right})")]
    DimensionMismatch { what: &'static str, left: usize, right: usize },
    #[error("matrix not positive definite: pivot {pivot} non-positive after jitter {jitter}")]
    NotPositiveDefinite { pivot: usize, jitter: f64 },
}

pub type Result<T> = core::result::Result<T, NumericsError>;
