use crate::{Mat, Vector, F};

/// Heaviside step `h(x) = (1 + sign(x)) / 2` with `sign(0) = 0`.
pub fn heaviside(x: F) -> F {
    assert!(x.is_finite(), "heaviside input must be finite");
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

#[derive(Debug, thiserror::Error)]
#[error("projector undefined for zero vector without regularization")]
pub struct ProjectorDomainError;

/// Regularized rank-one projector `e e' / (eps_reg + |e|^2)` onto the span
/// of `e`. With `eps_reg = 0` and `e != 0` this is the exact orthogonal
/// projector (idempotent, unit norm).
pub fn projector(e: &Vector, eps_reg: F) -> Result<Mat, ProjectorDomainError> {
    assert!(eps_reg >= 0.0, "regularizer must be non-negative");
    let nsq = e.norm_squared();
    if eps_reg == 0.0 && nsq == 0.0 {
        return Err(ProjectorDomainError);
    }
    Ok(e * e.transpose() / (eps_reg + nsq))
}
