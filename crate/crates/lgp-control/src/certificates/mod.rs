//! Executable exponential-stability certificates: contraction-metric
//! bounds, the time-variant convergence rate and ball radius, certificate
//! parameter search, and trajectory certification.

mod bounds;
mod formulas;
mod optimize;
mod rate;
mod trace;
mod types;

pub use bounds::{bounds_from_model, BoundsSamplerConfig};
pub use formulas::{feasibility, gain_bounds, kappa_phi, metric_bounds, mu_floor, radius};
pub use optimize::{
    optimize_cert_params, upsilon_floor, worst_case_radius, CertSearchConfig, CertSearchResult,
};
pub use rate::{
    lmi_bisect_alpha, r_decomposition, rate_alpha, residual_block, structure_terms,
    upsilon_constants, LmiMode, LmiOracle, RSplit, RateResult, RateSample,
};
pub use trace::{
    certify, lyapunov_v, potential_at_error, rate_sample_at, CertificateTrace, CertifyContext,
};
pub use types::{
    CertificateError, CertificateParams, FeasibilityReport, Violation, WorstCaseBounds,
};
