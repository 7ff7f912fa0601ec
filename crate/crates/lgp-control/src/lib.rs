//! Learning-based control of Euler-Lagrange systems with structured Gaussian
//! processes.
//!
//! The crate provides, bottom to top:
//!
//! * [`numerics`] — small dense symmetric linear algebra (Jacobi eigensolver,
//!   jittered Cholesky) and closed-form spectra for the block matrices used by
//!   the stability certificates. Generic over the scalar type.
//! * [`dynamics`] — ground-truth plants (analytic two-link arm, lumped FEM
//!   rod), the constant-curvature reduction, and fixed-step RK4 integration.
//! * [`lgp`] — the Lagrangian-GP: structured kernels pushed through the
//!   Euler-Lagrange operator, posterior fit, decomposition into inertia /
//!   Coriolis / gravity / dissipation estimates, posterior covariance, and
//!   hyperparameter optimization.
//! * [`control`] — PD+, nat-PD+ and variance-adaptive nat-PD+ tracking
//!   controllers with projector/Heaviside primitives and covariance-adaptive
//!   gains, plus closed-loop wiring.
//! * [`certificates`] — exponential-stability certificates: contraction
//!   metric bounds, time-variant convergence rate and ball radius, parameter
//!   search, and trajectory certification.
//! * [`harness`] — experiment orchestration: benchmark setups, metrics
//!   tables, Monte Carlo sweeps, CSV/TOML persistence.

pub mod certificates;
pub mod control;
pub mod dynamics;
pub mod harness;
pub mod lgp;
pub mod numerics;

/// Scalar used by the simulation, learning and experiment layers.
pub type F = f64;

/// Dense dynamically-sized matrix over [`F`].
pub type Mat = nalgebra::DMatrix<F>;

/// Dense dynamically-sized column vector over [`F`].
pub type Vector = nalgebra::DVector<F>;

/// Symmetric matrix over [`F`].
pub type SymMat = numerics::SymMatrix<F>;
