//! Ground-truth plants, the constant-curvature reduction, forward dynamics,
//! and fixed-step integration.

mod cc;
mod fem_rod;
mod integrate;
mod two_link;

pub use cc::CcMap;
pub use fem_rod::{FemRod, FemRodParams};
pub use integrate::{integrate, Controller, StepAnnotation, Trajectory, Unforced};
pub use two_link::{TwoLink, TwoLinkParams};

use crate::numerics::{chol_solve, JitterPolicy, NumericsError};
use crate::{Mat, SymMat, Vector, F};

/// Generalized position/velocity pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: Vector,
    pub dq: Vector,
}

impl JointState {
    pub fn new(q: Vector, dq: Vector) -> Self {
        assert_eq!(q.len(), dq.len(), "JointState dimensions must agree");
        Self { q, dq }
    }

    pub fn zeros(n: usize) -> Self {
        Self { q: Vector::zeros(n), dq: Vector::zeros(n) }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite()) && self.dq.iter().all(|v| v.is_finite())
    }
}

/// Evaluated Euler-Lagrange dynamics quadruple at a state: inertia `M`,
/// Coriolis `C` (built from Christoffel symbols of `M`), potential forces `g`
/// and the dissipation product `d = D(dq) dq`.
#[derive(Debug, Clone)]
pub struct ElComponents {
    pub m: SymMat,
    pub c: Mat,
    pub g: Vector,
    pub d: Vector,
}

/// Kinetic/potential energy pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: F,
    pub potential: F,
}

impl Energy {
    pub fn total(&self) -> F {
        self.kinetic + self.potential
    }
}

/// Provider of Euler-Lagrange components; implemented by the analytic plants
/// and by the learned posterior so controllers and certificates can treat
/// both uniformly.
pub trait ElModel: Sync {
    fn dof(&self) -> usize;

    fn mass_matrix(&self, q: &Vector) -> SymMat;

    /// Partial derivatives of the mass matrix w.r.t. each coordinate.
    fn mass_matrix_partials(&self, q: &Vector) -> Vec<Mat>;

    /// Potential force vector (gravity plus elastic terms).
    fn gravity(&self, q: &Vector) -> Vector;

    /// Damping matrix `D(dq)`.
    fn damping_matrix(&self, dq: &Vector) -> Mat;

    /// Dissipative force `D(dq) dq`.
    fn dissipation(&self, dq: &Vector) -> Vector {
        self.damping_matrix(dq) * dq
    }

    fn energy(&self, s: &JointState) -> Energy;

    /// Full component quadruple; `C` comes from Christoffel symbols of the
    /// mass matrix so that `dM/dt - 2C` is skew-symmetric by construction.
    fn components(&self, s: &JointState) -> ElComponents {
        let m = self.mass_matrix(&s.q);
        let partials = self.mass_matrix_partials(&s.q);
        let c = christoffel_coriolis(&partials, &s.dq);
        ElComponents {
            m,
            c,
            g: self.gravity(&s.q),
            d: self.dissipation(&s.dq),
        }
    }
}

/// Plant that can be driven by the integrator.
pub trait Plant: ElModel {
    /// Forward dynamics `qdd = M(q)^-1 (tau - C dq - g - d)`.
    fn accel(&self, s: &JointState, tau: &Vector) -> Result<Vector, NumericsError> {
        forward_dynamics(&self.components(s), &s.dq, tau)
    }
}

/// Coriolis matrix from Christoffel symbols:
/// `C_ab = 1/2 sum_k (dM_ab/dq_k + dM_ak/dq_b - dM_bk/dq_a) dq_k`.
pub fn christoffel_coriolis(partials: &[Mat], dq: &Vector) -> Mat {
    let n = dq.len();
    let mut c = Mat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += 0.5
                    * (partials[k][(a, b)] + partials[b][(a, k)] - partials[a][(b, k)])
                    * dq[k];
            }
            c[(a, b)] = acc;
        }
    }
    c
}

/// Time derivative of the mass matrix along the flow, from its partials.
pub fn mass_matrix_rate(partials: &[Mat], dq: &Vector) -> Mat {
    let n = dq.len();
    let mut mdot = Mat::zeros(n, n);
    for (k, p) in partials.iter().enumerate() {
        mdot += p * dq[k];
    }
    debug_assert_eq!(mdot.nrows(), n);
    mdot
}

/// Solves `M qdd = tau - C dq - g - d` for the acceleration.
pub fn forward_dynamics(
    c: &ElComponents,
    dq: &Vector,
    tau: &Vector,
) -> Result<Vector, NumericsError> {
    let rhs = tau - &c.c * dq - &c.g - &c.d;
    let rhs_m = Mat::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let (x, _) = chol_solve(&c.m, &rhs_m, JitterPolicy::None)?;
    Ok(Vector::from_column_slice(x.column(0).as_slice()))
}
