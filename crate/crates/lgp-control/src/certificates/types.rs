use serde::{Deserialize, Serialize};

use crate::F;

/// Constant worst-case plant bounds entering the certificate: inertia
/// eigenvalue range, damping and stiffness floors, the configured model
/// error scale, and the Coriolis norm coefficients used by the diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WorstCaseBounds {
    /// Inertia floor over the workspace.
    pub m_lb: F,
    /// Inertia cap over the workspace.
    pub m_ub: F,
    /// Floor of the learned damping matrix over the workspace.
    pub d_hat_lb: F,
    /// Proportional gain floor (base gain, plus the adaptive floor when the
    /// covariance-adaptive law runs).
    pub k_p_lb: F,
    /// Derivative gain floor.
    pub k_d_lb: F,
    /// Model-error scale (configured; relates the torque error to the rate).
    pub delta: F,
    /// Coriolis norm coefficients `|C| <= (c0 + c1 |q|) |dq|` (diagnostics).
    pub coriolis_c0: F,
    pub coriolis_c1: F,
}

impl WorstCaseBounds {
    /// Combined damping floor `d = d_hat + k_d`.
    pub fn d_lb(&self) -> F {
        self.d_hat_lb + self.k_d_lb
    }

    /// Inertia eigenvalue sum `m_lb + m_ub`.
    pub fn m_sum(&self) -> F {
        self.m_lb + self.m_ub
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.m_lb && self.m_lb <= self.m_ub) {
            return Err("inertia bounds must satisfy 0 < m_lb <= m_ub".into());
        }
        if self.d_lb() <= 0.0 {
            return Err("combined damping floor must be positive".into());
        }
        if self.k_p_lb <= 0.0 {
            return Err("stiffness floor must be positive".into());
        }
        if self.delta <= 0.0 {
            return Err("model-error scale must be positive".into());
        }
        Ok(())
    }
}

/// Chosen certificate scalars plus the derived virtual stiffness and scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateParams {
    pub eps: F,
    pub theta: F,
    pub alpha_lb: F,
    pub kappa: F,
    pub phi: F,
    pub bounds: WorstCaseBounds,
}

impl CertificateParams {
    /// Builds the parameter set, deriving `kappa` and `phi` from the chosen
    /// scalars and the worst-case bounds.
    pub fn derive(bounds: WorstCaseBounds, eps: F, theta: F, alpha_lb: F) -> Self {
        let (kappa, phi) = super::kappa_phi(&bounds, eps, theta, alpha_lb);
        Self { eps, theta, alpha_lb, kappa, phi, bounds }
    }

    /// Lower Lyapunov level reached under the bounded model error:
    /// `V_lb = (eps/theta + 1/phi) delta^2 / 4`.
    pub fn v_floor(&self) -> F {
        (self.eps / self.theta + 1.0 / self.phi) * self.bounds.delta * self.bounds.delta / 4.0
    }
}

/// One violated certificate condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub detail: String,
}

/// Outcome of the Theorem-level feasibility check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CertificateError {
    #[error("metric positivity violated: {condition}")]
    MetricInfeasible { condition: String },
    #[error("certificate void: metric floor is non-positive ({mu_lb})")]
    NonPositiveMetricFloor { mu_lb: F },
    #[error("no feasible certificate parameters: {summary}")]
    NoFeasiblePoint { summary: String },
}
