use serde::{Deserialize, Serialize};

use super::{adaptive_gain, heaviside, projector, GainAdaptation};
use crate::dynamics::{ElModel, JointState};
use crate::{Mat, SymMat, Vector, F};

/// Smooth reference trajectory with consistent derivatives.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reference {
    /// `q_d(t) = amplitude * sin(omega t)`.
    Sine { amplitude: Vec<F>, omega: F },
    /// Constant hold at `q`.
    Constant { q: Vec<F> },
    /// `q_d(t) = c0 + c1 t + c2 t^2`.
    Polynomial { c0: Vec<F>, c1: Vec<F>, c2: Vec<F> },
}

impl Reference {
    pub fn dof(&self) -> usize {
        match self {
            Reference::Sine { amplitude, .. } => amplitude.len(),
            Reference::Constant { q } => q.len(),
            Reference::Polynomial { c0, .. } => c0.len(),
        }
    }

    /// Desired position, velocity, acceleration at time `t`.
    pub fn eval(&self, t: F) -> (Vector, Vector, Vector) {
        match self {
            Reference::Sine { amplitude, omega } => {
                let a = Vector::from_column_slice(amplitude);
                let (s, c) = ((omega * t).sin(), (omega * t).cos());
                (&a * s, &a * (omega * c), &a * (-omega * omega * s))
            }
            Reference::Constant { q } => {
                let n = q.len();
                (Vector::from_column_slice(q), Vector::zeros(n), Vector::zeros(n))
            }
            Reference::Polynomial { c0, c1, c2 } => {
                let c0 = Vector::from_column_slice(c0);
                let c1 = Vector::from_column_slice(c1);
                let c2 = Vector::from_column_slice(c2);
                (&c0 + &c1 * t + &c2 * (t * t), c1 + &c2 * (2.0 * t), c2 * 2.0)
            }
        }
    }

    /// Spot-checks derivative consistency by central differences.
    pub fn validate(&self) -> Result<(), String> {
        let h = 1e-6;
        for &t in &[0.1, 0.9, 2.3] {
            let (_, dq, ddq) = self.eval(t);
            let (qp, dqp, _) = self.eval(t + h);
            let (qm, dqm, _) = self.eval(t - h);
            let fd_dq = (&qp - &qm) / (2.0 * h);
            let fd_ddq = (&dqp - &dqm) / (2.0 * h);
            if (fd_dq - &dq).norm() > 1e-6 * (1.0 + dq.norm())
                || (fd_ddq - &ddq).norm() > 1e-6 * (1.0 + ddq.norm())
            {
                return Err(format!("reference derivatives inconsistent at t = {t}"));
            }
        }
        Ok(())
    }
}

/// Which tracking law to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Full gravity/friction compensation with constant PD feedback.
    Pdp,
    /// Structure-preserving projector law with static gains.
    NatPdp,
    /// Structure-preserving law with covariance-adaptive gains on top of
    /// the static ones.
    VarNatPdp,
}

/// Controller configuration: law, base gains, optional gain adaptation,
/// projector regularizer.
#[derive(Debug, Clone)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    pub k_p: SymMat,
    pub k_d: SymMat,
    pub adaptation: Option<GainAdaptation>,
    pub eps_reg: F,
}

impl ControllerSpec {
    pub fn new(kind: ControllerKind, k_p: SymMat, k_d: SymMat) -> Self {
        Self { kind, k_p, k_d, adaptation: None, eps_reg: 1e-3 }
    }

    pub fn with_adaptation(mut self, g: GainAdaptation) -> Self {
        self.adaptation = Some(g);
        self
    }

    /// Isotropic base gains `K_P = K_D = k I`.
    pub fn isotropic(kind: ControllerKind, n: usize, k: F) -> Self {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.set_sym(i, i, k);
        }
        Self::new(kind, m.clone(), m)
    }
}

/// Tracking errors at a state.
pub fn tracking_errors(reference: &Reference, t: F, s: &JointState) -> (Vector, Vector, Vector) {
    let (q_d, dq_d, ddq_d) = reference.eval(t);
    (&s.q - &q_d, &s.dq - &dq_d, ddq_d)
}

/// Standard PD+ law: model feedforward with full gravity and friction
/// compensation plus constant PD feedback,
/// `tau = M qdd_d + C qd_d + g(q) + D(dq) dq - K_P e - K_D de`.
pub fn pdp_torque(
    model: &dyn ElModel,
    reference: &Reference,
    t: F,
    s: &JointState,
    k_p: &SymMat,
    k_d: &SymMat,
) -> Vector {
    let (q_d, dq_d, ddq_d) = reference.eval(t);
    let e = &s.q - &q_d;
    let de = &s.dq - &dq_d;
    let c = model.components(s);
    c.m.to_dmatrix() * ddq_d + &c.c * dq_d + &c.g + &c.d
        - k_p.to_dmatrix() * e
        - k_d.to_dmatrix() * de
}

/// Effective proportional/derivative gains of the structure-preserving law:
/// base gains, plus the covariance-adaptive term for the adaptive variant.
pub fn effective_gains(spec: &ControllerSpec, sigma: Option<&SymMat>) -> (Mat, Mat) {
    let mut k_p = spec.k_p.to_dmatrix();
    let mut k_d = spec.k_d.to_dmatrix();
    if spec.kind == ControllerKind::VarNatPdp {
        let g = spec
            .adaptation
            .as_ref()
            .expect("variance-adaptive controller requires adaptation gains");
        let sigma = sigma.expect("variance-adaptive controller requires a covariance");
        let add = adaptive_gain(g, sigma)
            .expect("adaptive gain is defined for positive semi-definite covariance")
            .to_dmatrix();
        k_p += &add;
        k_d += add;
    }
    (k_p, k_d)
}

/// Structure-preserving (nat-PD+) law: cancels gravity/friction only in the
/// error-aligned subspace and replaces them by the natural impedance at the
/// errors,
/// `tau = M qdd_d + C qd_d + (I - h(e'g) P_e) g - g(e) - K_P(S) e
///        + (I - h(de'd) P_de) d - d(de) - K_D(S) de`.
pub fn nat_pdp_torque(
    model: &dyn ElModel,
    reference: &Reference,
    t: F,
    s: &JointState,
    spec: &ControllerSpec,
    sigma: Option<&SymMat>,
) -> Vector {
    let (q_d, dq_d, ddq_d) = reference.eval(t);
    let e = &s.q - &q_d;
    let de = &s.dq - &dq_d;
    let c = model.components(s);
    let g_q = &c.g;
    let d_q = &c.d;

    let p_e = projector(&e, spec.eps_reg).expect("regularized projector");
    let p_de = projector(&de, spec.eps_reg).expect("regularized projector");
    let h_g = heaviside(e.dot(g_q));
    let h_d = heaviside(de.dot(d_q));

    let (k_p, k_d) = effective_gains(spec, sigma);

    let n = s.dof();
    let id = Mat::identity(n, n);
    c.m.to_dmatrix() * ddq_d + &c.c * dq_d
        + (&id - &p_e * h_g) * g_q
        - model.gravity(&e)
        - &k_p * &e
        + (&id - &p_de * h_d) * d_q
        - model.dissipation(&de)
        - &k_d * &de
}
