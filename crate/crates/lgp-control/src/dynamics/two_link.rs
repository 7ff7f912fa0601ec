use serde::{Deserialize, Serialize};

use super::{ElModel, Energy, JointState, Plant};
use crate::{Mat, SymMat, Vector, F};

/// Planar two-link manipulator with point masses at the link ends, gravity
/// acting along the positive x-axis so that `q = 0` is an equilibrium, and
/// linear plus quadratic joint dampers `D(dq) = d1 I + d2 diag(|dq|)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TwoLinkParams {
    pub m1: F,
    pub m2: F,
    pub l1: F,
    pub l2: F,
    pub gravity: F,
    pub d1: F,
    pub d2: F,
}

impl Default for TwoLinkParams {
    fn default() -> Self {
        Self { m1: 1.0, m2: 1.0, l1: 1.0, l2: 1.0, gravity: 10.0, d1: 1.0, d2: 1.0 }
    }
}

impl TwoLinkParams {
    /// Copy with each link's mass/length scaled by `1 + bias_n` and damping
    /// coefficients by `1 - bias_n` (the erroneous parametric estimate).
    pub fn biased(&self, bias: [F; 2]) -> Self {
        Self {
            m1: (1.0 + bias[0]) * self.m1,
            m2: (1.0 + bias[1]) * self.m2,
            l1: (1.0 + bias[0]) * self.l1,
            l2: (1.0 + bias[1]) * self.l2,
            gravity: self.gravity,
            d1: (1.0 - bias[0]) * self.d1,
            d2: (1.0 - bias[1]) * self.d2,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("d1", self.d1),
            ("d2", self.d2),
        ] {
            if v <= 0.0 {
                return Err(format!("two-link parameter {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TwoLink {
    p: TwoLinkParams,
    // Inertia shorthands: M = [[alpha + 2 beta c2, delta + beta c2],
    //                          [delta + beta c2,  delta]]
    alpha: F,
    beta: F,
    delta: F,
}

impl TwoLink {
    pub fn new(p: TwoLinkParams) -> Self {
        let alpha = (p.m1 + p.m2) * p.l1 * p.l1 + p.m2 * p.l2 * p.l2;
        let beta = p.m2 * p.l1 * p.l2;
        let delta = p.m2 * p.l2 * p.l2;
        Self { p, alpha, beta, delta }
    }

    pub fn params(&self) -> &TwoLinkParams {
        &self.p
    }
}

impl ElModel for TwoLink {
    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, q: &Vector) -> SymMat {
        let c2 = q[1].cos();
        let m11 = self.alpha + 2.0 * self.beta * c2;
        let m12 = self.delta + self.beta * c2;
        SymMat::from_row_major(2, &[m11, m12, m12, self.delta]).expect("finite inertia")
    }

    fn mass_matrix_partials(&self, q: &Vector) -> Vec<Mat> {
        let s2 = q[1].sin();
        let d1 = Mat::zeros(2, 2);
        let d2 = Mat::from_row_slice(
            2,
            2,
            &[-2.0 * self.beta * s2, -self.beta * s2, -self.beta * s2, 0.0],
        );
        vec![d1, d2]
    }

    fn gravity(&self, q: &Vector) -> Vector {
        let p = &self.p;
        let a = p.gravity * (p.m1 + p.m2) * p.l1;
        let b = p.gravity * p.m2 * p.l2;
        Vector::from_vec(vec![
            a * q[0].sin() + b * (q[0] + q[1]).sin(),
            b * (q[0] + q[1]).sin(),
        ])
    }

    fn damping_matrix(&self, dq: &Vector) -> Mat {
        Mat::from_diagonal(&Vector::from_vec(vec![
            self.p.d1 + self.p.d2 * dq[0].abs(),
            self.p.d1 + self.p.d2 * dq[1].abs(),
        ]))
    }

    fn energy(&self, s: &JointState) -> Energy {
        let m = self.mass_matrix(&s.q).to_dmatrix();
        let kinetic = 0.5 * (&m * &s.dq).dot(&s.dq);
        let p = &self.p;
        let potential = p.gravity
            * ((p.m1 + p.m2) * p.l1 * (1.0 - s.q[0].cos())
                + p.m2 * p.l2 * (1.0 - (s.q[0] + s.q[1]).cos()));
        Energy { kinetic, potential }
    }
}

impl Plant for TwoLink {}
