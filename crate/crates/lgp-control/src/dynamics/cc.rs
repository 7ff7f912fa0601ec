use serde::{Deserialize, Serialize};

use super::JointState;
use crate::{Mat, Vector, F};

/// Constant-curvature reduction: maps between the FEM rod's joint space and
/// the low-dimensional segment-curvature space. Each FEM joint belongs to
/// exactly one segment and bends uniformly within it, so the assignment
/// matrix `A` has one `1/n_per` entry per row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CcMap {
    pub n_segments: usize,
    pub n_elems: usize,
}

impl CcMap {
    pub fn new(n_segments: usize, n_elems: usize) -> Self {
        assert!(n_segments >= 1 && n_elems >= n_segments);
        assert_eq!(
            n_elems % n_segments,
            0,
            "FEM joints must distribute evenly across segments"
        );
        Self { n_segments, n_elems }
    }

    pub fn elems_per_segment(&self) -> usize {
        self.n_elems / self.n_segments
    }

    /// Assignment matrix `A` with `q_fem = A q_cc` for exact-CC shapes.
    pub fn assignment(&self) -> Mat {
        let per = self.elems_per_segment();
        let mut a = Mat::zeros(self.n_elems, self.n_segments);
        for j in 0..self.n_elems {
            a[(j, j / per)] = 1.0 / per as F;
        }
        a
    }

    /// Least-squares segment curvature `q_cc = (A'A)^-1 A' q_fem`; with the
    /// uniform assignment this is the per-segment sum of joint angles.
    pub fn reduce_vec(&self, v_fem: &Vector) -> Vector {
        assert_eq!(v_fem.len(), self.n_elems);
        let per = self.elems_per_segment();
        Vector::from_fn(self.n_segments, |i, _| {
            (0..per).map(|j| v_fem[i * per + j]).sum()
        })
    }

    pub fn reduce(&self, fem: &JointState) -> JointState {
        JointState::new(self.reduce_vec(&fem.q), self.reduce_vec(&fem.dq))
    }

    /// Virtual-work-consistent torque distribution
    /// `tau_fem = A (A'A)^-1 tau_cc`, i.e. every FEM joint of a segment
    /// carries the full segment torque, so that `A' tau_fem = tau_cc`.
    pub fn actuate(&self, tau_cc: &Vector) -> Vector {
        assert_eq!(tau_cc.len(), self.n_segments);
        let per = self.elems_per_segment();
        Vector::from_fn(self.n_elems, |j, _| tau_cc[j / per])
    }
}
