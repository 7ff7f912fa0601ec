use serde::{Deserialize, Serialize};

use crate::dynamics::{ElModel, Energy, FemRod, FemRodParams, JointState, TwoLink, TwoLinkParams};
use crate::{Mat, SymMat, Vector};

/// Parametric prior mean of the GP: an Euler-Lagrange components provider
/// with (typically erroneous) parameters, or zero.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Zero { dof: usize },
    TwoLink { params: TwoLinkParams },
    Rod { params: FemRodParams },
}

impl PriorSpec {
    pub fn dof(&self) -> usize {
        match self {
            PriorSpec::Zero { dof } => *dof,
            PriorSpec::TwoLink { .. } => 2,
            PriorSpec::Rod { params } => params.n_elems,
        }
    }

    pub fn build(&self) -> Box<dyn ElModel + Send + Sync> {
        match self {
            PriorSpec::Zero { dof } => Box::new(ZeroModel { dof: *dof }),
            PriorSpec::TwoLink { params } => Box::new(TwoLink::new(params.clone())),
            PriorSpec::Rod { params } => Box::new(FemRod::new(params.clone())),
        }
    }
}

/// All-zero prior mean; the GP then learns the full dynamics.
#[derive(Debug, Clone)]
pub struct ZeroModel {
    pub dof: usize,
}

impl ElModel for ZeroModel {
    fn dof(&self) -> usize {
        self.dof
    }
    fn mass_matrix(&self, _q: &Vector) -> SymMat {
        SymMat::zeros(self.dof)
    }
    fn mass_matrix_partials(&self, _q: &Vector) -> Vec<Mat> {
        vec![Mat::zeros(self.dof, self.dof); self.dof]
    }
    fn gravity(&self, _q: &Vector) -> Vector {
        Vector::zeros(self.dof)
    }
    fn damping_matrix(&self, _dq: &Vector) -> Mat {
        Mat::zeros(self.dof, self.dof)
    }
    fn energy(&self, _s: &JointState) -> Energy {
        Energy { kinetic: 0.0, potential: 0.0 }
    }
}
