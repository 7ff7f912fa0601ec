use super::{nat_pdp_torque, pdp_torque, ControllerKind, ControllerSpec, Reference};
use crate::dynamics::{forward_dynamics, CcMap, Controller, ElModel, JointState, StepAnnotation};
use crate::lgp::{CovarianceQuery, LgpModel};
use crate::numerics::sym_eig;
use crate::{SymMat, Vector, F};

/// Controller-in-the-loop wiring: evaluates the selected law on the model
/// state (reduced to curvature space for the rod), estimates the
/// acceleration for the covariance query from the learned model under the
/// previously applied torque, and maps the command back to the plant.
pub struct ClosedLoop<'a> {
    model: &'a dyn ElModel,
    /// Set when the model is the learned posterior; required by the
    /// variance-adaptive law for its covariance queries.
    lgp: Option<&'a LgpModel>,
    spec: ControllerSpec,
    reference: Reference,
    cc: Option<CcMap>,
    prev_tau: Option<Vector>,
    last_ann: StepAnnotation,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(
        model: &'a dyn ElModel,
        lgp: Option<&'a LgpModel>,
        spec: ControllerSpec,
        reference: Reference,
        cc: Option<CcMap>,
    ) -> Self {
        assert_eq!(reference.dof(), model.dof(), "reference/model dimensions must agree");
        if spec.kind == ControllerKind::VarNatPdp {
            assert!(
                lgp.is_some() && spec.adaptation.is_some(),
                "variance-adaptive control needs a learned model and adaptation gains"
            );
        }
        if let Some(map) = &cc {
            assert_eq!(map.n_segments, model.dof());
        }
        reference.validate().expect("consistent reference derivatives");
        Self { model, lgp, spec, reference, cc, prev_tau: None, last_ann: StepAnnotation::default() }
    }

    /// Covariance of the torque posterior at the current state, with the
    /// acceleration estimated from the model under the previous torque
    /// (the reference acceleration before the first step).
    fn covariance(&self, t: F, s: &JointState) -> SymMat {
        let lgp = self.lgp.expect("covariance requires the learned model");
        let ddq_est = match &self.prev_tau {
            None => self.reference.eval(t).2,
            Some(tau) => {
                let c = self.model.components(s);
                forward_dynamics(&c, &s.dq, tau).unwrap_or_else(|_| self.reference.eval(t).2)
            }
        };
        lgp.predict_cov(&CovarianceQuery {
            q: s.q.clone(),
            dq: s.dq.clone(),
            ddq_estimate: ddq_est,
        })
    }
}

impl Controller for ClosedLoop<'_> {
    fn torque(&mut self, t: F, plant_state: &JointState) -> Vector {
        let s = match &self.cc {
            Some(map) => map.reduce(plant_state),
            None => plant_state.clone(),
        };
        let (q_d, dq_d, _) = self.reference.eval(t);
        let e = &s.q - &q_d;
        let de = &s.dq - &dq_d;

        let mut sigma_extremes = None;
        let tau_model = match self.spec.kind {
            ControllerKind::Pdp => {
                pdp_torque(self.model, &self.reference, t, &s, &self.spec.k_p, &self.spec.k_d)
            }
            ControllerKind::NatPdp => {
                nat_pdp_torque(self.model, &self.reference, t, &s, &self.spec, None)
            }
            ControllerKind::VarNatPdp => {
                let sigma = self.covariance(t, &s);
                if let Ok(eig) = sym_eig(&sigma) {
                    sigma_extremes = Some((eig.min(), eig.max()));
                }
                nat_pdp_torque(self.model, &self.reference, t, &s, &self.spec, Some(&sigma))
            }
        };
        self.prev_tau = Some(tau_model.clone());
        self.last_ann = StepAnnotation {
            e: Some(e),
            de: Some(de),
            model_q: Some(s.q.clone()),
            model_dq: Some(s.dq.clone()),
            sigma_min: sigma_extremes.map(|x| x.0),
            sigma_max: sigma_extremes.map(|x| x.1),
        };

        match &self.cc {
            Some(map) => map.actuate(&tau_model),
            None => tau_model,
        }
    }

    fn annotation(&self) -> Option<StepAnnotation> {
        Some(self.last_ann.clone())
    }
}
