use super::{JointState, Plant};
use crate::{Vector, F};

/// State norm beyond which a run counts as diverged.
const DIVERGENCE_NORM: F = 1e6;

/// Torque source evaluated once per integration step (zero-order hold).
pub trait Controller {
    fn torque(&mut self, t: F, s: &JointState) -> Vector;

    /// Side data recorded with the sample (errors, covariance extremes, ...).
    fn annotation(&self) -> Option<StepAnnotation> {
        None
    }
}

/// Zero-torque source.
pub struct Unforced(pub usize);

impl Controller for Unforced {
    fn torque(&mut self, _t: F, _s: &JointState) -> Vector {
        Vector::zeros(self.0)
    }
}

/// Per-sample controller-side annotations.
#[derive(Debug, Clone, Default)]
pub struct StepAnnotation {
    pub e: Option<Vector>,
    pub de: Option<Vector>,
    /// Controller-frame state (differs from the plant state for the rod).
    pub model_q: Option<Vector>,
    pub model_dq: Option<Vector>,
    pub sigma_min: Option<F>,
    pub sigma_max: Option<F>,
}

/// Time-indexed record of a simulated run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<F>,
    pub states: Vec<JointState>,
    pub torques: Vec<Vector>,
    pub annotations: Vec<StepAnnotation>,
    /// Time at which the state left the finite/bounded region, if it did.
    pub diverged_at: Option<F>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn dt(&self) -> F {
        if self.times.len() >= 2 { self.times[1] - self.times[0] } else { 0.0 }
    }
}

/// Classical fixed-step RK4 with the controller torque held constant within
/// each step. Terminates early and flags the trajectory when the state
/// leaves the finite region.
pub fn integrate(
    plant: &dyn Plant,
    controller: &mut dyn Controller,
    x0: &JointState,
    t_end: F,
    dt: F,
) -> Trajectory {
    assert!(dt > 0.0 && t_end >= dt, "integrate needs dt > 0 and t_end >= dt");
    let steps = (t_end / dt).round() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        torques: Vec::with_capacity(steps + 1),
        annotations: Vec::with_capacity(steps + 1),
        diverged_at: None,
    };

    let mut s = x0.clone();
    for k in 0..=steps {
        let t = k as F * dt;
        if !s.is_finite() || s.q.norm() > DIVERGENCE_NORM || s.dq.norm() > DIVERGENCE_NORM {
            traj.diverged_at = Some(t);
            break;
        }
        let tau = controller.torque(t, &s);
        traj.times.push(t);
        traj.states.push(s.clone());
        traj.torques.push(tau.clone());
        traj.annotations.push(controller.annotation().unwrap_or_default());
        if k == steps {
            break;
        }

        match rk4_step(plant, &s, &tau, dt) {
            Some(next) => s = next,
            None => {
                traj.diverged_at = Some(t + dt);
                break;
            }
        }
    }
    traj
}

fn rk4_step(plant: &dyn Plant, s: &JointState, tau: &Vector, dt: F) -> Option<JointState> {
    let f = |st: &JointState| -> Option<(Vector, Vector)> {
        let qdd = plant.accel(st, tau).ok()?;
        Some((st.dq.clone(), qdd))
    };

    let k1 = f(s)?;
    let s2 = JointState::new(&s.q + &k1.0 * (dt / 2.0), &s.dq + &k1.1 * (dt / 2.0));
    let k2 = f(&s2)?;
    let s3 = JointState::new(&s.q + &k2.0 * (dt / 2.0), &s.dq + &k2.1 * (dt / 2.0));
    let k3 = f(&s3)?;
    let s4 = JointState::new(&s.q + &k3.0 * dt, &s.dq + &k3.1 * dt);
    let k4 = f(&s4)?;

    let q = &s.q + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * (dt / 6.0);
    let dq = &s.dq + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * (dt / 6.0);
    let next = JointState::new(q, dq);
    next.is_finite().then_some(next)
}
