use std::path::Path;

use super::{mu_floor, radius, rate_alpha, CertificateParams, RateSample};
use crate::control::{adaptive_gain, ControllerKind, ControllerSpec, Reference};
use crate::dynamics::{forward_dynamics, CcMap, ElModel, JointState, Trajectory};
use crate::lgp::{CovarianceQuery, LgpModel};
use crate::numerics::sym_eig;
use crate::{Mat, Vector, F};

/// Per-sample certificate evaluation along a trajectory.
#[derive(Debug, Clone)]
pub struct CertificateTrace {
    pub times: Vec<F>,
    pub v: Vec<F>,
    pub alpha: Vec<F>,
    pub rho: Vec<F>,
    pub envelope: Vec<F>,
    pub err_norm: Vec<F>,
    pub violated: Vec<bool>,
    /// Rate quadratic admitted a real root at this sample.
    pub region_ok: Vec<bool>,
    /// Rate stayed above the design floor where the region condition held.
    pub alpha_floor_ok: Vec<bool>,
    pub mu_lb: Vec<F>,
    pub c0: F,
    pub v_floor: F,
}

impl CertificateTrace {
    pub fn violations(&self) -> usize {
        self.violated.iter().filter(|&&v| v).count()
    }

    pub fn region_violations(&self) -> usize {
        self.region_ok.iter().filter(|&&ok| !ok).count()
    }

    /// CSV export: `t, V, alpha, rho, envelope, err_norm, violated`.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,V,alpha,rho,envelope,err_norm,violated")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.times[i],
                self.v[i],
                self.alpha[i],
                self.rho[i],
                self.envelope[i],
                self.err_norm[i],
                self.violated[i] as u8
            )?;
        }
        Ok(())
    }
}

/// Lyapunov candidate
/// `V = G(e) + kappa/2 |e|^2 + eps e' M(q) de + 1/2 de' M(q) de`
/// with the learned potential energy evaluated at the error (relative to
/// the origin).
pub fn lyapunov_v(
    model: &dyn ElModel,
    params: &CertificateParams,
    q: &Vector,
    e: &Vector,
    de: &Vector,
) -> F {
    let m = model.mass_matrix(q).to_dmatrix();
    potential_at_error(model, e) + 0.5 * params.kappa * e.norm_squared()
        + params.eps * (&m * de).dot(e)
        + 0.5 * (&m * de).dot(de)
}

/// Learned potential energy at the error, normalized to vanish at zero.
pub fn potential_at_error(model: &dyn ElModel, e: &Vector) -> F {
    let n = e.len();
    let at = |q: Vector| model.energy(&JointState::new(q, Vector::zeros(n))).potential;
    at(e.clone()) - at(Vector::zeros(n))
}

/// Everything the certification pass needs to re-derive per-sample model
/// quantities and controller gains.
pub struct CertifyContext<'a> {
    pub model: &'a dyn ElModel,
    /// Present when the controller is covariance-adaptive.
    pub lgp: Option<&'a LgpModel>,
    pub spec: &'a ControllerSpec,
    pub reference: &'a Reference,
    pub cc: Option<&'a CcMap>,
}

impl CertifyContext<'_> {
    /// Model-frame torque from the recorded plant torque.
    fn model_torque(&self, tau_plant: &Vector) -> Vector {
        match self.cc {
            Some(map) => map.reduce_vec(tau_plant),
            None => tau_plant.clone(),
        }
    }

    /// Gains at a sample, re-deriving the covariance query exactly as the
    /// closed loop did (acceleration estimated from the model under the
    /// previously applied torque).
    fn gains_at(
        &self,
        t: F,
        s: &JointState,
        prev_tau_model: Option<&Vector>,
    ) -> (Mat, Mat) {
        let mut k_p = self.spec.k_p.to_dmatrix();
        let mut k_d = self.spec.k_d.to_dmatrix();
        if self.spec.kind == ControllerKind::VarNatPdp {
            let lgp = self.lgp.expect("adaptive certification needs the learned model");
            let g = self
                .spec
                .adaptation
                .as_ref()
                .expect("adaptive certification needs adaptation gains");
            let ddq_est = match prev_tau_model {
                None => self.reference.eval(t).2,
                Some(tau) => {
                    let c = self.model.components(s);
                    forward_dynamics(&c, &s.dq, tau).unwrap_or_else(|_| self.reference.eval(t).2)
                }
            };
            let sigma = lgp.predict_cov(&CovarianceQuery {
                q: s.q.clone(),
                dq: s.dq.clone(),
                ddq_estimate: ddq_est,
            });
            let add = adaptive_gain(g, &sigma)
                .expect("adaptive gain defined for PSD covariance")
                .to_dmatrix();
            k_p += &add;
            k_d += add;
        }
        (k_p, k_d)
    }
}

/// Builds the per-sample rate input from recorded state and model queries.
pub fn rate_sample_at(
    ctx: &CertifyContext,
    s: &JointState,
    e: &Vector,
    de: &Vector,
    k_p: Mat,
    k_d: Mat,
) -> RateSample {
    let model = ctx.model;
    RateSample {
        e: e.clone(),
        de: de.clone(),
        m_hat: model.mass_matrix(&s.q),
        coriolis: model.components(s).c,
        damping_err: model.damping_matrix(de),
        g_q: model.gravity(&s.q),
        d_q: model.dissipation(&s.dq),
        g_e_inner: e.dot(&model.gravity(e)),
        g_hat_e: potential_at_error(model, e),
        k_p,
        k_d,
    }
}

/// Certifies a recorded trajectory: per-sample Lyapunov value, rate, ball
/// radius, and the exponential envelope; violations are data, not errors.
pub fn certify(
    traj: &Trajectory,
    ctx: &CertifyContext,
    params: &CertificateParams,
) -> CertificateTrace {
    let len = traj.times.len();
    let mut out = CertificateTrace {
        times: traj.times.clone(),
        v: Vec::with_capacity(len),
        alpha: Vec::with_capacity(len),
        rho: Vec::with_capacity(len),
        envelope: Vec::with_capacity(len),
        err_norm: Vec::with_capacity(len),
        violated: Vec::with_capacity(len),
        region_ok: Vec::with_capacity(len),
        alpha_floor_ok: Vec::with_capacity(len),
        mu_lb: Vec::with_capacity(len),
        c0: 0.0,
        v_floor: params.v_floor(),
    };

    let mut integral_alpha = 0.0;
    let mut prev_alpha = 0.0;
    let mut prev_tau_model: Option<Vector> = None;

    for i in 0..len {
        let t = traj.times[i];
        let ann = &traj.annotations[i];
        let (q, dq) = match (&ann.model_q, &ann.model_dq) {
            (Some(q), Some(dq)) => (q.clone(), dq.clone()),
            _ => (traj.states[i].q.clone(), traj.states[i].dq.clone()),
        };
        let s = JointState::new(q, dq);
        let (q_d, dq_d, _) = ctx.reference.eval(t);
        let e = ann.e.clone().unwrap_or(&s.q - &q_d);
        let de = ann.de.clone().unwrap_or(&s.dq - &dq_d);

        let (k_p, k_d) = ctx.gains_at(t, &s, prev_tau_model.as_ref());
        let sample = rate_sample_at(ctx, &s, &e, &de, k_p, k_d);
        let rate = rate_alpha(&sample, params);
        let alpha_eff = match (rate.region_ok, rate.alpha) {
            (true, Some(a)) => a.max(0.0),
            // Outside the certified region: hold the envelope level rather
            // than letting it decay.
            _ => 0.0,
        };
        out.region_ok.push(rate.region_ok && rate.alpha.is_some());
        out.alpha_floor_ok.push(match (rate.region_ok, rate.alpha) {
            (true, Some(a)) => a >= params.alpha_lb - 1e-9,
            _ => true,
        });

        let x_sq = e.norm_squared() + de.norm_squared();
        let m_lb_t = sym_eig(&sample.m_hat).expect("inertia spectrum").min();
        let mu = mu_floor(params.kappa, m_lb_t, params.eps, sample.g_hat_e, x_sq);
        out.mu_lb.push(mu);
        let rho = radius(params, mu).map_or(F::INFINITY, |r| r);

        let v = lyapunov_v(ctx.model, params, &s.q, &e, &de);
        if i == 0 {
            let mu0 = mu.max(1e-12);
            out.c0 = (2.0 * (v - out.v_floor).max(0.0) / mu0).sqrt();
        } else {
            let dt = t - traj.times[i - 1];
            integral_alpha += 0.5 * (alpha_eff + prev_alpha) * dt;
        }
        prev_alpha = alpha_eff;

        let envelope = rho + out.c0 * (-integral_alpha).exp();
        let err_norm = x_sq.sqrt();
        out.v.push(v);
        out.alpha.push(alpha_eff);
        out.rho.push(rho);
        out.envelope.push(envelope);
        out.err_norm.push(err_norm);
        out.violated.push(err_norm > envelope + 1e-9);

        prev_tau_model = Some(ctx.model_torque(&traj.torques[i]));
    }
    out
}
