//! Structured kernels of the Lagrangian GP and their analytic derivatives
//! through the Euler-Lagrange operator.
//!
//! The scalar Lagrangian kernel is `k_L = k_T + k_G (+ k_U)` with
//!
//! * kinetic `k_T = 1/4 (dq o dq')' B (dq o dq') s(q, q')` — a quadratic
//!   form in the velocity products with a positive hypermatrix `B` and a
//!   shared isotropic squared-exponential factor,
//! * gravity `k_G` — a squared exponential over positions with
//!   per-coordinate length-scales,
//! * elastic `k_U` — the kinetic construction with positions in place of
//!   velocities (soft robot only).
//!
//! Dissipation is handled by the separate diagonal velocity kernel
//! `K_f(dq, dq') = diag(dq) K_d diag(dq')`, which is positive
//! semi-definite and passive by construction.
//!
//! All derivative combinations needed by the torque Gram blocks, the
//! component extraction (inertia, its position partials, gravity, damping)
//! and the energy posteriors are implemented in closed form; the unit tests
//! validate every layer against central finite differences.

use nalgebra::DVector;

use super::Hyperparams;
use crate::{Mat, Vector, F};

/// Full GP input: configuration, velocity, acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct LgpInput {
    pub q: Vector,
    pub dq: Vector,
    pub ddq: Vector,
}

impl LgpInput {
    pub fn new(q: Vector, dq: Vector, ddq: Vector) -> Self {
        assert!(q.len() == dq.len() && q.len() == ddq.len());
        Self { q, dq, ddq }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

/// Squared-exponential value and derivative bundle for one point pair.
#[derive(Debug, Clone)]
struct SeBundle {
    s: F,
    /// d s / d q
    sq: Vector,
    /// d s / d q'
    sqp: Vector,
    /// d^2 s / (d q d q'^T)
    sqqp: Mat,
}

fn se_core(q: &Vector, qp: &Vector, w: &[F]) -> SeBundle {
    let n = q.len();
    let mut expo = 0.0;
    for d in 0..n {
        let r = q[d] - qp[d];
        expo += w[d] * r * r;
    }
    let s = (-0.5 * expo).exp();
    let wr = Vector::from_fn(n, |d, _| w[d] * (q[d] - qp[d]));
    let sq = -s * &wr;
    let sqp = s * &wr;
    let sqqp = Mat::from_fn(n, n, |a, b| {
        let kron = if a == b { w[a] } else { 0.0 };
        s * (kron - wr[a] * wr[b])
    });
    SeBundle { s, sq, sqp, sqqp }
}

/// Squared exponential, evenly symmetrized (`s(q,q') + s(q,-q')`) when the
/// configuration space is mirror symmetric.
fn se_bundle(q: &Vector, qp: &Vector, w: &[F], symmetric: bool) -> SeBundle {
    let mut b = se_core(q, qp, w);
    if symmetric {
        let r = se_core(q, &(-qp), w);
        b.s += r.s;
        b.sq += r.sq;
        b.sqp -= r.sqp;
        b.sqqp -= r.sqqp;
    }
    b
}

/// Precomputed kernel machinery for a fixed set of hyperparameters.
#[derive(Debug, Clone)]
pub struct Kernels {
    n: usize,
    b_kin: Mat,
    w_kin: Vec<F>,
    grav_amp2: F,
    w_grav: Vec<F>,
    elastic: Option<(Mat, Vec<F>)>,
    diss_amp2: Vec<F>,
    w_diss: Vec<F>,
    symmetric: bool,
}

impl Kernels {
    pub fn new(h: &Hyperparams) -> Self {
        h.validate().expect("valid hyperparameters");
        let n = h.dof();
        let inv2 = |l: F| 1.0 / (l * l);
        Self {
            n,
            b_kin: Hyperparams::tri_hypermatrix(&h.kinetic_amps),
            w_kin: vec![inv2(h.kinetic_len); n],
            grav_amp2: h.gravity_amp * h.gravity_amp,
            w_grav: h.gravity_lens.iter().map(|&l| inv2(l)).collect(),
            elastic: h
                .elastic
                .as_ref()
                .map(|e| (Hyperparams::tri_hypermatrix(&e.amps), vec![inv2(e.len); n])),
            diss_amp2: h.dissipation_amps.iter().map(|&a| a * a).collect(),
            w_diss: h.dissipation_lens.iter().map(|&l| inv2(l)).collect(),
            symmetric: h.symmetric,
        }
    }

    pub fn dof(&self) -> usize {
        self.n
    }

    // ---- scalar kernel values (Lagrangian components) ----

    fn k_t_value(&self, x: &LgpInput, xp: &LgpInput) -> F {
        let b = se_bundle(&x.q, &xp.q, &self.w_kin, self.symmetric);
        let v = x.dq.component_mul(&xp.dq);
        0.25 * b.s * (&self.b_kin * &v).dot(&v)
    }

    fn k_g_value(&self, q: &Vector, qp: &Vector) -> F {
        self.grav_amp2 * se_bundle(q, qp, &self.w_grav, self.symmetric).s
    }

    fn k_u_value(&self, q: &Vector, qp: &Vector) -> F {
        match &self.elastic {
            None => 0.0,
            Some((bu, w)) => {
                let b = se_bundle(q, qp, w, self.symmetric);
                let u = q.component_mul(qp);
                0.25 * b.s * (bu * &u).dot(&u)
            }
        }
    }

    /// Scalar Lagrangian kernel `k_L = k_T + k_G + k_U`.
    pub fn k_lagrangian(&self, x: &LgpInput, xp: &LgpInput) -> F {
        self.k_t_value(x, xp) + self.k_g_value(&x.q, &xp.q) + self.k_u_value(&x.q, &xp.q)
    }

    // ---- Euler-Lagrange operator, left argument ----

    /// `L_q k_L` as an N-vector: the covariance of the conservative torque
    /// at `x` with the Lagrangian at `x'`.
    pub fn lop_left(&self, x: &LgpInput, xp: &LgpInput) -> Vector {
        let n = self.n;
        let mut out = Vector::zeros(n);

        // kinetic part
        let bd = se_bundle(&x.q, &xp.q, &self.w_kin, self.symmetric);
        let v = x.dq.component_mul(&xp.dq);
        let w = xp.dq.component_mul(&x.ddq);
        let bv = &self.b_kin * &v;
        let bw = &self.b_kin * &w;
        let pv = bv.dot(&v);
        let sigma1 = bd.sq.dot(&x.dq);
        for a in 0..n {
            out[a] += 0.5 * bd.s * xp.dq[a] * bw[a] + 0.5 * sigma1 * xp.dq[a] * bv[a]
                - 0.25 * pv * bd.sq[a];
        }

        // gravity part: L_q k_G = -d k_G / d q
        let gg = se_bundle(&x.q, &xp.q, &self.w_grav, self.symmetric);
        out -= self.grav_amp2 * &gg.sq;

        // elastic part: L_q k_U = -d k_U / d q
        if let Some((bu, wl)) = &self.elastic {
            let eb = se_bundle(&x.q, &xp.q, wl, self.symmetric);
            let u = x.q.component_mul(&xp.q);
            let buu = bu * &u;
            let pu = buu.dot(&u);
            for a in 0..n {
                out[a] -= 0.25 * (2.0 * buu[a] * xp.q[a] * eb.s + pu * eb.sq[a]);
            }
        }
        out
    }

    // ---- full torque blocks ----

    /// Conservative torque block `[L_q L_q' k_L]` (N x N).
    pub fn conservative_block(&self, x: &LgpInput, xp: &LgpInput) -> Mat {
        let mut out = self.kinetic_block(x, xp);
        out += self.gravity_block(&x.q, &xp.q);
        out += self.elastic_block(&x.q, &xp.q);
        out
    }

    /// Full torque block including the dissipation kernel.
    pub fn tau_block(&self, x: &LgpInput, xp: &LgpInput) -> Mat {
        let mut out = self.conservative_block(x, xp);
        for a in 0..self.n {
            out[(a, a)] += x.dq[a] * self.k_d_scalar(a, x.dq[a], xp.dq[a]) * xp.dq[a];
        }
        out
    }

    fn k_d_scalar(&self, a: usize, y: F, yp: F) -> F {
        let r = y - yp;
        self.diss_amp2[a] * (-0.5 * self.w_diss[a] * r * r).exp()
    }

    /// Kinetic block `[L_q L_q' k_T]`.
    fn kinetic_block(&self, x: &LgpInput, xp: &LgpInput) -> Mat {
        let n = self.n;
        let bd = se_bundle(&x.q, &xp.q, &self.w_kin, self.symmetric);
        let b = &self.b_kin;

        let v = x.dq.component_mul(&xp.dq);
        let w = xp.dq.component_mul(&x.ddq);
        let wp = x.dq.component_mul(&xp.ddq);
        let z = x.ddq.component_mul(&xp.ddq);
        let bv = b * &v;
        let bw = b * &w;
        let bwp = b * &wp;
        let bz = b * &z;
        let pv = bv.dot(&v);
        let sigma1 = bd.sq.dot(&x.dq);
        let sigma1p = bd.sqp.dot(&xp.dq);
        let sigma2 = (&bd.sqqp * &xp.dq).dot(&x.dq);
        let st_dq = DVector::from_fn(n, |bcol, _| bd.sqqp.column(bcol).dot(&x.dq));
        let s_dqp = &bd.sqqp * &xp.dq;

        Mat::from_fn(n, n, |a, bcol| {
            let kron = if a == bcol { 1.0 } else { 0.0 };
            let mut val = 0.0;
            // acceleration-acceleration and mixed acceleration terms
            val += 0.5 * bd.s * (kron * bz[a] + xp.ddq[a] * b[(a, bcol)] * x.ddq[bcol]);
            val += 0.5 * sigma1p * (kron * bw[a] + xp.dq[a] * b[(a, bcol)] * x.ddq[bcol]);
            val -= 0.5 * bd.sqp[bcol] * xp.dq[a] * bw[a];
            // velocity-coupling terms
            val += 0.5 * sigma1 * (kron * bwp[a] + xp.ddq[a] * b[(a, bcol)] * x.dq[bcol]);
            val += 0.5 * sigma2 * (kron * bv[a] + xp.dq[a] * b[(a, bcol)] * x.dq[bcol]);
            val -= 0.5 * st_dq[bcol] * xp.dq[a] * bv[a];
            // position-gradient terms
            val -= 0.5 * bd.sq[a] * x.dq[bcol] * bwp[bcol];
            val -= 0.5 * s_dqp[a] * x.dq[bcol] * bv[bcol];
            val += 0.25 * pv * bd.sqqp[(a, bcol)];
            val
        })
    }

    /// Gravity block `[L_q L_q' k_G] = d^2 k_G / (d q d q'^T)`.
    pub fn gravity_block(&self, q: &Vector, qp: &Vector) -> Mat {
        let gb = se_bundle(q, qp, &self.w_grav, self.symmetric);
        self.grav_amp2 * gb.sqqp
    }

    /// Elastic block `[L_q L_q' k_U] = d^2 k_U / (d q d q'^T)`.
    pub fn elastic_block(&self, q: &Vector, qp: &Vector) -> Mat {
        let n = self.n;
        match &self.elastic {
            None => Mat::zeros(n, n),
            Some((bu, wl)) => {
                let eb = se_bundle(q, qp, wl, self.symmetric);
                let u = q.component_mul(qp);
                let buu = bu * &u;
                let pu = buu.dot(&u);
                Mat::from_fn(n, n, |a, bcol| {
                    let kron = if a == bcol { 1.0 } else { 0.0 };
                    0.25 * (2.0 * (bu[(a, bcol)] * q[bcol] * qp[a] + kron * buu[a]) * eb.s
                        + 2.0 * buu[a] * qp[a] * eb.sqp[bcol]
                        + 2.0 * buu[bcol] * q[bcol] * eb.sq[a]
                        + pu * eb.sqqp[(a, bcol)])
                })
            }
        }
    }

    /// Dissipation block `diag(dq) K_d diag(dq')` (diagonal).
    pub fn dissipation_block(&self, dq: &Vector, dqp: &Vector) -> Mat {
        Mat::from_fn(self.n, self.n, |a, bcol| {
            if a == bcol {
                dq[a] * self.k_d_scalar(a, dq[a], dqp[a]) * dqp[a]
            } else {
                0.0
            }
        })
    }

    // ---- component extraction rows ----

    /// GP contribution to the inertia matrix at `q` from one training pair:
    /// contracts the acceleration-probe difference of the conservative block
    /// with the weight block `wj`. The result is symmetric in `(row, col)`.
    pub fn mass_contrib(&self, q: &Vector, xp: &LgpInput, wj: &[F]) -> Mat {
        let n = self.n;
        let bd = se_bundle(q, &xp.q, &self.w_kin, self.symmetric);
        let b = &self.b_kin;
        let sigma1p = bd.sqp.dot(&xp.dq);
        let w_dot: F = (0..n).map(|bi| bd.sqp[bi] * wj[bi]).sum();

        Mat::from_fn(n, n, |a, i| {
            let bai = b[(a, i)];
            0.5 * bd.s * bai * (xp.ddq[i] * wj[a] + xp.ddq[a] * wj[i])
                + 0.5 * sigma1p * bai * (xp.dq[i] * wj[a] + xp.dq[a] * wj[i])
                - 0.5 * w_dot * xp.dq[a] * bai * xp.dq[i]
        })
    }

    /// Position partials of [`Self::mass_contrib`]: one N x N matrix per
    /// coordinate.
    pub fn mass_partial_contrib(&self, q: &Vector, xp: &LgpInput, wj: &[F]) -> Vec<Mat> {
        let n = self.n;
        let bd = se_bundle(q, &xp.q, &self.w_kin, self.symmetric);
        let b = &self.b_kin;
        let s_dqp = &bd.sqqp * &xp.dq; // d sigma1' / d q

        (0..n)
            .map(|c| {
                let sw_c: F = (0..n).map(|bi| bd.sqqp[(c, bi)] * wj[bi]).sum();
                Mat::from_fn(n, n, |a, i| {
                    let bai = b[(a, i)];
                    0.5 * bd.sq[c] * bai * (xp.ddq[i] * wj[a] + xp.ddq[a] * wj[i])
                        + 0.5 * s_dqp[c] * bai * (xp.dq[i] * wj[a] + xp.dq[a] * wj[i])
                        - 0.5 * sw_c * xp.dq[a] * bai * xp.dq[i]
                })
            })
            .collect()
    }

    /// GP contribution to the diagonal damping matrix at `dq` from one
    /// training pair.
    pub fn damping_contrib(&self, dq: &Vector, xp: &LgpInput, wj: &[F]) -> Vector {
        Vector::from_fn(self.n, |a, _| {
            self.k_d_scalar(a, dq[a], xp.dq[a]) * xp.dq[a] * wj[a]
        })
    }

    /// Energy posterior rows: covariance of `(T, G, U)(x)` with the torque
    /// at the training input, as row vectors to contract with the weights.
    pub fn energy_rows(&self, x: &LgpInput, xp: &LgpInput) -> (Vector, Vector, Vector) {
        let n = self.n;

        // T row: L_q' k_T
        let bd = se_bundle(&x.q, &xp.q, &self.w_kin, self.symmetric);
        let v = x.dq.component_mul(&xp.dq);
        let wp = x.dq.component_mul(&xp.ddq);
        let bv = &self.b_kin * &v;
        let bwp = &self.b_kin * &wp;
        let pv = bv.dot(&v);
        let sigma1p = bd.sqp.dot(&xp.dq);
        let t_row = Vector::from_fn(n, |bcol, _| {
            0.5 * bd.s * x.dq[bcol] * bwp[bcol] + 0.5 * sigma1p * x.dq[bcol] * bv[bcol]
                - 0.25 * pv * bd.sqp[bcol]
        });

        // G row: d k_G / d q'
        let gb = se_bundle(&x.q, &xp.q, &self.w_grav, self.symmetric);
        let g_row = self.grav_amp2 * gb.sqp;

        // U row: d k_U / d q'
        let u_row = match &self.elastic {
            None => Vector::zeros(n),
            Some((bu, wl)) => {
                let eb = se_bundle(&x.q, &xp.q, wl, self.symmetric);
                let u = x.q.component_mul(&xp.q);
                let buu = bu * &u;
                let pu = buu.dot(&u);
                Vector::from_fn(n, |bcol, _| {
                    0.25 * (2.0 * buu[bcol] * x.q[bcol] * eb.s + pu * eb.sqp[bcol])
                })
            }
        };

        (t_row, g_row, u_row)
    }
}
