use serde::{Deserialize, Serialize};

use super::{ElModel, Energy, JointState, Plant};
use crate::numerics::{chol_solve, JitterPolicy, NumericsError};
use crate::{Mat, SymMat, Vector, F};

/// Planar rod discretized as a chain of short links joined by revolute
/// joints with linear torsional spring-damper elements. The base frame is
/// aligned with gravity so the straight configuration `q = 0` is the
/// equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FemRodParams {
    pub n_elems: usize,
    pub total_length: F,
    /// Per-element masses; uniform `total_mass / n_elems` for the FEM plant,
    /// biased per-segment values for the coarse parametric estimate.
    pub masses: Vec<F>,
    /// Lumped rotational inertia of each element about its center.
    pub inertias: Vec<F>,
    /// Torsional spring stiffness at each joint.
    pub stiffnesses: Vec<F>,
    /// Torsional damping at each joint.
    pub dampings: Vec<F>,
    pub gravity: F,
}

impl FemRodParams {
    /// Uniform rod: element mass `total_mass / n`, element inertia
    /// `m_e l_e^2 / 12` (thin rod about its center).
    pub fn uniform(n_elems: usize, total_mass: F, total_length: F, k: F, d: F, gravity: F) -> Self {
        assert!(n_elems >= 2, "rod needs at least two elements");
        let me = total_mass / n_elems as F;
        let le = total_length / n_elems as F;
        Self {
            n_elems,
            total_length,
            masses: vec![me; n_elems],
            inertias: vec![me * le * le / 12.0; n_elems],
            stiffnesses: vec![k; n_elems],
            dampings: vec![d; n_elems],
            gravity,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_elems < 2 {
            return Err("rod needs at least two elements".into());
        }
        for (name, v) in [
            ("masses", &self.masses),
            ("inertias", &self.inertias),
            ("stiffnesses", &self.stiffnesses),
            ("dampings", &self.dampings),
        ] {
            if v.len() != self.n_elems {
                return Err(format!("{name} must have one entry per element"));
            }
            if v.iter().any(|&x| x < 0.0) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FemRod {
    p: FemRodParams,
    le: F,
    /// Suffix mass sums: `mass_suffix[k] = sum_{i >= k} m_i`.
    mass_suffix: Vec<F>,
    /// Suffix inertia sums.
    inertia_suffix: Vec<F>,
}

impl FemRod {
    pub fn new(p: FemRodParams) -> Self {
        p.validate().expect("valid rod parameters");
        let n = p.n_elems;
        let le = p.total_length / n as F;
        let mut mass_suffix = vec![0.0; n + 1];
        let mut inertia_suffix = vec![0.0; n + 1];
        for k in (0..n).rev() {
            mass_suffix[k] = mass_suffix[k + 1] + p.masses[k];
            inertia_suffix[k] = inertia_suffix[k + 1] + p.inertias[k];
        }
        Self { p, le, mass_suffix, inertia_suffix }
    }

    pub fn params(&self) -> &FemRodParams {
        &self.p
    }

    fn abs_angles(&self, q: &Vector) -> Vec<F> {
        let mut phi = vec![0.0; self.p.n_elems];
        let mut acc = 0.0;
        for k in 0..self.p.n_elems {
            acc += q[k];
            phi[k] = acc;
        }
        phi
    }

    /// Translational pair weight `W_{kk'} = sum_{i >= max(k,k')} m_i c_ik c_ik'`
    /// with `c_ik = le` for `k < i` and `le/2` for `k = i`. Depends only on
    /// `max(k, k')` and whether `k == k'`.
    fn pair_weight(&self, k: usize, kp: usize) -> F {
        let le = self.le;
        let hi = k.max(kp);
        let tail = le * le * self.mass_suffix[hi + 1];
        if k == kp {
            tail + 0.25 * le * le * self.p.masses[hi]
        } else {
            tail + 0.5 * le * le * self.p.masses[hi]
        }
    }

    /// Mass matrix by two-dimensional suffix summation of the pairwise
    /// cosine kernel; O(n^2).
    fn assemble_mass(&self, q: &Vector) -> Mat {
        let n = self.p.n_elems;
        let phi = self.abs_angles(q);
        let mut k = Mat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                k[(a, b)] = self.pair_weight(a, b) * (phi[a] - phi[b]).cos();
            }
        }
        let mut m = Mat::zeros(n, n);
        for a in (0..n).rev() {
            for b in (0..n).rev() {
                let right = if b + 1 < n { m[(a, b + 1)] } else { 0.0 };
                let down = if a + 1 < n { m[(a + 1, b)] } else { 0.0 };
                let diag = if a + 1 < n && b + 1 < n { m[(a + 1, b + 1)] } else { 0.0 };
                m[(a, b)] = k[(a, b)] + right + down - diag;
            }
        }
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] += self.inertia_suffix[a.max(b)];
            }
        }
        m
    }

    /// Coriolis force product `C(q, dq) dq` without materializing `C`;
    /// uses `(C dq)_a = (dM/dt dq)_a - 1/2 d(dq' M dq)/dq_a`.
    fn coriolis_product(&self, q: &Vector, dq: &Vector) -> Vector {
        let n = self.p.n_elems;
        let phi = self.abs_angles(q);
        let mut omega = vec![0.0; n];
        let mut acc = 0.0;
        for k in 0..n {
            acc += dq[k];
            omega[k] = acc;
        }

        // Row sums of the sine kernel against omega:
        //   t[k]  = sum_k' W_{kk'} sin(phi_k - phi_k') (omega_k' - omega_k) omega_k'
        //           (for the dM/dt part, note dK_{kk'}/dt = -W sin(.)(omega_k - omega_k'))
        //   s[k]  = sum_k' W_{kk'} sin(phi_k - phi_k') omega_k'
        let mut t = vec![0.0; n];
        let mut s = vec![0.0; n];
        for k in 0..n {
            let mut tk = 0.0;
            let mut sk = 0.0;
            for kp in 0..n {
                let w = self.pair_weight(k, kp);
                let sin = (phi[k] - phi[kp]).sin();
                sk += w * sin * omega[kp];
                tk += -w * sin * (omega[k] - omega[kp]) * omega[kp];
            }
            t[k] = tk;
            s[k] = sk;
        }

        let mut out = Vector::zeros(n);
        let mut t_suffix = 0.0;
        let mut s_suffix = 0.0;
        for a in (0..n).rev() {
            t_suffix += t[a];
            s_suffix += s[a] * omega[a];
            // (dM/dt dq)_a = t_suffix; 1/2 d(dq' M dq)/dq_a = -s_suffix
            out[a] = t_suffix + s_suffix;
        }
        out
    }

    fn gravity_only(&self, q: &Vector) -> Vector {
        let n = self.p.n_elems;
        let phi = self.abs_angles(q);
        let g0 = self.p.gravity;
        let le = self.le;
        let mut out = Vector::zeros(n);
        let mut suffix = 0.0;
        for a in (0..n).rev() {
            let wg = le * self.mass_suffix[a + 1] + 0.5 * le * self.p.masses[a];
            suffix += g0 * wg * phi[a].sin();
            out[a] = suffix;
        }
        out
    }

    fn spring_force(&self, q: &Vector) -> Vector {
        Vector::from_fn(self.p.n_elems, |i, _| self.p.stiffnesses[i] * q[i])
    }
}

impl ElModel for FemRod {
    fn dof(&self) -> usize {
        self.p.n_elems
    }

    fn mass_matrix(&self, q: &Vector) -> SymMat {
        SymMat::from_dmatrix(&self.assemble_mass(q)).expect("finite rod inertia")
    }

    fn mass_matrix_partials(&self, q: &Vector) -> Vec<Mat> {
        // dM_ab/dq_c = sum_{k >= a, k' >= b} -W_{kk'} sin(phi_k - phi_k')
        //              ([c <= k] - [c <= k']); O(n^3), used at test scale and
        //              for the coarse parametric estimate.
        let n = self.p.n_elems;
        let phi = self.abs_angles(q);
        let mut partials = Vec::with_capacity(n);
        for c in 0..n {
            let mut kern = Mat::zeros(n, n);
            for k in 0..n {
                for kp in 0..n {
                    let ind = (c <= k) as i32 - (c <= kp) as i32;
                    if ind != 0 {
                        kern[(k, kp)] = -self.pair_weight(k, kp)
                            * (phi[k] - phi[kp]).sin()
                            * ind as F;
                    }
                }
            }
            let mut d = Mat::zeros(n, n);
            for a in (0..n).rev() {
                for b in (0..n).rev() {
                    let right = if b + 1 < n { d[(a, b + 1)] } else { 0.0 };
                    let down = if a + 1 < n { d[(a + 1, b)] } else { 0.0 };
                    let diag = if a + 1 < n && b + 1 < n { d[(a + 1, b + 1)] } else { 0.0 };
                    d[(a, b)] = kern[(a, b)] + right + down - diag;
                }
            }
            partials.push(d);
        }
        partials
    }

    fn gravity(&self, q: &Vector) -> Vector {
        self.gravity_only(q) + self.spring_force(q)
    }

    fn damping_matrix(&self, _dq: &Vector) -> Mat {
        Mat::from_diagonal(&Vector::from_vec(self.p.dampings.clone()))
    }

    fn energy(&self, s: &JointState) -> Energy {
        let m = self.assemble_mass(&s.q);
        let kinetic = 0.5 * (&m * &s.dq).dot(&s.dq);

        let n = self.p.n_elems;
        let phi = self.abs_angles(&s.q);
        let le = self.le;
        // Gravity potential relative to the straight configuration, plus the
        // torsional spring energy.
        let mut x = 0.0; // base-to-joint x coordinate accumulator
        let mut potential = 0.0;
        for i in 0..n {
            let com_x = x + 0.5 * le * phi[i].cos();
            let rest_x = le * (i as F + 0.5);
            potential += self.p.gravity * self.p.masses[i] * (rest_x - com_x);
            potential += 0.5 * self.p.stiffnesses[i] * s.q[i] * s.q[i];
            x += le * phi[i].cos();
        }
        Energy { kinetic, potential }
    }
}

impl Plant for FemRod {
    fn accel(&self, s: &JointState, tau: &Vector) -> Result<Vector, NumericsError> {
        let m = self.mass_matrix(&s.q);
        let rhs = tau - self.coriolis_product(&s.q, &s.dq) - self.gravity(&s.q)
            - self.dissipation(&s.dq);
        let rhs_m = Mat::from_column_slice(rhs.len(), 1, rhs.as_slice());
        let (x, _) = chol_solve(&m, &rhs_m, JitterPolicy::None)?;
        Ok(Vector::from_column_slice(x.column(0).as_slice()))
    }
}
