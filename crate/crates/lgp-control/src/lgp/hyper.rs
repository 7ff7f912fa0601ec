use serde::{Deserialize, Serialize};

use crate::{Mat, F};

/// Hyperparameters of the elastic-energy kernel (soft robot only): the same
/// quadratic-form construction as the kinetic kernel, with positions in
/// place of velocities.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ElasticHyper {
    /// Row-shared amplitudes of the upper-triangular Cholesky factor of the
    /// elastic hypermatrix; one entry per coordinate.
    pub amps: Vec<F>,
    /// Shared isotropic length-scale of the positional squared-exponential
    /// factor.
    pub len: F,
}

/// Hyperparameters of the structured Lagrangian kernel.
///
/// The kinetic hypermatrix is parametrized by row-shared amplitudes of an
/// upper-triangular factor (so `B = R'R` has entries
/// `B_ij = sum_{k <= min(i,j)} a_k^2`, non-negative and positive
/// semi-definite by construction) and one shared isotropic length-scale.
/// The gravity kernel is a squared exponential with per-coordinate
/// length-scales. Dissipation uses one squared-exponential kernel per
/// velocity coordinate.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub kinetic_amps: Vec<F>,
    pub kinetic_len: F,
    pub gravity_amp: F,
    pub gravity_lens: Vec<F>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elastic: Option<ElasticHyper>,
    pub dissipation_amps: Vec<F>,
    pub dissipation_lens: Vec<F>,
    /// Mirror-symmetric configuration space: kinetic and potential kernels
    /// are evenly symmetrized, making the learned restoring force point
    /// symmetric.
    #[serde(default)]
    pub symmetric: bool,
}

impl Hyperparams {
    pub fn dof(&self) -> usize {
        self.kinetic_amps.len()
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.dof();
        if self.gravity_lens.len() != n
            || self.dissipation_amps.len() != n
            || self.dissipation_lens.len() != n
        {
            return Err("hyperparameter vectors must all have one entry per coordinate".into());
        }
        if let Some(e) = &self.elastic {
            if e.amps.len() != n {
                return Err("elastic amplitudes must have one entry per coordinate".into());
            }
            if e.len <= 0.0 {
                return Err("elastic length-scale must be positive".into());
            }
        }
        let amps_ok = self.kinetic_amps.iter().all(|&a| a >= 0.0)
            && self.gravity_amp >= 0.0
            && self.dissipation_amps.iter().all(|&a| a >= 0.0)
            && self.elastic.as_ref().map_or(true, |e| e.amps.iter().all(|&a| a >= 0.0));
        if !amps_ok {
            return Err("signal amplitudes must be non-negative".into());
        }
        let lens_ok = self.kinetic_len > 0.0
            && self.gravity_lens.iter().all(|&l| l > 0.0)
            && self.dissipation_lens.iter().all(|&l| l > 0.0);
        if !lens_ok {
            return Err("length-scales must be positive".into());
        }
        Ok(())
    }

    /// Hypermatrix `B = R'R` for row-shared upper-triangular amplitudes.
    pub(crate) fn tri_hypermatrix(amps: &[F]) -> Mat {
        let n = amps.len();
        let mut cumulative = vec![0.0; n];
        let mut acc = 0.0;
        for (k, &a) in amps.iter().enumerate() {
            acc += a * a;
            cumulative[k] = acc;
        }
        Mat::from_fn(n, n, |i, j| cumulative[i.min(j)])
    }

    /// Flattens to log-space for the optimizer; inverse of [`Self::from_log_vec`].
    pub fn to_log_vec(&self) -> Vec<F> {
        let mut v = Vec::new();
        let push = |v: &mut Vec<F>, x: F| v.push(x.max(1e-12).ln());
        for &a in &self.kinetic_amps {
            push(&mut v, a);
        }
        push(&mut v, self.kinetic_len);
        push(&mut v, self.gravity_amp);
        for &l in &self.gravity_lens {
            push(&mut v, l);
        }
        if let Some(e) = &self.elastic {
            for &a in &e.amps {
                push(&mut v, a);
            }
            push(&mut v, e.len);
        }
        for &a in &self.dissipation_amps {
            push(&mut v, a);
        }
        for &l in &self.dissipation_lens {
            push(&mut v, l);
        }
        v
    }

    /// Rebuilds from log-space using `self` as the structural template.
    pub fn from_log_vec(&self, v: &[F]) -> Self {
        let mut out = self.clone();
        let mut it = v.iter().map(|&x| x.exp());
        for a in &mut out.kinetic_amps {
            *a = it.next().unwrap();
        }
        out.kinetic_len = it.next().unwrap();
        out.gravity_amp = it.next().unwrap();
        for l in &mut out.gravity_lens {
            *l = it.next().unwrap();
        }
        if let Some(e) = &mut out.elastic {
            for a in &mut e.amps {
                *a = it.next().unwrap();
            }
            e.len = it.next().unwrap();
        }
        for a in &mut out.dissipation_amps {
            *a = it.next().unwrap();
        }
        for l in &mut out.dissipation_lens {
            *l = it.next().unwrap();
        }
        assert!(it.next().is_none(), "log-vector length mismatch");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn sample(n: usize, elastic: bool) -> Hyperparams {
        Hyperparams {
            kinetic_amps: (1..=n).map(|i| 0.5 + 0.1 * i as F).collect(),
            kinetic_len: 1.3,
            gravity_amp: 2.0,
            gravity_lens: (1..=n).map(|i| 0.8 + 0.05 * i as F).collect(),
            elastic: elastic.then(|| ElasticHyper {
                amps: vec![0.4; n],
                len: 0.9,
            }),
            dissipation_amps: vec![0.7; n],
            dissipation_lens: vec![1.1; n],
            symmetric: false,
        }
    }

    #[test]
    fn log_vec_roundtrip() {
        for elastic in [false, true] {
            let h = sample(3, elastic);
            let v = h.to_log_vec();
            let back = h.from_log_vec(&v);
            assert_eq!(h, back);
        }
    }

    #[test]
    fn hypermatrix_is_min_structured() {
        let b = Hyperparams::tri_hypermatrix(&[1.0, 2.0]);
        // B = [[1, 1], [1, 5]]
        assert_eq!(b[(0, 0)], 1.0);
        assert_eq!(b[(0, 1)], 1.0);
        assert_eq!(b[(1, 0)], 1.0);
        assert_eq!(b[(1, 1)], 5.0);
    }
}
