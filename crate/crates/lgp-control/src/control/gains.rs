use crate::numerics::{chol_solve, sym_eig, JitterPolicy, NumericsError, SymMatrix};
use crate::{Mat, SymMat, F};

/// Constant gain triple of the covariance-adaptive law, with the eigenvalue
/// extremes cached for the certificate bounds.
#[derive(Debug, Clone)]
pub struct GainAdaptation {
    pub k1: SymMat,
    pub k2: SymMat,
    pub k3: SymMat,
    pub k1_bounds: (F, F),
    pub k2_bounds: (F, F),
    pub k3_bounds: (F, F),
}

impl GainAdaptation {
    pub fn new(k1: SymMat, k2: SymMat, k3: SymMat) -> Result<Self, NumericsError> {
        let bounds = |m: &SymMat| -> Result<(F, F), NumericsError> {
            let eig = sym_eig(m)?;
            assert!(eig.min() > 0.0, "adaptation gains must be positive definite");
            Ok((eig.min(), eig.max()))
        };
        Ok(Self {
            k1_bounds: bounds(&k1)?,
            k2_bounds: bounds(&k2)?,
            k3_bounds: bounds(&k3)?,
            k1,
            k2,
            k3,
        })
    }

    /// Isotropic gains `K_i = k_i I`.
    pub fn scalar(n: usize, k1: F, k2: F, k3: F) -> Self {
        let diag = |k: F| {
            let mut m = SymMat::zeros(n);
            for i in 0..n {
                m.set_sym(i, i, k);
            }
            m
        };
        Self::new(diag(k1), diag(k2), diag(k3)).expect("scalar gains are positive definite")
    }

    /// Closed-form spectrum interval of the adaptive gain:
    /// `(1 / ((k3_min^2 k2_min)^-1 + k1_min^-1), k1_max)`.
    pub fn gain_interval(&self) -> (F, F) {
        let lo = 1.0
            / (1.0 / (self.k3_bounds.0 * self.k3_bounds.0 * self.k2_bounds.0)
                + 1.0 / self.k1_bounds.0);
        (lo, self.k1_bounds.1)
    }

    /// Closed-form interval of the gain's time derivative, given bounds
    /// `sigma_dot_lb <= 0 <= sigma_dot_ub` on the covariance derivative:
    /// `+/- (k1_max k3_max / (k3_min^2 k2_min + k1_min))^2 * |sigma_dot|`.
    pub fn gain_rate_interval(&self, sigma_dot_lb: F, sigma_dot_ub: F) -> (F, F) {
        assert!(sigma_dot_lb <= 0.0, "lower covariance-rate bound must be non-positive");
        let c = self.k1_bounds.1 * self.k3_bounds.1
            / (self.k3_bounds.0 * self.k3_bounds.0 * self.k2_bounds.0 + self.k1_bounds.0);
        (-c * c * sigma_dot_lb.abs(), c * c * sigma_dot_ub)
    }
}

/// Covariance-adaptive gain
/// `K(Sigma) = K1 (I - [K3 (K2 + Sigma) K3 + K1]^-1 K1)`.
///
/// Its spectrum stays inside the open interval of
/// [`GainAdaptation::gain_interval`] for any positive semi-definite
/// covariance.
pub fn adaptive_gain(g: &GainAdaptation, sigma: &SymMat) -> Result<SymMat, NumericsError> {
    let n = g.k1.dim();
    assert_eq!(sigma.dim(), n, "covariance dimension mismatch");
    let k1 = g.k1.to_dmatrix();
    let k3 = g.k3.to_dmatrix();
    let inner = &k3 * (g.k2.to_dmatrix() + sigma.to_dmatrix()) * &k3 + &k1;
    let inner_sym = SymMatrix::from_dmatrix(&inner)?;
    let (x, _) = chol_solve(&inner_sym, &k1, JitterPolicy::None)?;
    let k = &k1 * (Mat::identity(n, n) - x);
    SymMatrix::from_dmatrix(&k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn scalar_gain(k1: F, k2: F, k3: F, sigma: F) -> F {
        let g = GainAdaptation::scalar(1, k1, k2, k3);
        let mut s = SymMat::zeros(1);
        s.set_sym(0, 0, sigma);
        adaptive_gain(&g, &s).unwrap().get(0, 0)
    }

    #[test]
    fn two_link_gain_floor_anchor() {
        // k1 = 100, k2 = 0.02, k3 = 7.11 at zero covariance: floor near 1.
        let k = scalar_gain(100.0, 0.02, 7.11, 0.0);
        assert!((k - 1.00092).abs() < 1e-3, "gain {k}");
    }

    #[test]
    fn soft_robot_gain_floor_anchor() {
        // k1 = 10, k2 = 1e-3, k3 = 10.05 at zero covariance: floor near 0.1.
        let k = scalar_gain(10.0, 1e-3, 10.05, 0.0);
        assert!((k - 0.1).abs() < 1e-3, "gain {k}");
    }

    #[test]
    fn saturates_at_k1_for_large_covariance() {
        let k = scalar_gain(100.0, 0.02, 7.11, 1e9);
        assert!((k - 100.0).abs() / 100.0 < 1e-3, "gain {k}");
    }

    #[test]
    fn matches_matrix_inversion_lemma_oracle() {
        // Independent route: K = (K1^-1 + K3^-1 (K2 + Sigma)^-1 K3^-1)^-1.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(52);
        for _ in 0..50 {
            let n = 3;
            let spd = |rng: &mut rand_chacha::ChaCha12Rng, shift: F| -> Mat {
                let g = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                &g * g.transpose() + Mat::identity(n, n) * shift
            };
            let k1 = spd(&mut rng, 1.0);
            let k2 = spd(&mut rng, 0.1);
            let k3 = spd(&mut rng, 0.5);
            let sigma = spd(&mut rng, 1e-6);

            let g = GainAdaptation::new(
                SymMat::from_dmatrix(&k1).unwrap(),
                SymMat::from_dmatrix(&k2).unwrap(),
                SymMat::from_dmatrix(&k3).unwrap(),
            )
            .unwrap();
            let got = adaptive_gain(&g, &SymMat::from_dmatrix(&sigma).unwrap()).unwrap();

            let k1i = k1.clone().try_inverse().unwrap();
            let k3i = k3.clone().try_inverse().unwrap();
            let mid = (k2 + &sigma).try_inverse().unwrap();
            let want = (k1i + &k3i * mid * &k3i).try_inverse().unwrap();
            let rel = (got.to_dmatrix() - &want).norm() / want.norm();
            assert!(rel < 1e-9, "matrix inversion lemma mismatch {rel}");
        }
    }

    #[test]
    fn spectrum_inside_interval_for_random_draws() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(53);
        for _ in 0..200 {
            let n = rng.gen_range(1..4usize);
            let spd = |rng: &mut rand_chacha::ChaCha12Rng, shift: F| -> SymMat {
                let g = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                SymMat::from_dmatrix(&(&g * g.transpose() + Mat::identity(n, n) * shift)).unwrap()
            };
            let g = GainAdaptation::new(
                spd(&mut rng, 0.5),
                spd(&mut rng, 0.05),
                spd(&mut rng, 0.3),
            )
            .unwrap();
            let sigma = spd(&mut rng, 1e-4);
            let k = adaptive_gain(&g, &sigma).unwrap();
            let (lo, hi) = g.gain_interval();
            let eig = sym_eig(&k).unwrap();
            assert!(eig.min() > lo - 1e-10, "min {} vs floor {}", eig.min(), lo);
            assert!(eig.max() < hi + 1e-10, "max {} vs cap {}", eig.max(), hi);
        }
    }

    #[test]
    fn gain_interval_collapses_to_k1_for_huge_k3() {
        let g = GainAdaptation::scalar(2, 5.0, 0.1, 1e9);
        let (lo, _) = g.gain_interval();
        assert!((lo - 5.0).abs() < 1e-6);
    }
}
