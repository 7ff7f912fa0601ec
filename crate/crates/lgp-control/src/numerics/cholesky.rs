use nalgebra::DMatrix;

use super::{NumericsError, Real, Result, SymMatrix};

/// Jitter handling for nearly singular positive definite solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JitterPolicy {
    /// Fail on the first non-positive pivot.
    None,
    /// Retry with `1e-10 * trace(A)/dim * 10^k` added to the diagonal for
    /// k = 0, 1, 2 (three decades). Applied jitter is always reported.
    #[default]
    Ladder,
}

/// Diagonal shift that was applied to make the factorization succeed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedJitter(pub f64);

impl AppliedJitter {
    pub fn engaged(&self) -> bool {
        self.0 > 0.0
    }
}

/// Lower-triangular Cholesky factor of `A + jitter * I`.
#[derive(Debug, Clone)]
pub struct CholFactor<S> {
    dim: usize,
    lower: Vec<S>,
    pub jitter: AppliedJitter,
}

impl<S: Real> CholFactor<S> {
    /// Factorizes a symmetric positive definite matrix, walking the jitter
    /// ladder if the policy allows. Failures name the offending pivot.
    pub fn new(a: &SymMatrix<S>, policy: JitterPolicy) -> Result<Self> {
        a.check_finite("cholesky input")?;
        let dim = a.dim();
        let base = S::of(1e-10) * a.trace() / S::from_usize(dim).unwrap();
        let ladder: &[S] = match policy {
            JitterPolicy::None => &[S::zero()],
            JitterPolicy::Ladder => &[S::zero(), base, base * S::of(10.0), base * S::of(100.0)],
        };

        let mut last_pivot = 0usize;
        let mut last_jitter = 0.0f64;
        for &jit in ladder {
            match Self::try_factor(a, jit) {
                Ok(lower) => {
                    return Ok(Self {
                        dim,
                        lower,
                        jitter: AppliedJitter(jit.to_f64().unwrap()),
                    })
                }
                Err(pivot) => {
                    last_pivot = pivot;
                    last_jitter = jit.to_f64().unwrap();
                }
            }
        }
        Err(NumericsError::NotPositiveDefinite { pivot: last_pivot, jitter: last_jitter })
    }

    fn try_factor(a: &SymMatrix<S>, jitter: S) -> core::result::Result<Vec<S>, usize> {
        let n = a.dim();
        let mut l = vec![S::zero(); n * n];
        for j in 0..n {
            let mut d = a.get(j, j) + jitter;
            for k in 0..j {
                d = d - l[j * n + k] * l[j * n + k];
            }
            if d <= S::zero() || !d.is_finite() {
                return Err(j);
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(l)
    }

    /// Solves `(A + jitter I) x = b` in place for each column of `b`.
    pub fn solve_mat(&self, b: &DMatrix<S>) -> DMatrix<S> {
        assert_eq!(b.nrows(), self.dim, "cholesky solve dimension mismatch");
        let n = self.dim;
        let mut x = b.clone();
        for c in 0..x.ncols() {
            // forward substitution
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s = s - self.lower[i * n + k] * x[(k, c)];
                }
                x[(i, c)] = s / self.lower[i * n + i];
            }
            // backward substitution
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in (i + 1)..n {
                    s = s - self.lower[k * n + i] * x[(k, c)];
                }
                x[(i, c)] = s / self.lower[i * n + i];
            }
        }
        x
    }

    pub fn solve_vec(&self, b: &[S]) -> Vec<S> {
        let m = DMatrix::from_column_slice(b.len(), 1, b);
        self.solve_mat(&m).column(0).iter().copied().collect()
    }

    /// log det(A + jitter I)
    pub fn log_det(&self) -> S {
        let n = self.dim;
        (0..n).fold(S::zero(), |acc, i| acc + self.lower[i * n + i].ln()) * S::of(2.0)
    }
}

/// One-shot positive definite solve `A X = B`, reporting the applied jitter.
pub fn chol_solve<S: Real>(
    a: &SymMatrix<S>,
    b: &DMatrix<S>,
    policy: JitterPolicy,
) -> Result<(DMatrix<S>, AppliedJitter)> {
    let f = CholFactor::new(a, policy)?;
    let x = f.solve_mat(b);
    Ok((x, f.jitter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn identity_solve() {
        let a = SymMatrix::<f64>::identity(3);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let (x, jit) = chol_solve(&a, &b, JitterPolicy::None).unwrap();
        assert_eq!(x, b);
        assert!(!jit.engaged());
    }

    #[test]
    fn scalar_diag() {
        let a = SymMatrix::diagonal(&[4.0_f64]);
        let b = DMatrix::from_column_slice(1, 1, &[2.0]);
        let (x, _) = chol_solve(&a, &b, JitterPolicy::None).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let n = 8;
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &g.transpose() * &g + DMatrix::identity(n, n);
        let a = SymMatrix::from_dmatrix(&spd).unwrap();
        let b = DMatrix::<f64>::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
        let (x, jit) = chol_solve(&a, &b, JitterPolicy::None).unwrap();
        let res = (&spd * &x - &b).norm();
        assert!(res < 1e-10 * b.norm(), "residual {res}");
        assert!(!jit.engaged());
    }

    #[test]
    fn jitter_ladder_reports_and_fails_cleanly() {
        // Rank-deficient: duplicate rows.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let a = SymMatrix::from_dmatrix(&m).unwrap();
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let (_, jit) = chol_solve(&a, &b, JitterPolicy::Ladder).unwrap();
        assert!(jit.engaged());

        // Indefinite stays infeasible through the whole ladder.
        let neg = SymMatrix::diagonal(&[1.0, -1.0]);
        let err = chol_solve(&neg, &b, JitterPolicy::Ladder).unwrap_err();
        match err {
            NumericsError::NotPositiveDefinite { pivot, .. } => assert_eq!(pivot, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn solve_vec_matches_nalgebra() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.2, 1.0, 3.0, 0.5, 0.2, 0.5, 2.0]);
        let a = SymMatrix::from_dmatrix(&m).unwrap();
        let b = vec![1.0_f64, 2.0, 3.0];
        let x = CholFactor::new(&a, JitterPolicy::None).unwrap().solve_vec(&b);
        let want = m.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        for i in 0..3 {
            assert!((x[i] - want[i]).abs() < 1e-12);
        }
    }
}
