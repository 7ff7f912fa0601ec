use nalgebra::DMatrix;

use super::{NumericsError, Real, Result};

/// Dense symmetric matrix, symmetrized on construction so that
/// `entries(i, j) == entries(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<S> {
    dim: usize,
    // Row-major full storage; only ever written symmetrically.
    data: Vec<S>,
}

impl<S: Real> SymMatrix<S> {
    /// Builds from a row-major slice of `dim * dim` entries, averaging the
    /// off-diagonal pairs.
    pub fn from_row_major(dim: usize, entries: &[S]) -> Result<Self> {
        assert!(dim >= 1, "SymMatrix requires dim >= 1");
        if entries.len() != dim * dim {
            return Err(NumericsError::DimensionMismatch {
                what: "SymMatrix::from_row_major",
                left: entries.len(),
                right: dim * dim,
            });
        }
        let half = S::of(0.5);
        let mut data = vec![S::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let v = (entries[i * dim + j] + entries[j * dim + i]) * half;
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        let m = Self { dim, data };
        m.check_finite("SymMatrix entries")?;
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> S) -> Result<Self> {
        let mut entries = vec![S::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = f(i, j);
            }
        }
        Self::from_row_major(dim, &entries)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        Self { dim, data: vec![S::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = S::one();
        }
        m
    }

    pub fn diagonal(diag: &[S]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.dim + j]
    }

    /// Sets the symmetric pair `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub(crate) fn check_finite(&self, what: &'static str) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if !self.get(i, j).is_finite() {
                    return Err(NumericsError::NonFinite { what, row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> S {
        self.data
            .iter()
            .fold(S::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    /// Frobenius norm of the strictly off-diagonal part.
    pub fn off_diagonal_norm(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    let v = self.get(i, j);
                    acc = acc + v * v;
                }
            }
        }
        acc.sqrt()
    }

    pub fn trace(&self) -> S {
        (0..self.dim).fold(S::zero(), |acc, i| acc + self.get(i, i))
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![S::zero(); self.dim];
        for i in 0..self.dim {
            let mut acc = S::zero();
            for j in 0..self.dim {
                acc = acc + self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn to_dmatrix(&self) -> DMatrix<S> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn from_dmatrix(m: &DMatrix<S>) -> Result<Self> {
        assert_eq!(m.nrows(), m.ncols(), "SymMatrix::from_dmatrix needs a square matrix");
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_on_construction() {
        let m = SymMatrix::from_row_major(2, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_non_finite() {
        let err = SymMatrix::from_row_major(2, &[1.0, f64::NAN, f64::NAN, 3.0]).unwrap_err();
        assert!(matches!(err, NumericsError::NonFinite { .. }));
    }
}
