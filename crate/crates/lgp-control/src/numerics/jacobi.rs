use nalgebra::DMatrix;

use super::{Real, Result, SymMatrix};

/// Full spectral decomposition of a symmetric matrix.
///
/// Eigenvalues are returned ascending; `vectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomp<S: Real> {
    pub values: Vec<S>,
    pub vectors: DMatrix<S>,
}

impl<S: Real> SpectralDecomp<S> {
    pub fn min(&self) -> S {
        self.values[0]
    }

    pub fn max(&self) -> S {
        *self.values.last().unwrap()
    }
}

/// Eigendecomposition by cyclic Jacobi rotations with threshold sweeps.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||` (floored at a few ulps for low-precision scalars). The
/// matrices in this crate are small (dim <= 2N with N <= 16), where the
/// deterministic Jacobi iteration is accurate and fast enough.
pub fn sym_eig<S: Real>(a: &SymMatrix<S>) -> Result<SpectralDecomp<S>> {
    a.check_finite("sym_eig input")?;
    let n = a.dim();
    let mut m = a.clone();
    let mut v = DMatrix::<S>::identity(n, n);

    let norm = m.norm();
    let tol = {
        let rel = S::of(1e-12);
        let floor = S::epsilon() * S::of(8.0);
        norm * if rel > floor { rel } else { floor }
    };

    let max_sweeps = 60;
    for sweep in 0..max_sweeps {
        let off = m.off_diagonal_norm();
        if off <= tol || norm == S::zero() {
            break;
        }
        // Threshold strategy: early sweeps skip tiny rotations.
        let thresh = if sweep < 3 {
            off * S::of(0.2) / S::from_usize(n * n).unwrap()
        } else {
            S::zero()
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= thresh {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                // Skip rotations that cannot change the matrix at working precision.
                if apq.abs() <= S::epsilon() * (app.abs() + aqq.abs()) {
                    m.set_sym(p, q, S::zero());
                    continue;
                }
                let theta = (aqq - app) / (S::of(2.0) * apq);
                let t = {
                    let s = if theta >= S::zero() { S::one() } else { -S::one() };
                    s / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                let tau = s / (S::one() + c);

                m.set_sym(p, p, app - t * apq);
                m.set_sym(q, q, aqq + t * apq);
                m.set_sym(p, q, S::zero());
                for k in 0..n {
                    if k != p && k != q {
                        let akp = m.get(k, p);
                        let akq = m.get(k, q);
                        m.set_sym(k, p, akp - s * (akq + tau * akp));
                        m.set_sym(k, q, akq + s * (akp - tau * akq));
                    }
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp - s * (vkq + tau * vkp);
                    v[(k, q)] = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }

    // Ascending order; stable sort keeps ties in input order.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<S> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let values: Vec<S> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = DMatrix::<S>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = v[(k, i)];
        }
    }
    Ok(SpectralDecomp { values, vectors })
}
