use super::{Real, SymMatrix};

/// Closed-form spectrum of the 2x2-block coordinate metric
/// `[[kappa I, eps Mhat], [eps Mhat, Mhat]]` for Euclidean stiffness.
///
/// For every inertia eigenvalue `m` the metric contributes the pair
/// `(kappa + m)/2 +/- sqrt(((kappa - m)/2)^2 + (eps m)^2)`; all eigenvalues
/// are positive iff `|eps| < sqrt(kappa / max(m))`.
pub fn metric_eigs_closed<S: Real>(kappa: S, mhat_eigs: &[S], eps: S) -> Vec<S> {
    assert!(kappa > S::zero(), "metric stiffness must be positive");
    let half = S::of(0.5);
    let mut out = Vec::with_capacity(2 * mhat_eigs.len());
    for &m in mhat_eigs {
        assert!(m > S::zero(), "inertia eigenvalues must be positive");
        let mid = (kappa + m) * half;
        let rad = (((kappa - m) * half).powi(2) + (eps * m).powi(2)).sqrt();
        out.push(mid - rad);
        out.push(mid + rad);
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

/// Closed-form spectrum of the commuting 2x2-block matrix
/// `Upsilon(alpha) = [[a I, (b/2) I - eps alpha Mhat],
///                    [(b/2) I - eps alpha Mhat, gamma I - (eps + alpha) Mhat]]`.
///
/// Per inertia eigenvalue `m`, with `u = (a + gamma - (eps + alpha) m)/2`:
/// `lambda = u +/- sqrt(((gamma - a - (eps + alpha) m)/2)^2 + (eps alpha m - b/2)^2)`.
pub fn upsilon_eigs_closed<S: Real>(
    a: S,
    b: S,
    gamma: S,
    eps: S,
    alpha: S,
    mhat_eigs: &[S],
) -> Vec<S> {
    assert!(eps > S::zero(), "eps must be positive");
    assert!(alpha >= S::zero(), "alpha must be non-negative");
    let half = S::of(0.5);
    let mut out = Vec::with_capacity(2 * mhat_eigs.len());
    for &m in mhat_eigs {
        assert!(m > S::zero(), "inertia eigenvalues must be positive");
        let u = (a + gamma - (eps + alpha) * m) * half;
        let rad = (((gamma - a - (eps + alpha) * m) * half).powi(2)
            + (eps * alpha * m - b * half).powi(2))
        .sqrt();
        out.push(u - rad);
        out.push(u + rad);
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

/// Lower branch of [`upsilon_eigs_closed`] for a single inertia eigenvalue.
pub fn upsilon_min_eig<S: Real>(a: S, b: S, gamma: S, eps: S, alpha: S, m: S) -> S {
    let half = S::of(0.5);
    let u = (a + gamma - (eps + alpha) * m) * half;
    u - (((gamma - a - (eps + alpha) * m) * half).powi(2) + (eps * alpha * m - b * half).powi(2))
        .sqrt()
}

/// Assembles the 2N x 2N coordinate metric `[[kappa I, eps M], [eps M, M]]`.
pub fn assemble_block_metric<S: Real>(kappa: S, mhat: &SymMatrix<S>, eps: S) -> SymMatrix<S> {
    let n = mhat.dim();
    let mut out = SymMatrix::zeros(2 * n);
    for i in 0..n {
        out.set_sym(i, i, kappa);
        for j in 0..n {
            let m = mhat.get(i, j);
            out.set_sym(i, n + j, eps * m);
            out.set_sym(n + i, n + j, m);
        }
    }
    out
}

/// Assembles the 2N x 2N matrix `Upsilon(alpha)` from its block formula.
pub fn assemble_upsilon<S: Real>(
    a: S,
    b: S,
    gamma: S,
    eps: S,
    alpha: S,
    mhat: &SymMatrix<S>,
) -> SymMatrix<S> {
    let n = mhat.dim();
    let half = S::of(0.5);
    let mut out = SymMatrix::zeros(2 * n);
    for i in 0..n {
        out.set_sym(i, i, a);
        for j in 0..n {
            let m = mhat.get(i, j);
            let off = if i == j { b * half } else { S::zero() };
            out.set_sym(i, n + j, off - eps * alpha * m);
            let diag = if i == j { gamma } else { S::zero() };
            out.set_sym(n + i, n + j, diag - (eps + alpha) * m);
        }
    }
    out
}
