use super::CertificateParams;
use crate::control::heaviside;
use crate::numerics::{sym_eig, SymMatrix};
use crate::{Mat, SymMat, Vector, F};

/// Per-sample model and controller data entering the convergence rate.
#[derive(Debug, Clone)]
pub struct RateSample {
    pub e: Vector,
    pub de: Vector,
    /// Learned inertia at the current configuration.
    pub m_hat: SymMat,
    /// Learned Coriolis matrix at the current state.
    pub coriolis: Mat,
    /// Learned damping matrix at the error velocity.
    pub damping_err: Mat,
    /// Learned potential force at the current configuration.
    pub g_q: Vector,
    /// Learned dissipative force at the current velocity.
    pub d_q: Vector,
    /// Inner product `e' g(e)` of the error with the potential force at the
    /// error.
    pub g_e_inner: F,
    /// Learned potential energy at the error (relative to zero).
    pub g_hat_e: F,
    /// Actual proportional/derivative gains at this sample.
    pub k_p: Mat,
    pub k_d: Mat,
}

/// Convergence-rate evaluation at one sample.
#[derive(Debug, Clone)]
pub struct RateResult {
    /// Time-variant rate; `None` when the rate quadratic has no real root
    /// (the sample lies outside the certified region).
    pub alpha: Option<F>,
    /// Inertia eigenvalue at which the block spectrum attains its minimum.
    pub m_star: F,
    /// Minimum eigenvalue of the gain/damping/Coriolis residual block.
    pub lambda_r: F,
    /// Quadratic coefficients `(a0, a1, a2)` at the binding inertia value.
    pub coeffs: (F, F, F),
    /// Whether the quadratic admitted a real, non-negative-feasible branch.
    pub region_ok: bool,
    /// Zero-error sample: the potential terms were dropped (limit form).
    pub zero_state: bool,
}

/// Heaviside-gated inner products of the structure-preserving law:
/// `nu_e, nu_de >= 0` and the cross terms `omega_e, omega_de`.
pub fn structure_terms(s: &RateSample) -> (F, F, F, F) {
    let e_g = s.e.dot(&s.g_q);
    let de_d = s.de.dot(&s.d_q);
    let h_g = heaviside(e_g);
    let h_d = heaviside(de_d);
    let nu_e = h_g * e_g;
    let nu_de = h_d * de_d;
    let e_sq = s.e.norm_squared();
    let de_sq = s.de.norm_squared();
    let omega_e = if e_sq > 0.0 { h_g * e_g * s.de.dot(&s.e) / e_sq } else { 0.0 };
    let omega_de = if de_sq > 0.0 { h_d * de_d * s.e.dot(&s.de) / de_sq } else { 0.0 };
    (nu_e, nu_de, omega_e, omega_de)
}

/// Assembles the 2N x 2N residual block
/// `R = [[eps Kp~, (Kp~ + eps(D~ - C'))/2], [., D~]]` with
/// `Kp~ = K_P - k_P I` and `D~ = D(de) - d_hat I + K_D - k_D I`.
pub fn residual_block(s: &RateSample, params: &CertificateParams) -> SymMat {
    let n = s.e.len();
    let b = &params.bounds;
    let kp_t = &s.k_p - Mat::identity(n, n) * b.k_p_lb;
    let d_t = &s.damping_err - Mat::identity(n, n) * b.d_hat_lb + &s.k_d
        - Mat::identity(n, n) * b.k_d_lb;
    let eps = params.eps;

    let mut r = Mat::zeros(2 * n, 2 * n);
    let off = (&kp_t + (&d_t - s.coriolis.transpose()) * eps) * 0.5;
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = eps * kp_t[(i, j)];
            r[(i, n + j)] = off[(i, j)];
            r[(n + j, i)] = off[(i, j)];
            r[(n + i, n + j)] = d_t[(i, j)];
        }
    }
    SymMatrix::from_dmatrix(&r).expect("finite residual block")
}

/// Diagnostic split of the residual block into the gain part, the damping
/// part, and the Coriolis cross term, with the eigenvalue lower bound that
/// their separate spectra imply.
#[derive(Debug, Clone)]
pub struct RSplit {
    pub lambda_gain: F,
    pub lambda_damping: F,
    pub coriolis_norm_term: F,
    pub weyl_lower_bound: F,
    pub lambda_actual: F,
}

/// Residual-block decomposition for equal proportional/derivative gain
/// offsets: `R = K~ + D~cal - (eps/2) [[0, C'], [C, 0]]`, with the gain
/// block spectrum `lambda(K~) = lambda(Kp~)/2 (1 + eps +/- sqrt(2(1+eps^2)))`.
pub fn r_decomposition(s: &RateSample, params: &CertificateParams) -> RSplit {
    let n = s.e.len();
    let b = &params.bounds;
    let eps = params.eps;
    let kp_t = &s.k_p - Mat::identity(n, n) * b.k_p_lb;
    let d_t = &s.damping_err - Mat::identity(n, n) * b.d_hat_lb + &s.k_d
        - Mat::identity(n, n) * b.k_d_lb;

    let lam_kp = sym_eig(&SymMatrix::from_dmatrix(&kp_t).expect("finite gain offset"))
        .expect("gain offset spectrum")
        .min();
    let lambda_gain = lam_kp / 2.0 * (1.0 + eps - (2.0 * (1.0 + eps * eps)).sqrt());

    // Damping block [[0, eps/2 D~], [eps/2 D~, D~]]: assemble and solve.
    let mut dcal = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            dcal[(i, n + j)] = 0.5 * eps * d_t[(i, j)];
            dcal[(n + j, i)] = 0.5 * eps * d_t[(i, j)];
            dcal[(n + i, n + j)] = d_t[(i, j)];
        }
    }
    let lambda_damping = sym_eig(&SymMatrix::from_dmatrix(&dcal).expect("finite damping block"))
        .expect("damping block spectrum")
        .min();

    let coriolis_norm = s.coriolis.norm();
    let coriolis_norm_term = 0.5 * eps * coriolis_norm;

    let lambda_actual = sym_eig(&residual_block(s, params)).expect("residual spectrum").min();
    RSplit {
        lambda_gain,
        lambda_damping,
        coriolis_norm_term,
        weyl_lower_bound: lambda_gain + lambda_damping - coriolis_norm_term,
        lambda_actual,
    }
}

/// Scalar constants of the block spectrum at the design point:
/// `a(alpha) = eps (k_P - theta/2) - alpha kappa`,
/// `b = k_P + eps d - kappa`, `gamma = d - phi/2`.
pub fn upsilon_constants(params: &CertificateParams, alpha: F) -> (F, F, F) {
    let b = &params.bounds;
    let a = params.eps * (b.k_p_lb - params.theta / 2.0) - alpha * params.kappa;
    let bb = b.k_p_lb + params.eps * b.d_lb() - params.kappa;
    let gamma = b.d_lb() - params.phi / 2.0;
    (a, bb, gamma)
}

/// Time-variant convergence rate at one sample: solves the rate quadratic
/// `a0 - 2 a1 alpha + a2 alpha^2 = 0` for the binding inertia eigenvalue
/// (the one minimizing the admissible rate among the instantaneous spectrum
/// of the inertia estimate and the global bounds).
pub fn rate_alpha(s: &RateSample, params: &CertificateParams) -> RateResult {
    let (nu_e, nu_de, omega_e, omega_de) = structure_terms(s);
    let lambda_r = sym_eig(&residual_block(s, params)).expect("residual spectrum").min();

    let x_sq = s.e.norm_squared() + s.de.norm_squared();
    let zero_state = x_sq <= 0.0;
    // Rayleigh weight of the potential-energy part of the metric: the
    // quadratic form contributes e' Kcal_G e = 2 G(e), so the decay term
    // -2 alpha M carries 2 alpha * (2 G(e)) against |x|^2.
    let (g2, coupling) = if zero_state {
        (0.0, 0.0)
    } else {
        (
            2.0 * s.g_hat_e / x_sq,
            (params.eps * (s.g_e_inner + nu_e + omega_de) + nu_de + omega_e) / x_sq,
        )
    };

    let (_, bb, gamma) = upsilon_constants(params, 0.0);
    let p = params.eps * (params.bounds.k_p_lb - params.theta / 2.0);
    let s_term = lambda_r + coupling;

    let mut m_candidates: Vec<F> = sym_eig(&s.m_hat).expect("inertia spectrum").values;
    m_candidates.push(params.bounds.m_lb);
    m_candidates.push(params.bounds.m_ub);

    let mut best: Option<(F, F, (F, F, F))> = None;
    let mut any_violation = false;
    for &m in &m_candidates {
        if m <= 0.0 {
            any_violation = true;
            continue;
        }
        let kappa = params.kappa;
        let kk = kappa + m + 2.0 * g2;
        let zeta = gamma - p - params.eps * m;
        let xi = p + gamma - params.eps * m + 2.0 * s_term;
        let a0 = xi * xi - zeta * zeta - bb * bb;
        let a1 = kk * xi + (kappa - m) * zeta - 2.0 * params.eps * m * bb;
        let a2 = kk * kk - (kappa - m).powi(2) - (2.0 * params.eps * m).powi(2);
        let disc = a1 * a1 - a0 * a2;
        if disc < 0.0 || a2 <= 0.0 || a0 < 0.0 {
            any_violation = true;
            continue;
        }
        let alpha = (a1 - disc.sqrt()) / a2;
        match &best {
            Some((alpha_best, _, _)) if alpha >= *alpha_best => {}
            _ => best = Some((alpha, m, (a0, a1, a2))),
        }
    }

    match best {
        Some((alpha, m_star, coeffs)) if !any_violation => RateResult {
            alpha: Some(alpha),
            m_star,
            lambda_r,
            coeffs,
            region_ok: true,
            zero_state,
        },
        Some((alpha, m_star, coeffs)) => RateResult {
            // Some inertia branch failed: not certifiable at this sample.
            alpha: Some(alpha),
            m_star,
            lambda_r,
            coeffs,
            region_ok: false,
            zero_state,
        },
        None => RateResult {
            alpha: None,
            m_star: params.bounds.m_lb,
            lambda_r,
            coeffs: (0.0, 0.0, 0.0),
            region_ok: false,
            zero_state,
        },
    }
}

/// Largest rate for which the contraction matrix inequality holds at a
/// frozen sample, by bisection on the assembled matrices. Used as the
/// independent oracle for [`rate_alpha`]; the closed form must never exceed
/// it.
///
/// The implicitly defined potential matrices are completed as
/// `Kcal_G = (2 G(e)/|e|^2) I` (isotropic, matching the quadratic form) and
/// `K_G = (g e' + e g' - (e'g/|e|^2) e e') / |e|^2` (symmetric, mapping
/// `e -> g(e)`), and the inequality is tested along the frozen error
/// direction, which is exactly where the trajectory evaluates it.
pub struct LmiOracle {
    /// d/dt of the inertia estimate along the flow.
    pub m_hat_dot: Mat,
    /// d/dt of the isotropic potential stiffness completion.
    pub kcal_dot: Mat,
    /// Potential force at the error.
    pub g_e: Vector,
}

/// Which feasibility reading of the contraction inequality to bisect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiMode {
    /// Full matrix inequality `F(alpha) <= 0` via the symmetric eigensolver.
    FullMatrix,
    /// Quadratic form along the frozen error direction, the form in which
    /// the trajectory actually evaluates the inequality.
    Directional,
}

pub fn lmi_bisect_alpha(
    s: &RateSample,
    params: &CertificateParams,
    extra: &LmiOracle,
    mode: LmiMode,
    alpha_hi: F,
    tol: F,
) -> F {
    let n = s.e.len();
    let e_sq = s.e.norm_squared();
    let de_sq = s.de.norm_squared();
    assert!(e_sq > 0.0 && de_sq > 0.0, "oracle needs a nonzero frozen state");

    // Completions of the potential matrices.
    let kcal_g = Mat::identity(n, n) * (2.0 * s.g_hat_e / e_sq);
    let eg = s.e.dot(&extra.g_e);
    let k_g = (&extra.g_e * s.e.transpose() + &s.e * extra.g_e.transpose()
        - (&s.e * s.e.transpose()) * (eg / e_sq))
        / e_sq;

    // Projector scalars of the closed loop.
    let (nu_e, nu_de, _, _) = structure_terms(s);
    let eta_e = nu_e / e_sq;
    let eta_de = nu_de / de_sq;

    // System matrix A = [[0, I], [-M^-1 P', -M^-1 Q']].
    let m_inv = s
        .m_hat
        .to_dmatrix()
        .try_inverse()
        .expect("inertia estimate invertible at frozen sample");
    let p_prime = Mat::identity(n, n) * eta_e + &k_g + &s.k_p;
    let q_prime = &s.coriolis + Mat::identity(n, n) * eta_de + &s.damping_err + &s.k_d;
    let mut a = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
    }
    let block_p = -&m_inv * &p_prime;
    let block_q = -&m_inv * &q_prime;
    for i in 0..n {
        for j in 0..n {
            a[(n + i, j)] = block_p[(i, j)];
            a[(n + i, n + j)] = block_q[(i, j)];
        }
    }

    // Metric and its rate.
    let kcal = &kcal_g + Mat::identity(n, n) * params.kappa;
    let mh = s.m_hat.to_dmatrix();
    let mut metric = Mat::zeros(2 * n, 2 * n);
    let mut metric_dot = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            metric[(i, j)] = kcal[(i, j)];
            metric[(i, n + j)] = params.eps * mh[(i, j)];
            metric[(n + i, j)] = params.eps * mh[(i, j)];
            metric[(n + i, n + j)] = mh[(i, j)];
            metric_dot[(i, j)] = extra.kcal_dot[(i, j)];
            metric_dot[(i, n + j)] = params.eps * extra.m_hat_dot[(i, j)];
            metric_dot[(n + i, j)] = params.eps * extra.m_hat_dot[(i, j)];
            metric_dot[(n + i, n + j)] = extra.m_hat_dot[(i, j)];
        }
    }

    // Young's-inequality loading.
    let mut loading = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        loading[(i, i)] = params.eps.abs() * params.theta;
        loading[(n + i, n + i)] = params.phi;
    }

    let x = {
        let mut v = Vector::zeros(2 * n);
        for i in 0..n {
            v[i] = s.e[i];
            v[n + i] = s.de[i];
        }
        v.normalize()
    };

    let feasible = |alpha: F| -> bool {
        let f = a.transpose() * &metric
            + &metric * &a
            + &metric_dot
            + &loading
            + &metric * (2.0 * alpha);
        match mode {
            LmiMode::Directional => (&f * &x).dot(&x) <= 1e-9,
            LmiMode::FullMatrix => {
                let sym = SymMatrix::from_dmatrix(&f).expect("finite contraction matrix");
                sym_eig(&sym).expect("contraction spectrum").max() <= 1e-9
            }
        }
    };

    if !feasible(0.0) {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = alpha_hi;
    while feasible(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return hi;
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
