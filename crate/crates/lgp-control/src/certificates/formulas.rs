use super::{CertificateError, CertificateParams, FeasibilityReport, Violation, WorstCaseBounds};
use crate::control::GainAdaptation;
use crate::F;

/// Virtual stiffness and scale from the optimal centering of the
/// certificate's block spectrum:
/// `kappa = k_P + eps (d - alpha m_sum)`,
/// `phi = 2 [d - eps (k_P - theta/2) + alpha kappa] - (eps + alpha) m_sum`.
pub fn kappa_phi(bounds: &WorstCaseBounds, eps: F, theta: F, alpha_lb: F) -> (F, F) {
    let d = bounds.d_lb();
    let m_sum = bounds.m_sum();
    let kappa = bounds.k_p_lb + eps * (d - alpha_lb * m_sum);
    let phi = 2.0 * (d - eps * (bounds.k_p_lb - theta / 2.0) + alpha_lb * kappa)
        - (eps + alpha_lb) * m_sum;
    (kappa, phi)
}

/// Checks the certificate parameter inequalities and the metric positivity
/// condition; violations are reported by name, never raised.
pub fn feasibility(eps: F, theta: F, alpha_lb: F, bounds: &WorstCaseBounds) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut violated = |constraint: &'static str, detail: String| {
        violations.push(Violation { constraint: constraint.to_string(), detail });
    };

    let d = bounds.d_lb();
    let m_sum = bounds.m_sum();
    let m_ub = bounds.m_ub;
    let k_p = bounds.k_p_lb;

    if eps <= 0.0 {
        violated("eps_positive", format!("eps = {eps} must be positive"));
    }
    if alpha_lb < 0.0 {
        violated("alpha_nonnegative", format!("alpha_lb = {alpha_lb} must be non-negative"));
    }

    // eps upper bounds (two branches).
    let denom1 = k_p - theta / 2.0 + m_sum;
    if denom1 > 0.0 && eps >= d / denom1 {
        violated(
            "eps_damping_branch",
            format!("eps = {eps} >= d/(k_P - theta/2 + m_sum) = {}", d / denom1),
        );
    }
    let slack = d - alpha_lb * m_sum;
    if slack <= 0.0 {
        violated("damping_exceeds_alpha_inertia", format!("d - alpha m_sum = {slack} <= 0"));
    } else {
        let branch2 =
            slack / (2.0 * m_ub) * (1.0 + (1.0 + 4.0 * m_ub * m_ub * k_p / (slack * slack)).sqrt());
        if eps >= branch2 {
            violated("eps_inertia_branch", format!("eps = {eps} >= {branch2}"));
        }
    }

    // theta bound.
    let theta_cap = 2.0 * (k_p + m_sum);
    if theta <= 0.0 || theta >= theta_cap {
        violated("theta_interval", format!("theta = {theta} outside (0, {theta_cap})"));
    }

    // alpha bounds.
    if m_sum > 0.0 && alpha_lb >= d / m_sum {
        violated("alpha_damping_cap", format!("alpha_lb = {alpha_lb} >= d/m_sum = {}", d / m_sum));
    }
    if eps > 0.0 {
        let alpha0 = (k_p + eps * d - m_sum / 2.0) / (2.0 * eps * m_sum);
        let inner = alpha0 * alpha0 + (d - eps * (k_p - theta / 2.0 + m_sum)) / (eps * m_sum);
        if inner < 0.0 {
            violated("alpha_branch_real", format!("discriminant {inner} < 0"));
        } else if alpha_lb >= alpha0 + inner.sqrt() {
            violated(
                "alpha_quadratic_cap",
                format!("alpha_lb = {alpha_lb} >= {}", alpha0 + inner.sqrt()),
            );
        }
    }

    // Derived quantities and the metric positivity condition.
    let (kappa, phi) = kappa_phi(bounds, eps, theta, alpha_lb);
    if kappa <= 0.0 {
        violated("kappa_positive", format!("kappa = {kappa}"));
    }
    if phi <= 0.0 {
        violated("phi_positive", format!("phi = {phi}"));
    }
    if kappa > 0.0 && eps >= (kappa / m_ub).sqrt() {
        violated(
            "metric_positivity",
            format!("eps = {eps} >= sqrt(kappa/m_ub) = {}", (kappa / m_ub).sqrt()),
        );
    }

    FeasibilityReport { violations }
}

/// Constant metric enclosure `mu_lb <= lambda(M) <= mu_ub` from the closed
/// form, valid for `0 < eps < sqrt(m_lb kappa_lb) / m_ub`:
/// `mu_{lb,ub} = ((kappa + m)/2) -/+ sqrt(((kappa - m)/2)^2 + (eps m_ub)^2)`
/// with the floor using `(kappa_lb, m_lb)` and the cap `(kappa_ub, m_ub)`.
pub fn metric_bounds(
    kappa_lb: F,
    kappa_ub: F,
    eps: F,
    bounds: &WorstCaseBounds,
) -> Result<(F, F), CertificateError> {
    let cond = (bounds.m_lb * kappa_lb).sqrt() / bounds.m_ub;
    if !(0.0 < eps && eps < cond) {
        return Err(CertificateError::MetricInfeasible {
            condition: format!("requires 0 < eps < sqrt(m_lb kappa_lb)/m_ub = {cond}, got {eps}"),
        });
    }
    let coupling = 2.0 * eps * bounds.m_ub;
    let mu_lb = 0.5
        * (kappa_lb + bounds.m_lb
            - ((kappa_lb - bounds.m_lb).powi(2) + coupling * coupling).sqrt());
    let mu_ub = 0.5
        * (kappa_ub + bounds.m_ub
            + ((kappa_ub - bounds.m_ub).powi(2) + coupling * coupling).sqrt());
    Ok((mu_lb, mu_ub))
}

/// Time-variant metric floor at one sample:
/// `mu(t) = (kappa + m)/2 - sqrt(((kappa - m)/2)^2 + (eps m)^2) + 2 G(e)/|x|^2`
/// where `m` is the instantaneous inertia floor. At a zero-error state the
/// potential term is dropped (the stiffness-only floor).
pub fn mu_floor(kappa: F, m_lb_t: F, eps: F, g_hat_e: F, x_norm_sq: F) -> F {
    let base = 0.5 * (kappa + m_lb_t)
        - (0.25 * (kappa - m_lb_t).powi(2) + (eps * m_lb_t).powi(2)).sqrt();
    if x_norm_sq > 0.0 {
        base + 2.0 * g_hat_e / x_norm_sq
    } else {
        base
    }
}

/// Convergence ball radius `rho = delta sqrt((eps/theta + 1/phi)/(2 mu))`.
pub fn radius(params: &CertificateParams, mu_lb: F) -> Result<F, CertificateError> {
    if mu_lb <= 0.0 {
        return Err(CertificateError::NonPositiveMetricFloor { mu_lb });
    }
    Ok(params.bounds.delta
        * ((params.eps / params.theta + 1.0 / params.phi) / (2.0 * mu_lb)).sqrt())
}

/// Closed-form spectrum intervals of the covariance-adaptive gain and of
/// its time derivative (the latter scaled by the supplied covariance-rate
/// bounds `sigma_dot_lb <= 0 <= sigma_dot_ub`).
pub fn gain_bounds(
    g: &GainAdaptation,
    sigma_dot_lb: F,
    sigma_dot_ub: F,
) -> ((F, F), (F, F)) {
    (g.gain_interval(), g.gain_rate_interval(sigma_dot_lb, sigma_dot_ub))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_bounds() -> WorstCaseBounds {
        WorstCaseBounds {
            m_lb: 0.3,
            m_ub: 2.7,
            d_hat_lb: 0.5,
            k_p_lb: 11.0,
            k_d_lb: 11.0,
            delta: 0.5,
            coriolis_c0: 1.0,
            coriolis_c1: 2.0,
        }
    }

    #[test]
    fn kappa_formula_arithmetic() {
        // k_P = 11, eps = 1, d = 2, alpha = 0.1, m_sum = 3
        // -> kappa = 11 + (2 - 0.3) = 12.7.
        let b = WorstCaseBounds {
            m_lb: 1.0,
            m_ub: 2.0,
            d_hat_lb: 1.0,
            k_d_lb: 1.0,
            k_p_lb: 11.0,
            delta: 1.0,
            coriolis_c0: 0.0,
            coriolis_c1: 0.0,
        };
        let (kappa, _) = kappa_phi(&b, 1.0, 1.4, 0.1);
        assert!((kappa - 12.7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_limits_of_kappa_phi() {
        // alpha = 0, eps = 0: kappa = k_P and phi = 2 d.
        let b = sample_bounds();
        let (kappa, phi) = kappa_phi(&b, 0.0, 1.0, 0.0);
        assert!((kappa - b.k_p_lb).abs() < 1e-12);
        assert!((phi - 2.0 * b.d_lb()).abs() < 1e-12);
    }

    #[test]
    fn feasibility_boundary_cases() {
        let b = sample_bounds();
        // theta at its cap is excluded.
        let theta_cap = 2.0 * (b.k_p_lb + b.m_sum());
        let rep = feasibility(0.5, theta_cap, 0.05, &b);
        assert!(rep.violations.iter().any(|v| v.constraint == "theta_interval"));

        // eps = 0 violates positivity.
        let rep = feasibility(0.0, 1.0, 0.05, &b);
        assert!(rep.violations.iter().any(|v| v.constraint == "eps_positive"));

        // A reasonable interior point is feasible.
        let rep = feasibility(0.5, 1.4, 0.08, &b);
        assert!(rep.ok(), "unexpected violations: {:?}", rep.violations);
    }

    #[test]
    fn metric_bounds_limits() {
        let b = sample_bounds();
        // eps -> 0: floor -> min(kappa, m_lb), cap -> max(kappa, m_ub).
        let (lo, hi) = metric_bounds(5.0, 5.0, 1e-12, &b).unwrap();
        assert!((lo - b.m_lb).abs() < 1e-6);
        assert!((hi - 5.0).abs() < 1e-6);

        // kappa = m (scalar case): (1 +/- eps) m.
        let b2 = WorstCaseBounds { m_lb: 1.0, m_ub: 1.0, ..b };
        let (lo, hi) = metric_bounds(1.0, 1.0, 0.5, &b2).unwrap();
        assert!((lo - 0.5).abs() < 1e-12);
        assert!((hi - 1.5).abs() < 1e-12);

        // Out-of-range eps names the condition.
        assert!(matches!(
            metric_bounds(1.0, 1.0, 0.9, &b),
            Err(CertificateError::MetricInfeasible { .. })
        ));
    }

    #[test]
    fn metric_bounds_enclose_numeric_spectrum() {
        use crate::numerics::{assemble_block_metric, sym_eig, SymMatrix};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(61);
        for _ in 0..100 {
            let m_lb = rng.gen_range(0.2..1.0);
            let m_ub = m_lb + rng.gen_range(0.1..2.0);
            let kappa = rng.gen_range(1.0..8.0);
            let cond = (m_lb * kappa as f64).sqrt() / m_ub;
            let eps = rng.gen_range(0.01..cond.min(1.5));
            let b = WorstCaseBounds { m_lb, m_ub, ..sample_bounds() };
            let (lo, hi) = metric_bounds(kappa, kappa, eps, &b).unwrap();

            // Random inertia with spectrum inside [m_lb, m_ub].
            let n = 3;
            let mut diag = vec![m_lb, m_ub, 0.0];
            diag[2] = rng.gen_range(m_lb..m_ub);
            let q = random_orthogonal(n, &mut rng);
            let mhat = &q * crate::Mat::from_diagonal(&crate::Vector::from_vec(diag)) * q.transpose();
            let metric = assemble_block_metric(kappa, &SymMatrix::from_dmatrix(&mhat).unwrap(), eps);
            let eig = sym_eig(&metric).unwrap();
            assert!(eig.min() >= lo - 1e-9, "floor {lo} vs spectrum {}", eig.min());
            assert!(eig.max() <= hi + 1e-9, "cap {hi} vs spectrum {}", eig.max());
        }
    }

    fn random_orthogonal(n: usize, rng: &mut rand_chacha::ChaCha12Rng) -> crate::Mat {
        use rand::Rng;
        let a = crate::Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        a.qr().q()
    }

    #[test]
    fn mu_floor_limits() {
        // eps = 0, G = 0: min(kappa, m).
        assert!((mu_floor(3.0, 1.0, 0.0, 0.0, 1.0) - 1.0).abs() < 1e-12);
        // kappa = m = 1, eps = 0.5, G = 0: 1 - 0.5.
        assert!((mu_floor(1.0, 1.0, 0.5, 0.0, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radius_normalizations() {
        let mut b = sample_bounds();
        b.delta = 0.0;
        // delta = 0 would be rejected by validate, but the radius formula
        // itself degrades gracefully.
        let p = CertificateParams { eps: 1.0, theta: 1.0, alpha_lb: 0.1, kappa: 1.0, phi: 1.0, bounds: b };
        assert_eq!(radius(&p, 1.0).unwrap(), 0.0);

        let mut b1 = sample_bounds();
        b1.delta = 1.0;
        let p1 = CertificateParams { eps: 1.0, theta: 1.0, alpha_lb: 0.1, kappa: 1.0, phi: 1.0, bounds: b1 };
        assert!((radius(&p1, 1.0).unwrap() - 1.0).abs() < 1e-12);

        assert!(matches!(
            radius(&p1, 0.0),
            Err(CertificateError::NonPositiveMetricFloor { .. })
        ));
    }

    #[test]
    fn radius_monotone_in_delta_and_kappa_in_kp() {
        let b = sample_bounds();
        let p_small = CertificateParams::derive(b, 0.9, 1.4, 0.08);
        let mut b_big = b;
        b_big.delta = 2.0 * b.delta;
        let p_big = CertificateParams::derive(b_big, 0.9, 1.4, 0.08);
        assert!(radius(&p_big, 1.3).unwrap() > radius(&p_small, 1.3).unwrap());

        let mut b_kp = b;
        b_kp.k_p_lb = b.k_p_lb + 5.0;
        let (kappa_hi, _) = kappa_phi(&b_kp, 0.9, 1.4, 0.08);
        assert!(kappa_hi > p_small.kappa);
    }

    #[test]
    fn gain_bound_anchors() {
        let g = GainAdaptation::scalar(1, 100.0, 0.02, 7.11);
        let ((lo, hi), (dlo, dhi)) = gain_bounds(&g, -0.5, 1.0);
        assert!((lo - 1.0009).abs() < 1e-3, "floor {lo}");
        assert!((hi - 100.0).abs() < 1e-12);
        assert!(dlo < 0.0 && dhi > 0.0);

        // K3 -> infinity: the floor approaches k1.
        let g2 = GainAdaptation::scalar(1, 5.0, 0.1, 1e9);
        let ((lo2, _), _) = gain_bounds(&g2, 0.0, 0.0);
        assert!((lo2 - 5.0).abs() < 1e-6);
    }

    #[test]
    fn sampled_adaptive_gains_stay_inside_interval() {
        use crate::control::adaptive_gain;
        use crate::numerics::sym_eig;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(62);
        let g = GainAdaptation::scalar(2, 100.0, 0.02, 7.11);
        let ((lo, hi), _) = gain_bounds(&g, 0.0, 0.0);
        for _ in 0..1000 {
            let a = crate::Mat::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
            let sigma =
                crate::SymMat::from_dmatrix(&(&a * a.transpose() * rng.gen_range(0.0..50.0)))
                    .unwrap();
            let k = adaptive_gain(&g, &sigma).unwrap();
            let eig = sym_eig(&k).unwrap();
            assert!(eig.min() >= lo - 1e-9 && eig.max() <= hi + 1e-9);
        }
    }
}
