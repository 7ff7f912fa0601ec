use serde::{Deserialize, Serialize};

use super::WorstCaseBounds;
use crate::control::Reference;
use crate::dynamics::{ElModel, JointState};
use crate::numerics::sym_eig;
use crate::{Vector, F};

/// Sampling density for the worst-case bound extraction. The bounds are
/// only as sound as the sampling is dense; both knobs are configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsSamplerConfig {
    /// Half-width of the position box around the reference tube.
    pub position_margin: F,
    /// Half-width of the velocity box around the reference rates (also the
    /// error-velocity range for the damping floor).
    pub velocity_margin: F,
    /// Time samples along the reference period.
    pub time_samples: usize,
    /// Random probes per time sample inside the margin box.
    pub probes: usize,
}

impl Default for BoundsSamplerConfig {
    fn default() -> Self {
        Self { position_margin: 0.8, velocity_margin: 1.5, time_samples: 24, probes: 8 }
    }
}

/// Worst-case bounds of a fitted model over the task workspace, by sampling
/// the reference tube plus a margin box: inertia eigenvalue range, damping
/// floor at error velocities, and the Coriolis norm envelope coefficients.
pub fn bounds_from_model(
    model: &dyn ElModel,
    reference: &Reference,
    horizon: F,
    k_p_lb: F,
    k_d_lb: F,
    delta: F,
    cfg: &BoundsSamplerConfig,
    seed: u64,
) -> WorstCaseBounds {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let n = model.dof();

    let mut m_lb = F::INFINITY;
    let mut m_ub = F::NEG_INFINITY;
    let mut d_lb = F::INFINITY;
    let mut cor: Vec<(F, F)> = Vec::new(); // (|q|, |C|/|dq|)

    for i in 0..cfg.time_samples {
        let t = horizon * i as F / cfg.time_samples as F;
        let (q_d, dq_d, _) = reference.eval(t);
        for _ in 0..cfg.probes {
            let q = &q_d
                + Vector::from_fn(n, |_, _| rng.gen_range(-cfg.position_margin..cfg.position_margin));
            let dq = &dq_d
                + Vector::from_fn(n, |_, _| rng.gen_range(-cfg.velocity_margin..cfg.velocity_margin));
            let de =
                Vector::from_fn(n, |_, _| rng.gen_range(-cfg.velocity_margin..cfg.velocity_margin));

            let m_eig = sym_eig(&model.mass_matrix(&q)).expect("inertia spectrum");
            m_lb = m_lb.min(m_eig.min());
            m_ub = m_ub.max(m_eig.max());

            let d = model.damping_matrix(&de);
            if let Ok(sym) = crate::SymMat::from_dmatrix(&d) {
                if let Ok(eig) = sym_eig(&sym) {
                    d_lb = d_lb.min(eig.min());
                }
            }

            let s = JointState::new(q.clone(), dq.clone());
            let c = model.components(&s).c;
            let dq_norm = s.dq.norm();
            if dq_norm > 1e-9 {
                cor.push((s.q.norm(), c.norm() / dq_norm));
            }
        }
    }

    // Envelope fit |C| <= (c0 + c1 |q|) |dq|: least squares, then inflate
    // the offset so no sample exceeds the bound.
    let (mut c0, mut c1) = (0.0, 0.0);
    if cor.len() >= 2 {
        let k = cor.len() as F;
        let sx: F = cor.iter().map(|p| p.0).sum();
        let sy: F = cor.iter().map(|p| p.1).sum();
        let sxx: F = cor.iter().map(|p| p.0 * p.0).sum();
        let sxy: F = cor.iter().map(|p| p.0 * p.1).sum();
        let denom = k * sxx - sx * sx;
        c1 = if denom.abs() > 1e-12 { ((k * sxy - sx * sy) / denom).max(0.0) } else { 0.0 };
        c0 = (sy - c1 * sx) / k;
        let worst = cor
            .iter()
            .map(|(x, y)| y - (c0 + c1 * x))
            .fold(F::NEG_INFINITY, F::max);
        c0 += worst.max(0.0);
    }

    WorstCaseBounds {
        m_lb,
        m_ub,
        d_hat_lb: d_lb.max(0.0),
        k_p_lb,
        k_d_lb,
        delta,
        coriolis_c0: c0.max(0.0),
        coriolis_c1: c1,
    }
}
