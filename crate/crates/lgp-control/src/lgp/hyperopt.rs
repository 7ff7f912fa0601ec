use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{Hyperparams, LgpModel, PriorSpec, TrainingSet};
use crate::{Vector, F};

/// Outcome of a hyperparameter search.
#[derive(Debug, Clone)]
pub struct OptReport {
    pub best: Hyperparams,
    pub best_objective: F,
    pub initial_objective: F,
    pub evaluations: usize,
}

/// Nelder-Mead over log-hyperparameters with seeded restarts; best-effort
/// within a fixed evaluation budget. A budget of one returns the initial
/// guess unchanged.
pub fn optimize_hyper_with(
    mut objective: impl FnMut(&Hyperparams) -> F,
    init: &Hyperparams,
    budget: usize,
    seed: u64,
) -> OptReport {
    assert!(budget >= 1);
    let template = init.clone();
    let x0 = init.to_log_vec();
    let mut evals = 0usize;
    let mut eval_vec = |v: &[F], evals: &mut usize| -> F {
        *evals += 1;
        let h = template.from_log_vec(v);
        let obj = objective(&h);
        if obj.is_finite() {
            obj
        } else {
            F::INFINITY
        }
    };

    let f0 = eval_vec(&x0, &mut evals);
    // The incumbent is kept as the exact Hyperparams value, so a budget of
    // one (or a fruitless search) returns the initial guess unchanged.
    let mut best_x = x0.clone();
    let mut best_h = init.clone();
    let mut best_f = f0;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    while evals < budget {
        let remaining = budget - evals;
        // Restart around the incumbent with shrinking jitter.
        let spread = if evals <= 1 { 0.3 } else { 0.15 };
        let start: Vec<F> = best_x
            .iter()
            .map(|&x| x + rng.gen_range(-spread..spread))
            .collect();
        let (xr, fr) = nelder_mead(|v| eval_vec(v, &mut evals), &start, remaining, 0.4);
        if fr < best_f {
            best_h = template.from_log_vec(&xr);
            best_x = xr;
            best_f = fr;
        }
    }

    OptReport {
        best: best_h,
        best_objective: best_f,
        initial_objective: f0,
        evaluations: evals,
    }
}

/// Least-squares hyperparameter fit: minimizes the summed squared torque
/// prediction residuals over training plus validation rows.
pub fn optimize_hyper(
    ts: &TrainingSet,
    vs: &TrainingSet,
    prior: &PriorSpec,
    init: &Hyperparams,
    budget: usize,
    seed: u64,
) -> OptReport {
    let objective = |h: &Hyperparams| -> F {
        match LgpModel::fit(ts, h, prior) {
            Err(_) => F::INFINITY,
            Ok(model) => torque_residual_sq(&model, ts) + torque_residual_sq(&model, vs),
        }
    };
    optimize_hyper_with(objective, init, budget, seed)
}

/// Summed squared torque prediction residual of a fitted model over a set.
pub fn torque_residual_sq(model: &LgpModel, set: &TrainingSet) -> F {
    set.inputs
        .iter()
        .zip(&set.outputs)
        .map(|(x, y)| (model.predict_tau(x) - y).norm_squared())
        .sum()
}

/// Root-mean-square torque error of a model over a set.
pub fn torque_rmse(model: &LgpModel, set: &TrainingSet) -> F {
    if set.is_empty() {
        return 0.0;
    }
    (torque_residual_sq(model, set) / (set.len() * set.dof()) as F).sqrt()
}

/// Classic Nelder-Mead on a budget; returns the best vertex found.
fn nelder_mead(
    mut f: impl FnMut(&[F]) -> F,
    x0: &[F],
    budget: usize,
    init_step: F,
) -> (Vec<F>, F) {
    let dim = x0.len();
    let mut used = 0usize;
    let mut eval = |x: &Vector, used: &mut usize| -> F {
        *used += 1;
        f(x.as_slice())
    };

    let mut simplex: Vec<(Vector, F)> = Vec::with_capacity(dim + 1);
    let base = Vector::from_column_slice(x0);
    if used >= budget {
        return (x0.to_vec(), F::INFINITY);
    }
    let fb = eval(&base, &mut used);
    simplex.push((base.clone(), fb));
    for i in 0..dim {
        if used >= budget {
            break;
        }
        let mut v = base.clone();
        v[i] += init_step;
        let fv = eval(&v, &mut used);
        simplex.push((v, fv));
    }

    let order = |s: &mut Vec<(Vector, F)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    };
    order(&mut simplex);

    while used < budget && simplex.len() == dim + 1 {
        let centroid: Vector = simplex[..dim]
            .iter()
            .fold(Vector::zeros(dim), |acc, (v, _)| acc + v)
            / dim as F;
        let worst = simplex[dim].clone();

        let reflect = &centroid + (&centroid - &worst.0);
        let fr = eval(&reflect, &mut used);
        if fr < simplex[0].1 {
            if used < budget {
                let expand = &centroid + (&centroid - &worst.0) * 2.0;
                let fe = eval(&expand, &mut used);
                simplex[dim] = if fe < fr { (expand, fe) } else { (reflect, fr) };
            } else {
                simplex[dim] = (reflect, fr);
            }
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflect, fr);
        } else {
            if used >= budget {
                break;
            }
            let contract = &centroid + (&worst.0 - &centroid) * 0.5;
            let fc = eval(&contract, &mut used);
            if fc < worst.1 {
                simplex[dim] = (contract, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for k in 1..=dim {
                    if used >= budget {
                        break;
                    }
                    let v = (&simplex[k].0 + &best) * 0.5;
                    let fv = eval(&v, &mut used);
                    simplex[k] = (v, fv);
                }
            }
        }
        order(&mut simplex);

        // Converged simplex: stop this run and let the caller restart.
        if (simplex[dim].1 - simplex[0].1).abs() <= 1e-12 * (1.0 + simplex[0].1.abs()) {
            break;
        }
    }

    order(&mut simplex);
    let (v, fv) = simplex.swap_remove(0);
    (v.as_slice().to_vec(), fv)
}
