use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::*;
use crate::dynamics::{ElModel, JointState, TwoLink, TwoLinkParams};
use crate::numerics::{sym_eig, CholFactor, JitterPolicy};
use crate::{Mat, Vector, F};

fn two_link_hyper() -> Hyperparams {
    Hyperparams {
        kinetic_amps: vec![1.0, 1.0],
        kinetic_len: 1.5,
        gravity_amp: 8.0,
        gravity_lens: vec![1.5, 1.5],
        elastic: None,
        dissipation_amps: vec![1.0, 1.0],
        dissipation_lens: vec![1.5, 1.5],
        symmetric: false,
    }
}

fn truth() -> TwoLink {
    TwoLink::new(TwoLinkParams::default())
}

fn biased_prior() -> PriorSpec {
    PriorSpec::TwoLink { params: TwoLinkParams::default().biased([0.5, -0.5]) }
}

fn true_torque(plant: &TwoLink, x: &LgpInput) -> Vector {
    prior_torque(plant, x)
}

/// Small synthetic two-link training set on a position grid plus a velocity
/// grid, with optional measurement noise.
fn synth_training(noise: F, rng: &mut ChaCha12Rng) -> TrainingSet {
    let plant = truth();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let q = Vector::from_vec(vec![-1.0 + i as F, -1.0 + j as F]);
            let dq = Vector::from_vec(vec![1.0, -1.0]);
            let ddq = Vector::from_vec(vec![4.0, 4.0]);
            let x = LgpInput::new(q, dq, ddq);
            let mut y = true_torque(&plant, &x);
            for v in y.iter_mut() {
                *v += noise * rng.gen_range(-1.0..1.0);
            }
            inputs.push(x);
            outputs.push(y);
        }
    }
    for i in 0..3 {
        let dq = Vector::from_vec(vec![-1.0 + i as F, 1.0 - i as F]);
        let x = LgpInput::new(Vector::zeros(2), dq, Vector::zeros(2));
        inputs.push(x.clone());
        outputs.push(true_torque(&plant, &x));
    }
    TrainingSet::with_uniform_noise(inputs, outputs, noise.max(1e-4), 1e-4)
}

#[test]
fn gram_single_block_is_psd() {
    let h = two_link_hyper();
    let k = Kernels::new(&h);
    let prior = biased_prior().build();
    let x = LgpInput::new(
        Vector::from_vec(vec![0.3, -0.2]),
        Vector::from_vec(vec![0.5, 1.0]),
        Vector::from_vec(vec![1.0, -1.0]),
    );
    let g = gram(&[x], &k, &[0.1], &[0.01], &*prior);
    let eig = sym_eig(&g).unwrap();
    assert!(eig.min() >= -1e-10);
}

#[test]
fn gram_duplicate_rows_engage_jitter() {
    let h = two_link_hyper();
    let k = Kernels::new(&h);
    let prior = PriorSpec::Zero { dof: 2 }.build();
    let x = LgpInput::new(
        Vector::from_vec(vec![0.3, -0.2]),
        Vector::from_vec(vec![0.5, 1.0]),
        Vector::from_vec(vec![1.0, -1.0]),
    );
    let g = gram(&[x.clone(), x], &k, &[0.0, 0.0], &[0.0, 0.0], &*prior);
    let f = CholFactor::new(&g, JitterPolicy::Ladder).unwrap();
    assert!(f.jitter.engaged(), "duplicate rows with zero noise must need jitter");
}

#[test]
fn gram_random_is_symmetric_psd_after_jitter() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    let h = two_link_hyper();
    let k = Kernels::new(&h);
    let prior = biased_prior().build();
    let inputs: Vec<LgpInput> = (0..5)
        .map(|_| {
            LgpInput::new(
                Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)),
                Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)),
                Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let g = gram(&inputs, &k, &[1e-3; 5], &[1e-3; 5], &*prior);
    let gm = g.to_dmatrix();
    assert!((gm.transpose() - &gm).norm() < 1e-12 * (1.0 + gm.norm()));
    let eig = sym_eig(&g).unwrap();
    assert!(eig.min() >= -1e-9 * (1.0 + gm.norm()));
}

#[test]
fn zero_residual_fit_has_zero_weights() {
    // Outputs exactly equal to the prior torque: nothing to learn.
    let mut rng = ChaCha12Rng::seed_from_u64(32);
    let mut ts = synth_training(0.0, &mut rng);
    let prior_spec = biased_prior();
    let prior = prior_spec.build();
    for (x, y) in ts.inputs.iter().zip(ts.outputs.iter_mut()) {
        *y = prior_torque(&*prior, x);
    }
    let model = LgpModel::fit(&ts, &two_link_hyper(), &prior_spec).unwrap();
    assert!(model.weights().norm() < 1e-8, "weights {}", model.weights().norm());
    let x = &ts.inputs[0];
    assert!((model.predict_tau(x) - prior_torque(&*prior, x)).norm() < 1e-8);
}

#[test]
fn single_point_interpolation() {
    let plant = truth();
    let x = LgpInput::new(
        Vector::from_vec(vec![0.4, -0.3]),
        Vector::from_vec(vec![0.8, -0.6]),
        Vector::from_vec(vec![1.0, 2.0]),
    );
    let y = true_torque(&plant, &x);
    let ts = TrainingSet::with_uniform_noise(vec![x.clone()], vec![y.clone()], 1e-8, 0.0);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    let pred = model.predict_tau(&x);
    assert!((pred - &y).norm() / y.norm() < 1e-6);
}

#[test]
fn interpolates_training_outputs_at_low_noise() {
    let mut rng = ChaCha12Rng::seed_from_u64(33);
    let mut ts = synth_training(0.0, &mut rng);
    for s in ts.torque_noise_std.iter_mut() {
        *s = 1e-8;
    }
    for s in ts.accel_noise_std.iter_mut() {
        *s = 0.0;
    }
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    for (x, y) in ts.inputs.iter().zip(&ts.outputs) {
        let rel = (model.predict_tau(x) - y).norm() / (1.0 + y.norm());
        assert!(rel < 1e-6, "training interpolation rel err {rel}");
    }
}

#[test]
fn posterior_beats_prior_on_held_out_points() {
    let mut rng = ChaCha12Rng::seed_from_u64(34);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    let plant = truth();
    let prior = biased_prior().build();

    let mut gp_sq = 0.0;
    let mut prior_sq = 0.0;
    for _ in 0..50 {
        let x = LgpInput::new(
            Vector::from_fn(2, |_, _| rng.gen_range(-0.9..0.9)),
            Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)),
            Vector::from_fn(2, |_, _| rng.gen_range(-1.0..4.0)),
        );
        let y = true_torque(&plant, &x);
        gp_sq += (model.predict_tau(&x) - &y).norm_squared();
        prior_sq += (prior_torque(&*prior, &x) - &y).norm_squared();
    }
    let ratio = (prior_sq / gp_sq).sqrt();
    assert!(ratio > 2.0, "posterior RMSE must beat prior by > 2x, got {ratio:.2}x");
}

#[test]
fn far_from_data_returns_prior() {
    let mut rng = ChaCha12Rng::seed_from_u64(35);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    let prior = biased_prior().build();
    // Far in position, zero velocity (the dissipation kernel vanishes by
    // structure there).
    let x = LgpInput::new(
        Vector::from_vec(vec![40.0, -35.0]),
        Vector::zeros(2),
        Vector::from_vec(vec![1.0, 2.0]),
    );
    let diff = (model.predict_tau(&x) - prior_torque(&*prior, &x)).norm();
    assert!(diff < 1e-6, "far-field deviation from prior {diff}");
}

#[test]
fn decomposition_consistency() {
    let mut rng = ChaCha12Rng::seed_from_u64(36);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    for _ in 0..100 {
        let q = Vector::from_fn(2, |_, _| rng.gen_range(-1.2..1.2));
        let dq = Vector::from_fn(2, |_, _| rng.gen_range(-1.2..1.2));
        let ddq = Vector::from_fn(2, |_, _| rng.gen_range(-4.0..4.0));
        let x = LgpInput::new(q.clone(), dq.clone(), ddq.clone());
        let s = JointState::new(q, dq.clone());
        let c = model.components(&s);
        let assembled = c.m.to_dmatrix() * &ddq + &c.c * &dq + &c.g + &c.d;
        let tau = model.predict_tau(&x);
        let rel = (&tau - assembled).norm() / (1.0 + tau.norm());
        assert!(rel < 1e-6, "decomposition consistency {rel}");
    }
}

#[test]
fn components_at_rest_have_no_velocity_forces() {
    let mut rng = ChaCha12Rng::seed_from_u64(37);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    let s = JointState::new(Vector::from_vec(vec![0.5, -0.5]), Vector::zeros(2));
    let c = model.components(&s);
    assert!((&c.c * Vector::from_vec(vec![1.0, 1.0])).norm() < 1e-12);
    assert!(c.d.norm() < 1e-12);
}

#[test]
fn posterior_skew_symmetry() {
    let mut rng = ChaCha12Rng::seed_from_u64(38);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    for _ in 0..20 {
        let q = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
        let dq = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
        let s = JointState::new(q.clone(), dq.clone());
        let c = model.components(&s);
        let h = 1e-4;
        let m_at = |t: F| model.mass_matrix(&(&q + &dq * t)).to_dmatrix();
        let mdot_fd =
            (m_at(-2.0 * h) - m_at(2.0 * h) + (m_at(h) - m_at(-h)) * 8.0) / (12.0 * h);
        let defect = ((mdot_fd - 2.0 * &c.c) * &dq).dot(&dq);
        assert!(defect.abs() < 1e-8, "skew defect {defect}");
    }
}

#[test]
fn mass_matrix_matches_acceleration_linearity() {
    let mut rng = ChaCha12Rng::seed_from_u64(39);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    for _ in 0..10 {
        let q = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
        let m = model.mass_matrix(&q).to_dmatrix();
        // Central difference in the acceleration of the full posterior
        // torque; exact up to roundoff because tau is linear in ddq.
        let h = 0.5;
        for i in 0..2 {
            let mut ep = Vector::zeros(2);
            ep[i] = h;
            let tp = model.predict_tau(&LgpInput::new(q.clone(), Vector::zeros(2), ep.clone()));
            let tm = model.predict_tau(&LgpInput::new(q.clone(), Vector::zeros(2), -ep));
            let col = (tp - tm) / (2.0 * h);
            for a in 0..2 {
                let rel = (m[(a, i)] - col[a]).abs() / (1.0 + m[(a, i)].abs());
                assert!(rel < 1e-6, "mass linearity ({a},{i}) rel {rel}");
            }
        }
    }
}

#[test]
fn conservative_power_balance_along_path() {
    // d/dt (T + V) must equal dq' tau_c along any smooth path.
    let mut rng = ChaCha12Rng::seed_from_u64(40);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();

    let path = |t: F| -> (Vector, Vector, Vector) {
        let q = Vector::from_vec(vec![0.6 * (1.3 * t).sin(), 0.4 * (0.9 * t + 0.3).cos()]);
        let dq = Vector::from_vec(vec![
            0.6 * 1.3 * (1.3 * t).cos(),
            -0.4 * 0.9 * (0.9 * t + 0.3).sin(),
        ]);
        let ddq = Vector::from_vec(vec![
            -0.6 * 1.3 * 1.3 * (1.3 * t).sin(),
            -0.4 * 0.9 * 0.9 * (0.9 * t + 0.3).cos(),
        ]);
        (q, dq, ddq)
    };

    for &t in &[0.2, 0.7, 1.4, 2.3] {
        let (q, dq, ddq) = path(t);
        let s = JointState::new(q.clone(), dq.clone());
        let c = model.components(&s);
        let tau_c = c.m.to_dmatrix() * &ddq + &c.c * &dq + &c.g;
        let power = dq.dot(&tau_c);

        let h = 1e-5;
        let energy_at = |tt: F| -> F {
            let (q, dq, _) = path(tt);
            let e = model.energy(&JointState::new(q, dq));
            e.kinetic + e.potential
        };
        let fd = (energy_at(t + h) - energy_at(t - h)) / (2.0 * h);
        assert!(
            (fd - power).abs() < 1e-4 * (1.0 + power.abs()),
            "power balance at t={t}: fd {fd} vs dq'tau_c {power}"
        );
    }
}

#[test]
fn dissipative_posterior_is_statistically_passive() {
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    for _ in 0..1000 {
        let dq = Vector::from_fn(2, |_, _| rng.gen_range(-1.5..1.5));
        let d = model.dissipation(&dq);
        assert!(dq.dot(&d) >= -1e-8, "dissipated power must be non-negative");
    }
}

#[test]
fn covariance_contracts_at_training_inputs_and_grows_far_away() {
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let ts = synth_training(1e-2, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();
    let k = Kernels::new(&two_link_hyper());
    let prior = biased_prior().build();

    // At a training input the posterior variance is below the noise floor.
    let x0 = &ts.inputs[0];
    let cov = model.predict_cov(&CovarianceQuery {
        q: x0.q.clone(),
        dq: x0.dq.clone(),
        ddq_estimate: x0.ddq.clone(),
    });
    let mp = prior.mass_matrix(&x0.q).to_dmatrix();
    let noise = Mat::identity(2, 2) * ts.torque_noise_std[0].powi(2)
        + &mp * mp.transpose() * ts.accel_noise_std[0].powi(2);
    let gap = crate::SymMat::from_dmatrix(&(noise - cov.to_dmatrix())).unwrap();
    assert!(
        sym_eig(&gap).unwrap().min() >= -1e-8,
        "posterior covariance must contract below the noise at training inputs"
    );

    // Far from the data it returns to the prior covariance.
    let far = LgpInput::new(
        Vector::from_vec(vec![50.0, -45.0]),
        Vector::zeros(2),
        Vector::from_vec(vec![1.0, -2.0]),
    );
    let cov_far = model.predict_cov(&CovarianceQuery {
        q: far.q.clone(),
        dq: far.dq.clone(),
        ddq_estimate: far.ddq.clone(),
    });
    let prior_cov = k.tau_block(&far, &far);
    assert!((cov_far.to_dmatrix() - prior_cov).norm() < 1e-6);

    // And it is positive semi-definite everywhere.
    for _ in 0..20 {
        let cq = CovarianceQuery {
            q: Vector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0)),
            dq: Vector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0)),
            ddq_estimate: Vector::from_fn(2, |_, _| rng.gen_range(-4.0..4.0)),
        };
        let eig = sym_eig(&model.predict_cov(&cq)).unwrap();
        assert!(eig.min() >= -1e-12);
    }
}

#[test]
fn symmetric_flag_gives_point_symmetric_restoring_force() {
    // Fit a symmetric model on spring-like synthetic data and check
    // g(-q) = -g(q).
    let mut rng = ChaCha12Rng::seed_from_u64(43);
    let n = 2;
    let mut h = two_link_hyper();
    h.symmetric = true;
    h.elastic = Some(ElasticHyper { amps: vec![0.8, 0.8], len: 1.2 });

    let inputs: Vec<LgpInput> = (0..8)
        .map(|_| {
            LgpInput::new(
                Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
                Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
                Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let outputs: Vec<Vector> = inputs
        .iter()
        .map(|x| Vector::from_vec(vec![3.0 * x.q[0] + x.ddq[0], 2.0 * x.q[1] + x.ddq[1]]))
        .collect();
    let ts = TrainingSet::with_uniform_noise(inputs, outputs, 1e-3, 0.0);
    let model = LgpModel::fit(&ts, &h, &PriorSpec::Zero { dof: n }).unwrap();

    for _ in 0..20 {
        let q = Vector::from_fn(n, |_, _| rng.gen_range(-1.5..1.5));
        let gp = model.gravity(&q);
        let gm = model.gravity(&(-&q));
        assert!((gp + gm).norm() < 1e-9, "restoring force must be point symmetric");
    }
}

#[test]
fn optimizer_budget_one_returns_initial_guess() {
    let mut rng = ChaCha12Rng::seed_from_u64(44);
    let ts = synth_training(1e-3, &mut rng);
    let init = two_link_hyper();
    let report = optimize_hyper(&ts, &ts, &biased_prior(), &init, 1, 7);
    assert_eq!(report.best, init);
    assert_eq!(report.evaluations, 1);
}

#[test]
fn optimizer_recovers_planted_objective() {
    // Data generated from known hyperparameters; after optimization from a
    // perturbed start the objective must be within 5% of (or better than)
    // the value at the truth.
    let mut rng = ChaCha12Rng::seed_from_u64(45);
    let ts = synth_training(1e-2, &mut rng);
    let vs = synth_training(1e-2, &mut rng);
    let truth_h = two_link_hyper();
    let prior = biased_prior();

    let objective = |h: &Hyperparams| -> F {
        match LgpModel::fit(&ts, h, &prior) {
            Err(_) => F::INFINITY,
            Ok(m) => torque_residual_sq(&m, &ts) + torque_residual_sq(&m, &vs),
        }
    };
    let obj_truth = objective(&truth_h);

    let mut init = truth_h.clone();
    for a in init.kinetic_amps.iter_mut() {
        *a *= 2.5;
    }
    init.kinetic_len *= 0.5;
    init.gravity_amp *= 0.4;

    let report = optimize_hyper(&ts, &vs, &prior, &init, 500, 11);
    assert!(
        report.best_objective <= obj_truth * 1.05,
        "optimized {} vs truth {}",
        report.best_objective,
        obj_truth
    );
}

#[test]
fn model_document_roundtrip_is_bit_stable() {
    let mut rng = ChaCha12Rng::seed_from_u64(46);
    let ts = synth_training(1e-3, &mut rng);
    let model = LgpModel::fit(&ts, &two_link_hyper(), &biased_prior()).unwrap();

    let dir = std::env::temp_dir().join("lgp_model_roundtrip_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.toml");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();

    assert_eq!(model.weights().len(), loaded.weights().len());
    for (a, b) in model.weights().iter().zip(loaded.weights().iter()) {
        assert_eq!(a.to_bits(), b.to_bits(), "weight vector must round-trip bit-exactly");
    }
    assert_eq!(model.hyperparams(), loaded.hyperparams());

    // Predictions agree too.
    let x = &ts.inputs[3];
    assert!((model.predict_tau(x) - loaded.predict_tau(x)).norm() < 1e-12);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn training_csv_roundtrip() {
    let mut rng = ChaCha12Rng::seed_from_u64(47);
    let ts = synth_training(1e-3, &mut rng);
    let dir = std::env::temp_dir().join("lgp_training_csv_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("train.csv");
    write_training_csv(&ts, &path).unwrap();
    let back = read_training_csv(&path, ts.torque_noise_std[0], ts.accel_noise_std[0]).unwrap();
    assert_eq!(ts.len(), back.len());
    for (a, b) in ts.inputs.iter().zip(&back.inputs) {
        assert_eq!(a.q.as_slice(), b.q.as_slice());
        assert_eq!(a.dq.as_slice(), b.dq.as_slice());
        assert_eq!(a.ddq.as_slice(), b.ddq.as_slice());
    }
    for (a, b) in ts.outputs.iter().zip(&back.outputs) {
        assert_eq!(a.as_slice(), b.as_slice());
    }
    std::fs::remove_dir_all(&dir).ok();
}
