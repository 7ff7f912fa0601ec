use super::{Hyperparams, Kernels, LgpInput, PriorSpec};
use crate::dynamics::{christoffel_coriolis, ElModel, Energy, JointState};
use crate::numerics::{sym_eig, AppliedJitter, CholFactor, JitterPolicy, NumericsError, SymMatrix};
use crate::{Mat, SymMat, Vector, F};

/// Observations for the GP fit: full-state inputs, torque outputs, and the
/// per-row noise scales (torque and acceleration standard deviations).
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub inputs: Vec<LgpInput>,
    pub outputs: Vec<Vector>,
    pub torque_noise_std: Vec<F>,
    pub accel_noise_std: Vec<F>,
}

impl TrainingSet {
    pub fn new(
        inputs: Vec<LgpInput>,
        outputs: Vec<Vector>,
        torque_noise_std: Vec<F>,
        accel_noise_std: Vec<F>,
    ) -> Self {
        assert_eq!(inputs.len(), outputs.len(), "row counts must match");
        assert_eq!(inputs.len(), torque_noise_std.len());
        assert_eq!(inputs.len(), accel_noise_std.len());
        Self { inputs, outputs, torque_noise_std, accel_noise_std }
    }

    /// Uniform noise scales across all rows.
    pub fn with_uniform_noise(
        inputs: Vec<LgpInput>,
        outputs: Vec<Vector>,
        torque_std: F,
        accel_std: F,
    ) -> Self {
        let d = inputs.len();
        Self::new(inputs, outputs, vec![torque_std; d], vec![accel_std; d])
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.inputs.first().map_or(0, LgpInput::dof)
    }
}

/// Covariance query point; the acceleration is model-estimated in closed
/// loop rather than measured.
#[derive(Debug, Clone)]
pub struct CovarianceQuery {
    pub q: Vector,
    pub dq: Vector,
    pub ddq_estimate: Vector,
}

/// Gram matrix of the torque GP over the training inputs, including the
/// noise blocks. Acceleration noise enters linearly through the prior mass
/// matrix, inflating the torque noise by `M_prior S_a M_prior'`.
pub fn gram(
    inputs: &[LgpInput],
    kernels: &Kernels,
    torque_noise_std: &[F],
    accel_noise_std: &[F],
    prior: &dyn ElModel,
) -> SymMat {
    let d = inputs.len();
    let n = kernels.dof();
    let mut g = Mat::zeros(d * n, d * n);
    for i in 0..d {
        for j in 0..=i {
            let blk = kernels.tau_block(&inputs[i], &inputs[j]);
            for a in 0..n {
                for b in 0..n {
                    g[(i * n + a, j * n + b)] = blk[(a, b)];
                    g[(j * n + b, i * n + a)] = blk[(a, b)];
                }
            }
        }
    }
    for (j, inp) in inputs.iter().enumerate() {
        let mp = prior.mass_matrix(&inp.q).to_dmatrix();
        let noise = &mp * mp.transpose() * (accel_noise_std[j] * accel_noise_std[j]);
        for a in 0..n {
            g[(j * n + a, j * n + a)] += torque_noise_std[j] * torque_noise_std[j];
            for b in 0..n {
                g[(j * n + a, j * n + b)] += noise[(a, b)];
            }
        }
    }
    SymMatrix::from_dmatrix(&g).expect("finite Gram matrix")
}

/// Trained Lagrangian-GP posterior.
pub struct LgpModel {
    hyper: Hyperparams,
    kernels: Kernels,
    inputs: Vec<LgpInput>,
    weights: Vector,
    prior_spec: PriorSpec,
    prior: Box<dyn ElModel + Send + Sync>,
    chol: CholFactor<F>,
    torque_noise_std: Vec<F>,
    accel_noise_std: Vec<F>,
    pub gram_jitter: AppliedJitter,
}

impl LgpModel {
    /// Fits the posterior weights `w = (K(X,X) + S_e)^-1 vec(Y - prior(X))`.
    pub fn fit(
        ts: &TrainingSet,
        hyper: &Hyperparams,
        prior_spec: &PriorSpec,
    ) -> Result<Self, NumericsError> {
        assert_eq!(hyper.dof(), ts.dof(), "hyperparameter/training dimensions must agree");
        assert_eq!(prior_spec.dof(), ts.dof(), "prior/training dimensions must agree");
        let kernels = Kernels::new(hyper);
        let prior = prior_spec.build();
        let g = gram(&ts.inputs, &kernels, &ts.torque_noise_std, &ts.accel_noise_std, &*prior);
        let chol = CholFactor::new(&g, JitterPolicy::Ladder)?;

        let n = ts.dof();
        let mut resid = Vector::zeros(ts.len() * n);
        for (j, (inp, y)) in ts.inputs.iter().zip(&ts.outputs).enumerate() {
            let prior_tau = prior_torque(&*prior, inp);
            for a in 0..n {
                resid[j * n + a] = y[a] - prior_tau[a];
            }
        }
        let weights = Vector::from_vec(chol.solve_vec(resid.as_slice()));

        Ok(Self {
            hyper: hyper.clone(),
            kernels,
            inputs: ts.inputs.clone(),
            weights,
            prior_spec: prior_spec.clone(),
            prior,
            gram_jitter: chol.jitter,
            chol,
            torque_noise_std: ts.torque_noise_std.clone(),
            accel_noise_std: ts.accel_noise_std.clone(),
        })
    }

    /// Rebuilds a model from its serialized parts without re-fitting.
    pub(crate) fn from_parts(
        hyper: Hyperparams,
        inputs: Vec<LgpInput>,
        weights: Vector,
        prior_spec: PriorSpec,
        torque_noise_std: Vec<F>,
        accel_noise_std: Vec<F>,
    ) -> Result<Self, NumericsError> {
        let kernels = Kernels::new(&hyper);
        let prior = prior_spec.build();
        let g = gram(&inputs, &kernels, &torque_noise_std, &accel_noise_std, &*prior);
        let chol = CholFactor::new(&g, JitterPolicy::Ladder)?;
        Ok(Self {
            hyper,
            kernels,
            inputs,
            weights,
            prior_spec,
            prior,
            gram_jitter: chol.jitter,
            chol,
            torque_noise_std,
            accel_noise_std,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn prior_spec(&self) -> &PriorSpec {
        &self.prior_spec
    }

    pub fn inputs(&self) -> &[LgpInput] {
        &self.inputs
    }

    pub fn weights(&self) -> &Vector {
        &self.weights
    }

    pub fn noise_std(&self) -> (&[F], &[F]) {
        (&self.torque_noise_std, &self.accel_noise_std)
    }

    fn weight_block(&self, j: usize) -> &[F] {
        let n = self.kernels.dof();
        &self.weights.as_slice()[j * n..(j + 1) * n]
    }

    /// Posterior mean torque at a full state.
    pub fn predict_tau(&self, x: &LgpInput) -> Vector {
        let n = self.kernels.dof();
        let mut tau = prior_torque(&*self.prior, x);
        for (j, xj) in self.inputs.iter().enumerate() {
            let blk = self.kernels.tau_block(x, xj);
            let wj = self.weight_block(j);
            for a in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    acc += blk[(a, b)] * wj[b];
                }
                tau[a] += acc;
            }
        }
        tau
    }

    /// Posterior covariance of the torque at a query state:
    /// `K(x,x) - K(x,X)(K(X,X)+S_e)^-1 K(X,x)`, symmetrized and clamped to
    /// the positive semi-definite cone.
    pub fn predict_cov(&self, cq: &CovarianceQuery) -> SymMat {
        let n = self.kernels.dof();
        let d = self.inputs.len();
        let x = LgpInput::new(cq.q.clone(), cq.dq.clone(), cq.ddq_estimate.clone());

        let prior_cov = self.kernels.tau_block(&x, &x);
        // K(X, x): (d n) x n
        let mut kxx = Mat::zeros(d * n, n);
        for (j, xj) in self.inputs.iter().enumerate() {
            let blk = self.kernels.tau_block(xj, &x);
            for a in 0..n {
                for b in 0..n {
                    kxx[(j * n + a, b)] = blk[(a, b)];
                }
            }
        }
        let solved = self.chol.solve_mat(&kxx);
        let reduction = kxx.transpose() * solved;
        let sigma = prior_cov - reduction;
        let sym = SymMatrix::from_dmatrix(&sigma).expect("finite covariance");

        // Clamp small negative eigenvalues introduced by cancellation.
        let eig = sym_eig(&sym).expect("finite covariance spectrum");
        if eig.min() >= 0.0 {
            return sym;
        }
        let mut clamped = Mat::zeros(n, n);
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam > 0.0 {
                let v = eig.vectors.column(k);
                clamped += v * v.transpose() * lam;
            }
        }
        SymMatrix::from_dmatrix(&clamped).expect("finite clamped covariance")
    }

    /// Posterior energies `(kinetic, gravity, elastic)` at a state.
    pub fn energies(&self, s: &JointState) -> (F, F, F) {
        let x = LgpInput::new(s.q.clone(), s.dq.clone(), Vector::zeros(s.dof()));
        let prior_e = self.prior.energy(s);
        let mut t = prior_e.kinetic;
        // The parametric prior exposes only the total potential; attribute
        // it to the gravity slot (the split is irrelevant downstream, only
        // the sum enters the certificates).
        let mut g = prior_e.potential;
        let mut u = 0.0;
        for (j, xj) in self.inputs.iter().enumerate() {
            let (t_row, g_row, u_row) = self.kernels.energy_rows(&x, xj);
            let wj = self.weight_block(j);
            for b in 0..t_row.len() {
                t += t_row[b] * wj[b];
                g += g_row[b] * wj[b];
                u += u_row[b] * wj[b];
            }
        }
        (t, g, u)
    }
}

/// Torque of a parametric components provider at a full state.
pub fn prior_torque(prior: &dyn ElModel, x: &LgpInput) -> Vector {
    let s = JointState::new(x.q.clone(), x.dq.clone());
    let c = prior.components(&s);
    c.m.to_dmatrix() * &x.ddq + &c.c * &x.dq + &c.g + &c.d
}

impl ElModel for LgpModel {
    fn dof(&self) -> usize {
        self.kernels.dof()
    }

    fn mass_matrix(&self, q: &Vector) -> SymMat {
        let mut m = self.prior.mass_matrix(q).to_dmatrix();
        for (j, xj) in self.inputs.iter().enumerate() {
            m += self.kernels.mass_contrib(q, xj, self.weight_block(j));
        }
        SymMatrix::from_dmatrix(&m).expect("finite inertia estimate")
    }

    fn mass_matrix_partials(&self, q: &Vector) -> Vec<Mat> {
        let mut partials = self.prior.mass_matrix_partials(q);
        for (j, xj) in self.inputs.iter().enumerate() {
            let contrib = self.kernels.mass_partial_contrib(q, xj, self.weight_block(j));
            for (p, c) in partials.iter_mut().zip(contrib) {
                *p += c;
            }
        }
        partials
    }

    fn gravity(&self, q: &Vector) -> Vector {
        let n = self.dof();
        let mut g = self.prior.gravity(q);
        for (j, xj) in self.inputs.iter().enumerate() {
            let blk = self.kernels.gravity_block(q, &xj.q) + self.kernels.elastic_block(q, &xj.q);
            let wj = self.weight_block(j);
            for a in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    acc += blk[(a, b)] * wj[b];
                }
                g[a] += acc;
            }
        }
        g
    }

    fn damping_matrix(&self, dq: &Vector) -> Mat {
        let mut d = self.prior.damping_matrix(dq);
        for (j, xj) in self.inputs.iter().enumerate() {
            let contrib = self.kernels.damping_contrib(dq, xj, self.weight_block(j));
            for a in 0..self.dof() {
                d[(a, a)] += contrib[a];
            }
        }
        d
    }

    fn energy(&self, s: &JointState) -> Energy {
        let (t, g, u) = self.energies(s);
        Energy { kinetic: t, potential: g + u }
    }

    fn components(&self, s: &JointState) -> crate::dynamics::ElComponents {
        let m = self.mass_matrix(&s.q);
        let partials = self.mass_matrix_partials(&s.q);
        let c = christoffel_coriolis(&partials, &s.dq);
        crate::dynamics::ElComponents {
            m,
            c,
            g: self.gravity(&s.q),
            d: self.dissipation(&s.dq),
        }
    }
}
