//! The Lagrangian-GP: structured kernels under the Euler-Lagrange operator,
//! Gram assembly, posterior fit and decomposition into inertia / Coriolis /
//! gravity / dissipation estimates, posterior covariance, and
//! hyperparameter optimization.

mod hyper;
mod hyperopt;
mod kernels;
mod model;
mod prior;
mod serialize;

pub use hyper::{ElasticHyper, Hyperparams};
pub use hyperopt::{optimize_hyper, optimize_hyper_with, torque_residual_sq, torque_rmse, OptReport};
pub use kernels::{Kernels, LgpInput};
pub use model::{gram, prior_torque, CovarianceQuery, LgpModel, TrainingSet};
pub use prior::{PriorSpec, ZeroModel};
pub use serialize::{
    format_float, load_model, read_training_csv, save_model, write_training_csv, ModelIoError,
};

#[cfg(test)]
mod tests;
