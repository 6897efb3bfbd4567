//! Zero-mean Gaussian process with a squared-exponential kernel: covariance
//! assembly, marginal likelihood and shared hyperparameter fitting.

mod hyperparams;
mod kernel;
mod likelihood;
mod model;
mod optimize;

pub use hyperparams::Hyperparams;
pub(crate) use kernel::kernel_matrix_unchecked;
pub use kernel::{assemble_covariance, kernel_matrix, CovarianceBundle};
pub(crate) use likelihood::lml_with_bundle;
pub use likelihood::{
    lml_gradient, lml_gradient_parts, lml_parts, log_marginal_likelihood, EvalStats,
    SharedObjective,
};
pub use model::FittedModel;
pub use optimize::{
    fit_shared_hyperparams, fit_with_report, FitReport, OptimizerConfig, RestartStatus,
    RestartTrace,
};
