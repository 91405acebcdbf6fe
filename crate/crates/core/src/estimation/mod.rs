//! Maximum-likelihood fitting: preliminary transforms, the von Mises-Fisher
//! mean-link fit, concentration and moment estimates, and the joint scaled
//! von Mises-Fisher fit under the reparameterization constraints.

mod dataset;
mod fit;
mod objective;
mod optim;
mod transform;

pub use dataset::Dataset;
pub use fit::{
    count_dof, default_init, fit, fit_kappa, fit_svmf, fit_vmf, moment_axes, multistart_fit,
    perturbed_start, FitConfig, FitResult, GammaMode, KappaEstimate, ModelFlags, ModelState,
    MomentAxes, StageRecord, StartRecord,
};
pub use objective::LoglikProblem;
pub use transform::{preliminary_transform, TransformRecord};

use serde::{Deserialize, Serialize};

/// Error distribution used in a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    Vmf,
    Svmf,
}
