//! Model comparison and uncertainty: AIC, parametric bootstrap tests and
//! intervals, leave-one-out cross-validation and residual diagnostics.
//!
//! Resamples and folds run in parallel. Each task draws from its own
//! generator stream and writes to its own slot, so results do not depend on
//! the number of worker threads.

mod bootstrap;
mod cv;
mod diagnostics;

pub use bootstrap::{bootstrap_ci_scales, bootstrap_lrt, BootstrapReport, Interval, ResampleFailure};
pub use cv::{loo_cv_mse, LooReport};
pub use diagnostics::{diagnostics, DiagnosticsBundle};

use crate::estimation::FitResult;

/// `2 dof - 2 loglik`.
pub fn aic(fit: &FitResult) -> f64 {
    2.0 * fit.dof as f64 - 2.0 * fit.loglik
}

fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
