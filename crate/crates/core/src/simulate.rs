//! Random covariate designs and response simulation from a model state.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::error_model::{axes_at, sample_vmf_with, svmf_draw};
use crate::estimation::{Dataset, ErrorModel, ModelState};
use crate::link::{CovariateCase, LinkDims};

/// Distribution of generated covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    /// Spherical covariates are von Mises-Fisher around this direction
    /// (`e1` when absent).
    pub spherical_center: Option<DVector<f64>>,
    /// Concentration of the spherical covariates; 0 gives uniform draws.
    pub spherical_kappa: f64,
    /// Euclidean covariates are independent `N(0, sd^2)`.
    pub euclidean_sd: f64,
}

impl Default for Design {
    fn default() -> Self {
        Self {
            spherical_center: None,
            spherical_kappa: 5.0,
            euclidean_sd: 1.0,
        }
    }
}

pub fn random_covariates<R: Rng + ?Sized>(rng: &mut R, dims: LinkDims, n: usize, design: &Design) -> Result<Vec<CovariateCase>> {
    let center = match (&design.spherical_center, dims.q_s) {
        (_, 0) => None,
        (Some(c), q) if c.len() == q => Some(c.normalize()),
        (Some(_), q) => return Err(Error::Dimension(format!("spherical center must have length {q}"))),
        (None, q) => Some(DVector::from_fn(q, |i, _| if i == 0 { 1.0 } else { 0.0 })),
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let xs = match &center {
            Some(c) => Some(sample_vmf_with(rng, c, design.spherical_kappa, 1)?.remove(0)),
            None => None,
        };
        let xe = (dims.q_e > 0)
            .then(|| DVector::from_fn(dims.q_e, |_, _| design.euclidean_sd * rng.sample::<f64, _>(StandardNormal)));
        out.push(CovariateCase::new(xe, xs)?);
    }
    Ok(out)
}

/// One response per case drawn from the model at the case's mean.
pub fn simulate_responses<R: Rng + ?Sized>(
    rng: &mut R,
    state: &ModelState,
    model: ErrorModel,
    cases: &[CovariateCase],
) -> Result<Vec<DVector<f64>>> {
    cases
        .iter()
        .map(|x| {
            let mu = state.mean(x)?;
            match model {
                ErrorModel::Vmf => Ok(sample_vmf_with(rng, &mu, state.error.kappa(), 1)?.remove(0)),
                ErrorModel::Svmf => Ok(svmf_draw(rng, &axes_at(&mu, &state.base)?, &state.error)),
            }
        })
        .collect()
}

/// Simulated responses packaged with the covariates of `template`.
pub fn simulate_like<R: Rng + ?Sized>(rng: &mut R, state: &ModelState, model: ErrorModel, template: &Dataset) -> Result<Dataset> {
    let y = simulate_responses(rng, state, model, &template.cases())?;
    template.with_responses(y)
}
