//! Bindings for the static demo page in `www/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sphreg::error_model::{SvmfParams, TransportBase};
use sphreg::estimation::{count_dof, fit_svmf, perturbed_start, Dataset, ErrorModel, FitConfig, ModelFlags, ModelState};
use sphreg::io::{mt_to_s4, MomentTensor};
use sphreg::link::{to_reparam, LinkDims};
use sphreg::simulate::{random_covariates, simulate_responses, Design};
use wasm_bindgen::prelude::*;

fn js(e: sphreg::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Unit vector in R^5 for a moment tensor given as `Mrr, Mtt, Mff, Mrt, Mrf, Mtf`.
#[wasm_bindgen(js_name = momentTensorToS4)]
pub fn moment_tensor_to_s4(m: &[f64], normalize: bool) -> Result<Vec<f64>, JsError> {
    let arr: [f64; 6] = m.try_into().map_err(|_| JsError::new("expected six tensor components"))?;
    let mut t = MomentTensor::from_array(arr);
    if normalize {
        t = t.normalized().map_err(js)?;
    }
    Ok(mt_to_s4(&t).map_err(js)?.as_slice().to_vec())
}

/// Free parameter count of a model.
#[wasm_bindgen(js_name = degreesOfFreedom)]
pub fn degrees_of_freedom(p: usize, q_s: usize, q_e: usize, scaled: bool, estimate_gamma01: bool) -> Result<usize, JsError> {
    let model = if scaled { ErrorModel::Svmf } else { ErrorModel::Vmf };
    let dims = LinkDims::new(p, q_s, q_e).map_err(js)?;
    count_dof(
        dims,
        ModelFlags {
            model,
            gamma01_estimated: estimate_gamma01,
        },
    )
    .map_err(js)
}

/// Simulates `n` responses on S^2 with two Euclidean covariates and scales
/// `(a2, 1/a2)`, fits the scaled model and returns a JSON summary.
#[wasm_bindgen(js_name = simulateAndFit)]
pub fn simulate_and_fit(seed: u64, n: usize, kappa: f64, a2: f64) -> Result<String, JsError> {
    let dims = LinkDims::new(3, 0, 2).map_err(js)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let link = to_reparam(&perturbed_start(dims, &mut rng, 0.5).map_err(js)?);
    let state = ModelState {
        error: SvmfParams::new(kappa, vec![1.0, a2, 1.0 / a2]).map_err(js)?,
        base: TransportBase::canonical(link.b01().clone()).map_err(js)?,
        link,
    };
    let cases = random_covariates(&mut rng, dims, n, &Design::default()).map_err(js)?;
    let y = simulate_responses(&mut rng, &state, ErrorModel::Svmf, &cases).map_err(js)?;
    let data = Dataset::from_cases(y, &cases, None).map_err(js)?;
    let fit = fit_svmf(&data, &FitConfig { seed, ..FitConfig::svmf() }).map_err(js)?;
    Ok(json!({
        "n": n,
        "true": { "kappa": kappa, "scales": [a2, 1.0 / a2] },
        "fitted": { "kappa": fit.error.kappa(), "scales": &fit.error.scales()[1..] },
        "loglik": fit.loglik,
        "aic": fit.aic,
        "converged": fit.converged,
    })
    .to_string())
}
