use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit, Dataset, FitConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    /// Mean of the squared chordal errors over the cases that were fitted.
    pub mse: f64,
    /// `|y_i - mu_(-i)(x_i)|^2`, absent for skipped cases.
    pub errors: Vec<Option<f64>>,
    pub skipped: Vec<usize>,
}

impl LooReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["case", "squared_error"])?;
        for (i, e) in self.errors.iter().enumerate() {
            let v = e.map_or_else(String::new, |e| format!("{e:e}"));
            out.write_record([i.to_string(), v])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Leave-one-out mean squared chordal prediction error. Each held-out fit
/// starts from the full-data fit with a single start; cases whose fit fails
/// are skipped and listed.
pub fn loo_cv_mse(data: &Dataset, config: &FitConfig) -> Result<LooReport> {
    let n = data.n();
    if n < 2 {
        return Err(Error::Validation("leave-one-out needs at least two cases".into()));
    }
    let full = fit(data, config)?;
    let cfg = FitConfig {
        start: Some(full.state()),
        n_starts: 1,
        ..config.clone()
    };
    let errors: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let f = fit(&data.subset(&keep).ok()?, &cfg).ok()?;
            let mu = f.predict(&data.case(i)).ok()?;
            Some((&data.responses()[i] - mu).norm_squared())
        })
        .collect();
    let skipped: Vec<usize> = (0..n).filter(|&i| errors[i].is_none()).collect();
    let done: Vec<f64> = errors.iter().flatten().copied().collect();
    if done.is_empty() {
        return Err(Error::Convergence("every leave-one-out fit failed".into()));
    }
    Ok(LooReport {
        mse: done.iter().sum::<f64>() / done.len() as f64,
        errors,
        skipped,
    })
}
