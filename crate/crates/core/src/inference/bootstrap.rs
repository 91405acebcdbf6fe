use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stream_rng;
use crate::error::{Error, Result};
use crate::estimation::{fit_svmf, fit_vmf, Dataset, ErrorModel, FitConfig, FitResult};
use crate::simulate::simulate_like;

/// More failed resamples than this fraction marks a report unreliable.
const MAX_FAILURE_RATE: f64 = 0.1;

/// Fewest successful resamples for which a percentile interval is reported.
const MIN_INTERVAL_RESAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub statistic: String,
    pub observed: f64,
    /// Statistic of each successful resample, in resample order.
    pub resamples: Vec<f64>,
    pub p_value: Option<f64>,
    pub interval: Option<Interval>,
    /// Requested number of resamples.
    pub b: usize,
    pub seed: u64,
    pub failures: Vec<ResampleFailure>,
    pub unreliable: bool,
}

impl BootstrapReport {
    fn new(statistic: String, observed: f64, b: usize, seed: u64, slots: Vec<std::result::Result<f64, String>>) -> Self {
        let mut resamples = Vec::with_capacity(b);
        let mut failures = vec![];
        for (index, s) in slots.into_iter().enumerate() {
            match s {
                Ok(v) => resamples.push(v),
                Err(reason) => failures.push(ResampleFailure { index, reason }),
            }
        }
        let unreliable = failures.len() as f64 > MAX_FAILURE_RATE * b as f64;
        Self {
            statistic,
            observed,
            resamples,
            p_value: None,
            interval: None,
            b,
            seed,
            failures,
            unreliable,
        }
    }

    /// One row per requested resample: index, status and value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["statistic", "index", "status", "value"])?;
        let mut ok = self.resamples.iter();
        let mut failed = self.failures.iter().peekable();
        for i in 0..self.b {
            if failed.peek().is_some_and(|f| f.index == i) {
                let f = failed.next().expect("peeked");
                out.write_record([self.statistic.as_str(), &i.to_string(), "failed", &f.reason])?;
            } else if let Some(v) = ok.next() {
                out.write_record([self.statistic.as_str(), &i.to_string(), "ok", &format!("{v:e}")])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn check_b(b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::InvalidParameter("the number of resamples must be at least 1".into()));
    }
    Ok(())
}

fn refit_ok(f: FitResult) -> std::result::Result<FitResult, String> {
    if f.converged {
        Ok(f)
    } else {
        Err(format!("not converged (gradient {:e})", f.grad_norm))
    }
}

/// Parametric bootstrap test of the von Mises-Fisher model against the
/// scaled one. The statistic is `2 (l_svmf - l_vmf)`; resamples come from the
/// fitted null and both models are refitted from scratch on each, exactly as
/// on the observed data. The p-value is `(1 + #{T_b >= T}) / (B' + 1)` over
/// the `B'` successful resamples.
pub fn bootstrap_lrt(data: &Dataset, config: &FitConfig, b: usize, seed: u64) -> Result<BootstrapReport> {
    check_b(b)?;
    let cfg = FitConfig {
        start: None,
        ..config.clone()
    };
    let stat = |d: &Dataset| -> Result<(f64, FitResult)> {
        let v = fit_vmf(d, &cfg)?;
        let s = fit_svmf(d, &cfg)?;
        Ok((2.0 * (s.loglik - v.loglik), v))
    };
    let (observed, null) = stat(data)?;
    let null = null.state();
    let slots: Vec<std::result::Result<f64, String>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64 + 1);
            let d = simulate_like(&mut rng, &null, ErrorModel::Vmf, data).map_err(|e| e.to_string())?;
            let v = fit_vmf(&d, &cfg).map_err(|e| e.to_string()).and_then(refit_ok)?;
            let s = fit_svmf(&d, &cfg).map_err(|e| e.to_string()).and_then(refit_ok)?;
            Ok(2.0 * (s.loglik - v.loglik))
        })
        .collect();
    let mut report = BootstrapReport::new("lrt".into(), observed, b, seed, slots);
    report.p_value = Some(add_one_p_value(&report.resamples, observed));
    Ok(report)
}

/// Percentile intervals for the free scales `a_2..a_p` of a scaled fit, from
/// `b` datasets simulated at the fitted parameters and refitted warm.
/// Intervals are omitted when fewer than 50 resamples succeed.
pub fn bootstrap_ci_scales(
    fit: &FitResult,
    data: &Dataset,
    config: &FitConfig,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<BootstrapReport>> {
    check_b(b)?;
    if fit.model != ErrorModel::Svmf {
        return Err(Error::InvalidParameter("scale intervals need a scaled von Mises-Fisher fit".into()));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidParameter(format!("level = {level} must lie in [0, 1)")));
    }
    let truth = fit.state();
    let cfg = FitConfig {
        model: ErrorModel::Svmf,
        start: Some(truth.clone()),
        n_starts: 1,
        ..config.clone()
    };
    let slots: Vec<std::result::Result<Vec<f64>, String>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64 + 1);
            let d = simulate_like(&mut rng, &truth, ErrorModel::Svmf, data).map_err(|e| e.to_string())?;
            let f = fit_svmf(&d, &cfg).map_err(|e| e.to_string()).and_then(refit_ok)?;
            Ok(f.error.scales().to_vec())
        })
        .collect();
    let scales = fit.error.scales();
    Ok((1..scales.len())
        .map(|j| {
            let col = slots.iter().map(|s| s.as_ref().map(|v| v[j]).map_err(Clone::clone)).collect();
            let mut r = BootstrapReport::new(format!("a{}", j + 1), scales[j], b, seed, col);
            if r.resamples.len() >= MIN_INTERVAL_RESAMPLES {
                let mut v = r.resamples.clone();
                v.sort_by(f64::total_cmp);
                r.interval = Some(Interval {
                    level,
                    lower: quantile(&v, (1.0 - level) / 2.0),
                    upper: quantile(&v, (1.0 + level) / 2.0),
                    method: "percentile".into(),
                });
            }
            r
        })
        .collect())
}

fn add_one_p_value(resamples: &[f64], observed: f64) -> f64 {
    let exceed = resamples.iter().filter(|t| **t >= observed).count();
    (1 + exceed) as f64 / (resamples.len() + 1) as f64
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
