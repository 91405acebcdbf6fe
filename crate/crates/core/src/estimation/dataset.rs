use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::link::{CovariateCase, LinkDims};

const DATA_UNIT_TOL: f64 = 1e-8;

/// Responses with optional spherical and Euclidean covariates and case weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    responses: Vec<DVector<f64>>,
    sph: Option<Vec<DVector<f64>>>,
    euc: Option<Vec<DVector<f64>>>,
    weights: Option<Vec<f64>>,
}

fn check_units(v: &[DVector<f64>], what: &str) -> Result<usize> {
    let d = v[0].len();
    for (i, x) in v.iter().enumerate() {
        if x.len() != d {
            return Err(Error::Row {
                row: i,
                message: format!("{what} has length {}, expected {d}", x.len()),
            });
        }
        if !x.iter().all(|e| e.is_finite()) || (x.norm() - 1.0).abs() > DATA_UNIT_TOL {
            return Err(Error::Row {
                row: i,
                message: format!("{what} norm {} is not 1", x.norm()),
            });
        }
    }
    Ok(d)
}

impl Dataset {
    pub fn new(
        responses: Vec<DVector<f64>>,
        sph: Option<Vec<DVector<f64>>>,
        euc: Option<Vec<DVector<f64>>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = responses.len();
        if n == 0 {
            return Err(Error::Validation("dataset has no cases".into()));
        }
        check_units(&responses, "response")?;
        if let Some(s) = &sph {
            if s.len() != n {
                return Err(Error::Validation(format!("{} spherical covariates for {n} responses", s.len())));
            }
            check_units(s, "spherical covariate")?;
        }
        if let Some(e) = &euc {
            if e.len() != n {
                return Err(Error::Validation(format!("{} Euclidean covariates for {n} responses", e.len())));
            }
            let d = e[0].len();
            for (i, x) in e.iter().enumerate() {
                if x.len() != d || !x.iter().all(|v| v.is_finite()) {
                    return Err(Error::Row {
                        row: i,
                        message: "Euclidean covariate has wrong length or non-finite entries".into(),
                    });
                }
            }
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return Err(Error::Validation(format!("{} weights for {n} responses", w.len())));
            }
            if let Some(i) = w.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
                return Err(Error::Row {
                    row: i,
                    message: "case weight must be finite and nonnegative".into(),
                });
            }
            if !(w.iter().sum::<f64>() > 0.0) {
                return Err(Error::Validation("case weights sum to zero".into()));
            }
        }
        Ok(Self { responses, sph, euc, weights })
    }

    /// Builds a dataset from per-case covariates; every case must carry the same blocks.
    pub fn from_cases(responses: Vec<DVector<f64>>, cases: &[CovariateCase], weights: Option<Vec<f64>>) -> Result<Self> {
        if cases.len() != responses.len() {
            return Err(Error::Validation(format!("{} covariate cases for {} responses", cases.len(), responses.len())));
        }
        let block = |get: fn(&CovariateCase) -> Option<&DVector<f64>>| -> Result<Option<Vec<DVector<f64>>>> {
            let present = cases.iter().filter(|c| get(c).is_some()).count();
            match present {
                0 => Ok(None),
                k if k == cases.len() => Ok(Some(cases.iter().map(|c| get(c).expect("present").clone()).collect())),
                _ => Err(Error::Validation("covariate blocks differ between cases".into())),
            }
        };
        let sph = block(|c| c.xs.as_ref())?;
        let euc = block(|c| c.xe.as_ref())?;
        Self::new(responses, sph, euc, weights)
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn p(&self) -> usize {
        self.responses[0].len()
    }

    pub fn q_s(&self) -> usize {
        self.sph.as_ref().map_or(0, |s| s[0].len())
    }

    pub fn q_e(&self) -> usize {
        self.euc.as_ref().map_or(0, |e| e[0].len())
    }

    /// Link dimensions implied by the data.
    pub fn dims(&self) -> Result<LinkDims> {
        LinkDims::new(self.p(), self.q_s(), self.q_e())
    }

    pub fn responses(&self) -> &[DVector<f64>] {
        &self.responses
    }

    pub fn spherical(&self) -> Option<&[DVector<f64>]> {
        self.sph.as_deref()
    }

    pub fn euclidean(&self) -> Option<&[DVector<f64>]> {
        self.euc.as_deref()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.as_ref().map_or(self.n() as f64, |w| w.iter().sum())
    }

    /// Covariates of case `i`.
    pub fn case(&self, i: usize) -> CovariateCase {
        CovariateCase {
            xe: self.euc.as_ref().map(|e| e[i].clone()),
            xs: self.sph.as_ref().map(|s| s[i].clone()),
        }
    }

    pub fn cases(&self) -> Vec<CovariateCase> {
        (0..self.n()).map(|i| self.case(i)).collect()
    }

    /// The cases listed in `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let pick = |v: &Vec<DVector<f64>>| idx.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        Self::new(
            pick(&self.responses),
            self.sph.as_ref().map(pick),
            self.euc.as_ref().map(pick),
            self.weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect()),
        )
    }

    /// Same covariates and weights with new responses.
    pub fn with_responses(&self, responses: Vec<DVector<f64>>) -> Result<Self> {
        if responses.len() != self.n() {
            return Err(Error::Validation("response count changed".into()));
        }
        Self::new(responses, self.sph.clone(), self.euc.clone(), self.weights.clone())
    }

    /// Sample mean direction of the responses, or `None` when the resultant vanishes.
    pub fn mean_direction(&self) -> Option<DVector<f64>> {
        mean_direction(&self.responses, self.weights.as_deref())
    }
}

pub(crate) fn mean_direction(v: &[DVector<f64>], w: Option<&[f64]>) -> Option<DVector<f64>> {
    let mut s = DVector::zeros(v[0].len());
    let mut total = 0.0;
    for (i, x) in v.iter().enumerate() {
        let wi = w.map_or(1.0, |w| w[i]);
        s += x * wi;
        total += wi;
    }
    let n = s.norm();
    (n > 1e-10 * total).then(|| s / n)
}
