//! Densities of the elliptically symmetric family and its von Mises-Fisher
//! and scaled von Mises-Fisher members.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::bessel::vmf_log_norm_const;
use super::frame::OrientationFrame;
use crate::error::{Error, Result};

/// Concentration `kappa` and scales `a_1..a_p` with `prod_{j>=2} a_j = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SvmfRepr", into = "SvmfRepr")]
pub struct SvmfParams {
    kappa: f64,
    scales: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SvmfRepr {
    kappa: f64,
    scales: Vec<f64>,
}

impl From<SvmfParams> for SvmfRepr {
    fn from(s: SvmfParams) -> Self {
        Self {
            kappa: s.kappa,
            scales: s.scales,
        }
    }
}

impl TryFrom<SvmfRepr> for SvmfParams {
    type Error = Error;
    fn try_from(r: SvmfRepr) -> Result<Self> {
        SvmfParams::new(r.kappa, r.scales)
    }
}

impl SvmfParams {
    pub fn new(kappa: f64, scales: Vec<f64>) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be finite and >= 0")));
        }
        if scales.len() < 2 {
            return Err(Error::Dimension("need scales a_1..a_p with p >= 2".into()));
        }
        if let Some(a) = scales.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {a} must be positive")));
        }
        let log_prod: f64 = scales[1..].iter().map(|a| a.ln()).sum();
        if log_prod.abs() > 1e-10 {
            return Err(Error::Constraint {
                what: "prod_{j>=2} a_j = 1".into(),
                residual: log_prod.exp() - 1.0,
                tolerance: 1e-10,
            });
        }
        Ok(Self { kappa, scales })
    }

    /// Isotropic scales `(a1, 1, ..., 1)`: the von Mises-Fisher case.
    pub fn isotropic(kappa: f64, a1: f64, p: usize) -> Result<Self> {
        let mut scales = vec![1.0; p];
        scales[0] = a1;
        Self::new(kappa, scales)
    }

    /// Scales from `p - 2` free logs of `a_2..a_{p-1}`; `log a_p` is minus their sum.
    pub fn from_log_scales(kappa: f64, a1: f64, free: &[f64]) -> Result<Self> {
        let mut scales = vec![a1];
        scales.extend(free.iter().map(|l| l.exp()));
        scales.push((-free.iter().sum::<f64>()).exp());
        Self::new(kappa, scales)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn a1(&self) -> f64 {
        self.scales[0]
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    /// The `p - 2` free log-scales.
    pub fn free_log_scales(&self) -> Vec<f64> {
        let p = self.scales.len();
        self.scales[1..p - 1].iter().map(|a| a.ln()).collect()
    }

    /// Kernel weights `lambda_j = a_j^{-2}`.
    pub fn lambdas(&self) -> Vec<f64> {
        self.scales.iter().map(|a| a.powi(-2)).collect()
    }
}

/// `kappa mu'y - log c_p(kappa)`.
pub fn vmf_log_density(y: &DVector<f64>, mu: &DVector<f64>, kappa: f64) -> f64 {
    kappa * mu.dot(y) - vmf_log_norm_const(y.len(), kappa)
}

/// `J = (y'mu/a_1)^2 + sum_{j>=2} (y'gamma_j/a_j)^2`.
pub fn svmf_j(y: &DVector<f64>, frame: &OrientationFrame, scales: &[f64]) -> f64 {
    let c = frame.matrix().transpose() * y;
    c.iter().zip(scales).map(|(c, a)| (c / a).powi(2)).sum()
}

/// Log-density of the scaled von Mises-Fisher distribution,
/// `-log c_p(kappa) - log a_1 - (p/2) log J + kappa (y'mu/a_1)/sqrt(J)`.
pub fn svmf_log_density(y: &DVector<f64>, frame: &OrientationFrame, params: &SvmfParams) -> Result<f64> {
    let p = frame.dim();
    if y.len() != p || params.dim() != p {
        return Err(Error::Dimension("y, frame and scales disagree in p".into()));
    }
    let c = frame.matrix().transpose() * y;
    let a = &params.scales;
    let j: f64 = c.iter().zip(a).map(|(c, a)| (c / a).powi(2)).sum();
    if !(j > 0.0) {
        return Err(Error::Domain(format!("J = {j} must be positive; is y a unit vector?")));
    }
    Ok(-vmf_log_norm_const(p, params.kappa) - a[0].ln() - 0.5 * p as f64 * j.ln()
        + params.kappa * (c[0] / a[0]) / j.sqrt())
}

/// How the kernel weights `lambda` are constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaConstraint {
    SumZero,
    ProductOne,
    None,
}

/// Density generators `g(u, v)` of the family
/// `c(kappa, lambda)^{-1} g(kappa mu'y, sum_j lambda_j (y'gamma_j)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKernel {
    /// `g(u, v) = exp(u)`.
    VonMisesFisher,
    /// `g(u, v) = v^{-p/2} exp(u sqrt(lambda_1 / v))`.
    ScaledVonMisesFisher,
    /// `g(u, v) = exp(u + v)`; no normalizer is provided.
    Kent,
}

impl FamilyKernel {
    pub fn constraint(&self) -> LambdaConstraint {
        match self {
            FamilyKernel::VonMisesFisher => LambdaConstraint::None,
            FamilyKernel::ScaledVonMisesFisher => LambdaConstraint::ProductOne,
            FamilyKernel::Kent => LambdaConstraint::SumZero,
        }
    }

    pub fn has_normalizer(&self) -> bool {
        !matches!(self, FamilyKernel::Kent)
    }

    /// `log g(u, v)`.
    pub fn log_g(&self, u: f64, v: f64, p: usize, lambda1: f64) -> f64 {
        match self {
            FamilyKernel::VonMisesFisher => u,
            FamilyKernel::ScaledVonMisesFisher => -0.5 * p as f64 * v.ln() + u * (lambda1 / v).sqrt(),
            FamilyKernel::Kent => u + v,
        }
    }

    /// `log c(kappa, lambda)`, when available.
    pub fn log_normalizer(&self, p: usize, kappa: f64, lambda: &[f64]) -> Option<f64> {
        match self {
            FamilyKernel::VonMisesFisher => Some(vmf_log_norm_const(p, kappa)),
            FamilyKernel::ScaledVonMisesFisher => {
                // a_1 = lambda_1^{-1/2}
                Some(vmf_log_norm_const(p, kappa) - 0.5 * lambda[0].ln())
            }
            FamilyKernel::Kent => None,
        }
    }
}

/// `log g(kappa mu'y, sum_j lambda_j (y'gamma_j)^2)`, minus the log
/// normalizer when `normalized` is set.
pub fn family_log_density(
    y: &DVector<f64>,
    frame: &OrientationFrame,
    kernel: FamilyKernel,
    kappa: f64,
    lambda: &[f64],
    normalized: bool,
) -> Result<f64> {
    let p = frame.dim();
    if y.len() != p || lambda.len() != p {
        return Err(Error::Dimension("y, frame and lambda disagree in p".into()));
    }
    let c = frame.matrix().transpose() * y;
    let u = kappa * c[0];
    let v: f64 = c.iter().zip(lambda).map(|(c, l)| l * c * c).sum();
    let g = kernel.log_g(u, v, p, lambda[0]);
    if !normalized {
        return Ok(g);
    }
    match kernel.log_normalizer(p, kappa, lambda) {
        Some(c) => Ok(g - c),
        None => Err(Error::InvalidParameter(format!(
            "{kernel:?} kernel has no normalizing constant; request the unnormalized density"
        ))),
    }
}
