//! Seeded samplers for the von Mises-Fisher and scaled von Mises-Fisher
//! distributions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::density::SvmfParams;
use super::frame::OrientationFrame;
use crate::error::{Error, Result};
use crate::geometry::householder;

/// One draw from `vMF(e1, kappa)` on `S^{p-1}` by Wood's rejection scheme.
pub fn vmf_e1_draw<R: Rng + ?Sized>(rng: &mut R, p: usize, kappa: f64) -> DVector<f64> {
    let m = (p - 1) as f64;
    let b = m / (2.0 * kappa + (4.0 * kappa * kappa + m * m).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m * (1.0 - x0 * x0).ln();
    let beta = Beta::new(m / 2.0, m / 2.0).expect("valid beta parameters");
    let w = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + m * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    let mut v = DVector::from_fn(p - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    v /= n;
    let s = (1.0 - w * w).max(0.0).sqrt();
    let mut out = DVector::zeros(p);
    out[0] = w;
    out.rows_mut(1, p - 1).copy_from(&(v * s));
    out
}

/// Reflection swapping `e1` and `mu`; the vMF law is invariant under any
/// orthogonal map fixing `mu`, so a reflection is enough.
fn e1_to(mu: &DVector<f64>) -> DMatrix<f64> {
    let p = mu.len();
    let mut e1 = DVector::zeros(p);
    e1[0] = 1.0;
    let d = &e1 - mu;
    match householder(&d) {
        Ok(h) => h,
        Err(_) => DMatrix::identity(p, p),
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must be finite and >= 0")));
    }
    Ok(())
}

/// `n` draws from `vMF(mu, kappa)` using the caller's generator.
pub fn sample_vmf_with<R: Rng + ?Sized>(rng: &mut R, mu: &DVector<f64>, kappa: f64, n: usize) -> Result<Vec<DVector<f64>>> {
    check_kappa(kappa)?;
    let rot = e1_to(mu);
    Ok((0..n).map(|_| &rot * vmf_e1_draw(rng, mu.len(), kappa)).collect())
}

/// `n` draws from `vMF(mu, kappa)`, deterministic in `seed`.
pub fn sample_vmf(mu: &DVector<f64>, kappa: f64, n: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    sample_vmf_with(&mut ChaCha8Rng::seed_from_u64(seed), mu, kappa, n)
}

/// One scaled von Mises-Fisher draw: `z ~ vMF(e1, kappa)` in frame
/// coordinates, scaled axis-wise by `a_j`, renormalized, and rotated into
/// the frame.
pub fn svmf_draw<R: Rng + ?Sized>(rng: &mut R, frame: &OrientationFrame, params: &SvmfParams) -> DVector<f64> {
    let p = frame.dim();
    let mut z = vmf_e1_draw(rng, p, params.kappa());
    for (zj, a) in z.iter_mut().zip(params.scales()) {
        *zj *= a;
    }
    let n = z.norm();
    frame.matrix() * (z / n)
}

/// `n` draws from the scaled von Mises-Fisher distribution using the caller's generator.
pub fn sample_svmf_with<R: Rng + ?Sized>(
    rng: &mut R,
    frame: &OrientationFrame,
    params: &SvmfParams,
    n: usize,
) -> Result<Vec<DVector<f64>>> {
    if params.dim() != frame.dim() {
        return Err(Error::Dimension("frame and scales disagree in p".into()));
    }
    Ok((0..n).map(|_| svmf_draw(rng, frame, params)).collect())
}

/// `n` draws from the scaled von Mises-Fisher distribution, deterministic in `seed`.
pub fn sample_svmf(frame: &OrientationFrame, params: &SvmfParams, n: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    sample_svmf_with(&mut ChaCha8Rng::seed_from_u64(seed), frame, params, n)
}
