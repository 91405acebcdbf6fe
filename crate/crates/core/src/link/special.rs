//! Circular special cases, the Mobius-sphere form of isotropic links, and
//! composition of links.

use nalgebra::{DMatrix, DVector};

use super::LinkParams;
use crate::error::{Error, Result};
use crate::geometry::{gram_schmidt, mobius_sphere, rotation2, wrap_angle};
use crate::linalg::nearest_orthogonal;

/// Angle in `[-pi, pi)` of a point on the unit circle.
pub fn angle_of(v: &DVector<f64>) -> f64 {
    wrap_angle(v[1].atan2(v[0]))
}

/// Circular link `beta0 + 2 atan(delta beta_s2 tan((theta_x - eta)/2))`.
/// Only the sign of `delta` is used.
pub fn downs_link(theta_x: f64, beta0: f64, eta: f64, delta: f64, beta_s2: f64) -> f64 {
    hybrid_link(theta_x, &[], beta0, eta, delta, beta_s2, &[])
}

/// Circular link with Euclidean covariates, `beta0 + 2 atan(gamma'x_e)`.
pub fn fisher_lee_link(xe: &[f64], beta0: f64, gamma: &[f64]) -> f64 {
    wrap_angle(beta0 + 2.0 * dot(gamma, xe).atan())
}

/// `beta0 + 2 atan(delta beta_s2 tan((theta_x - eta)/2) + gamma'x_e)`.
pub fn hybrid_link(
    theta_x: f64,
    xe: &[f64],
    beta0: f64,
    eta: f64,
    delta: f64,
    beta_s2: f64,
    gamma: &[f64],
) -> f64 {
    let half = wrap_angle(theta_x - eta) / 2.0;
    let lin = dot(gamma, xe);
    // at the pole half = -pi/2 and the spherical term is infinite
    if beta_s2 != 0.0 && (half + std::f64::consts::FRAC_PI_2).abs() < 1e-15 {
        return wrap_angle(beta0 + std::f64::consts::PI);
    }
    let s = delta.signum() * beta_s2 * half.tan();
    wrap_angle(beta0 + 2.0 * (s + lin).atan())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn reflect_rotation(eta: f64, delta: f64) -> DMatrix<f64> {
    let mut rs = rotation2(eta);
    if delta < 0.0 {
        rs.column_mut(1).neg_mut();
    }
    rs
}

fn euclidean_block(gamma: &[f64]) -> Result<(f64, DMatrix<f64>)> {
    if gamma.is_empty() {
        return Err(Error::Dimension("gamma must be nonempty".into()));
    }
    let g = DVector::from_column_slice(gamma);
    let n = g.norm();
    if n > 0.0 {
        Ok((n, DMatrix::from_column_slice(gamma.len(), 1, (g / n).as_slice())))
    } else {
        let mut e = DMatrix::zeros(gamma.len(), 1);
        e[(0, 0)] = 1.0;
        Ok((0.0, e))
    }
}

/// Link parameters realizing [`downs_link`]: `B0 = rot(beta0)`,
/// `Rs = rot(eta) diag(1, delta)`, `Bs = beta_s2`.
pub fn downs_params(beta0: f64, eta: f64, delta: f64, beta_s2: f64) -> Result<LinkParams> {
    LinkParams::new(
        rotation2(beta0),
        vec![beta_s2],
        vec![],
        Some(reflect_rotation(eta, delta)),
        None,
    )
}

/// Link parameters realizing [`fisher_lee_link`]: `Be = |gamma|`, `Re = gamma/|gamma|`.
pub fn fisher_lee_params(beta0: f64, gamma: &[f64]) -> Result<LinkParams> {
    let (be, re) = euclidean_block(gamma)?;
    LinkParams::new(rotation2(beta0), vec![], vec![be], None, Some(re))
}

/// Link parameters realizing [`hybrid_link`].
pub fn hybrid_params(beta0: f64, eta: f64, delta: f64, beta_s2: f64, gamma: &[f64]) -> Result<LinkParams> {
    let (be, re) = euclidean_block(gamma)?;
    LinkParams::new(
        rotation2(beta0),
        vec![beta_s2],
        vec![be],
        Some(reflect_rotation(eta, delta)),
        Some(re),
    )
}

/// An isotropic spherical link written as `x -> M_S(x; r0, phi rs1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusLinkForm {
    pub r0: DMatrix<f64>,
    pub phi: f64,
    pub rs1: DVector<f64>,
}

impl MobiusLinkForm {
    pub fn psi(&self) -> DVector<f64> {
        &self.rs1 * self.phi
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        mobius_sphere(x, &self.r0, &self.psi())
    }
}

fn isotropic_scale(params: &LinkParams) -> Result<f64> {
    let d = params.dims();
    if d.q_e != 0 || d.q_s != d.p {
        return Err(Error::InvalidParameter(
            "Mobius form needs a spherical-only link with q_s = p".into(),
        ));
    }
    let beta = params.bs()[0];
    if params.bs().iter().any(|&b| (b - beta).abs() > 1e-12 * beta.max(1.0)) {
        return Err(Error::InvalidParameter("Mobius form needs Bs = beta I".into()));
    }
    Ok(beta)
}

/// `(B0 Rs', (1 - beta)/(1 + beta), r_s1)` for a link with `Bs = beta I`.
pub fn mobius_link_form(params: &LinkParams) -> Result<MobiusLinkForm> {
    let beta = isotropic_scale(params)?;
    let rs = params.rs().expect("q_s = p > 0");
    Ok(MobiusLinkForm {
        r0: params.b0() * rs.transpose(),
        phi: (1.0 - beta) / (1.0 + beta),
        rs1: rs.column(0).into_owned(),
    })
}

/// A single link equal to `x -> outer(inner(x))`.
///
/// Two cases compose in closed form: the outer link is spherical-only and
/// its `Rs` equals the inner `B0` (scales multiply), or both links are
/// isotropic spherical-only Mobius maps.
pub fn compose_links(inner: &LinkParams, outer: &LinkParams) -> Result<LinkParams> {
    let di = inner.dims();
    let dout = outer.dims();
    if dout.q_e == 0 && dout.q_s == di.p {
        let rs_out = outer.rs().expect("q_s > 0");
        if (rs_out - inner.b0()).amax() <= 1e-10 {
            let bs: Vec<f64> = inner.bs().iter().zip(outer.bs().iter()).map(|(a, b)| a * b).collect();
            let be: Vec<f64> = inner.be().iter().zip(outer.bs().iter()).map(|(a, b)| a * b).collect();
            return LinkParams::sorted(
                outer.b0().clone(),
                if inner.rs().is_some() { bs } else { vec![] },
                if inner.re().is_some() { be } else { vec![] },
                inner.rs().cloned(),
                inner.re().cloned(),
            );
        }
    }
    if let (Ok(b1), Ok(b2)) = (isotropic_scale(inner), isotropic_scale(outer)) {
        if di.p == dout.p {
            if b1 <= 0.0 || b2 <= 0.0 {
                return Err(Error::Degenerate(
                    "isotropic composition needs positive scales".into(),
                ));
            }
            return compose_isotropic(&mobius_link_form(inner)?, &mobius_link_form(outer)?);
        }
    }
    Err(Error::InvalidParameter(
        "links compose in closed form only when outer Rs = inner B0 or both are isotropic".into(),
    ))
}

/// Composes two Mobius maps of the sphere. The composite is again
/// `R~ M_S(x; I, psi~)`; `psi~` is read off the conformal factor of the
/// composite, whose reciprocal is affine on the sphere:
/// `1/lambda(x) = (1 + |psi~|^2 + 2 x'psi~)/(1 - |psi~|^2)`.
fn compose_isotropic(f1: &MobiusLinkForm, f2: &MobiusLinkForm) -> Result<LinkParams> {
    let p = f1.r0.nrows();
    let psi1 = f1.psi();
    let psi2 = f2.psi();
    let conformal = |psi: &DVector<f64>, x: &DVector<f64>| (1.0 - psi.norm_squared()) / (x + psi).norm_squared();
    let composite = |x: &DVector<f64>| -> Result<DVector<f64>> { f2.apply(&f1.apply(x)?) };
    let inv_factor = |x: &DVector<f64>| -> Result<f64> {
        let y = f1.apply(x)?;
        Ok(1.0 / (conformal(&psi2, &y) * conformal(&psi1, x)))
    };
    let mut w = DVector::zeros(p);
    let mut alpha = 0.0;
    for k in 0..p {
        let mut e = DVector::zeros(p);
        e[k] = 1.0;
        let hp = inv_factor(&e)?;
        let hm = inv_factor(&-e)?;
        w[k] = (hp - hm) / 2.0;
        alpha += (hp + hm) / 2.0;
    }
    alpha /= p as f64;
    let s2 = ((alpha - 1.0) / (alpha + 1.0)).max(0.0);
    let psi = w * ((1.0 - s2) / 2.0);
    let s = psi.norm();
    let id = DMatrix::<f64>::identity(p, p);
    let mut r_tilde = DMatrix::zeros(p, p);
    for k in 0..p {
        let e = id.column(k).into_owned();
        let pre = mobius_sphere(&e, &id, &-&psi)?;
        r_tilde.set_column(k, &composite(&pre)?);
    }
    let r_tilde = nearest_orthogonal(&r_tilde);
    let det = r_tilde.determinant();
    let (beta, mut r) = if s < 1e-13 {
        (1.0, DMatrix::identity(p, p))
    } else {
        ((1.0 - s) / (1.0 + s), gram_schmidt(&[&psi / s], p)?)
    };
    if r.determinant() * det < 0.0 {
        r.column_mut(p - 1).neg_mut();
    }
    let b0 = nearest_orthogonal(&(&r_tilde * &r));
    LinkParams::new(b0, vec![beta; p - 1], vec![], Some(r), None)
}

#[cfg(test)]
/// Evaluates a composed pair pointwise; used to validate closed forms.
pub(crate) fn compose_pointwise(inner: &LinkParams, outer: &LinkParams, x: &super::CovariateCase) -> Result<DVector<f64>> {
    let mid = super::link_eval(inner, x)?;
    super::link_eval(outer, &super::CovariateCase::spherical(mid)?)
}
