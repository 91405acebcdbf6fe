//! The scaled Mobius mean link
//! `mu(x) = B0 S^{-1}(Bs S(Rs' x_s) + Be Re' x_e)`
//! in its closed form, together with its special cases and the
//! constrained reparameterization used by the optimizer.

mod reparam;
mod special;

pub use reparam::{
    commutator_norm, commutator_residual, from_reparam, link_eval_reparam, proj_constraint, to_reparam,
    Recovered, ReparamLink,
};
pub use special::{
    angle_of, compose_links, downs_link, downs_params, fisher_lee_link, fisher_lee_params,
    hybrid_link, hybrid_params, mobius_link_form, MobiusLinkForm,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_orthonormal_columns, StiefelMatrix};
use crate::linalg::{from_rows, to_rows};

/// Unit-norm tolerance for spherical covariates.
pub const COVARIATE_UNIT_TOL: f64 = 1e-8;
/// Max-norm distance of `x_s` to `-r_s1` treated as the pole.
pub const LINK_POLE_TOL: f64 = 1e-12;

/// Dimensions `(p, q_s, q_e)` of a link; a zero `q` means the block is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkDims {
    pub p: usize,
    pub q_s: usize,
    pub q_e: usize,
}

impl LinkDims {
    pub fn new(p: usize, q_s: usize, q_e: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::Dimension(format!("response dimension p = {p} < 2")));
        }
        if q_s == 0 && q_e == 0 {
            return Err(Error::Dimension("at least one covariate block is required".into()));
        }
        if q_s > 0 && q_s < p {
            return Err(Error::Dimension(format!(
                "spherical covariates need q_s >= p, got q_s = {q_s}, p = {p}"
            )));
        }
        if q_e > 0 && q_e + 1 < p {
            return Err(Error::Dimension(format!(
                "Euclidean covariates need q_e >= p - 1, got q_e = {q_e}, p = {p}"
            )));
        }
        Ok(Self { p, q_s, q_e })
    }
}

/// One covariate vector `x = (x_e, x_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateCase {
    pub xe: Option<DVector<f64>>,
    pub xs: Option<DVector<f64>>,
}

impl CovariateCase {
    pub fn new(xe: Option<DVector<f64>>, xs: Option<DVector<f64>>) -> Result<Self> {
        if xe.is_none() && xs.is_none() {
            return Err(Error::Dimension("covariate case has no blocks".into()));
        }
        if let Some(s) = &xs {
            let n = s.norm();
            if !((n - 1.0).abs() <= COVARIATE_UNIT_TOL) {
                return Err(Error::Domain(format!("spherical covariate has norm {n}")));
            }
        }
        Ok(Self { xe, xs })
    }

    pub fn spherical(xs: DVector<f64>) -> Result<Self> {
        Self::new(None, Some(xs))
    }

    pub fn euclidean(xe: DVector<f64>) -> Result<Self> {
        Self::new(Some(xe), None)
    }

    pub(crate) fn check(&self, dims: &LinkDims) -> Result<()> {
        match (&self.xs, dims.q_s) {
            (None, 0) => {}
            (Some(s), q) if s.len() == q => {}
            (Some(s), q) => {
                return Err(Error::Dimension(format!(
                    "spherical covariate has length {}, link expects {q}",
                    s.len()
                )))
            }
            (None, q) => {
                return Err(Error::Dimension(format!(
                    "link expects a spherical covariate of length {q}"
                )))
            }
        }
        match (&self.xe, dims.q_e) {
            (None, 0) => Ok(()),
            (Some(e), q) if e.len() == q => Ok(()),
            (Some(e), q) => Err(Error::Dimension(format!(
                "Euclidean covariate has length {}, link expects {q}",
                e.len()
            ))),
            (None, q) => Err(Error::Dimension(format!(
                "link expects a Euclidean covariate of length {q}"
            ))),
        }
    }
}

/// Natural link parameters `(B0, Bs, Be, Rs, Re)`.
///
/// `bs` and `be` hold the diagonals `beta_{s2..sp}` and `beta_{e2..ep}`;
/// the diagonal of an absent block is stored as zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinkParamsRepr", into = "LinkParamsRepr")]
pub struct LinkParams {
    dims: LinkDims,
    b0: DMatrix<f64>,
    bs: DVector<f64>,
    be: DVector<f64>,
    rs: Option<DMatrix<f64>>,
    re: Option<DMatrix<f64>>,
}

impl LinkParams {
    /// Validates all invariants, including the ordering
    /// `bs_j^2 + be_j^2` non-increasing in `j`.
    pub fn new(
        b0: DMatrix<f64>,
        bs: Vec<f64>,
        be: Vec<f64>,
        rs: Option<DMatrix<f64>>,
        re: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let out = Self::unordered(b0, bs, be, rs, re)?;
        let w = out.scale_weights();
        for j in 1..w.len() {
            if w[j] > w[j - 1] + 1e-10 * w[j - 1].max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "scales must satisfy beta_s^2 + beta_e^2 non-increasing; position {} has {} > {}",
                    j + 2,
                    w[j],
                    w[j - 1]
                )));
            }
        }
        Ok(out)
    }

    /// Like [`LinkParams::new`], but first relabels the axes so the ordering
    /// holds. Relabeling does not change the link function.
    pub fn sorted(
        b0: DMatrix<f64>,
        bs: Vec<f64>,
        be: Vec<f64>,
        rs: Option<DMatrix<f64>>,
        re: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let mut out = Self::unordered(b0, bs, be, rs, re)?;
        out.sort_axes();
        Self::new(out.b0, out.bs.as_slice().to_vec(), out.be.as_slice().to_vec(), out.rs, out.re)
    }

    fn unordered(
        b0: DMatrix<f64>,
        bs: Vec<f64>,
        be: Vec<f64>,
        rs: Option<DMatrix<f64>>,
        re: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let p = b0.nrows();
        if !b0.is_square() || p < 2 {
            return Err(Error::Dimension("B0 must be p x p with p >= 2".into()));
        }
        check_orthonormal_columns(&b0, 1e-10, "B0")?;
        let det = b0.determinant();
        if (det - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("det(B0) = {det}, expected +1")));
        }
        let q_s = rs.as_ref().map_or(0, |m| m.nrows());
        let q_e = re.as_ref().map_or(0, |m| m.nrows());
        let dims = LinkDims::new(p, q_s, q_e)?;
        let bs = block_scales(bs, rs.is_some(), p, "Bs")?;
        let be = block_scales(be, re.is_some(), p, "Be")?;
        if let Some(m) = &rs {
            if m.ncols() != p {
                return Err(Error::Dimension(format!("Rs must be {q_s} x {p}")));
            }
            StiefelMatrix::new(m.clone())?;
        }
        if let Some(m) = &re {
            if m.ncols() != p - 1 {
                return Err(Error::Dimension(format!("Re must be {q_e} x {}", p - 1)));
            }
            StiefelMatrix::new(m.clone())?;
        }
        Ok(Self {
            dims,
            b0,
            bs,
            be,
            rs,
            re,
        })
    }

    fn sort_axes(&mut self) {
        let p = self.dims.p;
        let w = self.scale_weights();
        let mut order: Vec<usize> = (0..p - 1).collect();
        order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
        let b0 = self.b0.clone();
        let bs = self.bs.clone();
        let be = self.be.clone();
        for (dst, &src) in order.iter().enumerate() {
            self.b0.set_column(dst + 1, &b0.column(src + 1));
            self.bs[dst] = bs[src];
            self.be[dst] = be[src];
        }
        if let Some(rs) = &mut self.rs {
            let orig = rs.clone();
            for (dst, &src) in order.iter().enumerate() {
                rs.set_column(dst + 1, &orig.column(src + 1));
            }
        }
        if let Some(re) = &mut self.re {
            let orig = re.clone();
            for (dst, &src) in order.iter().enumerate() {
                re.set_column(dst, &orig.column(src));
            }
        }
        if self.b0.determinant() < 0.0 {
            self.flip_axis(p - 2);
        }
    }

    /// Negates `b0j` together with `r_sj` and `r_e,j-1` (`j = axis + 1`),
    /// which leaves the link unchanged.
    fn flip_axis(&mut self, axis: usize) {
        self.b0.column_mut(axis + 1).neg_mut();
        if let Some(rs) = &mut self.rs {
            rs.column_mut(axis + 1).neg_mut();
        }
        if let Some(re) = &mut self.re {
            re.column_mut(axis).neg_mut();
        }
    }

    pub fn dims(&self) -> LinkDims {
        self.dims
    }

    pub fn b0(&self) -> &DMatrix<f64> {
        &self.b0
    }

    /// The reference direction `b01`.
    pub fn b01(&self) -> DVector<f64> {
        self.b0.column(0).into_owned()
    }

    pub fn bs(&self) -> &DVector<f64> {
        &self.bs
    }

    pub fn be(&self) -> &DVector<f64> {
        &self.be
    }

    pub fn rs(&self) -> Option<&DMatrix<f64>> {
        self.rs.as_ref()
    }

    pub fn re(&self) -> Option<&DMatrix<f64>> {
        self.re.as_ref()
    }

    pub fn rs1(&self) -> Option<DVector<f64>> {
        self.rs.as_ref().map(|m| m.column(0).into_owned())
    }

    /// `beta_sj^2 + beta_ej^2` for `j = 2..p`.
    pub fn scale_weights(&self) -> Vec<f64> {
        self.bs
            .iter()
            .zip(self.be.iter())
            .map(|(s, e)| s * s + e * e)
            .collect()
    }

    fn spherical_scales_vanish(&self) -> bool {
        self.bs.iter().all(|&b| b == 0.0)
    }
}

fn block_scales(v: Vec<f64>, present: bool, p: usize, name: &str) -> Result<DVector<f64>> {
    if !present {
        if v.iter().any(|&b| b != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be zero when its covariate block is absent"
            )));
        }
        if !v.is_empty() && v.len() != p - 1 {
            return Err(Error::Dimension(format!("{name} needs {} entries", p - 1)));
        }
        return Ok(DVector::zeros(p - 1));
    }
    if v.len() != p - 1 {
        return Err(Error::Dimension(format!(
            "{name} needs {} entries, got {}",
            p - 1,
            v.len()
        )));
    }
    if let Some(b) = v.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} entries must be finite and nonnegative, got {b}"
        )));
    }
    Ok(DVector::from_vec(v))
}

#[derive(Serialize, Deserialize)]
struct LinkParamsRepr {
    p: usize,
    q_s: usize,
    q_e: usize,
    b0: Vec<Vec<f64>>,
    bs: Vec<f64>,
    be: Vec<f64>,
    rs: Option<Vec<Vec<f64>>>,
    re: Option<Vec<Vec<f64>>>,
}

impl From<LinkParams> for LinkParamsRepr {
    fn from(l: LinkParams) -> Self {
        Self {
            p: l.dims.p,
            q_s: l.dims.q_s,
            q_e: l.dims.q_e,
            b0: to_rows(&l.b0),
            bs: if l.rs.is_some() { l.bs.as_slice().to_vec() } else { vec![] },
            be: if l.re.is_some() { l.be.as_slice().to_vec() } else { vec![] },
            rs: l.rs.as_ref().map(to_rows),
            re: l.re.as_ref().map(to_rows),
        }
    }
}

impl TryFrom<LinkParamsRepr> for LinkParams {
    type Error = Error;
    fn try_from(r: LinkParamsRepr) -> Result<Self> {
        let b0 = from_rows(&r.b0, r.p)?;
        let rs = r.rs.as_ref().map(|m| from_rows(m, r.p)).transpose()?;
        let re = r.re.as_ref().map(|m| from_rows(m, r.p.saturating_sub(1))).transpose()?;
        let out = LinkParams::new(b0, r.bs, r.be, rs, re)?;
        if out.dims != (LinkDims { p: r.p, q_s: r.q_s, q_e: r.q_e }) {
            return Err(Error::Dimension("declared dims disagree with matrices".into()));
        }
        Ok(out)
    }
}

fn is_pole(rs1: &DVector<f64>, xs: &DVector<f64>) -> bool {
    let den = 1.0 + rs1.dot(xs);
    den <= 0.0 || (xs + rs1).amax() < LINK_POLE_TOL
}

/// `t(x)`, with `t_j = beta_sj r_sj'x_s/(1 + r_s1'x_s) + beta_ej r_e,j-1'x_e`.
pub fn t_transform(params: &LinkParams, x: &CovariateCase) -> Result<DVector<f64>> {
    x.check(&params.dims)?;
    let p = params.dims.p;
    let mut t = DVector::zeros(p - 1);
    if let (Some(rs), Some(xs)) = (&params.rs, &x.xs) {
        let rs1 = rs.column(0).into_owned();
        if is_pole(&rs1, xs) {
            return Err(Error::Pole("x_s = -r_s1".into()));
        }
        let den = 1.0 + rs1.dot(xs);
        for j in 0..p - 1 {
            t[j] += params.bs[j] * rs.column(j + 1).dot(xs) / den;
        }
    }
    add_euclidean(params, x, &mut t);
    Ok(t)
}

fn add_euclidean(params: &LinkParams, x: &CovariateCase, t: &mut DVector<f64>) {
    if let (Some(re), Some(xe)) = (&params.re, &x.xe) {
        for j in 0..t.len() {
            t[j] += params.be[j] * re.column(j).dot(xe);
        }
    }
}

/// `[(1 - |t|^2) b01 + 2 sum_j t_j b0j] / (1 + |t|^2)`.
pub(crate) fn mean_from_t(b0: &DMatrix<f64>, t: &DVector<f64>) -> DVector<f64> {
    let n2 = t.norm_squared();
    let p = b0.nrows();
    let mut c = DVector::zeros(p);
    if !n2.is_finite() {
        c[0] = -1.0;
    } else {
        c[0] = (1.0 - n2) / (1.0 + n2);
        for j in 0..p - 1 {
            c[j + 1] = 2.0 * t[j] / (1.0 + n2);
        }
    }
    let v = b0 * c;
    let n = v.norm();
    v / n
}

/// The mean direction `mu(x)`.
///
/// At the pole `x_s = -r_s1` this is `-b01` unless all spherical scales are
/// zero, in which case the spherical covariate has no effect.
pub fn link_eval(params: &LinkParams, x: &CovariateCase) -> Result<DVector<f64>> {
    match t_transform(params, x) {
        Ok(t) => Ok(mean_from_t(&params.b0, &t)),
        Err(Error::Pole(_)) => {
            if params.spherical_scales_vanish() {
                let mut t = DVector::zeros(params.dims.p - 1);
                add_euclidean(params, x, &mut t);
                Ok(mean_from_t(&params.b0, &t))
            } else {
                Ok(-params.b01())
            }
        }
        Err(e) => Err(e),
    }
}

/// `k - 1` for the largest `k` with `beta_sk^2 + beta_ek^2 > 0`; the
/// dimension of the image sphere.
pub fn image_dimension(params: &LinkParams) -> usize {
    params
        .scale_weights()
        .iter()
        .rposition(|&w| w > 0.0)
        .map_or(0, |j| j + 1)
}
