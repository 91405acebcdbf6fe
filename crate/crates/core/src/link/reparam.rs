//! The constrained parameterization `(b01, r_s1, Omega)` with
//! `Omega = B0_{-1} (Bs R_{s,-1}', Be Re')`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CovariateCase, LinkDims, LinkParams, LINK_POLE_TOL};
use crate::error::{Error, Result};
use crate::geometry::{gram_schmidt, tangent_basis};
use crate::linalg::{canonical_sign, from_rows, sym_eigen_desc, to_rows};

/// Rejection threshold for constraint residuals on input to [`from_reparam`].
pub const REPARAM_CONSTRAINT_TOL: f64 = 1e-6;
/// Relative tolerance for declaring two singular values equal.
pub const REPEATED_SV_TOL: f64 = 1e-8;
/// Singular values below this fraction of the largest are zero.
pub const ZERO_SV_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReparamRepr", into = "ReparamRepr")]
pub struct ReparamLink {
    dims: LinkDims,
    b01: DVector<f64>,
    rs1: Option<DVector<f64>>,
    omega: DMatrix<f64>,
}

impl ReparamLink {
    /// Builds a reparameterized link, rejecting constraint residuals above
    /// [`REPARAM_CONSTRAINT_TOL`].
    pub fn new(b01: DVector<f64>, rs1: Option<DVector<f64>>, omega: DMatrix<f64>, q_s: usize) -> Result<Self> {
        let out = Self::unchecked(b01, rs1, omega, q_s)?;
        let (r1, r2, r3) = out.constraint_residuals();
        let scale = out.omega.norm().max(1.0);
        for (what, r, tol) in [
            ("b01'Omega = 0", r1, REPARAM_CONSTRAINT_TOL * scale),
            ("Omega I_s r_s1 = 0", r2, REPARAM_CONSTRAINT_TOL * scale),
            ("commutator = 0", r3, REPARAM_CONSTRAINT_TOL * scale.powi(4)),
        ] {
            if !(r <= tol) {
                return Err(Error::Constraint {
                    what: what.into(),
                    residual: r,
                    tolerance: tol,
                });
            }
        }
        Ok(out)
    }

    /// Checks shapes and unit norms only.
    pub(crate) fn unchecked(
        b01: DVector<f64>,
        rs1: Option<DVector<f64>>,
        omega: DMatrix<f64>,
        q_s: usize,
    ) -> Result<Self> {
        let p = b01.len();
        let q = omega.ncols();
        if omega.nrows() != p || q < q_s {
            return Err(Error::Dimension(format!(
                "Omega is {}x{q}, expected {p} rows and at least {q_s} columns",
                omega.nrows()
            )));
        }
        let dims = LinkDims::new(p, q_s, q - q_s)?;
        if (b01.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Domain("b01 must be a unit vector".into()));
        }
        match (&rs1, q_s) {
            (None, 0) => {}
            (Some(r), q) if r.len() == q && (r.norm() - 1.0).abs() <= 1e-10 => {}
            _ => {
                return Err(Error::Domain(format!(
                    "r_s1 must be a unit vector of length {q_s}"
                )))
            }
        }
        Ok(Self { dims, b01, rs1, omega })
    }

    pub fn dims(&self) -> LinkDims {
        self.dims
    }

    pub fn b01(&self) -> &DVector<f64> {
        &self.b01
    }

    pub fn rs1(&self) -> Option<&DVector<f64>> {
        self.rs1.as_ref()
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// `Omega I_s`, the spherical block (`p x q_s`).
    pub fn omega_s(&self) -> DMatrix<f64> {
        self.omega.columns(0, self.dims.q_s).into_owned()
    }

    /// `Omega I_e`, the Euclidean block (`p x q_e`).
    pub fn omega_e(&self) -> DMatrix<f64> {
        self.omega.columns(self.dims.q_s, self.dims.q_e).into_owned()
    }

    /// Max-abs residuals of `b01'Omega = 0` and `Omega I_s r_s1 = 0`, and
    /// the Frobenius norm of the commutator.
    pub fn constraint_residuals(&self) -> (f64, f64, f64) {
        let r1 = (self.b01.transpose() * &self.omega).amax();
        let r2 = match &self.rs1 {
            Some(r) => (self.omega_s() * r).amax(),
            None => 0.0,
        };
        (r1, r2, commutator_residual(self))
    }
}

#[derive(Serialize, Deserialize)]
struct ReparamRepr {
    p: usize,
    q_s: usize,
    q_e: usize,
    b01: Vec<f64>,
    rs1: Option<Vec<f64>>,
    omega: Vec<Vec<f64>>,
}

impl From<ReparamLink> for ReparamRepr {
    fn from(r: ReparamLink) -> Self {
        Self {
            p: r.dims.p,
            q_s: r.dims.q_s,
            q_e: r.dims.q_e,
            b01: r.b01.as_slice().to_vec(),
            rs1: r.rs1.as_ref().map(|v| v.as_slice().to_vec()),
            omega: to_rows(&r.omega),
        }
    }
}

impl TryFrom<ReparamRepr> for ReparamLink {
    type Error = Error;
    fn try_from(r: ReparamRepr) -> Result<Self> {
        let omega = from_rows(&r.omega, r.q_s + r.q_e)?;
        ReparamLink::new(
            DVector::from_vec(r.b01),
            r.rs1.map(DVector::from_vec),
            omega,
            r.q_s,
        )
    }
}

/// `Omega = B0_{-1} (Bs R_{s,-1}', Be Re')`.
pub fn to_reparam(params: &LinkParams) -> ReparamLink {
    let d = params.dims();
    let p = d.p;
    let b0m = params.b0().columns(1, p - 1);
    let mut omega = DMatrix::zeros(p, d.q_s + d.q_e);
    if let Some(rs) = params.rs() {
        let block = DMatrix::from_diagonal(params.bs()) * rs.columns(1, p - 1).transpose();
        omega.columns_mut(0, d.q_s).copy_from(&(b0m * block));
    }
    if let Some(re) = params.re() {
        let block = DMatrix::from_diagonal(params.be()) * re.transpose();
        omega.columns_mut(d.q_s, d.q_e).copy_from(&(b0m * block));
    }
    ReparamLink {
        dims: d,
        b01: params.b01(),
        rs1: params.rs1(),
        omega,
    }
}

/// `t~ = Omega (I_s x_s/(1 + r_s1'x_s) + I_e x_e)`, or `None` at the pole.
pub(crate) fn t_tilde(rp: &ReparamLink, x: &CovariateCase) -> Result<Option<DVector<f64>>> {
    x.check(&rp.dims)?;
    let d = rp.dims;
    let mut z = DVector::zeros(d.q_s + d.q_e);
    if let (Some(r), Some(xs)) = (&rp.rs1, &x.xs) {
        let den = 1.0 + r.dot(xs);
        if den <= 0.0 || (xs + r).amax() < LINK_POLE_TOL {
            return Ok(None);
        }
        z.rows_mut(0, d.q_s).copy_from(&(xs / den));
    }
    if let Some(xe) = &x.xe {
        z.rows_mut(d.q_s, d.q_e).copy_from(xe);
    }
    Ok(Some(&rp.omega * z))
}

/// `mu(x) = [(1 - |t~|^2) b01 + 2 t~]/(1 + |t~|^2)`.
pub fn link_eval_reparam(rp: &ReparamLink, x: &CovariateCase) -> Result<DVector<f64>> {
    let t = match t_tilde(rp, x)? {
        Some(t) => t,
        None => {
            if rp.omega_s().iter().any(|&w| w != 0.0) {
                return Ok(-&rp.b01);
            }
            let xe = x.xe.clone().unwrap_or_else(|| DVector::zeros(0));
            rp.omega_e() * xe
        }
    };
    let n2 = t.norm_squared();
    if !n2.is_finite() {
        return Ok(-&rp.b01);
    }
    let v = (&rp.b01 * (1.0 - n2) + t * 2.0) / (1.0 + n2);
    let n = v.norm();
    Ok(v / n)
}

/// `(I - b01 b01') M (I - I_s r_s1 r_s1' I_s')`.
pub fn proj_constraint(m: &DMatrix<f64>, b01: &DVector<f64>, rs1: Option<&DVector<f64>>) -> DMatrix<f64> {
    let bt_m = b01.transpose() * m;
    let mut out = m - b01 * bt_m;
    if let Some(r) = rs1 {
        let q_s = r.len();
        let mr = out.columns(0, q_s) * r;
        let upd = &mr * r.transpose();
        let mut block = out.columns_mut(0, q_s);
        block -= upd;
    }
    out
}

/// Frobenius norm of `[Omega_s Omega_s', Omega_e Omega_e']`; zero when a
/// block is absent.
pub fn commutator_residual(rp: &ReparamLink) -> f64 {
    commutator_norm(&rp.omega, rp.dims.q_s)
}

/// The commutator norm of an arbitrary `p x q` matrix whose first `q_s`
/// columns form the spherical block.
pub fn commutator_norm(omega: &DMatrix<f64>, q_s: usize) -> f64 {
    let q_e = omega.ncols().saturating_sub(q_s);
    if q_s == 0 || q_e == 0 {
        return 0.0;
    }
    let os = omega.columns(0, q_s);
    let oe = omega.columns(q_s, q_e);
    let cs = &os * os.transpose();
    let ce = &oe * oe.transpose();
    (&cs * &ce - &ce * &cs).norm()
}

/// Natural parameters recovered from a reparameterized link.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub params: LinkParams,
    /// Set when two nonzero singular values of `Omega` coincide, in which
    /// case the recovered axes are one of many equivalent choices.
    pub repeated_singular_values: bool,
}

/// Recovers `(B0, Bs, Be, Rs, Re)` from `(b01, r_s1, Omega)`.
///
/// Axes come from the eigenvectors of `Omega Omega'` on the complement of
/// `b01`, refined within clusters of equal eigenvalues by
/// `Omega_s Omega_s'` (the two commute). Axes are ordered by decreasing
/// singular value; each right-singular vector has a positive first nonzero
/// entry, except that the last axis may be negated so that `det B0 = +1`.
pub fn from_reparam(rp: &ReparamLink) -> Result<Recovered> {
    let rp = ReparamLink::new(rp.b01.clone(), rp.rs1.clone(), rp.omega.clone(), rp.dims.q_s)?;
    let d = rp.dims;
    let p = d.p;
    let basis = tangent_basis(&rp.b01)?;
    let os = rp.omega_s();
    let k_all = basis.transpose() * &rp.omega * rp.omega.transpose() * &basis;
    let k_s = basis.transpose() * &os * os.transpose() * &basis;
    let (vals, vecs) = sym_eigen_desc(&k_all);
    let lmax = vals[0].max(0.0);
    let sv: Vec<f64> = vals.iter().map(|l| l.max(0.0).sqrt()).collect();
    let smax = sv[0];

    // refine clusters of equal eigenvalues so the spherical block is diagonal too
    let mut w = vecs.clone();
    let mut repeated = false;
    let mut start = 0;
    while start < p - 1 {
        let mut end = start + 1;
        while end < p - 1 && (vals[start] - vals[end]).abs() <= 2.0 * REPEATED_SV_TOL * lmax {
            end += 1;
        }
        if end - start > 1 {
            if sv[start] > ZERO_SV_TOL * smax {
                repeated = true;
            }
            let sub = vecs.columns(start, end - start).into_owned();
            let (_, rot) = sym_eigen_desc(&(sub.transpose() * &k_s * &sub));
            w.columns_mut(start, end - start).copy_from(&(sub * rot));
        }
        start = end;
    }

    let mut b0 = DMatrix::zeros(p, p);
    b0.set_column(0, &rp.b01);
    let mut bs = vec![0.0; p - 1];
    let mut be = vec![0.0; p - 1];
    let mut rs_cols: Vec<Option<DVector<f64>>> = vec![None; p - 1];
    let mut re_cols: Vec<Option<DVector<f64>>> = vec![None; p - 1];
    for j in 0..p - 1 {
        let mut u = &basis * w.column(j);
        let mut right = rp.omega.transpose() * &u;
        if sv[j] > ZERO_SV_TOL * smax {
            let tol = 1e-12 * right.norm();
            if canonical_sign(&mut right, tol) {
                u.neg_mut();
            }
        } else if canonical_sign(&mut u, 1e-12) {
            right.neg_mut();
        }
        let rs_dir = right.rows(0, d.q_s).into_owned();
        let re_dir = right.rows(d.q_s, d.q_e).into_owned();
        let (ns, ne) = (rs_dir.norm(), re_dir.norm());
        if ns > ZERO_SV_TOL * smax && smax > 0.0 {
            bs[j] = ns;
            rs_cols[j] = Some(rs_dir / ns);
        }
        if ne > ZERO_SV_TOL * smax && smax > 0.0 {
            be[j] = ne;
            re_cols[j] = Some(re_dir / ne);
        }
        b0.set_column(j + 1, &u);
    }

    let mut rs = match &rp.rs1 {
        Some(r1) => {
            let mut cols = vec![Some(r1.clone())];
            cols.extend(rs_cols);
            Some(complete_columns(cols, d.q_s)?)
        }
        None => None,
    };
    let mut re = if d.q_e > 0 { Some(complete_columns(re_cols, d.q_e)?) } else { None };
    if b0.determinant() < 0.0 {
        b0.column_mut(p - 1).neg_mut();
        if let Some(m) = &mut rs {
            m.column_mut(p - 1).neg_mut();
        }
        if let Some(m) = &mut re {
            m.column_mut(p - 2).neg_mut();
        }
    }
    let params = LinkParams::unordered(
        b0,
        if rs.is_some() { bs } else { vec![] },
        if re.is_some() { be } else { vec![] },
        rs,
        re,
    )?;
    Ok(Recovered {
        params,
        repeated_singular_values: repeated,
    })
}

/// Fills missing columns with an orthonormal completion, keeping given
/// columns in place.
fn complete_columns(cols: Vec<Option<DVector<f64>>>, q: usize) -> Result<DMatrix<f64>> {
    let known: Vec<DVector<f64>> = cols.iter().flatten().cloned().collect();
    let full = gram_schmidt(&known, q)?;
    let mut next = known.len();
    let mut out = DMatrix::zeros(q, cols.len());
    let mut k = 0;
    for (j, c) in cols.iter().enumerate() {
        match c {
            Some(_) => {
                out.set_column(j, &full.column(k));
                k += 1;
            }
            None => {
                out.set_column(j, &full.column(next));
                next += 1;
            }
        }
    }
    Ok(out)
}
