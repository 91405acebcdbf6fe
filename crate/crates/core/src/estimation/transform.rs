use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::{mean_direction, Dataset};
use crate::error::{Error, Result};
use crate::error_model::TransportBase;
use crate::geometry::amaral_rotation;
use crate::linalg::{canonical_sign, from_rows, sym_eigen_desc, to_rows};
use crate::link::ReparamLink;

/// The maps applied by [`preliminary_transform`]:
/// `y' = Qy y`, `x_s' = Qs x_s` and `x_e' = Qe (x_e - shift)`.
///
/// `shift` is nonzero only when the Euclidean block contains a constant
/// (intercept) column and there is no spherical block; it then touches the
/// non-constant columns only, so the shift is linear in `x_e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordRepr", into = "RecordRepr")]
pub struct TransformRecord {
    pub response_rotation: DMatrix<f64>,
    pub spherical_rotation: Option<DMatrix<f64>>,
    pub euclidean_shift: Option<DVector<f64>>,
    pub euclidean_rotation: Option<DMatrix<f64>>,
    /// Index and value of the constant column used to absorb the shift.
    pub intercept: Option<(usize, f64)>,
    pub response_rotated: bool,
    pub spherical_rotated: bool,
    pub euclidean_centered: bool,
    pub euclidean_rotated: bool,
}

#[derive(Serialize, Deserialize)]
struct RecordRepr {
    response_rotation: Vec<Vec<f64>>,
    spherical_rotation: Option<Vec<Vec<f64>>>,
    euclidean_shift: Option<Vec<f64>>,
    euclidean_rotation: Option<Vec<Vec<f64>>>,
    intercept_column: Option<usize>,
    intercept_value: Option<f64>,
    response_rotated: bool,
    spherical_rotated: bool,
    euclidean_centered: bool,
    euclidean_rotated: bool,
}

impl From<TransformRecord> for RecordRepr {
    fn from(t: TransformRecord) -> Self {
        Self {
            response_rotation: to_rows(&t.response_rotation),
            spherical_rotation: t.spherical_rotation.as_ref().map(to_rows),
            euclidean_shift: t.euclidean_shift.as_ref().map(|v| v.as_slice().to_vec()),
            euclidean_rotation: t.euclidean_rotation.as_ref().map(to_rows),
            intercept_column: t.intercept.map(|c| c.0),
            intercept_value: t.intercept.map(|c| c.1),
            response_rotated: t.response_rotated,
            spherical_rotated: t.spherical_rotated,
            euclidean_centered: t.euclidean_centered,
            euclidean_rotated: t.euclidean_rotated,
        }
    }
}

impl TryFrom<RecordRepr> for TransformRecord {
    type Error = Error;
    fn try_from(r: RecordRepr) -> Result<Self> {
        let sq = |m: &Vec<Vec<f64>>| from_rows(m, m.len());
        let intercept = match (r.intercept_column, r.intercept_value) {
            (Some(c), Some(v)) => Some((c, v)),
            (None, None) => None,
            _ => return Err(Error::Validation("intercept column and value must appear together".into())),
        };
        Ok(Self {
            response_rotation: sq(&r.response_rotation)?,
            spherical_rotation: r.spherical_rotation.as_ref().map(sq).transpose()?,
            euclidean_shift: r.euclidean_shift.map(DVector::from_vec),
            euclidean_rotation: r.euclidean_rotation.as_ref().map(sq).transpose()?,
            intercept,
            response_rotated: r.response_rotated,
            spherical_rotated: r.spherical_rotated,
            euclidean_centered: r.euclidean_centered,
            euclidean_rotated: r.euclidean_rotated,
        })
    }
}

/// Rotation `Q` with `Q m = e1` and whether it differs from the identity;
/// the identity when `m` is missing.
fn align_to_e1(m: Option<DVector<f64>>, p: usize) -> (DMatrix<f64>, bool) {
    let Some(m) = m else {
        return (DMatrix::identity(p, p), false);
    };
    let mut e1 = DVector::zeros(p);
    e1[0] = 1.0;
    match amaral_rotation(&m, &e1) {
        Ok(q) => {
            let q = q.into_inner().transpose();
            let moved = q != DMatrix::identity(p, p);
            (q, moved)
        }
        Err(_) => {
            // m = -e1: a half-turn in the (e1, e2) plane
            let mut q = DMatrix::identity(p, p);
            q[(0, 0)] = -1.0;
            q[(1, 1)] = -1.0;
            (q, true)
        }
    }
}

fn constant_column(euc: &[DVector<f64>], j: usize) -> Option<f64> {
    let v = euc[0][j];
    let tol = 1e-12 * v.abs().max(1.0);
    (v != 0.0 && euc.iter().all(|x| (x[j] - v).abs() <= tol)).then_some(v)
}

/// Rotates responses and spherical covariates so their mean directions
/// are `e1`, and rotates the non-constant Euclidean columns to principal
/// axes. Those columns are also centered when an intercept column is
/// present and there is no spherical block; with a spherical block,
/// centering would not preserve the model class.
pub fn preliminary_transform(data: &Dataset) -> Result<(Dataset, TransformRecord)> {
    let p = data.p();
    if data.n() < p {
        return Err(Error::Validation(format!("need n >= p = {p} cases, got {}", data.n())));
    }
    let w = data.weights();
    let (qy, ry) = align_to_e1(data.mean_direction(), p);
    let (qs, rs) = match data.spherical() {
        Some(s) => {
            let (q, r) = align_to_e1(mean_direction(s, w), s[0].len());
            (Some(q), r)
        }
        None => (None, false),
    };
    let mut record = TransformRecord {
        response_rotation: qy,
        spherical_rotation: qs,
        euclidean_shift: None,
        euclidean_rotation: None,
        intercept: None,
        response_rotated: ry,
        spherical_rotated: rs,
        euclidean_centered: false,
        euclidean_rotated: false,
    };
    if let Some(euc) = data.euclidean() {
        let q = euc[0].len();
        let consts: Vec<Option<f64>> = (0..q).map(|j| constant_column(euc, j)).collect();
        let free: Vec<usize> = (0..q).filter(|&j| consts[j].is_none()).collect();
        record.intercept = consts.iter().enumerate().find_map(|(j, c)| c.map(|v| (j, v)));
        let total = data.total_weight();
        let mut mean = DVector::zeros(q);
        for (i, x) in euc.iter().enumerate() {
            mean += x * data.weight(i);
        }
        mean /= total;
        for j in 0..q {
            if consts[j].is_some() {
                mean[j] = 0.0;
            }
        }
        let mut rot = DMatrix::identity(q, q);
        if free.len() >= 2 {
            let k = free.len();
            let mut cov = DMatrix::zeros(k, k);
            for (i, x) in euc.iter().enumerate() {
                let d = DVector::from_iterator(k, free.iter().map(|&j| x[j] - mean[j]));
                cov += &d * d.transpose() * data.weight(i);
            }
            let (_, mut v) = sym_eigen_desc(&cov);
            for c in 0..k {
                let mut col = v.column(c).into_owned();
                canonical_sign(&mut col, 1e-12);
                v.set_column(c, &col);
            }
            if v.determinant() < 0.0 {
                v.column_mut(k - 1).neg_mut();
            }
            // x'_free = V' x_free; constant columns stay put
            for (a, &ja) in free.iter().enumerate() {
                for (b, &jb) in free.iter().enumerate() {
                    rot[(ja, jb)] = v[(b, a)];
                }
            }
            if (&rot - DMatrix::identity(q, q)).amax() < 1e-14 {
                rot = DMatrix::identity(q, q);
            }
            record.euclidean_rotated = rot != DMatrix::identity(q, q);
        }
        record.euclidean_rotation = Some(rot);
        if record.intercept.is_some() && data.q_s() == 0 && mean.amax() > 0.0 {
            record.euclidean_shift = Some(mean);
            record.euclidean_centered = true;
        } else {
            record.euclidean_shift = Some(DVector::zeros(q));
        }
    }
    let out = record.apply(data)?;
    Ok((out, record))
}

impl TransformRecord {
    /// `C` with `x_e - shift = C x_e` on data whose intercept column is constant.
    fn centering(&self, q: usize) -> DMatrix<f64> {
        let mut c = DMatrix::identity(q, q);
        if let (Some(shift), Some((j, v))) = (&self.euclidean_shift, self.intercept) {
            for i in 0..q {
                c[(i, j)] -= shift[i] / v;
            }
        }
        c
    }

    fn check_dims(&self, p: usize, q_s: usize, q_e: usize) -> Result<()> {
        let ok = self.response_rotation.nrows() == p
            && self.spherical_rotation.as_ref().map_or(0, |m| m.nrows()) == q_s
            && self.euclidean_rotation.as_ref().map_or(0, |m| m.nrows()) == q_e;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("transform record does not match the data dimensions".into()))
        }
    }

    /// Transforms data into the fitting coordinates.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        self.check_dims(data.p(), data.q_s(), data.q_e())?;
        let unit = |v: DVector<f64>| {
            let n = v.norm();
            v / n
        };
        let y = data.responses().iter().map(|y| unit(&self.response_rotation * y)).collect();
        let s = data.spherical().map(|s| {
            let q = self.spherical_rotation.as_ref().expect("checked");
            s.iter().map(|x| unit(q * x)).collect()
        });
        let e = data.euclidean().map(|e| {
            let q = self.euclidean_rotation.as_ref().expect("checked");
            let shift = self.euclidean_shift.clone().unwrap_or_else(|| DVector::zeros(q.nrows()));
            e.iter().map(|x| q * (x - &shift)).collect()
        });
        Dataset::new(y, s, e, data.weights().map(|w| w.to_vec()))
    }

    /// Maps transformed data back to the original coordinates.
    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        self.check_dims(data.p(), data.q_s(), data.q_e())?;
        let y = data.responses().iter().map(|y| self.response_rotation.tr_mul(y)).collect();
        let s = data
            .spherical()
            .map(|s| s.iter().map(|x| self.spherical_rotation.as_ref().expect("checked").tr_mul(x)).collect());
        let e = data.euclidean().map(|e| {
            let q = self.euclidean_rotation.as_ref().expect("checked");
            let shift = self.euclidean_shift.clone().unwrap_or_else(|| DVector::zeros(q.nrows()));
            e.iter().map(|x| q.tr_mul(x) + &shift).collect()
        });
        Dataset::new(y, s, e, data.weights().map(|w| w.to_vec()))
    }

    /// Expresses a link fitted in transformed coordinates in the original ones.
    pub fn link_to_original(&self, rp: &ReparamLink) -> Result<ReparamLink> {
        let d = rp.dims();
        self.check_dims(d.p, d.q_s, d.q_e)?;
        let qy = &self.response_rotation;
        let b01 = qy.tr_mul(rp.b01());
        let mut omega = DMatrix::zeros(d.p, d.q_s + d.q_e);
        let rs1 = match (&self.spherical_rotation, rp.rs1()) {
            (Some(qs), Some(r)) => {
                omega.columns_mut(0, d.q_s).copy_from(&(qy.transpose() * rp.omega_s() * qs));
                Some(qs.tr_mul(r))
            }
            _ => None,
        };
        if let Some(qe) = &self.euclidean_rotation {
            let c = self.centering(d.q_e);
            omega.columns_mut(d.q_s, d.q_e).copy_from(&(qy.transpose() * rp.omega_e() * qe * c));
        }
        ReparamLink::new(b01, rs1, omega, d.q_s)
    }

    /// Expresses a link in original coordinates in the transformed ones.
    pub fn link_to_transformed(&self, rp: &ReparamLink) -> Result<ReparamLink> {
        let d = rp.dims();
        self.check_dims(d.p, d.q_s, d.q_e)?;
        let qy = &self.response_rotation;
        let b01 = qy * rp.b01();
        let mut omega = DMatrix::zeros(d.p, d.q_s + d.q_e);
        let rs1 = match (&self.spherical_rotation, rp.rs1()) {
            (Some(qs), Some(r)) => {
                omega.columns_mut(0, d.q_s).copy_from(&(qy * rp.omega_s() * qs.transpose()));
                Some(qs * r)
            }
            _ => None,
        };
        if let Some(qe) = &self.euclidean_rotation {
            let c_inv = self
                .centering(d.q_e)
                .try_inverse()
                .ok_or_else(|| Error::Degenerate("centering map is singular".into()))?;
            omega.columns_mut(d.q_s, d.q_e).copy_from(&(qy * rp.omega_e() * c_inv * qe.transpose()));
        }
        ReparamLink::new(b01, rs1, omega, d.q_s)
    }

    pub fn base_to_original(&self, base: &TransportBase) -> Result<TransportBase> {
        let q = &self.response_rotation;
        TransportBase::new(q.tr_mul(base.gamma01()), q.transpose() * base.axes())
    }

    pub fn base_to_transformed(&self, base: &TransportBase) -> Result<TransportBase> {
        let q = &self.response_rotation;
        TransportBase::new(q * base.gamma01(), q * base.axes())
    }

    /// Whether every map is the identity.
    pub fn is_identity(&self) -> bool {
        !(self.response_rotated || self.spherical_rotated || self.euclidean_centered || self.euclidean_rotated)
    }
}
