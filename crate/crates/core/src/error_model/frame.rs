//! Orientation frames and their parallel transport from a base location.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_orthonormal_columns, tangent_basis, transport_apply, transport_matrix};
use crate::linalg::{from_rows, to_rows};

/// An orthonormal basis `{mu, gamma_2, ..., gamma_p}`, stored as the
/// columns of a `p x p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationFrame(DMatrix<f64>);

impl OrientationFrame {
    pub fn new(axes: DMatrix<f64>) -> Result<Self> {
        if !axes.is_square() || axes.nrows() < 2 {
            return Err(Error::Dimension("frame must be p x p with p >= 2".into()));
        }
        check_orthonormal_columns(&axes, 1e-10, "orientation frame")?;
        Ok(Self(axes))
    }

    pub fn from_parts(mu: &DVector<f64>, gammas: &[DVector<f64>]) -> Result<Self> {
        let mut cols = vec![mu.clone()];
        cols.extend_from_slice(gammas);
        Self::new(DMatrix::from_columns(&cols))
    }

    /// Any frame with first axis `mu`.
    pub fn around(mu: &DVector<f64>) -> Result<Self> {
        let mut m = DMatrix::zeros(mu.len(), mu.len());
        m.set_column(0, mu);
        m.columns_mut(1, mu.len() - 1).copy_from(&tangent_basis(mu)?);
        Self::new(m)
    }

    pub(crate) fn from_matrix_unchecked(axes: DMatrix<f64>) -> Self {
        Self(axes)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn mu(&self) -> DVector<f64> {
        self.0.column(0).into_owned()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Base location `gamma01` and base axes `gamma02..gamma0p` (columns of a
/// `p x (p-1)` matrix) from which frames are transported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BaseRepr", into = "BaseRepr")]
pub struct TransportBase {
    gamma01: DVector<f64>,
    axes: DMatrix<f64>,
}

impl TransportBase {
    pub fn new(gamma01: DVector<f64>, axes: DMatrix<f64>) -> Result<Self> {
        let p = gamma01.len();
        if axes.nrows() != p || axes.ncols() + 1 != p {
            return Err(Error::Dimension(format!("base axes must be {p} x {}", p.saturating_sub(1))));
        }
        let mut all = DMatrix::zeros(p, p);
        all.set_column(0, &gamma01);
        all.columns_mut(1, p - 1).copy_from(&axes);
        check_orthonormal_columns(&all, 1e-10, "transport base")?;
        Ok(Self { gamma01, axes })
    }

    /// Base at `gamma01` with an arbitrary deterministic choice of axes.
    pub fn canonical(gamma01: DVector<f64>) -> Result<Self> {
        let axes = tangent_basis(&gamma01)?;
        Self::new(gamma01, axes)
    }

    pub fn gamma01(&self) -> &DVector<f64> {
        &self.gamma01
    }

    pub fn axes(&self) -> &DMatrix<f64> {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.gamma01.len()
    }
}

#[derive(Serialize, Deserialize)]
struct BaseRepr {
    gamma01: Vec<f64>,
    axes: Vec<Vec<f64>>,
}

impl From<TransportBase> for BaseRepr {
    fn from(b: TransportBase) -> Self {
        Self {
            gamma01: b.gamma01.as_slice().to_vec(),
            axes: to_rows(&b.axes),
        }
    }
}

impl TryFrom<BaseRepr> for TransportBase {
    type Error = Error;
    fn try_from(r: BaseRepr) -> Result<Self> {
        let p = r.gamma01.len();
        let axes = from_rows(&r.axes, p.saturating_sub(1))?;
        TransportBase::new(DVector::from_vec(r.gamma01), axes)
    }
}

/// The frame `(mu_x, R gamma02, ..., R gamma0p)` with `R = R_{gamma01, mu_x}`.
pub fn axes_at(mu_x: &DVector<f64>, base: &TransportBase) -> Result<OrientationFrame> {
    let p = base.dim();
    if mu_x.len() != p {
        return Err(Error::Dimension("mean and base disagree in p".into()));
    }
    let r = transport_matrix(&base.gamma01, mu_x)?;
    let mut m = DMatrix::zeros(p, p);
    m.set_column(0, mu_x);
    m.columns_mut(1, p - 1).copy_from(&(r * &base.axes));
    Ok(OrientationFrame::from_matrix_unchecked(m))
}

/// `v = R_{gamma01, mu}' (I - mu mu') y`, a tangent vector at `gamma01`.
pub fn rotated_residual(y: &DVector<f64>, mu_x: &DVector<f64>, gamma01: &DVector<f64>) -> Result<DVector<f64>> {
    let tangent = y - mu_x * mu_x.dot(y);
    // R_{a,b} is symmetric
    transport_apply(gamma01, mu_x, &tangent)
}
