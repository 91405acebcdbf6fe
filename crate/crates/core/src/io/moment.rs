use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-8;

/// Symmetric 3x3 moment tensor in spherical coordinates (r, theta, phi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTensor {
    pub mrr: f64,
    pub mtt: f64,
    pub mff: f64,
    pub mrt: f64,
    pub mrf: f64,
    pub mtf: f64,
}

impl MomentTensor {
    pub const COLUMNS: [&'static str; 6] = ["Mrr", "Mtt", "Mff", "Mrt", "Mrf", "Mtf"];

    pub fn from_array(m: [f64; 6]) -> Self {
        let [mrr, mtt, mff, mrt, mrf, mtf] = m;
        Self { mrr, mtt, mff, mrt, mrf, mtf }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.mrr, self.mtt, self.mff, self.mrt, self.mrf, self.mtf]
    }

    pub fn trace(&self) -> f64 {
        self.mrr + self.mtt + self.mff
    }

    pub fn frobenius(&self) -> f64 {
        let d = self.mrr.powi(2) + self.mtt.powi(2) + self.mff.powi(2);
        let o = self.mrt.powi(2) + self.mrf.powi(2) + self.mtf.powi(2);
        (d + 2.0 * o).sqrt()
    }

    /// Removes the isotropic part and rescales to unit Frobenius norm.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace() / 3.0;
        let m = Self {
            mrr: self.mrr - t,
            mtt: self.mtt - t,
            mff: self.mff - t,
            ..*self
        };
        let f = m.frobenius();
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Degenerate("moment tensor is isotropic or not finite".into()));
        }
        Ok(Self::from_array(m.to_array().map(|v| v / f)))
    }
}

/// Helmert contrasts of the diagonal and `sqrt 2` times the off-diagonals:
/// an isometry from trace-free unit tensors onto `S^4`.
pub fn mt_to_s4(mt: &MomentTensor) -> Result<DVector<f64>> {
    if mt.trace().abs() > TOLERANCE {
        return Err(Error::Domain(format!("moment tensor trace {} is not zero", mt.trace())));
    }
    if (mt.frobenius() - 1.0).abs() > TOLERANCE {
        return Err(Error::Domain(format!("moment tensor norm {} is not one", mt.frobenius())));
    }
    let (r2, r6) = (2f64.sqrt(), 6f64.sqrt());
    Ok(DVector::from_vec(vec![
        (mt.mrr - mt.mtt) / r2,
        (mt.mrr + mt.mtt - 2.0 * mt.mff) / r6,
        r2 * mt.mrt,
        r2 * mt.mrf,
        r2 * mt.mtf,
    ]))
}

pub fn s4_to_mt(v: &DVector<f64>) -> Result<MomentTensor> {
    if v.len() != 5 {
        return Err(Error::Dimension(format!("expected 5 coordinates, got {}", v.len())));
    }
    let (r2, r6) = (2f64.sqrt(), 6f64.sqrt());
    let a = v[0] / r2;
    let b = v[1] / r6;
    let mrr = b + a;
    let mtt = b - a;
    Ok(MomentTensor {
        mrr,
        mtt,
        // exact zero trace when summed in order
        mff: -(mrr + mtt),
        mrt: v[2] / r2,
        mrf: v[3] / r2,
        mtf: v[4] / r2,
    })
}
