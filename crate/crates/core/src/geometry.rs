//! Exact geometric primitives on the sphere and on compactified Euclidean
//! space: stereographic maps, Mobius transformations, parallel transport and
//! rotation parameterizations.
//!
//! Points at infinity are represented by [`ExtendedPoint::Infinity`], never by
//! a sentinel value, so that the conventions `S(-e1) = inf` and
//! `S^{-1}(inf) = -e1` hold exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|x| = 1` for unit vectors.
pub const UNIT_TOL: f64 = 1e-10;
/// `a` and `b` are antipodal when `1 + b'a` does not exceed this.
pub const ANTIPODAL_TOL: f64 = 1e-10;
/// Max-norm distance to `-e1` below which stereographic projection returns infinity.
pub const POLE_TOL: f64 = 1e-12;
/// Rank tolerance for Gram-Schmidt.
pub const RANK_TOL: f64 = 1e-10;

/// A point on the unit sphere `S^{p-1}`, `p >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    /// Validates `|v| = 1` within [`UNIT_TOL`] and `dim >= 2`.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::Dimension(format!(
                "unit vectors need p >= 2, got {}",
                v.len()
            )));
        }
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!("|v| = {n} is not 1")));
        }
        Ok(Self(v))
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        Self::new(v / n)
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    /// The canonical basis vector `e_{index+1}` of `R^dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl std::ops::Deref for UnitVector {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(v))
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Vec<f64> {
        u.0.as_slice().to_vec()
    }
}

/// A point of compactified Euclidean space `R^k ∪ {inf}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedPoint {
    Finite(DVector<f64>),
    /// The point at infinity of `R^k`, carrying `k`.
    Infinity(usize),
}

impl ExtendedPoint {
    pub fn dim(&self) -> usize {
        match self {
            ExtendedPoint::Finite(v) => v.len(),
            ExtendedPoint::Infinity(k) => *k,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedPoint::Infinity(_))
    }

    pub fn finite(&self) -> Option<&DVector<f64>> {
        match self {
            ExtendedPoint::Finite(v) => Some(v),
            ExtendedPoint::Infinity(_) => None,
        }
    }
}

/// A `p x p` rotation (`M'M = I`, `det M = +1`).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix(DMatrix<f64>);

impl RotationMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_orthonormal_columns(&m, 1e-10, "rotation")?;
        if !m.is_square() {
            return Err(Error::Dimension("rotation must be square".into()));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "rotation determinant {det} is not +1"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// A `q x k` matrix with orthonormal columns, `q >= k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelMatrix(DMatrix<f64>);

impl StiefelMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() < m.ncols() {
            return Err(Error::Dimension(format!(
                "Stiefel matrix needs rows >= cols, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_orthonormal_columns(&m, 1e-10, "Stiefel")?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

pub(crate) fn check_orthonormal_columns(m: &DMatrix<f64>, tol: f64, what: &str) -> Result<()> {
    let gram = m.transpose() * m;
    let dev = (gram - DMatrix::identity(m.ncols(), m.ncols())).amax();
    if !(dev <= tol) {
        return Err(Error::Constraint {
            what: format!("{what}: M'M = I"),
            residual: dev,
            tolerance: tol,
        });
    }
    Ok(())
}

/// A `k x k` skew-symmetric matrix stored by its strictly upper triangle
/// (row-major), so `M + M' = 0` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl SkewMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![0.0; dim * dim.saturating_sub(1) / 2],
        }
    }

    pub fn from_params(dim: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != dim * dim.saturating_sub(1) / 2 {
            return Err(Error::Dimension(format!(
                "{dim}x{dim} skew matrix has {} free entries, got {}",
                dim * dim.saturating_sub(1) / 2,
                upper.len()
            )));
        }
        Ok(Self { dim, upper })
    }

    /// Reads the strictly upper triangle; the lower triangle is ignored.
    pub fn from_upper(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let mut upper = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
        for i in 0..dim {
            for j in (i + 1)..dim {
                upper.push(m[(i, j)]);
            }
        }
        Self { dim, upper }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.upper
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                m[(i, j)] = self.upper[k];
                m[(j, i)] = -self.upper[k];
                k += 1;
            }
        }
        m
    }
}

/// Stereographic projection from the closed unit ball of `R^p` to
/// `R^{p-1} ∪ {inf}`: `S(x) = (x_2, ..., x_p) / (1 + x_1)`.
pub fn stereo_project(x: &DVector<f64>) -> Result<ExtendedPoint> {
    let p = x.len();
    if p < 2 {
        return Err(Error::Dimension("stereographic projection needs p >= 2".into()));
    }
    let n = x.norm();
    if !(n <= 1.0 + UNIT_TOL) {
        return Err(Error::Domain(format!(
            "stereographic projection needs |x| <= 1, got {n}"
        )));
    }
    let at_pole = (x[0] + 1.0).abs() < POLE_TOL && x.rows(1, p - 1).amax() < POLE_TOL;
    if at_pole {
        return Ok(ExtendedPoint::Infinity(p - 1));
    }
    Ok(ExtendedPoint::Finite(x.rows(1, p - 1) / (1.0 + x[0])))
}

/// Inverse stereographic projection `R^{p-1} ∪ {inf} -> S^{p-1}`.
pub fn stereo_inverse(y: &ExtendedPoint) -> UnitVector {
    match y {
        ExtendedPoint::Infinity(k) => {
            let mut v = DVector::zeros(k + 1);
            v[0] = -1.0;
            UnitVector(v)
        }
        ExtendedPoint::Finite(y) => {
            let k = y.len();
            let s = y.norm_squared();
            let mut v = DVector::zeros(k + 1);
            v[0] = (1.0 - s) / (1.0 + s);
            for i in 0..k {
                v[i + 1] = 2.0 * y[i] / (1.0 + s);
            }
            // renormalize away rounding so the unit invariant holds to machine precision
            let n = v.norm();
            UnitVector(v / n)
        }
    }
}

/// Mobius transformation of the sphere,
/// `M_S(x; R, psi) = R { (1 - |psi|^2)(x + psi)/|x + psi|^2 + psi }`.
pub fn mobius_sphere(x: &DVector<f64>, r: &DMatrix<f64>, psi: &DVector<f64>) -> Result<DVector<f64>> {
    let p = x.len();
    if r.nrows() != p || r.ncols() != p || psi.len() != p {
        return Err(Error::Dimension("mobius_sphere: x, R, psi must agree in p".into()));
    }
    let psi2 = psi.norm_squared();
    if (psi2.sqrt() - 1.0).abs() <= UNIT_TOL {
        return Err(Error::InvalidParameter("mobius_sphere needs |psi| != 1".into()));
    }
    let shifted = x + psi;
    let d2 = shifted.norm_squared();
    if d2 <= f64::EPSILON * f64::EPSILON {
        return Err(Error::Pole("mobius_sphere evaluated at x = -psi".into()));
    }
    Ok(r * (shifted * ((1.0 - psi2) / d2) + psi))
}

/// Parameters `(A, gamma, a, b, epsilon)` of the Mobius transformation on
/// compactified Euclidean space,
/// `M_E(x) = A (gamma (x + a)/|x + a|^eps + b)` with `eps in {0, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusParams {
    pub a_mat: DMatrix<f64>,
    pub gamma: f64,
    pub shift_in: DVector<f64>,
    pub shift_out: DVector<f64>,
    /// `true` for `eps = 2`, `false` for `eps = 0`.
    pub inversion: bool,
}

impl MobiusParams {
    pub fn new(
        a_mat: DMatrix<f64>,
        gamma: f64,
        shift_in: DVector<f64>,
        shift_out: DVector<f64>,
        inversion: bool,
    ) -> Result<Self> {
        let p = a_mat.nrows();
        if !a_mat.is_square() || shift_in.len() != p || shift_out.len() != p {
            return Err(Error::Dimension("Mobius parameters disagree in p".into()));
        }
        check_orthonormal_columns(&a_mat, 1e-10, "Mobius A")?;
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidParameter("Mobius gamma must be nonzero".into()));
        }
        Ok(Self {
            a_mat,
            gamma,
            shift_in,
            shift_out,
            inversion,
        })
    }

    /// The inversion `x -> x/|x|^2` of `R^p`.
    pub fn inversion(p: usize) -> Self {
        Self {
            a_mat: DMatrix::identity(p, p),
            gamma: 1.0,
            shift_in: DVector::zeros(p),
            shift_out: DVector::zeros(p),
            inversion: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.a_mat.nrows()
    }

    pub fn epsilon(&self) -> u8 {
        if self.inversion {
            2
        } else {
            0
        }
    }
}

/// Evaluates `M_E` with the conventions `M_E(-a) = Ab`, `M_E(inf) = inf`
/// for `eps = 0` and `M_E(-a) = inf`, `M_E(inf) = Ab` for `eps = 2`.
pub fn mobius_extended(x: &ExtendedPoint, m: &MobiusParams) -> ExtendedPoint {
    let p = m.dim();
    match x {
        ExtendedPoint::Infinity(_) => {
            if m.inversion {
                ExtendedPoint::Finite(&m.a_mat * &m.shift_out)
            } else {
                ExtendedPoint::Infinity(p)
            }
        }
        ExtendedPoint::Finite(x) => {
            let u = x + &m.shift_in;
            let d2 = u.norm_squared();
            if m.inversion {
                if d2 == 0.0 {
                    return ExtendedPoint::Infinity(p);
                }
                ExtendedPoint::Finite(&m.a_mat * (u * (m.gamma / d2) + &m.shift_out))
            } else {
                ExtendedPoint::Finite(&m.a_mat * (u * m.gamma + &m.shift_out))
            }
        }
    }
}

/// Householder reflection `H(v) = I - 2 v v' / |v|^2`.
pub fn householder(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n2 = v.norm_squared();
    if !(n2.sqrt() > 1e-12) {
        return Err(Error::Degenerate("Householder reflection of a zero vector".into()));
    }
    let p = v.len();
    Ok(DMatrix::identity(p, p) - v * v.transpose() * (2.0 / n2))
}

/// Parameters of `M_E(M_E(x; first); second)` for two inversion-type maps.
///
/// With `v = A1' a2 + b1`:
/// `A' = A2 A1 H(v)`, `gamma' = gamma1 gamma2/|v|^2`,
/// `a' = a1 + gamma1 v/|v|^2`, `b' = H(v)(gamma2 v/|v|^2 + A1' b2)`.
pub fn mobius_extended_compose(first: &MobiusParams, second: &MobiusParams) -> Result<MobiusParams> {
    if first.dim() != second.dim() {
        return Err(Error::Dimension("composed Mobius maps disagree in p".into()));
    }
    if !(first.inversion && second.inversion) {
        return Err(Error::InvalidParameter(
            "closed-form composition is implemented for eps1 = eps2 = 2 only".into(),
        ));
    }
    let a1t = first.a_mat.transpose();
    let v = &a1t * &second.shift_in + &first.shift_out;
    let v2 = v.norm_squared();
    if !(v2.sqrt() > 1e-12) {
        return Err(Error::Degenerate(
            "composition pole: A1' a2 + b1 = 0".into(),
        ));
    }
    let h = householder(&v)?;
    let a_mat = &second.a_mat * &first.a_mat * &h;
    let gamma = first.gamma * second.gamma / v2;
    let shift_in = &first.shift_in + &v * (first.gamma / v2);
    let shift_out = &h * (&v * (second.gamma / v2) + a1t * &second.shift_out);
    Ok(MobiusParams {
        a_mat,
        gamma,
        shift_in,
        shift_out,
        inversion: true,
    })
}

/// `S~(x)` as a Mobius map: `(I - 2 e1 e1'){2 (x + e1)/|x + e1|^2 - e1}`.
pub fn stereo_as_mobius(p: usize) -> MobiusParams {
    let e1 = UnitVector::basis(p, 0).into_inner();
    MobiusParams {
        a_mat: householder(&e1).expect("e1 is nonzero"),
        gamma: 2.0,
        shift_in: e1.clone(),
        shift_out: -e1,
        inversion: true,
    }
}

/// `S~^{-1}(x)` as a Mobius map: `(I - 2 e1 e1'){2 (x - e1)/|x - e1|^2 + e1}`.
pub fn stereo_inverse_as_mobius(p: usize) -> MobiusParams {
    let e1 = UnitVector::basis(p, 0).into_inner();
    MobiusParams {
        a_mat: householder(&e1).expect("e1 is nonzero"),
        gamma: 2.0,
        shift_in: -e1.clone(),
        shift_out: e1,
        inversion: true,
    }
}

fn antipodal_guard(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension("a and b differ in dimension".into()));
    }
    let c = 1.0 + b.dot(a);
    if !(c > ANTIPODAL_TOL) {
        return Err(Error::Antipodal(c));
    }
    Ok(c)
}

/// Parallel transport along the minimal geodesic from `a` to `b`,
/// `R_{a,b} = I - (a + b)(a + b)'/(1 + b'a)`.
pub fn transport_matrix(a: &DVector<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>> {
    let c = antipodal_guard(a, b)?;
    let s = a + b;
    let p = a.len();
    Ok(DMatrix::identity(p, p) - &s * s.transpose() / c)
}

/// Applies `R_{a,b}` to `xi` without forming the matrix.
pub fn transport_apply(a: &DVector<f64>, b: &DVector<f64>, xi: &DVector<f64>) -> Result<DVector<f64>> {
    let c = antipodal_guard(a, b)?;
    let s = a + b;
    let k = s.dot(xi) / c;
    Ok(xi - s * k)
}

/// The rotation `Q` with `Q'a = b` whose transpose acts on tangent vectors at
/// `a` as parallel transport to `b`.
pub fn amaral_rotation(a: &DVector<f64>, b: &DVector<f64>) -> Result<RotationMatrix> {
    antipodal_guard(a, b)?;
    let p = a.len();
    let cos_t = b.dot(a).clamp(-1.0, 1.0);
    let w = b - a * cos_t;
    let sin_t = w.norm();
    if sin_t < 1e-15 {
        return Ok(RotationMatrix::identity(p));
    }
    let u = w / sin_t;
    let q = DMatrix::identity(p, p) + (a * u.transpose() - &u * a.transpose()) * sin_t
        + (a * a.transpose() + &u * u.transpose()) * (cos_t - 1.0);
    Ok(RotationMatrix(q))
}

/// Modified Gram-Schmidt with a re-orthogonalization pass. The seeds are
/// orthonormalized in order and completed to a basis of `R^p` with the
/// canonical axes `e1, e2, ...` (skipping axes already in the span).
/// Returns the `p x p` matrix whose columns are the basis.
pub fn gram_schmidt(seed: &[DVector<f64>], p: usize) -> Result<DMatrix<f64>> {
    if seed.len() > p {
        return Err(Error::RankDeficient(format!(
            "{} seeds cannot be independent in R^{p}",
            seed.len()
        )));
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(p);
    for (i, s) in seed.iter().enumerate() {
        if s.len() != p {
            return Err(Error::Dimension(format!("seed {i} is not in R^{p}")));
        }
        let scale = s.norm();
        match orthogonalize(s, &basis) {
            Some(v) if v.norm() > RANK_TOL * scale.max(1e-300) => basis.push(v.normalize()),
            _ => {
                return Err(Error::RankDeficient(format!(
                    "seed {i} lies in the span of the previous seeds"
                )))
            }
        }
    }
    let mut axis = 0;
    while basis.len() < p && axis < p {
        let e = UnitVector::basis(p, axis).into_inner();
        if let Some(v) = orthogonalize(&e, &basis) {
            // a canonical axis is accepted when a usable fraction survives projection
            if v.norm() > 1e-6 {
                basis.push(v.normalize());
            }
        }
        axis += 1;
    }
    if basis.len() < p {
        return Err(Error::RankDeficient("basis completion failed".into()));
    }
    Ok(DMatrix::from_columns(&basis))
}

fn orthogonalize(v: &DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let mut w = v.clone();
    for _pass in 0..2 {
        for b in basis {
            let c = b.dot(&w);
            w.axpy(-c, b, 1.0);
        }
    }
    if w.iter().all(|x| x.is_finite()) {
        Some(w)
    } else {
        None
    }
}

/// Orthonormal basis (as columns, `p x (p-1)`) of the tangent space at `a`.
pub fn tangent_basis(a: &DVector<f64>) -> Result<DMatrix<f64>> {
    let p = a.len();
    let full = gram_schmidt(&[a.clone()], p)?;
    Ok(full.columns(1, p - 1).into_owned())
}

/// Cayley transform `(I - S)(I + S)^{-1}` of a skew-symmetric matrix.
pub fn cayley(s: &SkewMatrix) -> RotationMatrix {
    let k = s.dim();
    let m = s.to_matrix();
    let id = DMatrix::<f64>::identity(k, k);
    // I + S is always invertible for skew S
    let inv = (&id + &m).try_inverse().expect("I + S is nonsingular for skew S");
    RotationMatrix((&id - &m) * inv)
}

/// Inverse Cayley transform `S = (I - R)(I + R)^{-1}`.
pub fn inverse_cayley(r: &RotationMatrix) -> Result<SkewMatrix> {
    let m = r.matrix();
    let k = m.nrows();
    let id = DMatrix::<f64>::identity(k, k);
    let lu = (&id + m).lu();
    let det = lu.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::Domain(
            "inverse Cayley undefined: rotation has eigenvalue -1".into(),
        ));
    }
    let inv = lu.try_inverse().ok_or_else(|| {
        Error::Domain("inverse Cayley undefined: I + R is singular".into())
    })?;
    let s = (&id - m) * inv;
    Ok(SkewMatrix::from_upper(&s))
}

/// Reduces an angle to `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let r = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// The 2x2 rotation by `theta`.
pub fn rotation2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::*;

    mod approx_eq {
        use nalgebra::{DMatrix, DVector};
        pub fn vclose(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
            (a - b).amax() <= tol
        }
        pub fn mclose(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
            (a - b).amax() <= tol
        }
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn stereo_examples() {
        let e1 = v(&[1.0, 0.0, 0.0]);
        assert_eq!(stereo_project(&e1).unwrap(), ExtendedPoint::Finite(v(&[0.0, 0.0])));
        assert_eq!(stereo_project(&-e1).unwrap(), ExtendedPoint::Infinity(2));
        let e2 = v(&[0.0, 1.0, 0.0]);
        assert_eq!(stereo_project(&e2).unwrap(), ExtendedPoint::Finite(v(&[1.0, 0.0])));
        assert!(matches!(
            stereo_project(&v(&[1.0, 0.1, 0.0])),
            Err(Error::Domain(_))
        ));
        // interior of the ball is allowed
        assert!(stereo_project(&v(&[0.2, 0.1, 0.0])).is_ok());
    }

    #[test]
    fn stereo_inverse_examples() {
        let y = stereo_inverse(&ExtendedPoint::Finite(v(&[0.0, 0.0])));
        assert_eq!(y.as_vector(), &v(&[1.0, 0.0, 0.0]));
        let y = stereo_inverse(&ExtendedPoint::Infinity(2));
        assert_eq!(y.as_vector(), &v(&[-1.0, 0.0, 0.0]));
        let y = stereo_inverse(&ExtendedPoint::Finite(v(&[1.0, 0.0])));
        assert!(vclose(y.as_vector(), &v(&[0.0, 1.0, 0.0]), 1e-15));
    }

    #[test]
    fn mobius_sphere_identity_and_rotation() {
        let x = v(&[0.6, 0.0, 0.8]);
        let id = DMatrix::identity(3, 3);
        let z = DVector::zeros(3);
        assert!(vclose(&mobius_sphere(&x, &id, &z).unwrap(), &x, 1e-15));
        let r = amaral_rotation(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0])).unwrap();
        let got = mobius_sphere(&x, r.matrix(), &z).unwrap();
        assert!(vclose(&got, &(r.matrix() * &x), 1e-15));
        assert!(matches!(
            mobius_sphere(&x, &id, &v(&[1.0, 0.0, 0.0])),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            mobius_sphere(&v(&[-0.5, 0.0, 0.0]), &id, &v(&[0.5, 0.0, 0.0])),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn mobius_extended_conventions() {
        let a = v(&[0.3, -0.2, 0.1]);
        let b = v(&[1.0, 2.0, 3.0]);
        let m = MobiusParams::new(DMatrix::identity(3, 3), 1.5, a.clone(), b.clone(), true).unwrap();
        assert_eq!(mobius_extended(&ExtendedPoint::Finite(-a.clone()), &m), ExtendedPoint::Infinity(3));
        assert_eq!(mobius_extended(&ExtendedPoint::Infinity(3), &m), ExtendedPoint::Finite(b.clone()));
        let m0 = MobiusParams::new(DMatrix::identity(3, 3), 1.5, a.clone(), b.clone(), false).unwrap();
        assert_eq!(mobius_extended(&ExtendedPoint::Infinity(3), &m0), ExtendedPoint::Infinity(3));
        assert_eq!(mobius_extended(&ExtendedPoint::Finite(-a), &m0), ExtendedPoint::Finite(b));
        let ident = MobiusParams::new(DMatrix::identity(3, 3), 1.0, DVector::zeros(3), DVector::zeros(3), false).unwrap();
        let x = v(&[0.1, 0.2, 0.3]);
        assert_eq!(mobius_extended(&ExtendedPoint::Finite(x.clone()), &ident), ExtendedPoint::Finite(x));
    }

    #[test]
    fn compose_rejects_degenerate_pair() {
        let inv = MobiusParams::inversion(3);
        assert!(matches!(
            mobius_extended_compose(&inv, &inv),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn stereo_mobius_forms_are_inverse_on_sphere() {
        let s = stereo_as_mobius(3);
        let si = stereo_inverse_as_mobius(3);
        // the composite is the identity, which has no inversion-type form
        assert!(mobius_extended_compose(&s, &si).is_err());
        let x = v(&[0.48, 0.6, 0.64]);
        let y = mobius_extended(&mobius_extended(&ExtendedPoint::Finite(x.clone()), &s), &si);
        assert!(vclose(y.finite().unwrap(), &x, 1e-12));
        // S~ agrees with the stereographic projection embedded as (0, S(x))
        let sx = mobius_extended(&ExtendedPoint::Finite(x.clone()), &s);
        let direct = stereo_project(&x).unwrap();
        let sx = sx.finite().unwrap();
        assert!(sx[0].abs() < 1e-12);
        assert!(vclose(&sx.rows(1, 2).into_owned(), direct.finite().unwrap(), 1e-12));
    }

    #[test]
    fn transport_examples() {
        let e1 = v(&[1.0, 0.0, 0.0]);
        let e2 = v(&[0.0, 1.0, 0.0]);
        let e3 = v(&[0.0, 0.0, 1.0]);
        let r = transport_matrix(&e1, &e2).unwrap();
        assert!(vclose(&(&r * &e2), &-e1.clone(), 1e-15));
        assert!(vclose(&(&r * &e3), &e3, 1e-15));
        let same = transport_matrix(&e1, &e1).unwrap();
        assert!(vclose(&(&same * &e2), &e2, 1e-15));
        assert!(matches!(transport_matrix(&e1, &-e1.clone()), Err(Error::Antipodal(_))));
        assert!(matches!(amaral_rotation(&e1, &-e1.clone()), Err(Error::Antipodal(_))));
    }

    #[test]
    fn amaral_examples() {
        let e1 = v(&[1.0, 0.0, 0.0]);
        let e2 = v(&[0.0, 1.0, 0.0]);
        let q = amaral_rotation(&e1, &e1).unwrap();
        assert!(mclose(q.matrix(), &DMatrix::identity(3, 3), 1e-15));
        let q = amaral_rotation(&e1, &e2).unwrap();
        assert!(vclose(&(q.matrix().transpose() * &e1), &e2, 1e-15));
        assert!((q.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_schmidt_examples() {
        let e1 = v(&[1.0, 0.0, 0.0]);
        let e2 = v(&[0.0, 1.0, 0.0]);
        let g = gram_schmidt(&[e1.clone(), e2.clone()], 3).unwrap();
        assert!(mclose(&g, &DMatrix::identity(3, 3), 0.0));
        let g = gram_schmidt(&[e1.clone() * 2.0], 3).unwrap();
        assert!(mclose(&g, &DMatrix::identity(3, 3), 0.0));
        assert!(matches!(
            gram_schmidt(&[e1.clone(), e1 * 3.0], 3),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn cayley_examples() {
        let s0 = SkewMatrix::zeros(3);
        assert!(mclose(cayley(&s0).matrix(), &DMatrix::identity(3, 3), 0.0));
        // closed form for 2x2: S = [[0, s], [-s, 0]] -> [[1 - s^2, -2s], [2s, 1 - s^2]]/(1 + s^2)
        let s = 1.0;
        let got = cayley(&SkewMatrix::from_params(2, vec![s]).unwrap());
        let want = DMatrix::from_row_slice(2, 2, &[1.0 - s * s, -2.0 * s, 2.0 * s, 1.0 - s * s]) / (1.0 + s * s);
        assert!(mclose(got.matrix(), &want, 1e-15));
        assert!(mclose(got.matrix(), &rotation2(std::f64::consts::FRAC_PI_2), 1e-15));
        let half_turn = RotationMatrix::new(rotation2(std::f64::consts::PI)).unwrap();
        assert!(matches!(inverse_cayley(&half_turn), Err(Error::Domain(_))));
    }

    #[test]
    fn householder_examples() {
        let h = householder(&v(&[1.0, 0.0])).unwrap();
        assert!(mclose(&h, &DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]), 0.0));
        assert!(matches!(householder(&v(&[0.0, 0.0])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn skew_storage() {
        let s = SkewMatrix::from_params(3, vec![1.0, 2.0, 3.0]).unwrap();
        let m = s.to_matrix();
        assert_eq!(&m + m.transpose(), DMatrix::zeros(3, 3));
        assert_eq!(SkewMatrix::from_upper(&m), s);
        assert!(SkewMatrix::from_params(3, vec![1.0]).is_err());
    }
}
