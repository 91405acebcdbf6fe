#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rand_distr::StandardNormal;
use sphreg::geometry::{stereo_inverse, stereo_project, ExtendedPoint};
use sphreg::link::CovariateCase;

use sphreg::error_model::{sample_svmf, svmf_log_density, OrientationFrame, SvmfParams, TransportBase};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::PI;
use sphreg::estimation::{Dataset, ErrorModel, ModelState};
use sphreg::geometry::{cayley, SkewMatrix};
use sphreg::link::{to_reparam, LinkDims, LinkParams};
use sphreg::linalg::nearest_orthogonal;
use sphreg::simulate::{random_covariates, simulate_responses, Design};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v).normalize()
}

fn rot(p: usize, upper: Vec<f64>) -> DMatrix<f64> {
    cayley(&SkewMatrix::from_params(p, upper).unwrap()).into_inner()
}

/// A fixed, well-conditioned link for `(p, q_s, q_e)`.
pub fn true_link(p: usize, q_s: usize, q_e: usize) -> LinkParams {
    let k = p * (p - 1) / 2;
    let b0 = rot(p, (0..k).map(|i| 0.15 + 0.1 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
    let decay = |start: f64| (0..p - 1).map(|j| start * 0.6f64.powi(j as i32)).collect::<Vec<_>>();
    let stiefel = |q: usize, c: usize, shift: f64| {
        let m = DMatrix::from_fn(q, c, |i, j| if i == j { 1.0 } else { shift * ((i * 7 + j * 3) % 5) as f64 / 5.0 });
        nearest_orthogonal(&m)
    };
    LinkParams::sorted(
        b0,
        if q_s > 0 { decay(0.8) } else { vec![] },
        if q_e > 0 { decay(0.5) } else { vec![] },
        (q_s > 0).then(|| stiefel(q_s, p, 0.2)),
        (q_e > 0).then(|| stiefel(q_e, p - 1, 0.3)),
    )
    .unwrap()
}

pub fn true_state(link: &LinkParams, kappa: f64, scales: &[f64]) -> ModelState {
    let p = link.dims().p;
    let mut all = vec![1.0];
    all.extend_from_slice(scales);
    let gamma01 = link.b01();
    let base = TransportBase::canonical(gamma01).unwrap();
    let _ = p;
    ModelState {
        link: to_reparam(link),
        error: SvmfParams::new(kappa, all).unwrap(),
        base,
    }
}

pub fn simulate(state: &ModelState, model: ErrorModel, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let dims: LinkDims = state.link.dims();
    let design = Design {
        spherical_center: state.link.rs1().cloned(),
        ..Design::default()
    };
    let cases = random_covariates(&mut r, dims, n, &design).unwrap();
    let y = simulate_responses(&mut r, state, model, &cases).unwrap();
    Dataset::from_cases(y, &cases, None).unwrap()
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_mat(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn random_unit(rng: &mut impl Rng, p: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vec(rng, p);
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Haar-distributed `q x k` matrix with orthonormal columns.
pub fn random_stiefel(rng: &mut impl Rng, q: usize, k: usize) -> DMatrix<f64> {
    let g = gaussian_mat(rng, q, k);
    let qr = g.qr();
    let mut qm = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            qm.column_mut(j).neg_mut();
        }
    }
    qm
}

pub fn random_orthogonal(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
    random_stiefel(rng, p, p)
}

pub fn random_rotation(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
    let mut q = random_orthogonal(rng, p);
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

pub fn random_skew(rng: &mut impl Rng, k: usize) -> DMatrix<f64> {
    let g = gaussian_mat(rng, k, k);
    (&g - g.transpose()) * 0.5
}

/// Random valid link with scales in `(0, 2)`.
pub fn random_link(rng: &mut impl Rng, p: usize, q_s: usize, q_e: usize) -> LinkParams {
    let b0 = random_rotation(rng, p);
    let rs = (q_s > 0).then(|| random_stiefel(rng, q_s, p));
    let re = (q_e > 0).then(|| random_stiefel(rng, q_e, p - 1));
    let bs: Vec<f64> = if q_s > 0 { (0..p - 1).map(|_| rng.random_range(0.05..2.0)).collect() } else { vec![] };
    let be: Vec<f64> = if q_e > 0 { (0..p - 1).map(|_| rng.random_range(0.05..2.0)).collect() } else { vec![] };
    LinkParams::sorted(b0, bs, be, rs, re).expect("random link is valid")
}

pub fn random_case(rng: &mut impl Rng, dims: LinkDims) -> CovariateCase {
    let xs = (dims.q_s > 0).then(|| random_unit(rng, dims.q_s));
    let xe = (dims.q_e > 0).then(|| gaussian_vec(rng, dims.q_e));
    CovariateCase::new(xe, xs).unwrap()
}

/// The link evaluated literally as `B0 S^{-1}(Bs S(Rs' x_s) + Be Re' x_e)`,
/// with `Bs inf = inf` unless `Bs = 0`, and `inf + c = inf`.
pub fn literal_link(params: &LinkParams, x: &CovariateCase) -> DVector<f64> {
    let p = params.dims().p;
    let mut inner = ExtendedPoint::Finite(DVector::zeros(p - 1));
    if let (Some(rs), Some(xs)) = (params.rs(), &x.xs) {
        let proj = stereo_project(&(rs.transpose() * xs)).unwrap();
        let bs = DMatrix::from_diagonal(params.bs());
        inner = match proj {
            ExtendedPoint::Finite(y) => ExtendedPoint::Finite(bs * y),
            ExtendedPoint::Infinity(k) => {
                if params.bs().iter().all(|&b| b == 0.0) {
                    ExtendedPoint::Finite(DVector::zeros(k))
                } else {
                    ExtendedPoint::Infinity(k)
                }
            }
        };
    }
    if let (Some(re), Some(xe)) = (params.re(), &x.xe) {
        let shift = DMatrix::from_diagonal(params.be()) * re.transpose() * xe;
        inner = match inner {
            ExtendedPoint::Finite(y) => ExtendedPoint::Finite(y + shift),
            inf => inf,
        };
    }
    params.b0() * stereo_inverse(&inner).into_inner()
}

/// Geodesic distance between unit vectors.
pub fn geodesic(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // atan2 form is accurate for both small and near-antipodal angles
    let cross = (a - b * a.dot(b)).norm();
    cross.atan2(a.dot(b))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Integrates `f` over `S^2` with a product rule in `(cos theta, phi)`,
/// where `theta` is measured from `pole`. The rule is refined on `[-1, 1]`
/// in `cos theta` by splitting into `panels` subintervals.
pub fn sphere_quadrature(
    f: impl Fn(&DVector<f64>) -> f64,
    pole: &DVector<f64>,
    panels: usize,
    n_gl: usize,
    n_phi: usize,
) -> f64 {
    let frame = frame_from(pole);
    let (gx, gw) = gauss_legendre(n_gl);
    // concentrate panels near cos theta = 1 where peaked integrands live
    let edges: Vec<f64> = (0..=panels)
        .map(|k| {
            let u = k as f64 / panels as f64;
            1.0 - 2.0 * u * u * u
        })
        .collect();
    let mut total = 0.0;
    for k in 0..panels {
        let (hi, lo) = (edges[k], edges[k + 1]);
        let half = (hi - lo) / 2.0;
        let mid = (hi + lo) / 2.0;
        for (xi, wi) in gx.iter().zip(&gw) {
            let c = mid + half * xi;
            let s = (1.0 - c * c).max(0.0).sqrt();
            let mut ring = 0.0;
            for m in 0..n_phi {
                let phi = 2.0 * std::f64::consts::PI * m as f64 / n_phi as f64;
                let y = &frame.column(0) * c + &frame.column(1) * (s * phi.cos()) + &frame.column(2) * (s * phi.sin());
                ring += f(&y);
            }
            total += wi * half * ring * 2.0 * std::f64::consts::PI / n_phi as f64;
        }
    }
    total
}

/// Orthonormal 3x3 frame whose first column is `a`.
pub fn frame_from(a: &DVector<f64>) -> DMatrix<f64> {
    sphreg::geometry::gram_schmidt(&[a.clone()], a.len()).unwrap()
}

/// Binned goodness of fit of the SvMF sampler against the density:
/// equal-area bins in frame coordinates (bands of equal height in y'mu
/// times equal longitude sectors), expected counts by quadrature, bins with
/// small expectation pooled. Returns the chi-square p-value.
pub fn svmf_chi_square(kappa: f64, a2: f64, n: usize, seed: u64) -> f64 {
    let frame = OrientationFrame::new(random_rotation(&mut rng(20), 3)).unwrap();
    let params = SvmfParams::new(kappa, vec![1.0, a2, 1.0 / a2]).unwrap();
    let draws = sample_svmf(&frame, &params, n, seed).unwrap();
    let (bands, sectors) = (40usize, 24usize);
    let bin_of = |y: &DVector<f64>| {
        let c = frame.matrix().transpose() * y;
        let z = c[0].clamp(-1.0, 1.0);
        let band = (((z + 1.0) / 2.0 * bands as f64) as usize).min(bands - 1);
        let phi = c[2].atan2(c[1]) + PI;
        let sector = ((phi / (2.0 * PI) * sectors as f64) as usize).min(sectors - 1);
        band * sectors + sector
    };
    let mut observed = vec![0.0; bands * sectors];
    for y in &draws {
        observed[bin_of(y)] += 1.0;
    }
    let (gx, gw) = gauss_legendre(8);
    let mut expected = vec![0.0; bands * sectors];
    for band in 0..bands {
        let (z0, z1) = (-1.0 + 2.0 * band as f64 / bands as f64, -1.0 + 2.0 * (band + 1) as f64 / bands as f64);
        for sector in 0..sectors {
            let (f0, f1) = (-PI + 2.0 * PI * sector as f64 / sectors as f64, -PI + 2.0 * PI * (sector + 1) as f64 / sectors as f64);
            let mut prob = 0.0;
            for (xz, wz) in gx.iter().zip(&gw) {
                let z = 0.5 * (z1 - z0) * xz + 0.5 * (z1 + z0);
                let s = (1.0 - z * z).sqrt();
                for (xf, wf) in gx.iter().zip(&gw) {
                    let f = 0.5 * (f1 - f0) * xf + 0.5 * (f1 + f0);
                    let c = DVector::from_column_slice(&[z, s * f.cos(), s * f.sin()]);
                    let y = frame.matrix() * c;
                    prob += wz * wf * 0.25 * (z1 - z0) * (f1 - f0) * svmf_log_density(&y, &frame, &params).unwrap().exp();
                }
            }
            expected[band * sectors + sector] = prob * n as f64;
        }
    }
    let (mut stat, mut dof, mut pool_o, mut pool_e) = (0.0, 0usize, 0.0, 0.0);
    for (o, e) in observed.iter().zip(&expected) {
        if *e < 5.0 {
            pool_o += o;
            pool_e += e;
        } else {
            stat += (o - e).powi(2) / e;
            dof += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e.max(1e-300);
        dof += 1;
    }
    let chi = ChiSquared::new((dof - 1) as f64).unwrap();
    1.0 - chi.cdf(stat)
}
