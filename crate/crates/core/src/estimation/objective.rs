//! The log-likelihood in unconstrained internal coordinates, with its
//! analytic gradient.
//!
//! Coordinates, in order: `w_b` (p; `b01 = w_b/|w_b|`), `w_r` (q_s;
//! `r_s1 = w_r/|w_r|`), `M` (p x q row-major; `Omega = Proj(M)`), `log kappa`,
//! `eta` (p - 2 free log-scales), `w_g` (p; `gamma01 = w_g/|w_g|`) and the
//! strictly upper triangle of a `(p-1) x (p-1)` skew matrix `S`. The base
//! axes are `R_{g0, gamma01} A0 cay(S)` where `(g0, A0)` is the starting base.
//! Blocks absent from a model are omitted.

use nalgebra::{DMatrix, DVector};

use super::dataset::Dataset;
use super::fit::ModelState;
use super::ErrorModel;
use crate::error::{Error, Result};
use crate::error_model::{mean_resultant_length, vmf_log_norm_const, SvmfParams, TransportBase};
use crate::link::ReparamLink;

/// Objective value returned where the likelihood is undefined (a covariate
/// at the pole, or a mean antipodal to the base location).
pub(crate) const INVALID: f64 = 1e20;
const POLE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// `sum_i w_i y_i' mu(x_i)`, the von Mises-Fisher mean criterion.
    MeanOnly,
    Vmf,
    Svmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GammaParam {
    Free,
    TiedB,
    Fixed,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub p: usize,
    pub qs: usize,
    pub qe: usize,
    pub mode: Mode,
    pub gamma: GammaParam,
}

impl Layout {
    pub fn q(&self) -> usize {
        self.qs + self.qe
    }
    fn has_kappa(&self) -> bool {
        self.mode != Mode::MeanOnly
    }
    fn svmf(&self) -> bool {
        self.mode == Mode::Svmf
    }
    pub fn off_r(&self) -> usize {
        self.p
    }
    pub fn off_m(&self) -> usize {
        self.p + self.qs
    }
    pub fn off_k(&self) -> usize {
        self.off_m() + self.p * self.q()
    }
    pub fn off_e(&self) -> usize {
        self.off_k() + self.has_kappa() as usize
    }
    fn n_eta(&self) -> usize {
        if self.svmf() {
            self.p - 2
        } else {
            0
        }
    }
    pub fn off_g(&self) -> usize {
        self.off_e() + self.n_eta()
    }
    fn n_g(&self) -> usize {
        if self.svmf() && self.gamma == GammaParam::Free {
            self.p
        } else {
            0
        }
    }
    pub fn off_s(&self) -> usize {
        self.off_g() + self.n_g()
    }
    fn n_skew(&self) -> usize {
        if self.svmf() {
            (self.p - 1) * (self.p - 2) / 2
        } else {
            0
        }
    }
    pub fn len(&self) -> usize {
        self.off_s() + self.n_skew()
    }
    /// Whether the commutator constraint is active.
    pub fn constrained(&self) -> bool {
        self.qs > 0 && self.qe > 0
    }
    pub fn n_comm(&self) -> usize {
        if self.constrained() {
            self.p * (self.p - 1) / 2
        } else {
            0
        }
    }
}

pub(crate) struct Eval {
    /// `-loglik / W`.
    pub f: f64,
    /// Augmented Lagrangian value.
    pub al: f64,
    /// Upper-triangular commutator entries.
    pub comm: Vec<f64>,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Objective {
    pub layout: Layout,
    n: usize,
    ys: Vec<f64>,
    xs: Vec<f64>,
    xe: Vec<f64>,
    w: Vec<f64>,
    wsum: f64,
    a1: f64,
    anchor: DVector<f64>,
    axes0: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub rho: f64,
}

fn unit(v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (v.iter().map(|x| x / n).collect(), n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Objective {
    /// `base` supplies the anchor `(g0, A0)`; it is ignored by the
    /// mean-only and von Mises-Fisher modes.
    pub fn new(data: &Dataset, mode: Mode, gamma: GammaParam, a1: f64, base: &TransportBase) -> Result<Self> {
        let dims = data.dims()?;
        let (p, qs, qe) = (dims.p, dims.q_s, dims.q_e);
        let n = data.n();
        let mut ys = Vec::with_capacity(n * p);
        let mut xs = Vec::with_capacity(n * qs);
        let mut xe = Vec::with_capacity(n * qe);
        for i in 0..n {
            ys.extend_from_slice(data.responses()[i].as_slice());
            if let Some(s) = data.spherical() {
                xs.extend_from_slice(s[i].as_slice());
            }
            if let Some(e) = data.euclidean() {
                xe.extend_from_slice(e[i].as_slice());
            }
        }
        let w: Vec<f64> = (0..n).map(|i| data.weight(i)).collect();
        let layout = Layout { p, qs, qe, mode, gamma };
        let n_comm = layout.n_comm();
        Ok(Self {
            layout,
            n,
            ys,
            xs,
            xe,
            wsum: w.iter().sum(),
            w,
            a1,
            anchor: base.gamma01().clone(),
            axes0: base.axes().clone(),
            lambda: vec![0.0; n_comm],
            rho: 0.0,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.wsum
    }

    /// Internal coordinates of a model state, relative to this objective's anchor.
    pub fn encode(&self, link: &ReparamLink, error: Option<&SvmfParams>, gamma01: Option<&DVector<f64>>) -> Vec<f64> {
        let l = &self.layout;
        let mut th = vec![0.0; l.len()];
        th[..l.p].copy_from_slice(link.b01().as_slice());
        if let Some(r) = link.rs1() {
            th[l.off_r()..l.off_m()].copy_from_slice(r.as_slice());
        }
        let q = l.q();
        let om = link.omega();
        for i in 0..l.p {
            for j in 0..q {
                th[l.off_m() + i * q + j] = om[(i, j)];
            }
        }
        if let (true, Some(e)) = (l.has_kappa(), error) {
            th[l.off_k()] = e.kappa().max(1e-8).ln();
            let free = e.free_log_scales();
            th[l.off_e()..l.off_e() + l.n_eta()].copy_from_slice(&free[..l.n_eta()]);
        }
        if l.n_g() > 0 {
            let g = gamma01.unwrap_or(&self.anchor);
            th[l.off_g()..l.off_g() + l.p].copy_from_slice(g.as_slice());
        }
        th
    }

    fn link_parts(&self, th: &[f64]) -> (Vec<f64>, f64, Vec<f64>, f64, DMatrix<f64>, DMatrix<f64>) {
        let l = &self.layout;
        let (p, qs, q) = (l.p, l.qs, l.q());
        let (b, nb) = unit(&th[..p]);
        let (r, nr) = if qs > 0 { unit(&th[l.off_r()..l.off_m()]) } else { (vec![], 1.0) };
        let m = DMatrix::from_row_slice(p, q, &th[l.off_m()..l.off_k()]);
        let bv = DVector::from_column_slice(&b);
        let pb = DMatrix::identity(p, p) - &bv * bv.transpose();
        let mut sv = DVector::zeros(q);
        sv.rows_mut(0, qs).copy_from_slice(&r);
        let pr = DMatrix::identity(q, q) - &sv * sv.transpose();
        let omega = pb * &m * pr;
        (b, nb, r, nr, m, omega)
    }

    pub fn decode_link(&self, th: &[f64]) -> Result<ReparamLink> {
        let (b, _, r, _, _, omega) = self.link_parts(th);
        let l = &self.layout;
        // constraints are checked by the caller, after projection
        ReparamLink::unchecked(
            DVector::from_vec(b),
            (l.qs > 0).then(|| DVector::from_vec(r)),
            omega,
            l.qs,
        )
    }

    /// Concentration at `th`, or 1 for the mean-only criterion.
    pub fn kappa_of(&self, th: &[f64]) -> f64 {
        self.decode_kappa(th).unwrap_or(1.0)
    }

    pub fn decode_kappa(&self, th: &[f64]) -> Option<f64> {
        self.layout.has_kappa().then(|| th[self.layout.off_k()].exp())
    }

    pub fn decode_scales(&self, th: &[f64]) -> Result<SvmfParams> {
        let l = &self.layout;
        let kappa = self.decode_kappa(th).unwrap_or(0.0);
        if !l.svmf() {
            return SvmfParams::isotropic(kappa, 1.0, l.p);
        }
        SvmfParams::from_log_scales(kappa, self.a1, &th[l.off_e()..l.off_e() + l.n_eta()])
    }

    fn gamma_of(&self, th: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let l = &self.layout;
        match l.gamma {
            GammaParam::Free if l.svmf() => unit(&th[l.off_g()..l.off_g() + l.p]),
            GammaParam::TiedB => (b.to_vec(), 1.0),
            _ => (self.anchor.as_slice().to_vec(), 1.0),
        }
    }

    /// `(Q, (I + S)^{-1})` for the skew block.
    fn skew_parts(&self, th: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let l = &self.layout;
        let k = l.p - 1;
        let mut s = DMatrix::zeros(k, k);
        let mut idx = l.off_s();
        for i in 0..k {
            for j in (i + 1)..k {
                if l.svmf() {
                    s[(i, j)] = th[idx];
                    s[(j, i)] = -th[idx];
                    idx += 1;
                }
            }
        }
        let id = DMatrix::<f64>::identity(k, k);
        let inv = (&id + &s).try_inverse().expect("I + S is nonsingular for skew S");
        let q = (&id - &s) * &inv;
        (q, inv, s)
    }

    pub fn decode_base(&self, th: &[f64]) -> Result<TransportBase> {
        let (b, ..) = self.link_parts(th);
        let (g, _) = self.gamma_of(th, &b);
        let g = DVector::from_vec(g);
        let (q, _, _) = self.skew_parts(th);
        let bm = &self.axes0 * q;
        let d = &self.anchor + &g;
        let s = 1.0 + self.anchor.dot(&g);
        if s <= 1e-10 {
            return Err(Error::Antipodal(s));
        }
        let axes = &bm - &d * (d.transpose() * &bm) / s;
        TransportBase::new(g, axes)
    }

    /// Evaluates the objective and, when `grad` is given, its gradient.
    pub fn eval(&self, th: &[f64], grad: Option<&mut [f64]>) -> Eval {
        let l = &self.layout;
        let (p, qs, qe, q) = (l.p, l.qs, l.qe, l.q());
        let (b, nb, r, nr, m, omega) = self.link_parts(th);
        let om: Vec<f64> = (0..p).flat_map(|i| (0..q).map(move |j| (i, j))).map(|(i, j)| omega[(i, j)]).collect();
        let invalid = |grad: Option<&mut [f64]>| {
            if let Some(g) = grad {
                g.iter_mut().for_each(|x| *x = 0.0);
            }
            Eval {
                f: INVALID,
                al: INVALID,
                comm: vec![0.0; l.n_comm()],
                valid: false,
            }
        };

        // error-model quantities
        let kappa = self.decode_kappa(th).unwrap_or(0.0);
        if !kappa.is_finite() || kappa > 1e12 {
            return invalid(grad);
        }
        let lc = if l.has_kappa() { vmf_log_norm_const(p, kappa) } else { 0.0 };
        let ap = if l.has_kappa() { mean_resultant_length(p, kappa) } else { 0.0 };
        let mut a = vec![1.0; p];
        if l.svmf() {
            a[0] = self.a1;
            let eta = &th[l.off_e()..l.off_e() + l.n_eta()];
            let mut sum = 0.0;
            for (k, e) in eta.iter().enumerate() {
                a[k + 1] = e.exp();
                sum += e;
            }
            a[p - 1] = (-sum).exp();
        }
        let (g, ng) = self.gamma_of(th, &b);
        let (qm, inv_is, _) = self.skew_parts(th);
        let bm = &self.axes0 * &qm;
        let gv = DVector::from_column_slice(&g);
        let dprime = &self.anchor + &gv;
        let sprime = 1.0 + self.anchor.dot(&gv);
        if l.svmf() && sprime <= 1e-10 {
            return invalid(grad);
        }
        let axes = if l.svmf() { &bm - &dprime * (dprime.transpose() * &bm) / sprime } else { bm.clone() };
        let k1 = p - 1;
        let acols: Vec<f64> = (0..k1).flat_map(|j| axes.column(j).iter().copied().collect::<Vec<_>>()).collect();
        let ln_a1 = a[0].ln();

        let mut ll = 0.0;
        let mut g_om = vec![0.0; p * q];
        let mut g_b = vec![0.0; p];
        let mut g_r = vec![0.0; qs];
        let mut g_k = 0.0;
        let mut g_e = vec![0.0; p.saturating_sub(2)];
        let mut g_g = vec![0.0; p];
        let mut g_ax = vec![0.0; p * k1];

        let mut z = vec![0.0; q];
        let mut t = vec![0.0; p];
        let mut mu = vec![0.0; p];
        let mut gmu = vec![0.0; p];
        let mut dv = vec![0.0; p];
        let mut c = vec![0.0; k1];
        let mut alpha = vec![0.0; k1];
        let mut gc = vec![0.0; k1];
        let mut h = vec![0.0; p];
        let mut gt = vec![0.0; p];

        for i in 0..self.n {
            let wi = self.w[i];
            let y = &self.ys[i * p..(i + 1) * p];
            let mut dd = 1.0;
            if qs > 0 {
                let x = &self.xs[i * qs..(i + 1) * qs];
                dd = 1.0 + dot(&r, x);
                if dd < POLE_GUARD {
                    return invalid(grad);
                }
                for j in 0..qs {
                    z[j] = x[j] / dd;
                }
            }
            if qe > 0 {
                z[qs..].copy_from_slice(&self.xe[i * qe..(i + 1) * qe]);
            }
            for k in 0..p {
                t[k] = dot(&om[k * q..(k + 1) * q], &z);
            }
            let n2 = dot(&t, &t);
            let den = 1.0 + n2;
            for k in 0..p {
                mu[k] = ((1.0 - n2) * b[k] + 2.0 * t[k]) / den;
            }
            let c1 = dot(y, &mu);
            match l.mode {
                Mode::MeanOnly => {
                    ll += wi * c1;
                    gmu.copy_from_slice(y);
                }
                Mode::Vmf => {
                    ll += wi * (kappa * c1 - lc);
                    g_k += wi * kappa * (c1 - ap);
                    for k in 0..p {
                        gmu[k] = kappa * y[k];
                    }
                }
                Mode::Svmf => {
                    let sg = 1.0 + dot(&g, &mu);
                    if sg < 1e-10 {
                        return invalid(grad);
                    }
                    for k in 0..p {
                        dv[k] = g[k] + mu[k];
                    }
                    let beta = dot(y, &dv);
                    let mut jv = (c1 / a[0]).powi(2);
                    for j in 0..k1 {
                        let aj = &acols[j * p..(j + 1) * p];
                        alpha[j] = dot(&dv, aj);
                        c[j] = dot(y, aj) - beta * alpha[j] / sg;
                        jv += (c[j] / a[j + 1]).powi(2);
                    }
                    let sq = jv.sqrt();
                    let u = c1 / a[0];
                    ll += wi * (-lc - ln_a1 - 0.5 * p as f64 * jv.ln() + kappa * u / sq);
                    let d_j = -0.5 * p as f64 / jv - 0.5 * kappa * u / (jv * sq);
                    let gc1 = d_j * 2.0 * c1 / (a[0] * a[0]) + kappa / (a[0] * sq);
                    for j in 0..k1 {
                        gc[j] = d_j * 2.0 * c[j] / (a[j + 1] * a[j + 1]);
                    }
                    g_k += wi * kappa * (u / sq - ap);
                    if p > 2 {
                        let q_last = (c[k1 - 1] / a[p - 1]).powi(2);
                        for k in 0..p - 2 {
                            g_e[k] += wi * (-2.0 * d_j) * ((c[k] / a[k + 1]).powi(2) - q_last);
                        }
                    }
                    h.iter_mut().for_each(|x| *x = 0.0);
                    for j in 0..k1 {
                        let aj = &acols[j * p..(j + 1) * p];
                        for k in 0..p {
                            h[k] += gc[j] * aj[k];
                        }
                    }
                    let sig = dot(&dv, &h);
                    let bs2 = beta * sig / (sg * sg);
                    for k in 0..p {
                        let common = -(sig * y[k] + beta * h[k]) / sg;
                        gmu[k] = gc1 * y[k] + common + bs2 * g[k];
                        g_g[k] += wi * (common + bs2 * mu[k]);
                    }
                    for j in 0..k1 {
                        let f = wi * gc[j];
                        for k in 0..p {
                            g_ax[j * p + k] += f * (y[k] - dv[k] * beta / sg);
                        }
                    }
                }
            }
            // back through mu = [(1 - n2) b + 2 t] / (1 + n2)
            let cb = wi * (1.0 - n2) / den;
            for k in 0..p {
                g_b[k] += cb * gmu[k];
            }
            let coef = 4.0 / (den * den) * (dot(&gmu, &b) + dot(&gmu, &t));
            for k in 0..p {
                gt[k] = 2.0 / den * gmu[k] - coef * t[k];
            }
            for k in 0..p {
                let f = wi * gt[k];
                for j in 0..q {
                    g_om[k * q + j] += f * z[j];
                }
            }
            if qs > 0 {
                let x = &self.xs[i * qs..(i + 1) * qs];
                // gt' Omega_s x_s
                let mut s = 0.0;
                for k in 0..p {
                    s += gt[k] * dot(&om[k * q..k * q + qs], x);
                }
                let f = -wi * s / (dd * dd);
                for j in 0..qs {
                    g_r[j] += f * x[j];
                }
            }
        }

        let scale = -1.0 / self.wsum;
        let f = scale * ll;
        if !f.is_finite() {
            return invalid(grad);
        }
        let mut al = f;
        let mut comm = vec![];
        let mut g_omega = DMatrix::from_row_slice(p, q, &g_om) * scale;
        if l.constrained() {
            let os = omega.columns(0, qs).into_owned();
            let oe = omega.columns(qs, qe).into_owned();
            let am = &os * os.transpose();
            let bmat = &oe * oe.transpose();
            let cm = &am * &bmat - &bmat * &am;
            let mut wm = DMatrix::zeros(p, p);
            let mut idx = 0;
            for i in 0..p {
                for j in (i + 1)..p {
                    let cij = cm[(i, j)];
                    comm.push(cij);
                    al += self.lambda[idx] * cij + 0.5 * self.rho * cij * cij;
                    wm[(i, j)] = self.lambda[idx] + self.rho * cij;
                    idx += 1;
                }
            }
            let ga = &wm * &bmat - &bmat * &wm;
            let gbm = &am * &wm - &wm * &am;
            let ds = (&ga + ga.transpose()) * &os;
            let de = (&gbm + gbm.transpose()) * &oe;
            let mut blk = g_omega.columns_mut(0, qs);
            blk += ds;
            let mut blk = g_omega.columns_mut(qs, qe);
            blk += de;
        }
        let eval = Eval { f, al, comm, valid: true };
        let Some(grad) = grad else {
            return eval;
        };

        // Omega = P_b M P_r
        let bv = DVector::from_column_slice(&b);
        let mut sv = DVector::zeros(q);
        sv.rows_mut(0, qs).copy_from_slice(&r);
        let pb = DMatrix::identity(p, p) - &bv * bv.transpose();
        let pr = DMatrix::identity(q, q) - &sv * sv.transpose();
        let g_m = &pb * &g_omega * &pr;
        let mut gb = DVector::from_column_slice(&g_b) * scale;
        gb -= &g_omega * (&pr * (m.transpose() * &bv)) + &m * (&pr * (g_omega.transpose() * &bv));
        let pbm = &pb * &m;
        let gs = -(pbm.transpose() * (&g_omega * &sv) + g_omega.transpose() * (&pbm * &sv));
        let mut gr = DVector::from_column_slice(&g_r) * scale;
        for j in 0..qs {
            gr[j] += gs[j];
        }

        grad.iter_mut().for_each(|x| *x = 0.0);
        if l.svmf() {
            let g_ax = DMatrix::from_column_slice(p, k1, &g_ax) * scale;
            let mut gg = DVector::from_column_slice(&g_g) * scale;
            // axes = R' B with R' = I - d'd'/s'
            for j in 0..k1 {
                let gaj = g_ax.column(j);
                let bj = bm.column(j);
                let al_j = dprime.dot(&bj);
                let be_j = gaj.dot(&dprime);
                gg -= (gaj * al_j + bj * be_j) / sprime;
                gg += &self.anchor * (al_j * be_j / (sprime * sprime));
            }
            let g_bm = &g_ax - &dprime * (dprime.transpose() * &g_ax) / sprime;
            let g_q = self.axes0.transpose() * g_bm;
            let id = DMatrix::<f64>::identity(k1, k1);
            let g_s = -((&id + &qm).transpose() * g_q * inv_is.transpose());
            let mut idx = l.off_s();
            for i in 0..k1 {
                for j in (i + 1)..k1 {
                    grad[idx] = g_s[(i, j)] - g_s[(j, i)];
                    idx += 1;
                }
            }
            match l.gamma {
                GammaParam::Free => {
                    let proj = &gg - &gv * gv.dot(&gg);
                    for k in 0..p {
                        grad[l.off_g() + k] = proj[k] / ng;
                    }
                }
                GammaParam::TiedB => gb += gg,
                GammaParam::Fixed => {}
            }
            for k in 0..l.n_eta() {
                grad[l.off_e() + k] = scale * g_e[k];
            }
        }
        if l.has_kappa() {
            grad[l.off_k()] = scale * g_k;
        }
        let gbp = &gb - &bv * bv.dot(&gb);
        for k in 0..p {
            grad[k] = gbp[k] / nb;
        }
        if qs > 0 {
            let rv = DVector::from_column_slice(&r);
            let grp = &gr - &rv * rv.dot(&gr);
            for j in 0..qs {
                grad[l.off_r() + j] = grp[j] / nr;
            }
        }
        for i in 0..p {
            for j in 0..q {
                grad[l.off_m() + i * q + j] = g_m[(i, j)];
            }
        }
        eval
    }
}

/// The joint log-likelihood of a model state as a function of the
/// unconstrained internal coordinates, for gradient checks and profiling.
#[derive(Debug, Clone)]
pub struct LoglikProblem {
    obj: Objective,
    start: Vec<f64>,
}

impl LoglikProblem {
    /// `estimate_gamma01` adds the base location to the coordinates; otherwise
    /// it stays at `state.base`.
    pub fn new(data: &Dataset, state: &ModelState, model: ErrorModel, estimate_gamma01: bool) -> Result<Self> {
        let mode = match model {
            ErrorModel::Vmf => Mode::Vmf,
            ErrorModel::Svmf => Mode::Svmf,
        };
        let gamma = if estimate_gamma01 { GammaParam::Free } else { GammaParam::Fixed };
        let obj = Objective::new(data, mode, gamma, state.error.a1(), &state.base)?;
        let start = obj.encode(&state.link, Some(&state.error), Some(state.base.gamma01()));
        Ok(Self { obj, start })
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    /// Internal coordinates of the state the problem was built from.
    pub fn point(&self) -> Vec<f64> {
        self.start.clone()
    }

    pub fn loglik(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        let e = self.obj.eval(theta, None);
        if !e.valid {
            return Err(Error::Pole("likelihood undefined at this point".into()));
        }
        Ok(-e.f * self.obj.total_weight())
    }

    /// Gradient of the log-likelihood in internal coordinates.
    pub fn loglik_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(theta)?;
        let mut g = vec![0.0; theta.len()];
        let e = self.obj.eval(theta, Some(&mut g));
        if !e.valid {
            return Err(Error::Pole("likelihood undefined at this point".into()));
        }
        let w = self.obj.total_weight();
        Ok(g.into_iter().map(|x| -x * w).collect())
    }

    /// Layout offsets of the blocks `(r, M, kappa, eta, gamma01, skew, end)`.
    pub fn offsets(&self) -> [usize; 7] {
        let l = &self.obj.layout;
        [l.off_r(), l.off_m(), l.off_k(), l.off_e(), l.off_g(), l.off_s(), l.len()]
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Dimension(format!("expected {} coordinates, got {}", self.dim(), theta.len())));
        }
        Ok(())
    }
}
