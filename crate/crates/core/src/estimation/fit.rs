//! The fitting pipeline: mean-link fit, concentration, moment axes, and the
//! joint scaled von Mises-Fisher fit, with multistart.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::brent::BrentRoot;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::objective::{GammaParam, Mode, Objective};
use super::optim::{minimize, Settings};
use super::transform::{preliminary_transform, TransformRecord};
use super::ErrorModel;
use crate::error::{Error, Result};
use crate::error_model::{
    axes_at, mean_resultant_length, rotated_residual, svmf_log_density, vmf_log_density, SvmfParams,
    TransportBase,
};
use crate::geometry::{cayley, tangent_basis, transport_matrix, SkewMatrix};
use crate::linalg::{canonical_sign, nearest_orthogonal, sym_eigen_desc};
use crate::link::{from_reparam, link_eval_reparam, to_reparam, CovariateCase, LinkDims, LinkParams, ReparamLink};

/// A complete parameter set: mean link, error parameters and transport base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub link: ReparamLink,
    pub error: SvmfParams,
    pub base: TransportBase,
}

impl ModelState {
    pub fn mean(&self, x: &CovariateCase) -> Result<DVector<f64>> {
        link_eval_reparam(&self.link, x)
    }

    /// Weighted log-likelihood of `data`, summed from the densities.
    pub fn loglik(&self, data: &Dataset, model: ErrorModel) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..data.n() {
            let w = data.weight(i);
            if w == 0.0 {
                continue;
            }
            let mu = self.mean(&data.case(i))?;
            let y = &data.responses()[i];
            let l = match model {
                ErrorModel::Vmf => vmf_log_density(y, &mu, self.error.kappa()),
                ErrorModel::Svmf => svmf_log_density(y, &axes_at(&mu, &self.base)?, &self.error)?,
            };
            total += w * l;
        }
        Ok(total)
    }
}

/// How the base location `gamma01` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// Free parameter, initialized at the sample mean direction.
    #[default]
    Estimated,
    /// `gamma01 = b01` throughout.
    TiedToB01,
    /// Fixed at the sample mean direction.
    TiedToMean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub model: ErrorModel,
    /// Fixed tail scale `a1`; never estimated.
    pub a1: f64,
    pub gamma01: GammaMode,
    /// Keep an estimated `gamma01` at its initial value.
    pub freeze_gamma01: bool,
    /// Rotate and center the data before fitting.
    pub preliminary: bool,
    pub tol_grad: f64,
    pub tol_rel: f64,
    pub tol_constraint: f64,
    pub max_iter: u64,
    pub n_starts: usize,
    pub seed: u64,
    /// Noise scale of randomized starts.
    pub start_sd: f64,
    pub kappa_max: f64,
    /// Warm start in original coordinates; replaces the default start.
    #[serde(skip)]
    pub start: Option<ModelState>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            model: ErrorModel::Svmf,
            a1: 1.0,
            gamma01: GammaMode::Estimated,
            freeze_gamma01: false,
            preliminary: true,
            tol_grad: 1e-8,
            tol_rel: 1e-10,
            tol_constraint: 1e-9,
            max_iter: 2000,
            n_starts: 1,
            seed: 0,
            start_sd: 0.3,
            kappa_max: 1e7,
            start: None,
        }
    }
}

impl FitConfig {
    pub fn vmf() -> Self {
        Self {
            model: ErrorModel::Vmf,
            ..Self::default()
        }
    }

    pub fn svmf() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.a1) {
            return Err(Error::InvalidParameter(format!("a1 = {} must be positive", self.a1)));
        }
        if !(pos(self.tol_grad) && pos(self.tol_rel) && pos(self.tol_constraint)) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_iter == 0 || self.n_starts == 0 {
            return Err(Error::InvalidParameter("max_iter and n_starts must be at least 1".into()));
        }
        if !(self.start_sd >= 0.0 && self.start_sd.is_finite()) || !pos(self.kappa_max) {
            return Err(Error::InvalidParameter("start_sd must be >= 0 and kappa_max > 0".into()));
        }
        Ok(())
    }

    fn settings(&self) -> Settings {
        Settings {
            tol_grad: self.tol_grad,
            tol_rel: self.tol_rel,
            tol_constraint: self.tol_constraint,
            max_iter: self.max_iter,
        }
    }

    fn gamma01_estimated(&self) -> bool {
        self.model == ErrorModel::Svmf && self.gamma01 == GammaMode::Estimated && !self.freeze_gamma01
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub id: usize,
    /// Final log-likelihood, absent when the start failed.
    pub loglik: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ErrorModel,
    pub gamma01_mode: GammaMode,
    pub link: LinkParams,
    pub reparam: ReparamLink,
    pub error: SvmfParams,
    pub base: TransportBase,
    pub loglik: f64,
    pub aic: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: u64,
    /// Max-abs gradient of the Lagrangian in internal coordinates.
    pub grad_norm: f64,
    /// Max-abs commutator entry before the final projection.
    pub constraint_residual: f64,
    pub kappa_capped: bool,
    pub repeated_singular_values: bool,
    /// Log-likelihood after each pipeline stage.
    pub stages: Vec<StageRecord>,
    pub starts: Vec<StartRecord>,
    pub transform: Option<TransformRecord>,
}

impl FitResult {
    pub fn state(&self) -> ModelState {
        ModelState {
            link: self.reparam.clone(),
            error: self.error.clone(),
            base: self.base.clone(),
        }
    }

    pub fn predict(&self, x: &CovariateCase) -> Result<DVector<f64>> {
        link_eval_reparam(&self.reparam, x)
    }

    pub fn dims(&self) -> LinkDims {
        self.reparam.dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFlags {
    pub model: ErrorModel,
    pub gamma01_estimated: bool,
}

/// Number of free parameters of a model.
pub fn count_dof(dims: LinkDims, flags: ModelFlags) -> Result<usize> {
    let LinkDims { p, q_s, q_e } = dims;
    let stiefel = |q: usize, k: usize, name: &str| {
        (q * k)
            .checked_sub(k * (k + 1) / 2)
            .filter(|_| q >= k)
            .ok_or_else(|| Error::Dimension(format!("{name} needs at least {k} rows, got {q}")))
    };
    let mut d = p * (p - 1) / 2;
    if q_s > 0 {
        d += (p - 1) + stiefel(q_s, p, "Rs")?;
    }
    if q_e > 0 {
        d += (p - 1) + stiefel(q_e, p - 1, "Re")?;
    }
    d += 1;
    if flags.model == ErrorModel::Svmf {
        d += (p - 2) + (p - 1) * (p - 2) / 2;
        if flags.gamma01_estimated {
            d += p - 1;
        }
    }
    Ok(d)
}

/// `B0 = I`, `Bs = Be = 0.9 I`, `Rs = (I_p, 0)'`, `Re = (I_{p-1}, 0)'`.
pub fn default_init(dims: LinkDims) -> LinkParams {
    let LinkDims { p, q_s, q_e } = dims;
    let block = |q: usize| if q > 0 { vec![0.9; p - 1] } else { vec![] };
    LinkParams::new(
        DMatrix::identity(p, p),
        block(q_s),
        block(q_e),
        (q_s > 0).then(|| DMatrix::identity(q_s, p)),
        (q_e > 0).then(|| DMatrix::identity(q_e, p - 1)),
    )
    .expect("default parameters satisfy the invariants")
}

/// The default start with Gaussian noise of scale `sd` on every natural
/// parameter, projected back: `B0` through a Cayley rotation, `Rs` and `Re`
/// to their polar factors, scales to absolute values.
pub fn perturbed_start<R: Rng + ?Sized>(dims: LinkDims, rng: &mut R, sd: f64) -> Result<LinkParams> {
    let LinkDims { p, q_s, q_e } = dims;
    let mut z = || -> f64 { sd * rng.sample::<f64, _>(StandardNormal) };
    let upper: Vec<f64> = (0..p * (p - 1) / 2).map(|_| z()).collect();
    let b0 = cayley(&SkewMatrix::from_params(p, upper)?).into_inner();
    let mut scales = |q: usize| -> Vec<f64> {
        if q > 0 {
            (0..p - 1).map(|_| (0.9 + z()).abs()).collect()
        } else {
            vec![]
        }
    };
    let bs = scales(q_s);
    let be = scales(q_e);
    let mut stiefel = |q: usize, k: usize| -> Option<DMatrix<f64>> {
        (q > 0).then(|| {
            let noise = DMatrix::from_fn(q, k, |_, _| z());
            nearest_orthogonal(&(DMatrix::identity(q, k) + noise))
        })
    };
    let rs = stiefel(q_s, p);
    let re = stiefel(q_e, p - 1);
    LinkParams::sorted(b0, bs, be, rs, re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    /// The estimate hit the configured ceiling.
    pub capped: bool,
}

struct Score {
    p: usize,
    target: f64,
}

impl CostFunction for Score {
    type Param = f64;
    type Output = f64;
    fn cost(&self, k: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(mean_resultant_length(self.p, *k) - self.target)
    }
}

/// Solves `A_p(kappa) = rbar` on `[0, kappa_max]`.
pub(crate) fn solve_kappa(p: usize, rbar: f64, kappa_max: f64) -> Result<KappaEstimate> {
    if !(rbar > 0.0) {
        return Ok(KappaEstimate { kappa: 0.0, capped: false });
    }
    if rbar >= 1.0 || mean_resultant_length(p, kappa_max) <= rbar {
        return Ok(KappaEstimate { kappa: kappa_max, capped: true });
    }
    let mut hi: f64 = 1.0;
    while mean_resultant_length(p, hi) < rbar {
        hi = (2.0 * hi).min(kappa_max);
    }
    let solver = BrentRoot::new(0.0, hi, 1e-14);
    let res = Executor::new(Score { p, target: rbar }, solver)
        .configure(|s| s.param(0.5 * hi).max_iters(500))
        .ctrlc(false)
        .timer(false)
        .run()
        .map_err(|e| Error::Convergence(format!("kappa root: {e}")))?;
    let kappa = *res.state().get_best_param().ok_or_else(|| Error::Convergence("kappa root".into()))?;
    Ok(KappaEstimate { kappa, capped: false })
}

/// Maximum-likelihood von Mises-Fisher concentration given fitted means.
pub fn fit_kappa(data: &Dataset, mu: &[DVector<f64>], kappa_max: f64) -> Result<KappaEstimate> {
    if mu.len() != data.n() {
        return Err(Error::Dimension(format!("{} means for {} cases", mu.len(), data.n())));
    }
    let s: f64 = (0..data.n()).map(|i| data.weight(i) * data.responses()[i].dot(&mu[i])).sum();
    solve_kappa(data.p(), s / data.total_weight(), kappa_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentAxes {
    /// Eigenvectors spanning the tangent space at `gamma01`, by decreasing eigenvalue.
    pub axes: DMatrix<f64>,
    /// Eigenvalues of the weighted mean of `v v'`, matching `axes`.
    pub eigenvalues: Vec<f64>,
    /// `gamma01' S gamma01`; zero up to rounding.
    pub gamma_eigenvalue: f64,
    /// Per-axis standard deviations normalized to product one.
    pub scales: Vec<f64>,
    /// Cases whose mean is antipodal to `gamma01`.
    pub skipped: Vec<usize>,
}

/// Axes and preliminary scales from the second moment of rotated residuals.
pub fn moment_axes(data: &Dataset, mu: &[DVector<f64>], gamma01: &DVector<f64>) -> Result<MomentAxes> {
    let p = data.p();
    if mu.len() != data.n() || gamma01.len() != p {
        return Err(Error::Dimension("means or gamma01 do not match the data".into()));
    }
    let mut s = DMatrix::zeros(p, p);
    let mut wsum = 0.0;
    let mut skipped = vec![];
    for (i, m) in mu.iter().enumerate() {
        if 1.0 + gamma01.dot(m) <= 1e-10 {
            skipped.push(i);
            continue;
        }
        let v = rotated_residual(&data.responses()[i], m, gamma01)?;
        let w = data.weight(i);
        s += &v * v.transpose() * w;
        wsum += w;
    }
    if !(wsum > 0.0) {
        return Err(Error::Degenerate("every mean is antipodal to gamma01".into()));
    }
    s /= wsum;
    let t = tangent_basis(gamma01)?;
    let (vals, vecs) = sym_eigen_desc(&(t.transpose() * &s * &t));
    let mut axes = t * vecs;
    for mut c in axes.column_iter_mut() {
        let mut v = c.clone_owned();
        canonical_sign(&mut v, 1e-12);
        c.copy_from(&v);
    }
    let top = vals[0].max(f64::MIN_POSITIVE);
    let sd: Vec<f64> = vals.iter().map(|l| l.max(1e-24 * top).sqrt()).collect();
    let log_mean = sd.iter().map(|v| v.ln()).sum::<f64>() / sd.len() as f64;
    let scales = sd.iter().map(|v| (v.ln() - log_mean).exp()).collect();
    Ok(MomentAxes {
        axes,
        eigenvalues: vals,
        gamma_eigenvalue: gamma01.dot(&(&s * gamma01)),
        scales,
        skipped,
    })
}

/// Product-one scales; the last one absorbs rounding.
fn normalized_scales(a1: f64, rest: &[f64]) -> Vec<f64> {
    let mut out = vec![a1];
    out.extend_from_slice(&rest[..rest.len() - 1]);
    let s: f64 = rest[..rest.len() - 1].iter().map(|a| a.ln()).sum();
    out.push((-s).exp());
    out
}

fn means(data: &Dataset, link: &ReparamLink) -> Result<Vec<DVector<f64>>> {
    (0..data.n()).map(|i| link_eval_reparam(link, &data.case(i))).collect()
}

/// Snaps a near-feasible link onto the constraint set.
/// An unmet constraint at exit is an optimizer failure, not bad input.
fn project_link(raw: &ReparamLink) -> Result<(ReparamLink, bool)> {
    let rec = from_reparam(raw).map_err(|e| match e {
        Error::Constraint { .. } => Error::Convergence(format!("constraints not met at exit: {e}")),
        e => e,
    })?;
    Ok((to_reparam(&rec.params), rec.repeated_singular_values))
}

/// Fit in the transformed coordinates, before mapping back.
#[derive(Debug, Clone)]
struct Fitted {
    state: ModelState,
    repeated: bool,
    iterations: u64,
    converged: bool,
    grad_norm: f64,
    constraint: f64,
    kappa_capped: bool,
    stages: Vec<StageRecord>,
}

impl Fitted {
    fn loglik(&self) -> f64 {
        self.stages.last().map_or(f64::NEG_INFINITY, |s| s.loglik)
    }
}

enum Init {
    Link(ReparamLink),
    State(ModelState),
}

fn vmf_core(data: &Dataset, start: &ReparamLink, cfg: &FitConfig) -> Result<Fitted> {
    let base = TransportBase::canonical(start.b01().clone())?;
    let mut obj = Objective::new(data, Mode::MeanOnly, GammaParam::Fixed, 1.0, &base)?;
    let x0 = obj.encode(start, None, None);
    let out = minimize(&mut obj, x0, &cfg.settings());
    let (link, repeated) = project_link(&obj.decode_link(&out.theta)?)?;
    let mu = means(data, &link)?;
    let k = fit_kappa(data, &mu, cfg.kappa_max)?;
    let base = TransportBase::canonical(data.mean_direction().unwrap_or_else(|| link.b01().clone()))?;
    let state = ModelState {
        link,
        error: SvmfParams::isotropic(k.kappa, 1.0, data.p())?,
        base,
    };
    let ll = state.loglik(data, ErrorModel::Vmf)?;
    Ok(Fitted {
        state,
        repeated,
        iterations: out.iterations,
        converged: out.converged,
        grad_norm: out.grad_norm,
        constraint: out.constraint,
        kappa_capped: k.capped,
        stages: vec![StageRecord {
            stage: "vmf".into(),
            loglik: ll,
        }],
    })
}

/// `A_p(kappa) = mean(u / sqrt(J))` is the score equation of `kappa` with
/// everything else held fixed.
fn refine_kappa(data: &Dataset, state: &ModelState, kappa_max: f64) -> Result<KappaEstimate> {
    let a = state.error.scales();
    let mut s = 0.0;
    for i in 0..data.n() {
        let mu = state.mean(&data.case(i))?;
        let frame = axes_at(&mu, &state.base)?;
        let c = frame.matrix().tr_mul(&data.responses()[i]);
        let j: f64 = c.iter().zip(a).map(|(c, a)| (c / a).powi(2)).sum();
        s += data.weight(i) * c[0] / a[0] / j.sqrt();
    }
    solve_kappa(data.p(), s / data.total_weight(), kappa_max)
}

fn svmf_core(data: &Dataset, init: Init, cfg: &FitConfig) -> Result<Fitted> {
    let p = data.p();
    let s = cfg.settings();
    let gamma = match (cfg.gamma01, cfg.freeze_gamma01) {
        (GammaMode::TiedToB01, _) => GammaParam::TiedB,
        (GammaMode::Estimated, false) => GammaParam::Free,
        _ => GammaParam::Fixed,
    };
    let mean_dir = data.mean_direction();
    let mut stages = vec![];
    let mut iterations = 0;
    let mut kappa_capped = false;
    // (link, candidate (error, base) pairs)
    let (link0, candidates) = match init {
        Init::Link(start) => {
            let v = vmf_core(data, &start, cfg)?;
            iterations += v.iterations;
            kappa_capped |= v.kappa_capped;
            stages.extend(v.stages);
            let link = v.state.link;
            // an estimated base location starts at the sample mean direction or at
            // b01, whichever fits better; the mean can be far off when the link
            // spreads the responses widely
            let mut locations = vec![];
            match cfg.gamma01 {
                GammaMode::TiedToB01 => locations.push(link.b01().clone()),
                GammaMode::TiedToMean => locations.push(mean_dir.clone().unwrap_or_else(|| link.b01().clone())),
                GammaMode::Estimated => {
                    locations.extend(mean_dir.clone());
                    if !cfg.freeze_gamma01 || locations.is_empty() {
                        locations.push(link.b01().clone());
                    }
                }
            }
            let mu = means(data, &link)?;
            let kappa = v.state.error.kappa();
            let mut cands = vec![];
            for g in locations {
                let Ok(mom) = moment_axes(data, &mu, &g) else { continue };
                let base = TransportBase::new(g, mom.axes)?;
                cands.push((SvmfParams::new(kappa, normalized_scales(cfg.a1, &mom.scales))?, base.clone()));
                cands.push((SvmfParams::isotropic(kappa, cfg.a1, p)?, base));
            }
            (link, cands)
        }
        Init::State(st) => {
            let target = match cfg.gamma01 {
                GammaMode::TiedToB01 => Some(st.link.b01().clone()),
                GammaMode::TiedToMean => mean_dir.clone(),
                GammaMode::Estimated => None,
            };
            let base = match target {
                Some(g) if (&g - st.base.gamma01()).amax() > 0.0 => {
                    let r = transport_matrix(st.base.gamma01(), &g)?;
                    TransportBase::new(g, nearest_orthogonal(&(r * st.base.axes())))?
                }
                _ => st.base.clone(),
            };
            (st.link, vec![(st.error, base)])
        }
    };

    let mut best: Option<(Objective, Vec<f64>, f64)> = None;
    for (err, base) in &candidates {
        let obj = Objective::new(data, Mode::Svmf, gamma, cfg.a1, base)?;
        let x = obj.encode(&link0, Some(err), Some(base.gamma01()));
        let e = obj.eval(&x, None);
        if e.valid && best.as_ref().map_or(true, |b| e.f < b.2) {
            best = Some((obj, x, e.f));
        }
    }
    let (mut obj, x0, f0) = best.ok_or_else(|| Error::Pole("likelihood undefined at the start".into()))?;
    let w = obj.total_weight();
    stages.push(StageRecord {
        stage: "moment".into(),
        loglik: -f0 * w,
    });

    let out = minimize(&mut obj, x0.clone(), &s);
    iterations += out.iterations;
    // never report a worse point than the start
    let (theta, converged) = if out.f <= f0 { (out.theta, out.converged) } else { (x0, false) };
    let (link, repeated) = project_link(&obj.decode_link(&theta)?)?;
    let mut state = ModelState {
        link,
        error: obj.decode_scales(&theta)?,
        base: obj.decode_base(&theta)?,
    };
    let mut ll = state.loglik(data, ErrorModel::Svmf)?;
    if p != 3 {
        let k = refine_kappa(data, &state, cfg.kappa_max)?;
        let trial = ModelState {
            error: SvmfParams::new(k.kappa, state.error.scales().to_vec())?,
            ..state.clone()
        };
        let tl = trial.loglik(data, ErrorModel::Svmf)?;
        if tl >= ll {
            state = trial;
            ll = tl;
            kappa_capped |= k.capped;
        }
    }
    stages.push(StageRecord {
        stage: "svmf".into(),
        loglik: ll,
    });
    Ok(Fitted {
        state,
        repeated,
        iterations,
        converged,
        grad_norm: out.grad_norm,
        constraint: out.constraint,
        kappa_capped,
        stages,
    })
}

fn prepare(data: &Dataset, cfg: &FitConfig) -> Result<(Dataset, Option<TransformRecord>)> {
    if cfg.preliminary && data.n() >= data.p() {
        let (d, r) = preliminary_transform(data)?;
        Ok((d, Some(r)))
    } else {
        Ok((data.clone(), None))
    }
}

fn warm_state(record: Option<&TransformRecord>, st: &ModelState) -> Result<ModelState> {
    Ok(match record {
        Some(r) => ModelState {
            link: r.link_to_transformed(&st.link)?,
            error: st.error.clone(),
            base: r.base_to_transformed(&st.base)?,
        },
        None => st.clone(),
    })
}

fn run_core(data: &Dataset, init: Init, cfg: &FitConfig) -> Result<Fitted> {
    match (cfg.model, init) {
        (ErrorModel::Vmf, Init::Link(l)) => vmf_core(data, &l, cfg),
        (ErrorModel::Vmf, Init::State(s)) => vmf_core(data, &s.link, cfg),
        (ErrorModel::Svmf, init) => svmf_core(data, init, cfg),
    }
}

fn finish(
    data: &Dataset,
    record: Option<TransformRecord>,
    fitted: Fitted,
    starts: Vec<StartRecord>,
    cfg: &FitConfig,
) -> Result<FitResult> {
    let st = fitted.state;
    let (reparam, base) = match &record {
        Some(r) => (r.link_to_original(&st.link)?, r.base_to_original(&st.base)?),
        None => (st.link, st.base),
    };
    let rec = from_reparam(&reparam)?;
    let state = ModelState {
        link: to_reparam(&rec.params),
        error: st.error,
        base,
    };
    let loglik = state.loglik(data, cfg.model)?;
    let dof = count_dof(
        data.dims()?,
        ModelFlags {
            model: cfg.model,
            gamma01_estimated: cfg.gamma01_estimated(),
        },
    )?;
    Ok(FitResult {
        model: cfg.model,
        gamma01_mode: cfg.gamma01,
        link: rec.params,
        reparam: state.link,
        error: state.error,
        base: state.base,
        loglik,
        aic: 2.0 * dof as f64 - 2.0 * loglik,
        dof,
        converged: fitted.converged,
        iterations: fitted.iterations,
        grad_norm: fitted.grad_norm,
        constraint_residual: fitted.constraint,
        kappa_capped: fitted.kappa_capped,
        repeated_singular_values: fitted.repeated || rec.repeated_singular_values,
        stages: fitted.stages,
        starts,
        transform: record,
    })
}

/// Fits the model in `config.model` from `config.n_starts` starts.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    multistart_fit(data, config, config.n_starts, config.seed)
}

/// Mean link maximizing `sum_i w_i y_i' mu(x_i)`, then the concentration.
pub fn fit_vmf(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let cfg = FitConfig {
        model: ErrorModel::Vmf,
        ..config.clone()
    };
    fit(data, &cfg)
}

/// Joint scaled von Mises-Fisher fit.
pub fn fit_svmf(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let cfg = FitConfig {
        model: ErrorModel::Svmf,
        ..config.clone()
    };
    fit(data, &cfg)
}

/// Start 0 is the default (or warm) start; starts `1..n_starts` perturb the
/// default start with generator stream `k` of `seed`. Returns the best fit
/// with the table of all starts; failed starts are recorded, not fatal.
pub fn multistart_fit(data: &Dataset, config: &FitConfig, n_starts: usize, seed: u64) -> Result<FitResult> {
    config.validate()?;
    if n_starts == 0 {
        return Err(Error::InvalidParameter("n_starts must be at least 1".into()));
    }
    let (td, record) = prepare(data, config)?;
    let dims = td.dims()?;
    let first = match &config.start {
        Some(st) => Init::State(warm_state(record.as_ref(), st)?),
        None => Init::Link(to_reparam(&default_init(dims))),
    };
    // the default link of the original coordinates, tried when the first start fails
    let fallback = match (&config.start, &record) {
        (None, Some(r)) => Some(r.link_to_transformed(&to_reparam(&default_init(data.dims()?)))?),
        _ => None,
    };
    let mut inits = vec![first];
    for k in 1..n_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        inits.push(Init::Link(to_reparam(&perturbed_start(dims, &mut rng, config.start_sd)?)));
    }
    let run = |k: usize, init: Init| {
        let r = run_core(&td, init, config);
        match (k, &fallback) {
            (0, Some(alt)) if r.as_ref().map_or(true, |f| !f.converged) => {
                let b = run_core(&td, Init::Link(alt.clone()), config);
                match (r, b) {
                    (Ok(a), Ok(b)) => Ok(if b.loglik() > a.loglik() { b } else { a }),
                    (Err(_), b) => b,
                    (a, Err(_)) => a,
                }
            }
            _ => r,
        }
    };
    let results: Vec<Result<Fitted>> = if n_starts == 1 {
        inits.into_iter().enumerate().map(|(k, i)| run(k, i)).collect()
    } else {
        inits.into_par_iter().enumerate().map(|(k, i)| run(k, i)).collect()
    };
    let table: Vec<StartRecord> = results
        .iter()
        .enumerate()
        .map(|(id, r)| match r {
            Ok(f) => StartRecord {
                id,
                loglik: Some(f.loglik()),
                converged: f.converged,
                error: None,
            },
            Err(e) => StartRecord {
                id,
                loglik: None,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut best: Option<Fitted> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(f) => {
                if best.as_ref().map_or(true, |b| f.loglik() > b.loglik()) {
                    best = Some(f);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(f) => finish(data, record, f, table, config),
        None => Err(first_err.expect("at least one start")),
    }
}
