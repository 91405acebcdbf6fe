mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use sphreg::error_model::{mean_resultant_length, rotated_residual};
use sphreg::estimation::*;
use sphreg::geometry::amaral_rotation;
use sphreg::link::{commutator_residual, link_eval_reparam, to_reparam, CovariateCase, LinkDims};
use sphreg::simulate::{random_covariates, simulate_responses, Design};

fn dims(p: usize, q_s: usize, q_e: usize) -> LinkDims {
    LinkDims::new(p, q_s, q_e).unwrap()
}

fn svmf_state(p: usize, q_s: usize, q_e: usize) -> ModelState {
    let sc: Vec<f64> = if p == 3 { vec![2.0, 0.5] } else { vec![2.0, 1.4, 1.0, 1.0 / 2.8] };
    true_state(&true_link(p, q_s, q_e), 50.0, &sc)
}

fn max_rel_error(prob: &LoglikProblem, x: &[f64]) -> f64 {
    let g = prob.loglik_gradient(x).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[i] += h;
        b[i] -= h;
        let fd = (prob.loglik(&a).unwrap() - prob.loglik(&b).unwrap()) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1.0));
    }
    worst
}

#[test]
fn gradient_matches_central_differences() {
    let configs = [
        ((3, 3, 2), ErrorModel::Svmf, true),
        ((3, 0, 2), ErrorModel::Svmf, false),
        ((3, 3, 0), ErrorModel::Vmf, false),
        ((5, 0, 5), ErrorModel::Svmf, true),
    ];
    for (k, ((p, qs, qe), model, est)) in configs.into_iter().enumerate() {
        let st = svmf_state(p, qs, qe);
        let data = simulate(&st, ErrorModel::Svmf, 150, 10 + k as u64);
        let prob = LoglikProblem::new(&data, &st, model, est).unwrap();
        let mut r = rng(100 + k as u64);
        for _ in 0..20 {
            let x: Vec<f64> = prob.point().iter().map(|v| v + 0.1 * (r.random::<f64>() - 0.5)).collect();
            let e = max_rel_error(&prob, &x);
            assert!(e < 1e-5, "({p},{qs},{qe}) {model:?}: relative error {e:e}");
        }
    }
}

#[test]
fn kappa_perturbation_moves_only_the_kappa_component() {
    // zero-noise responses with unit scales: every other component vanishes for any kappa
    let link = true_link(3, 3, 2);
    let st = true_state(&link, 20.0, &[1.0, 1.0]);
    let mut r = rng(3);
    let cases = random_covariates(&mut r, link.dims(), 60, &Design::default()).unwrap();
    let y: Vec<_> = cases.iter().map(|x| st.mean(x).unwrap()).collect();
    let data = Dataset::from_cases(y, &cases, None).unwrap();
    let prob = LoglikProblem::new(&data, &st, ErrorModel::Svmf, true).unwrap();
    let k = prob.offsets()[2];
    let x0 = prob.point();
    let mut x1 = x0.clone();
    x1[k] += 0.7;
    let g0 = prob.loglik_gradient(&x0).unwrap();
    let g1 = prob.loglik_gradient(&x1).unwrap();
    for i in 0..x0.len() {
        if i != k {
            assert!((g1[i] - g0[i]).abs() < 1e-10, "component {i}: {} vs {}", g0[i], g1[i]);
        }
    }
    // with y = mu the kappa score is n kappa (1 - A_3(kappa))
    for (x, g) in [(&x0, &g0), (&x1, &g1)] {
        let kappa = x[k].exp();
        let want = 60.0 * kappa * (1.0 - (1.0 / kappa.tanh() - 1.0 / kappa));
        assert!((g[k] - want).abs() < 1e-9 * want, "{} vs {want}", g[k]);
    }
}

#[test]
fn gradient_vanishes_at_a_fitted_optimum() {
    let st = svmf_state(3, 0, 2);
    let data = simulate(&st, ErrorModel::Svmf, 400, 21);
    let fit = fit_svmf(&data, &FitConfig::svmf()).unwrap();
    assert!(fit.converged);
    let prob = LoglikProblem::new(&data, &fit.state(), ErrorModel::Svmf, true).unwrap();
    let g = prob.loglik_gradient(&prob.point()).unwrap();
    let per_case = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / data.total_weight();
    assert!(per_case < 1e-6, "gradient per case {per_case:e}");
}

#[test]
fn default_init_matches_stated_matrices() {
    let l = default_init(dims(3, 3, 2));
    assert_eq!(l.b0(), &DMatrix::identity(3, 3));
    assert_eq!(l.bs().as_slice(), &[0.9, 0.9]);
    assert_eq!(l.be().as_slice(), &[0.9, 0.9]);
    assert_eq!(l.rs().unwrap(), &DMatrix::from_row_slice(3, 3, &[1., 0., 0., 0., 1., 0., 0., 0., 1.]));
    assert_eq!(l.re().unwrap(), &DMatrix::from_row_slice(2, 2, &[1., 0., 0., 1.]));
    let rp = to_reparam(&l);
    let (r1, r2, r3) = rp.constraint_residuals();
    assert!(r1 < 1e-12 && r2 < 1e-12 && r3 < 1e-12);
}

#[test]
fn dof_counts() {
    let svmf = ModelFlags { model: ErrorModel::Svmf, gamma01_estimated: true };
    let vmf = ModelFlags { model: ErrorModel::Vmf, gamma01_estimated: false };
    assert_eq!(count_dof(dims(3, 3, 2), svmf).unwrap(), 16);
    assert_eq!(count_dof(dims(5, 0, 5), svmf).unwrap(), 38);
    assert_eq!(count_dof(dims(2, 2, 0), vmf).unwrap(), 4);
    assert!(LinkDims::new(3, 2, 0).is_err());
}

proptest! {
    #[test]
    fn dof_differences_are_the_error_blocks(p in 2usize..7, extra_s in 0usize..3, extra_e in 0usize..3, use_s: bool) {
        let q_s = if use_s { p + extra_s } else { 0 };
        let q_e = p - 1 + extra_e;
        let d = dims(p, q_s, q_e);
        let vmf = count_dof(d, ModelFlags { model: ErrorModel::Vmf, gamma01_estimated: false }).unwrap();
        let tied = count_dof(d, ModelFlags { model: ErrorModel::Svmf, gamma01_estimated: false }).unwrap();
        let free = count_dof(d, ModelFlags { model: ErrorModel::Svmf, gamma01_estimated: true }).unwrap();
        prop_assert_eq!(tied - vmf, (p - 2) + (p - 1) * (p - 2) / 2);
        prop_assert_eq!(free - tied, p - 1);
        // the link block is the dimension of its natural-parameter manifold
        let so = |k: usize| k * k.saturating_sub(1) / 2;
        let stiefel = |q: usize, k: usize| so(q) - so(q - k);
        let mut link = so(p) + 1;
        if q_s > 0 { link += (p - 1) + stiefel(q_s, p); }
        link += (p - 1) + stiefel(q_e, p - 1);
        prop_assert_eq!(vmf, link);
    }

    #[test]
    fn default_init_is_feasible(p in 2usize..7, extra in 0usize..3) {
        let rp = to_reparam(&default_init(dims(p, p + extra, p - 1 + extra)));
        let (r1, r2, r3) = rp.constraint_residuals();
        prop_assert!(r1 < 1e-12 && r2 < 1e-12 && r3 < 1e-12);
    }
}

fn mean_dir(v: &[DVector<f64>]) -> DVector<f64> {
    v.iter().fold(DVector::zeros(v[0].len()), |a, b| a + b).normalize()
}

#[test]
fn preliminary_transform_round_trip_and_alignment() {
    let st = svmf_state(3, 3, 2);
    let data = simulate(&st, ErrorModel::Svmf, 80, 4);
    let (t, rec) = preliminary_transform(&data).unwrap();
    let e1 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    assert!((mean_dir(t.responses()) - &e1).amax() < 1e-10);
    assert!((mean_dir(t.spherical().unwrap()) - &e1).amax() < 1e-10);
    let back = rec.invert(&t).unwrap();
    for i in 0..data.n() {
        assert!((&back.responses()[i] - &data.responses()[i]).amax() < 1e-10);
        assert!((&back.spherical().unwrap()[i] - &data.spherical().unwrap()[i]).amax() < 1e-10);
        assert!((&back.euclidean().unwrap()[i] - &data.euclidean().unwrap()[i]).amax() < 1e-10);
    }
    // a link carried to the transformed frame predicts the transformed means
    let lt = rec.link_to_transformed(&st.link).unwrap();
    for i in 0..data.n() {
        let a = link_eval_reparam(&lt, &t.case(i)).unwrap();
        let b = &rec.response_rotation * st.mean(&data.case(i)).unwrap();
        assert!((a - b).amax() < 1e-10);
    }
    let lo = rec.link_to_original(&lt).unwrap();
    assert!((lo.omega() - st.link.omega()).amax() < 1e-10);
}

#[test]
fn preliminary_transform_centers_with_an_intercept() {
    let mut r = rng(8);
    let n = 50;
    let y: Vec<_> = (0..n).map(|_| unit(&[2.0 + r.random::<f64>(), r.random(), r.random()])).collect();
    let xe: Vec<_> = (0..n)
        .map(|_| DVector::from_column_slice(&[1.0, 3.0 + r.random::<f64>(), -1.0 + 2.0 * r.random::<f64>()]))
        .collect();
    let data = Dataset::new(y, None, Some(xe), None).unwrap();
    let (t, rec) = preliminary_transform(&data).unwrap();
    assert!(rec.euclidean_centered && rec.euclidean_rotated);
    let e = t.euclidean().unwrap();
    for j in 0..3 {
        let m: f64 = e.iter().map(|x| x[j]).sum::<f64>() / n as f64;
        if j == 0 {
            assert!((m - 1.0).abs() < 1e-12, "intercept column kept");
        } else {
            assert!(m.abs() < 1e-10, "column {j} mean {m}");
        }
    }
    let back = rec.invert(&t).unwrap();
    for i in 0..n {
        assert!((&back.euclidean().unwrap()[i] - &data.euclidean().unwrap()[i]).amax() < 1e-10);
    }
}

#[test]
fn aligned_data_gives_identity_record() {
    let s = 0.3f64;
    let c = (1.0 - s * s).sqrt();
    let y = vec![unit(&[c, s, 0.0]), unit(&[c, -s, 0.0]), unit(&[c, 0.0, s]), unit(&[c, 0.0, -s])];
    let xe = vec![
        DVector::from_column_slice(&[2.0, 0.0]),
        DVector::from_column_slice(&[-2.0, 0.0]),
        DVector::from_column_slice(&[0.0, 1.0]),
        DVector::from_column_slice(&[0.0, -1.0]),
    ];
    let data = Dataset::new(y, None, Some(xe), None).unwrap();
    let (t, rec) = preliminary_transform(&data).unwrap();
    assert!(rec.is_identity(), "{rec:?}");
    assert_eq!(t, data);
}

#[test]
fn vmf_fit_attains_the_maximum_on_noise_free_data() {
    let link = true_link(3, 3, 2);
    let st = true_state(&link, 50.0, &[1.0, 1.0]);
    let mut r = rng(12);
    let cases = random_covariates(&mut r, link.dims(), 120, &Design::default()).unwrap();
    let y: Vec<_> = cases.iter().map(|x| st.mean(x).unwrap()).collect();
    let data = Dataset::from_cases(y, &cases, None).unwrap();
    let fit = fit_vmf(&data, &FitConfig::vmf()).unwrap();
    let s: f64 = (0..data.n()).map(|i| data.responses()[i].dot(&fit.predict(&data.case(i)).unwrap())).sum();
    assert!((s - data.n() as f64).abs() < 1e-6, "sum y'mu = {s}");
    assert!(fit.kappa_capped);
}

#[test]
fn vmf_fit_recovers_held_out_means() {
    let link = true_link(3, 3, 2);
    let st = true_state(&link, 100.0, &[1.0, 1.0]);
    let data = simulate(&st, ErrorModel::Vmf, 500, 31);
    let fit = fit_vmf(&data, &FitConfig::vmf()).unwrap();
    assert!(fit.converged);
    let mut r = rng(32);
    let design = Design { spherical_center: st.link.rs1().cloned(), ..Design::default() };
    let held = random_covariates(&mut r, link.dims(), 100, &design).unwrap();
    let errs: Vec<f64> = held.iter().map(|x| geodesic(&fit.predict(x).unwrap(), &st.mean(x).unwrap())).collect();
    // one replicate only; the 18-of-20 rule on the max lives in the acceptance suite
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let worst = errs.iter().cloned().fold(0.0f64, f64::max);
    assert!(mean < 0.025, "mean held-out error {mean}");
    assert!(worst < 0.1, "max held-out error {worst}");
    assert!((fit.error.kappa() / 100.0 - 1.0).abs() < 0.15, "kappa {}", fit.error.kappa());
}

#[test]
fn kappa_estimate_with_known_mean() {
    let mu = unit(&[1.0, 2.0, -1.0]);
    let y = sphreg::error_model::sample_vmf(&mu, 50.0, 2000, 5).unwrap();
    let xe: Vec<_> = (0..2000).map(|_| DVector::from_column_slice(&[0.0, 0.0])).collect();
    let data = Dataset::new(y, None, Some(xe), None).unwrap();
    let k = fit_kappa(&data, &vec![mu; 2000], 1e7).unwrap();
    assert!((k.kappa / 50.0 - 1.0).abs() < 0.1, "kappa {}", k.kappa);
    assert!(!k.capped);
}

/// Independent root of `coth(k) - 1/k = r` by bisection.
fn bisect_langevin(r: f64) -> f64 {
    let f = |k: f64| 1.0 / k.tanh() - 1.0 / k - r;
    let (mut lo, mut hi) = (1e-9, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn data_with_rbar(mu: &DVector<f64>, rbar: f64, rot: &DMatrix<f64>) -> (Dataset, Vec<DVector<f64>>) {
    // two responses symmetric about mu with y'mu = rbar
    let t = (1.0 - rbar * rbar).sqrt();
    let perp = sphreg::geometry::tangent_basis(mu).unwrap().column(0).into_owned();
    let y = vec![rot * (mu * rbar + &perp * t), rot * (mu * rbar - &perp * t)];
    let xe = vec![DVector::from_column_slice(&[0.0, 0.0]); 2];
    (Dataset::new(y, None, Some(xe), None).unwrap(), vec![rot * mu, rot * mu])
}

#[test]
fn kappa_solves_the_langevin_equation() {
    let mu = unit(&[0.0, 0.0, 1.0]);
    let id = DMatrix::identity(3, 3);
    for rbar in [1e-4, 0.05, 0.3, 0.6, 0.9, 0.99, 0.9995] {
        let (d, m) = data_with_rbar(&mu, rbar, &id);
        let k = fit_kappa(&d, &m, 1e7).unwrap().kappa;
        let resid = 1.0 / k.tanh() - 1.0 / k - rbar;
        assert!(resid.abs() < 1e-8, "rbar {rbar}: residual {resid}");
        assert!((k - bisect_langevin(rbar)).abs() < 1e-6 * k.max(1.0));
    }
    let (d, m) = data_with_rbar(&mu, 1e-12, &id);
    assert!(fit_kappa(&d, &m, 1e7).unwrap().kappa < 1e-9);
}

#[test]
fn kappa_is_rotation_invariant() {
    let mu = unit(&[0.2, -0.4, 1.0]);
    let q = amaral_rotation(&unit(&[1.0, 0.0, 0.0]), &unit(&[0.3, 0.9, -0.2])).unwrap().into_inner();
    let id = DMatrix::identity(3, 3);
    let (a, ma) = data_with_rbar(&mu, 0.8, &id);
    let (b, mb) = data_with_rbar(&mu, 0.8, &q);
    let ka = fit_kappa(&a, &ma, 1e7).unwrap().kappa;
    let kb = fit_kappa(&b, &mb, 1e7).unwrap().kappa;
    assert!((ka - kb).abs() < 1e-9 * ka);
}

proptest! {
    #[test]
    fn kappa_inverts_mean_resultant_length(p in 2usize..8, k in 0.01f64..500.0) {
        let r = mean_resultant_length(p, k);
        let mu = DVector::from_fn(p, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let t = (1.0 - r * r).sqrt();
        let mut a = mu.clone() * r;
        a[1] = t;
        let mut b = mu.clone() * r;
        b[1] = -t;
        let xe = vec![DVector::from_element(p - 1, 0.0); 2];
        let d = Dataset::new(vec![a, b], None, Some(xe), None).unwrap();
        let est = fit_kappa(&d, &[mu.clone(), mu], 1e7).unwrap().kappa;
        prop_assert!((est - k).abs() < 1e-6 * k.max(1.0), "{} vs {}", est, k);
    }
}

/// Means and responses from a state at `n` random covariates, with the true means.
fn draws(st: &ModelState, model: ErrorModel, n: usize, seed: u64) -> (Dataset, Vec<DVector<f64>>) {
    let mut r = rng(seed);
    let design = Design { spherical_center: st.link.rs1().cloned(), ..Design::default() };
    let cases = random_covariates(&mut r, st.link.dims(), n, &design).unwrap();
    let y = simulate_responses(&mut r, st, model, &cases).unwrap();
    let mu = cases.iter().map(|x| st.mean(x).unwrap()).collect();
    (Dataset::from_cases(y, &cases, None).unwrap(), mu)
}

#[test]
fn moment_axes_isotropic_under_vmf() {
    let st = true_state(&true_link(3, 0, 2), 40.0, &[1.0, 1.0]);
    let (d, mu) = draws(&st, ErrorModel::Vmf, 5000, 41);
    let m = moment_axes(&d, &mu, st.base.gamma01()).unwrap();
    assert!(m.eigenvalues[0] / m.eigenvalues[1] < 1.2, "{:?}", m.eigenvalues);
    assert!(m.gamma_eigenvalue.abs() < 1e-10);
    assert!(m.skipped.is_empty());
    let prod: f64 = m.scales.iter().product();
    assert!((prod - 1.0).abs() < 1e-12);
}

#[test]
fn moment_axes_recover_order_and_directions() {
    let link = true_link(4, 0, 3);
    let st = true_state(&link, 60.0, &[2.0, 1.0, 0.5]);
    let (d, mu) = draws(&st, ErrorModel::Svmf, 5000, 42);
    let m = moment_axes(&d, &mu, st.base.gamma01()).unwrap();
    assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    for j in 0..3 {
        let c = m.axes.column(j).dot(&st.base.axes().column(j)).abs().min(1.0);
        let deg = c.acos().to_degrees();
        assert!(deg < 10.0, "axis {j} off by {deg} degrees");
    }
    assert!(m.scales[0] > m.scales[1] && m.scales[1] > m.scales[2]);
    // residuals are tangent at gamma01
    let v = rotated_residual(&d.responses()[0], &mu[0], st.base.gamma01()).unwrap();
    assert!(v.dot(st.base.gamma01()).abs() < 1e-12);
}

#[test]
fn svmf_fit_recovers_scales_and_beats_truth() {
    let st = svmf_state(3, 3, 2);
    let data = simulate(&st, ErrorModel::Svmf, 1000, 51);
    let fit = fit_svmf(&data, &FitConfig::svmf()).unwrap();
    let truth = st.loglik(&data, ErrorModel::Svmf).unwrap();
    assert!(fit.loglik >= truth - 1e-6, "fit {} truth {truth}", fit.loglik);
    for (est, tru) in fit.error.scales()[1..].iter().zip([2.0, 0.5]) {
        assert!((est / tru - 1.0).abs() < 0.15, "scale {est} vs {tru}");
    }
    assert!((fit.aic - (2.0 * fit.dof as f64 - 2.0 * fit.loglik)).abs() < 1e-9);
    assert_eq!(fit.dof, 16);
    // monotone stages, and the vMF fit is dominated
    let ll: Vec<f64> = fit.stages.iter().map(|s| s.loglik).collect();
    assert_eq!(ll.len(), 3);
    assert!(ll.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{ll:?}");
    let vmf = fit_vmf(&data, &FitConfig::vmf()).unwrap();
    assert!(fit.loglik >= vmf.loglik - 1e-6);
    // constraints at exit
    assert!((fit.reparam.b01().norm() - 1.0).abs() < 1e-8);
    assert!((fit.reparam.rs1().unwrap().norm() - 1.0).abs() < 1e-8);
    assert!(commutator_residual(&fit.reparam) < 1e-8);
    // reported log-likelihood is the state's
    assert!((fit.state().loglik(&data, ErrorModel::Svmf).unwrap() - fit.loglik).abs() < 1e-9);
}

#[test]
fn svmf_fit_on_vmf_data_gives_unit_scales() {
    let st = true_state(&true_link(3, 0, 2), 50.0, &[1.0, 1.0]);
    let data = simulate(&st, ErrorModel::Vmf, 2000, 61);
    let fit = fit_svmf(&data, &FitConfig::svmf()).unwrap();
    for a in &fit.error.scales()[1..] {
        assert!((a - 1.0).abs() < 0.1, "scale {a}");
    }
}

#[test]
fn gamma_modes_fit_and_count() {
    let st = svmf_state(3, 0, 2);
    let data = simulate(&st, ErrorModel::Svmf, 300, 71);
    let free = fit_svmf(&data, &FitConfig::svmf()).unwrap();
    for mode in [GammaMode::TiedToB01, GammaMode::TiedToMean] {
        let cfg = FitConfig { gamma01: mode, ..FitConfig::svmf() };
        let f = fit_svmf(&data, &cfg).unwrap();
        assert_eq!(f.dof, free.dof - 2);
        assert!(f.loglik <= free.loglik + 1e-6);
        if mode == GammaMode::TiedToB01 {
            assert!((f.base.gamma01() - f.reparam.b01()).amax() < 1e-9);
        } else {
            assert!((f.base.gamma01() - data.mean_direction().unwrap()).amax() < 1e-9);
        }
    }
    let frozen = fit_svmf(&data, &FitConfig { freeze_gamma01: true, ..FitConfig::svmf() }).unwrap();
    assert!((frozen.base.gamma01() - data.mean_direction().unwrap()).amax() < 1e-9);
    assert_eq!(frozen.dof, free.dof - 2);
}

#[test]
fn fits_are_rotation_equivariant() {
    let st = svmf_state(3, 3, 0);
    let data = simulate(&st, ErrorModel::Svmf, 300, 81);
    let q = amaral_rotation(&unit(&[1.0, 0.0, 0.0]), &unit(&[0.2, 0.7, -0.6])).unwrap().into_inner();
    let rot = |v: &[DVector<f64>]| v.iter().map(|x| &q * x).collect::<Vec<_>>();
    let rdata = Dataset::new(rot(data.responses()), Some(rot(data.spherical().unwrap())), None, None).unwrap();
    for cfg in [FitConfig::vmf(), FitConfig::svmf()] {
        let a = fit(&data, &cfg).unwrap();
        let b = fit(&rdata, &cfg).unwrap();
        assert!((a.loglik - b.loglik).abs() < 1e-6 * a.loglik.abs().max(1.0));
        for i in 0..data.n() {
            let pa = &q * a.predict(&data.case(i)).unwrap();
            let pb = b.predict(&rdata.case(i)).unwrap();
            assert!(geodesic(&pa, &pb) < 1e-6, "case {i}: {}", geodesic(&pa, &pb));
        }
    }
}

#[test]
fn multistart_is_deterministic_and_agrees_on_a_unimodal_problem() {
    let st = true_state(&true_link(3, 0, 2), 30.0, &[1.0, 1.0]);
    let data = simulate(&st, ErrorModel::Vmf, 200, 91);
    let cfg = FitConfig::vmf();
    let a = multistart_fit(&data, &cfg, 6, 7).unwrap();
    let b = multistart_fit(&data, &cfg, 6, 7).unwrap();
    assert_eq!(a.starts, b.starts);
    assert_eq!(a.starts.len(), 6);
    let ll: Vec<f64> = a.starts.iter().map(|s| s.loglik.unwrap()).collect();
    for v in &ll {
        assert!((v - ll[0]).abs() < 1e-4, "{ll:?}");
    }
    let one = multistart_fit(&data, &cfg, 1, 7).unwrap();
    let single = fit(&data, &cfg).unwrap();
    assert_eq!(one.loglik, single.loglik);
    assert_eq!(one.reparam, single.reparam);
}

#[test]
fn warm_start_reproduces_the_optimum() {
    let st = svmf_state(3, 0, 2);
    let data = simulate(&st, ErrorModel::Svmf, 300, 95);
    let cold = fit_svmf(&data, &FitConfig::svmf()).unwrap();
    let cfg = FitConfig { start: Some(cold.state()), ..FitConfig::svmf() };
    let warm = fit_svmf(&data, &cfg).unwrap();
    assert!((warm.loglik - cold.loglik).abs() < 1e-6);
    assert!(warm.iterations < cold.iterations);
}

#[test]
fn fit_result_serializes() {
    let st = svmf_state(3, 0, 2);
    let data = simulate(&st, ErrorModel::Svmf, 100, 97);
    let fit = fit_svmf(&data, &FitConfig::svmf()).unwrap();
    let s = serde_json::to_string(&fit).unwrap();
    let back: FitResult = serde_json::from_str(&s).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), s);
    let probe = CovariateCase::euclidean(DVector::from_column_slice(&[0.3, -0.2])).unwrap();
    assert_eq!(back.predict(&probe).unwrap(), fit.predict(&probe).unwrap());
}

#[test]
fn invalid_configs_are_rejected() {
    let st = svmf_state(3, 0, 2);
    let data = simulate(&st, ErrorModel::Svmf, 20, 99);
    for cfg in [
        FitConfig { a1: 0.0, ..FitConfig::svmf() },
        FitConfig { tol_grad: 0.0, ..FitConfig::svmf() },
        FitConfig { n_starts: 0, ..FitConfig::svmf() },
    ] {
        assert!(matches!(fit(&data, &cfg), Err(sphreg::Error::InvalidParameter(_))));
    }
}
