mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sphreg::geometry::{rotation2, wrap_angle};
use sphreg::link::*;
use sphreg::Error;

const CONFIGS: [(usize, usize, usize); 5] = [(3, 3, 2), (3, 4, 3), (5, 0, 5), (2, 2, 0), (4, 4, 0)];

fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

#[test]
fn closed_form_matches_literal_composition() {
    let mut r = rng(1);
    for &(p, qs, qe) in &CONFIGS {
        for _ in 0..50 {
            let l = random_link(&mut r, p, qs, qe);
            let x = random_case(&mut r, l.dims());
            let mu = link_eval(&l, &x).unwrap();
            assert!((mu.norm() - 1.0).abs() < 1e-12);
            assert!((mu - literal_link(&l, &x)).amax() < 1e-12);
        }
    }
}

#[test]
fn pole_branch_matches_literal_composition() {
    let mut r = rng(2);
    let l = random_link(&mut r, 3, 3, 2);
    let xs = -l.rs1().unwrap();
    let x = CovariateCase::new(Some(gaussian_vec(&mut r, 2)), Some(xs)).unwrap();
    assert_eq!(link_eval(&l, &x).unwrap(), -l.b01());
    assert!((literal_link(&l, &x) + l.b01()).amax() < 1e-15);
}

#[test]
fn identity_link() {
    let mut r = rng(3);
    let rs = random_rotation(&mut r, 3);
    let l = LinkParams::new(rs.clone(), vec![1.0, 1.0], vec![], Some(rs), None).unwrap();
    for _ in 0..20 {
        let xs = random_unit(&mut r, 3);
        let mu = link_eval(&l, &CovariateCase::spherical(xs.clone()).unwrap()).unwrap();
        assert!((mu - xs).amax() < 1e-12);
    }
}

#[test]
fn t_transform_coordinatewise() {
    let mut r = rng(4);
    let l = random_link(&mut r, 3, 4, 3);
    let x = random_case(&mut r, l.dims());
    let t = t_transform(&l, &x).unwrap();
    let rs = l.rs().unwrap();
    let re = l.re().unwrap();
    let xs = x.xs.as_ref().unwrap();
    let xe = x.xe.as_ref().unwrap();
    for j in 0..2 {
        let want = l.bs()[j] * rs.column(j + 1).dot(xs) / (1.0 + rs.column(0).dot(xs))
            + l.be()[j] * re.column(j).dot(xe);
        assert!((t[j] - want).abs() < 1e-14);
    }
    let at_rs1 = CovariateCase::new(Some(DVector::zeros(3)), Some(l.rs1().unwrap())).unwrap();
    assert!(t_transform(&l, &at_rs1).unwrap().amax() < 1e-15);
}

#[test]
fn image_lies_on_lower_dimensional_sphere() {
    let mut r = rng(5);
    let b0 = random_rotation(&mut r, 3);
    let l = LinkParams::new(
        b0.clone(),
        vec![0.7, 0.0],
        vec![1.3, 0.0],
        Some(random_stiefel(&mut r, 3, 3)),
        Some(random_stiefel(&mut r, 2, 2)),
    )
    .unwrap();
    assert_eq!(image_dimension(&l), 1);
    let normal = b0.column(2).into_owned();
    for _ in 0..10_000 {
        let mu = link_eval(&l, &random_case(&mut r, l.dims())).unwrap();
        assert!(mu.dot(&normal).abs() < 1e-8);
    }
}

#[test]
fn downs_grid_matches_general_link() {
    let mut r = rng(6);
    for _ in 0..20 {
        let beta0 = r.random_range(-3.0..3.0);
        let eta = r.random_range(-3.0..3.0);
        let delta = if r.random::<bool>() { 1.0 } else { -1.0 };
        let bs2 = r.random_range(0.0..3.0);
        let l = downs_params(beta0, eta, delta, bs2).unwrap();
        for k in 0..64 {
            let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let x = CovariateCase::spherical(DVector::from_column_slice(&[theta.cos(), theta.sin()])).unwrap();
            let mu = link_eval(&l, &x).unwrap();
            assert!(angle_diff(angle_of(&mu), downs_link(theta, beta0, eta, delta, bs2)) < 1e-10);
        }
    }
}

#[test]
fn fisher_lee_and_hybrid_match_general_link() {
    let mut r = rng(7);
    for _ in 0..50 {
        let beta0 = r.random_range(-3.0..3.0);
        let gamma = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let xe = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        let l = fisher_lee_params(beta0, &gamma).unwrap();
        let mu = link_eval(&l, &CovariateCase::euclidean(DVector::from_column_slice(&xe)).unwrap()).unwrap();
        assert!(angle_diff(angle_of(&mu), fisher_lee_link(&xe, beta0, &gamma)) < 1e-10);

        let eta = r.random_range(-3.0..3.0);
        let bs2 = r.random_range(0.0..2.0);
        let theta: f64 = r.random_range(-3.0..3.0);
        let h = hybrid_params(beta0, eta, -1.0, bs2, &gamma).unwrap();
        let x = CovariateCase::new(
            Some(DVector::from_column_slice(&xe)),
            Some(DVector::from_column_slice(&[theta.cos(), theta.sin()])),
        )
        .unwrap();
        let mu = link_eval(&h, &x).unwrap();
        assert!(angle_diff(angle_of(&mu), hybrid_link(theta, &xe, beta0, eta, -1.0, bs2, &gamma)) < 1e-10);

        // reductions
        assert!(angle_diff(
            hybrid_link(theta, &xe, beta0, eta, 1.0, bs2, &[0.0, 0.0]),
            downs_link(theta, beta0, eta, 1.0, bs2)
        ) < 1e-14);
        assert!(angle_diff(
            hybrid_link(theta, &xe, beta0, eta, 1.0, 0.0, &gamma),
            fisher_lee_link(&xe, beta0, &gamma)
        ) < 1e-14);

        // the hybrid mean equals beta0 where the two effects cancel
        let bs2 = r.random_range(0.1..2.0);
        let lin: f64 = gamma.iter().zip(&xe).map(|(a, b)| a * b).sum();
        let root = eta + 2.0 * (-lin / bs2).atan();
        assert!(angle_diff(hybrid_link(root, &xe, beta0, eta, 1.0, bs2, &gamma), beta0) < 1e-10);
    }
}

#[test]
fn mobius_form_matches_link() {
    let mut r = rng(8);
    for &beta in &[0.0, 0.3, 1.0, 2.5] {
        let b0 = random_rotation(&mut r, 3);
        let rs = random_orthogonal(&mut r, 3);
        let l = LinkParams::new(b0.clone(), vec![beta; 2], vec![], Some(rs.clone()), None).unwrap();
        let m = mobius_link_form(&l).unwrap();
        assert!((m.phi - (1.0 - beta) / (1.0 + beta)).abs() < 1e-15);
        for _ in 0..100 {
            let x = random_unit(&mut r, 3);
            let case = CovariateCase::spherical(x.clone()).unwrap();
            if beta == 0.0 {
                // |psi| = 1 is outside the Mobius family; the link is constant
                assert!(m.apply(&x).is_err());
                continue;
            }
            assert!((m.apply(&x).unwrap() - link_eval(&l, &case).unwrap()).amax() < 1e-12);
        }
    }
    let rs = DMatrix::identity(3, 3);
    let b0 = random_rotation(&mut r, 3);
    let l = LinkParams::new(b0.clone(), vec![1.0; 2], vec![], Some(rs), None).unwrap();
    let x = random_unit(&mut r, 3);
    assert!((mobius_link_form(&l).unwrap().apply(&x).unwrap() - &b0 * &x).amax() < 1e-12);
    let aniso = LinkParams::new(b0, vec![1.0, 0.5], vec![], Some(DMatrix::identity(3, 3)), None).unwrap();
    assert!(matches!(mobius_link_form(&aniso), Err(Error::InvalidParameter(_))));
}

#[test]
fn composition_closure() {
    let mut r = rng(9);
    for &p in &[2usize, 3, 4] {
        for _ in 0..10 {
            // shared-axes case with a Euclidean block on the inner link
            let inner = random_link(&mut r, p, p + 1, p);
            let mut b2: Vec<f64> = (0..p - 1).map(|_| r.random_range(0.1..2.0)).collect();
            // keep outer Rs equal to inner B0, so no relabeling
            b2.sort_by(|a, b| b.total_cmp(a));
            let outer = LinkParams::new(random_rotation(&mut r, p), b2, vec![], Some(inner.b0().clone()), None).unwrap();
            let comp = compose_links(&inner, &outer).unwrap();
            for _ in 0..100 {
                let x = random_case(&mut r, inner.dims());
                let mid = link_eval(&inner, &x).unwrap();
                let two = link_eval(&outer, &CovariateCase::spherical(mid).unwrap()).unwrap();
                assert!((link_eval(&comp, &x).unwrap() - two).amax() < 1e-10);
            }

            // isotropic Mobius case
            let l1 = LinkParams::new(random_rotation(&mut r, p), vec![r.random_range(0.2..3.0); p - 1], vec![], Some(random_orthogonal(&mut r, p)), None).unwrap();
            let l2 = LinkParams::new(random_rotation(&mut r, p), vec![r.random_range(0.2..3.0); p - 1], vec![], Some(random_orthogonal(&mut r, p)), None).unwrap();
            let comp = compose_links(&l1, &l2).unwrap();
            for _ in 0..100 {
                let x = CovariateCase::spherical(random_unit(&mut r, p)).unwrap();
                let mid = link_eval(&l1, &x).unwrap();
                let two = link_eval(&l2, &CovariateCase::spherical(mid).unwrap()).unwrap();
                assert!((link_eval(&comp, &x).unwrap() - two).amax() < 1e-10);
            }
        }
    }
}

#[test]
fn composing_with_identity_keeps_link() {
    let mut r = rng(10);
    let inner = LinkParams::new(random_rotation(&mut r, 3), vec![0.4; 2], vec![], Some(random_orthogonal(&mut r, 3)), None).unwrap();
    let ident = LinkParams::new(DMatrix::identity(3, 3), vec![1.0; 2], vec![], Some(DMatrix::identity(3, 3)), None).unwrap();
    let comp = compose_links(&inner, &ident).unwrap();
    for _ in 0..50 {
        let x = CovariateCase::spherical(random_unit(&mut r, 3)).unwrap();
        assert!((link_eval(&comp, &x).unwrap() - link_eval(&inner, &x).unwrap()).amax() < 1e-10);
    }
}

#[test]
fn shared_axes_composition_multiplies_scales() {
    let b1 = rotation2(0.4);
    let inner = LinkParams::new(b1.clone(), vec![0.5], vec![], Some(rotation2(1.1)), None).unwrap();
    let outer = LinkParams::new(rotation2(-0.2), vec![3.0], vec![], Some(b1), None).unwrap();
    let comp = compose_links(&inner, &outer).unwrap();
    assert!((comp.bs()[0] - 1.5).abs() < 1e-15);
    assert_eq!(comp.rs(), inner.rs());
    assert_eq!(comp.b0(), outer.b0());
}

#[test]
fn attraction_toward_reference_direction_is_monotone() {
    let mut r = rng(11);
    let base = random_link(&mut r, 3, 3, 2);
    let x = random_case(&mut r, base.dims());
    let profile = |beta: f64| {
        let scaled = LinkParams::new(
            base.b0().clone(),
            base.bs().iter().map(|b| b * beta).collect(),
            base.be().iter().map(|b| b * beta).collect(),
            base.rs().cloned(),
            base.re().cloned(),
        )
        .unwrap();
        base.b01().dot(&link_eval(&scaled, &x).unwrap())
    };
    assert!((profile(0.0) - 1.0).abs() < 1e-15);
    let grid: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
    for w in grid.windows(2) {
        assert!(profile(w[1]) < profile(w[0]));
    }
}

#[test]
fn reparam_constraints_and_agreement() {
    let mut r = rng(12);
    for &(p, qs, qe) in &CONFIGS {
        for _ in 0..30 {
            let l = random_link(&mut r, p, qs, qe);
            let rp = to_reparam(&l);
            let (c1, c2, c3) = rp.constraint_residuals();
            assert!(c1 < 1e-12 && c2 < 1e-12 && c3 < 1e-10, "{c1} {c2} {c3}");
            // singular values of Omega are sqrt(bs^2 + be^2)
            let sv = rp.omega().clone().svd(false, false).singular_values;
            let mut sv: Vec<f64> = sv.iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            for (j, w) in l.scale_weights().iter().enumerate() {
                assert!((sv[j] - w.sqrt()).abs() < 1e-12);
            }
            for _ in 0..20 {
                let x = random_case(&mut r, l.dims());
                let a = link_eval(&l, &x).unwrap();
                assert!((link_eval_reparam(&rp, &x).unwrap() - a).amax() < 1e-12);
            }
        }
    }
}

#[test]
fn reparam_round_trip_is_functional_and_canonical() {
    let mut r = rng(13);
    for &(p, qs, qe) in &CONFIGS {
        for _ in 0..30 {
            let l = random_link(&mut r, p, qs, qe);
            let rec = from_reparam(&to_reparam(&l)).unwrap();
            assert!(!rec.repeated_singular_values);
            let back = rec.params;
            for (a, b) in back.scale_weights().iter().zip(l.scale_weights()) {
                assert!((a - b).abs() < 1e-10);
            }
            for (a, b) in back.bs().iter().zip(l.bs().iter()) {
                assert!((a - b).abs() < 1e-10);
            }
            for _ in 0..100 {
                let x = random_case(&mut r, l.dims());
                assert!((link_eval(&back, &x).unwrap() - link_eval(&l, &x).unwrap()).amax() < 1e-10);
            }
            // recovery is a fixed point
            let again = from_reparam(&to_reparam(&back)).unwrap().params;
            assert!((again.b0() - back.b0()).amax() < 1e-9);
        }
    }
}

#[test]
fn reparam_zero_and_repeated_scales() {
    let mut r = rng(14);
    let l = LinkParams::new(
        random_rotation(&mut r, 3),
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        Some(random_stiefel(&mut r, 3, 3)),
        Some(random_stiefel(&mut r, 2, 2)),
    )
    .unwrap();
    let rp = to_reparam(&l);
    assert_eq!(rp.omega().amax(), 0.0);
    let back = from_reparam(&rp).unwrap().params;
    assert!(back.bs().iter().chain(back.be().iter()).all(|&b| b == 0.0));
    let x = random_case(&mut r, l.dims());
    assert!((link_eval(&back, &x).unwrap() - l.b01()).amax() < 1e-15);

    // one zero scale: the corresponding axis columns are completed arbitrarily
    let l = LinkParams::new(random_rotation(&mut r, 4), vec![1.5, 0.7, 0.0], vec![], Some(random_stiefel(&mut r, 5, 4)), None).unwrap();
    let back = from_reparam(&to_reparam(&l)).unwrap().params;
    assert_eq!(back.bs()[2], 0.0);
    for _ in 0..50 {
        let x = random_case(&mut r, l.dims());
        assert!((link_eval(&back, &x).unwrap() - link_eval(&l, &x).unwrap()).amax() < 1e-10);
    }

    // isotropic scales are flagged but still recovered functionally
    let l = LinkParams::new(random_rotation(&mut r, 3), vec![0.8, 0.8], vec![], Some(random_stiefel(&mut r, 3, 3)), None).unwrap();
    let rec = from_reparam(&to_reparam(&l)).unwrap();
    assert!(rec.repeated_singular_values);
    for _ in 0..50 {
        let x = random_case(&mut r, l.dims());
        assert!((link_eval(&rec.params, &x).unwrap() - link_eval(&l, &x).unwrap()).amax() < 1e-10);
    }
}

#[test]
fn reparam_rejects_constraint_violations() {
    let mut r = rng(15);
    let l = random_link(&mut r, 3, 3, 2);
    let rp = to_reparam(&l);
    let bad = rp.omega() + DMatrix::from_element(3, 5, 1e-3);
    assert!(matches!(
        ReparamLink::new(rp.b01().clone(), rp.rs1().cloned(), bad, 3),
        Err(Error::Constraint { .. })
    ));
}

#[test]
fn projection_properties() {
    let mut r = rng(16);
    let l = random_link(&mut r, 3, 4, 3);
    let rp = to_reparam(&l);
    let b = rp.b01().clone();
    let rs1 = rp.rs1().cloned();
    let fixed = proj_constraint(rp.omega(), &b, rs1.as_ref());
    assert!((fixed - rp.omega()).amax() < 1e-12);
    let m = gaussian_mat(&mut r, 3, 7);
    let pm = proj_constraint(&m, &b, rs1.as_ref());
    assert!((proj_constraint(&pm, &b, rs1.as_ref()) - &pm).amax() < 1e-12);
    assert!((b.transpose() * &pm).amax() < 1e-12);
    assert!((pm.columns(0, 4) * rs1.unwrap()).amax() < 1e-12);
}

#[test]
fn commutator_detects_perturbation() {
    let mut r = rng(17);
    for _ in 0..20 {
        let l = random_link(&mut r, 3, 3, 2);
        let rp = to_reparam(&l);
        assert!(commutator_residual(&rp) < 1e-10);
        let b = rp.b01().clone();
        let rs1 = rp.rs1().cloned();
        let bumped = proj_constraint(&(rp.omega() + gaussian_mat(&mut r, 3, 5) * 0.5), &b, rs1.as_ref());
        let raw = serde_json::json!({
            "p": 3, "q_s": 3, "q_e": 2,
            "b01": b.as_slice(), "rs1": rs1.as_ref().unwrap().as_slice(),
            "omega": sphreg::linalg::to_rows(&bumped),
        });
        // the perturbed matrix violates the commutator constraint and is rejected on load
        assert!(serde_json::from_value::<ReparamLink>(raw).is_err());
    }
}

#[test]
fn reparam_json_round_trip() {
    let mut r = rng(18);
    let rp = to_reparam(&random_link(&mut r, 3, 3, 2));
    let s = serde_json::to_string(&rp).unwrap();
    let back: ReparamLink = serde_json::from_str(&s).unwrap();
    assert_eq!(back, rp);
}

proptest! {
    #[test]
    fn link_output_is_unit(seed in 0u64..10_000, cfg in 0usize..5) {
        let (p, qs, qe) = CONFIGS[cfg];
        let mut r = rng(seed);
        let l = random_link(&mut r, p, qs, qe);
        let x = random_case(&mut r, l.dims());
        let mu = link_eval(&l, &x).unwrap();
        prop_assert!((mu.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reparam_agrees_with_natural_form(seed in 0u64..10_000, cfg in 0usize..5) {
        let (p, qs, qe) = CONFIGS[cfg];
        let mut r = rng(seed);
        let l = random_link(&mut r, p, qs, qe);
        let x = random_case(&mut r, l.dims());
        let a = link_eval(&l, &x).unwrap();
        let b = link_eval_reparam(&to_reparam(&l), &x).unwrap();
        prop_assert!((a - b).amax() < 1e-12);
    }
}

use rand::Rng;
