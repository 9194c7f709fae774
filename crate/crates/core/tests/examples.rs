//! Worked examples for each public operation, checked end to end.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use finslervol::action::{evaluate_action, ActionSpec, Weighting};
use finslervol::autodiff::{hessian_y, third_directional};
use finslervol::catalog::{self, builtin};
use finslervol::expr::{parse, BinOp, EvalError, Func, ParseErrorKind};
use finslervol::finsler::{cartan_form, classify, metric_at, norm_f, CausalClass, MetricMatrix, Signature};
use finslervol::orientation::{find_privileged, orientation_at, orientation_field, osculating, SolverOptions, Status};
use finslervol::quadrature::{
    ball_rule, ball_volume, ellipsoid_map, integrate_homogeneous, sphere_rule, EllipsoidMap, NodePolicy,
    QuadOptions,
};
use finslervol::volume::{
    classical_density, holmes_thompson_density, integrate_volume, minimal_riemannian_density, BoxDomain, Form,
    VolumeOptions,
};
use finslervol::{Error, Expr};
use nalgebra::DMatrix;

fn spec(name: &str) -> finslervol::MetricSpec {
    builtin(name).unwrap().spec
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn parse_examples() {
    let e = parse("y0^2 - y1^2").unwrap();
    let expect = Expr::Bin(BinOp::Sub, Box::new(Expr::Pow(Box::new(Expr::y(0)), 2.0)), Box::new(Expr::Pow(Box::new(Expr::y(1)), 2.0)));
    assert_eq!(e, expect);

    let bm = parse("sgn(y0*y1*y2*y3)*sqrt(abs(y0*y1*y2*y3))").unwrap();
    let text = bm.to_string();
    for f in [Func::Sgn, Func::Sqrt, Func::Abs] {
        assert!(text.contains(f.name()), "{text}");
    }

    let err = parse("y0 +").unwrap_err();
    assert!(matches!(err.kind, ParseErrorKind::Syntax { .. }));
    assert_eq!(err.column, 5);
}

#[test]
fn evaluate_examples() {
    let env: BTreeMap<String, f64> = [("y0".to_string(), 2.0), ("y1".to_string(), 1.0)].into();
    assert_eq!(parse("y0^2 - y1^2").unwrap().evaluate(&env).unwrap(), 3.0);

    let bm = spec("berwald-moor");
    assert_eq!(bm.lagrangian_at(&[0.0; 4], &[1.0; 4]).unwrap(), 1.0);

    let env: BTreeMap<String, f64> = [("y0".to_string(), -1.0)].into();
    assert_eq!(parse("sqrt(y0)").unwrap().evaluate(&env), Err(EvalError::NonFiniteResult));
}

#[test]
fn hessian_examples() {
    let mink = spec("minkowski4");
    let h = hessian_y(&mink.lagrangian, &[0.3; 4], &[0.2, -1.0, 0.5, 3.0]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i != j { 0.0 } else if i == 0 { 2.0 } else { -2.0 };
            assert_eq!(h.hess[i][j], expect);
        }
    }

    let bm = spec("berwald-moor");
    let h = hessian_y(&bm.lagrangian, &[0.0; 4], &[1.0; 4]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i == j { -0.125 } else { 0.125 };
            assert!((h.hess[i][j] / 2.0 - expect).abs() < 1e-14);
        }
    }

    // closed form at (2, 1): s = y0² - y1² = 3
    let bog = spec("bogoslovsky-toy");
    let g = metric_at(&bog, &[0.0, 0.0], &[2.0, 1.0]).unwrap();
    let r3 = 3f64.sqrt();
    let expect = [[5.0 / (3.0 * r3), 1.0 / (6.0 * r3)], [1.0 / (6.0 * r3), -4.0 / (3.0 * r3)]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((g.get(i, j) - expect[i][j]).abs() < 1e-13);
        }
    }
    assert!((g.det + 0.75).abs() < 1e-13);
}

#[test]
fn third_directional_examples() {
    let riem = spec("riemannian-diag");
    let t = third_directional(&riem.lagrangian, &[0.1; 4], &[1.0, 0.3, -0.2, 0.7]).unwrap();
    assert!(t.iter().flatten().flatten().all(|v| *v == 0.0));

    let lin = spec("linearized-quartic");
    let (x, y) = ([0.2, 0.4, 0.6, 0.8], [1.3, 0.2, -0.4, 0.1]);
    let t = third_directional(&lin.lagrangian, &x, &y).unwrap();
    let h = 1e-5;
    for k in 0..4 {
        let (mut yp, mut ym) = (y, y);
        yp[k] += h;
        ym[k] -= h;
        let hp = hessian_y(&lin.lagrangian, &x, &yp).unwrap().hess;
        let hm = hessian_y(&lin.lagrangian, &x, &ym).unwrap().hess;
        for i in 0..4 {
            for j in 0..4 {
                let fd = 0.5 * (hp[i][j] - hm[i][j]) / (2.0 * h);
                assert!((t[i][j][k] - fd).abs() < 1e-5, "{i}{j}{k}: {} vs {fd}", t[i][j][k]);
            }
        }
    }

    let bm = spec("berwald-moor");
    let c = cartan_form(&bm, &[0.0; 4], &[1.0; 4]).unwrap();
    assert!(c.iter().all(|v| v.abs() < 1e-12), "{c:?}");
}

#[test]
fn metric_at_examples() {
    let g = metric_at(&spec("minkowski4"), &[0.0; 4], &[0.3, 0.1, 0.2, 0.0]).unwrap();
    assert_eq!(g.signature, Signature::lorentzian(4));
    assert!((g.det + 1.0).abs() < 1e-14);

    let g = metric_at(&spec("berwald-moor"), &[0.0; 4], &[1.0; 4]).unwrap();
    assert!((g.det + 2f64.powi(-8)).abs() < 1e-16);

    let g = metric_at(&spec("bogoslovsky-toy"), &[0.0; 2], &[1.0, 0.0]).unwrap();
    assert!((g.det + 0.5).abs() < 1e-14);
}

#[test]
fn norm_and_classify_examples() {
    let mink = spec("minkowski4");
    assert_eq!(norm_f(&mink, &[0.0; 4], &[2.0, 0.0, 0.0, 0.0]).unwrap(), 2.0);
    assert_eq!(norm_f(&mink, &[0.0; 4], &[1.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
    assert!((norm_f(&spec("berwald-moor"), &[0.0; 4], &[16.0, 1.0, 1.0, 1.0]).unwrap() - 2.0).abs() < 1e-14);

    assert_eq!(classify(&mink, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]), CausalClass::Timelike);
    assert_eq!(classify(&mink, &[0.0; 4], &[1.0, 1.0, 0.0, 0.0]), CausalClass::Lightlike);
    assert_eq!(classify(&spec("bogoslovsky-toy"), &[0.0; 2], &[0.0, 1.0]), CausalClass::Lightlike);
}

#[test]
fn cartan_form_examples() {
    let c = cartan_form(&spec("riemannian-diag"), &[0.5; 4], &[1.0, 0.2, 0.1, 0.3]).unwrap();
    assert!(c.iter().all(|v| *v == 0.0));
    let c = cartan_form(&spec("berwald-moor"), &[0.0; 4], &[0.9, 1.7, -0.4, -2.2]).unwrap();
    assert!(c.iter().all(|v| v.abs() < 1e-12), "{c:?}");
    let c = cartan_form(&spec("bogoslovsky-toy"), &[0.0; 2], &[1.0, 0.0]).unwrap();
    assert!(c.iter().all(|v| v.abs() < 1e-14), "{c:?}");
}

#[test]
fn osculating_examples() {
    let p = osculating(&spec("minkowski4"), &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(p.g_t_plus.entries(), &DMatrix::identity(4, 4));
    assert!((p.g_t_plus.det - 1.0).abs() < 1e-14);

    let p = osculating(&spec("bogoslovsky-toy"), &[0.0; 2], &[1.0, 0.0]).unwrap();
    let expect_t = [[1.0, 0.0], [0.0, -0.5]];
    let expect_plus = [[1.0, 0.0], [0.0, 0.5]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((p.g_t.get(i, j) - expect_t[i][j]).abs() < 1e-14);
            assert!((p.g_t_plus.get(i, j) - expect_plus[i][j]).abs() < 1e-14);
        }
    }
    assert!((p.g_t_plus.det - 0.5).abs() < 1e-14);

    let p = osculating(&spec("berwald-moor"), &[0.0; 4], &[1.0; 4]).unwrap();
    assert!((p.g_t_plus.det - 2f64.powi(-8)).abs() < 1e-16);
}

#[test]
fn find_privileged_examples() {
    let opts = SolverOptions::default();
    let t0 = find_privileged(&spec("riemannian-diag"), &[0.0; 4], &opts).unwrap();
    assert_eq!(t0.status, Status::MultipleMinima);
    assert!((t0.critical_value - 4.0).abs() < 1e-12);

    let bm = spec("berwald-moor");
    for x in [[0.0; 4], [0.3, 0.9, 0.1, 0.5]] {
        let t0 = find_privileged(&bm, &x, &opts).unwrap();
        assert!(t0.status.is_success());
        assert!((t0.critical_value - 2f64.powi(-8)).abs() < 1e-15);
    }

    let bog = spec("bogoslovsky-toy");
    for x in [[0.0, 0.0], [0.7, -2.0]] {
        let t0 = find_privileged(&bog, &x, &opts).unwrap();
        assert_eq!(t0.status, Status::Converged);
        assert!((t0.direction[0] - 1.0).abs() < 1e-12 && t0.direction[1].abs() < 1e-6);
        assert!((t0.critical_value - 0.5).abs() < 1e-12);
    }
}

#[test]
fn orientation_field_examples() {
    let opts = SolverOptions { seeds: 4, ..Default::default() };
    let grid = BoxDomain::unit(4).midpoints(&[5; 4]).unwrap();
    let field = orientation_field(&spec("minkowski4"), &grid, &opts).unwrap();
    assert_eq!(field.orientations.len(), 625);
    assert!(field.orientations.iter().all(|t| t.status.is_success()));
    assert!(field.smoothness < 1e-12, "{}", field.smoothness);

    let line: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0, 0.0]).collect();
    let field = orientation_field(&spec("bogoslovsky-toy"), &line, &SolverOptions::default()).unwrap();
    for t in &field.orientations {
        assert!((t.direction[0] - 1.0).abs() < 1e-12 && t.direction[1].abs() < 1e-6, "{:?}", t.direction);
    }
}

#[test]
fn ball_rule_examples() {
    for order in [2, 6, 10] {
        assert!(close(ball_rule(2, order).unwrap().weight_sum(), PI, 1e-13));
        assert!(close(ball_rule(4, order).unwrap().weight_sum(), PI * PI / 2.0, 1e-13));
    }
    let v = ball_rule(3, 8).unwrap().integrate(|y| y[0] * y[0]);
    assert!(close(v, 4.0 * PI / 15.0, 1e-13));
}

#[test]
fn ellipsoid_map_examples() {
    let m = ellipsoid_map(&MetricMatrix::new(DMatrix::identity(3, 3))).unwrap();
    assert_eq!(m.factor, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    assert_eq!(m.jac, 1.0);

    let m = ellipsoid_map(&MetricMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.5]])).unwrap();
    assert!(close(m.jac, 2f64.sqrt(), 1e-14));
    assert!(close(m.volume(), 2f64.sqrt() * PI, 1e-14));

    let p = osculating(&spec("berwald-moor"), &[0.0; 4], &[1.0; 4]).unwrap();
    let m = ellipsoid_map(&p.g_t_plus).unwrap();
    assert!(close(m.volume() / ball_volume(4), 16.0, 1e-12));

    let bad = MetricMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
    assert!(matches!(ellipsoid_map(&bad), Err(Error::NotPositiveDefinite)));
}

#[test]
fn integrate_homogeneous_examples() {
    let policy = NodePolicy::default();
    let rule = sphere_rule(4, 8).unwrap();
    let one = integrate_homogeneous(&|_| 1.0, 0.0, &EllipsoidMap::identity(4), &rule, &policy).unwrap();
    assert!(close(one.value, ball_volume(4), 1e-13));

    let bm = spec("berwald-moor");
    let p = osculating(&bm, &[0.0; 4], &[1.0; 4]).unwrap();
    let map = ellipsoid_map(&p.g_t_plus).unwrap();
    let det = |y: &[f64]| metric_at(&bm, &[0.0; 4], y).map(|g| g.det.abs()).unwrap_or(f64::NAN);
    // default rule: even polar counts keep nodes off the coordinate hyperplanes
    let default_rule = QuadOptions::defaults(4).sphere(4, false).unwrap();
    let v = integrate_homogeneous(&det, 0.0, &map, &default_rule, &policy).unwrap();
    assert!(close(v.value, 2f64.powi(-8) * 16.0 * ball_volume(4), 1e-10));

    let mink = spec("minkowski4");
    let l = |y: &[f64]| mink.lagrangian_at(&[0.0; 4], y).unwrap();
    let via_sphere = integrate_homogeneous(&l, 2.0, &EllipsoidMap::identity(4), &rule, &policy).unwrap().value;
    let direct = ball_rule(4, 8).unwrap().integrate(l);
    assert!((via_sphere - direct).abs() <= 1e-8 * direct.abs());
    assert!(close(direct, -PI * PI / 6.0, 1e-12));
}

#[test]
fn minimal_riemannian_examples() {
    let opts = SolverOptions::default();
    for (name, x, expect) in [
        ("berwald-moor", vec![0.0; 4], 0.0625),
        ("bogoslovsky-toy", vec![0.0; 2], FRAC_1_SQRT_2),
        ("minkowski4", vec![0.0; 4], 1.0),
    ] {
        let s = spec(name);
        let t0 = find_privileged(&s, &x, &opts).unwrap();
        let d = minimal_riemannian_density(&s, &x, &t0).unwrap();
        assert!(close(d.sigma, expect, 1e-12), "{name}: {}", d.sigma);
    }
}

#[test]
fn holmes_thompson_examples() {
    let opts = VolumeOptions::default();
    for (s, expect) in [
        (spec("berwald-moor"), 0.0625),
        (spec("minkowski4"), 1.0),
        (catalog::riemannian_diag(&[3.0, -0.5, -2.0]).unwrap(), 3.0f64.sqrt()),
    ] {
        let x = vec![0.1; s.dim];
        let t0 = find_privileged(&s, &x, &opts.solver).unwrap();
        let d = holmes_thompson_density(&s, &x, &t0, &opts).unwrap();
        assert!(close(d.sigma, expect, 1e-10), "{}: {}", s.name, d.sigma);
        assert!(d.sigma >= d.diagnostics.ht_lower_bound.unwrap() - 1e-12);
    }

    let bog = spec("bogoslovsky-toy");
    let t0 = orientation_at(&bog, &[0.0; 2], &[1.0, 0.0], &opts.solver).unwrap();
    assert!(matches!(holmes_thompson_density(&bog, &[0.0; 2], &t0, &opts), Err(Error::DetNotProlongable { .. })));
}

#[test]
fn classical_examples() {
    let opts = VolumeOptions::default();
    let check = |s: &finslervol::MetricSpec, form: Form, expect: f64| {
        let d = classical_density(s, &vec![0.0; s.dim], form, &opts).unwrap();
        let se = d.diagnostics.standard_error.unwrap();
        assert!((d.sigma - expect).abs() <= 3.0 * se + 1e-12, "{form:?}: {} ± {se} vs {expect}", d.sigma);
        d.sigma
    };
    let eu = catalog::euclidean(2).unwrap();
    check(&eu, Form::ClassicalBH, 1.0);
    check(&eu, Form::ClassicalHT, 1.0);
    let r = catalog::riemannian_diag(&[4.0, 1.0]).unwrap();
    check(&r, Form::ClassicalBH, 2.0);
    check(&r, Form::ClassicalHT, 2.0);

    // quartic unit ball area 3.7081493546027438, HT from the polar form
    let q = spec("pd-quartic");
    let bh = check(&q, Form::ClassicalBH, PI / 3.708_149_354_602_743_8);
    let ht = check(&q, Form::ClassicalHT, 0.809_028_901_782_568_5);
    assert!((bh - ht).abs() > 0.03);
}

#[test]
fn integrate_volume_examples() {
    let opts = VolumeOptions::default();
    let v = integrate_volume(&spec("berwald-moor"), &BoxDomain::unit(4), Form::HolmesThompson, &[2; 4], &opts).unwrap();
    assert!(close(v.value, 0.0625, 1e-10));
    let d = BoxDomain::new(vec![0.0; 4], vec![2.0, 1.0, 1.0, 1.0]).unwrap();
    let v = integrate_volume(&spec("minkowski4"), &d, Form::MinimalRiemannian, &[2, 1, 1, 1], &opts).unwrap();
    assert!(close(v.value, 2.0, 1e-12));
    let v = integrate_volume(&spec("bogoslovsky-toy"), &BoxDomain::unit(2), Form::MinimalRiemannian, &[3, 3], &opts)
        .unwrap();
    assert!(close(v.value, FRAC_1_SQRT_2, 1e-10));
}

#[test]
fn action_examples() {
    let opts = VolumeOptions::default();
    let a = ActionSpec::new(spec("berwald-moor"), "1", &[], BoxDomain::unit(4), Weighting::DetG).unwrap();
    assert!(close(evaluate_action(&a, &[1; 4], &opts).unwrap().value, 0.0625, 1e-10));

    let a = ActionSpec::new(spec("bogoslovsky-toy"), "1", &[], BoxDomain::unit(2), Weighting::DetGt0Fallback).unwrap();
    assert!(close(evaluate_action(&a, &[2, 2], &opts).unwrap().value, 0.5 * 2f64.sqrt(), 1e-10));

    // ball average of η(y,y) by the k = 2 sphere route
    let mink = spec("minkowski4");
    let l = |y: &[f64]| mink.lagrangian_at(&[0.0; 4], y).unwrap();
    let rule = sphere_rule(4, 8).unwrap();
    let oracle = integrate_homogeneous(&l, 2.0, &EllipsoidMap::identity(4), &rule, &NodePolicy::default()).unwrap().value
        / ball_volume(4);
    let a = ActionSpec::new(mink.clone(), "L", &[], BoxDomain::unit(4), Weighting::DetG).unwrap();
    let v = evaluate_action(&a, &[1; 4], &opts).unwrap().value;
    assert!((v - oracle).abs() <= 1e-8 * oracle.abs(), "{v} vs {oracle}");
}

#[test]
fn catalog_examples() {
    let bm = builtin("berwald-moor").unwrap().truth;
    assert_eq!(bm.constant_det, Some(-2f64.powi(-8)));
    assert_eq!((bm.sigma_bh, bm.sigma_ht), (Some(0.0625), Some(0.0625)));

    let bog = builtin("bogoslovsky-toy").unwrap().truth;
    assert_eq!(bog.privileged_direction, Some(vec![1.0, 0.0]));
    assert!(close(bog.sigma_bh.unwrap(), FRAC_1_SQRT_2, 1e-15));
    assert!(!bog.ht_prolongable);

    let m = builtin("minkowski4").unwrap().truth;
    assert_eq!((m.sigma_bh, m.sigma_ht), (Some(1.0), Some(1.0)));

    assert!(matches!(builtin("no-such-metric"), Err(Error::UnknownMetric(_))));
}
