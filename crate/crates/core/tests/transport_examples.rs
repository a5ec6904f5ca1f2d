use fibconn::genconn::GenConnectionField;
use fibconn::lgfb::LgfbConnectionField;
use fibconn::liegroup::LieGroupModel;
use fibconn::numerics::max_abs_vec;
use fibconn::transport::{
    check_transport_homomorphism, fit_order, integrate_gen_transport, integrate_lgfb_transport, BaseCurve,
    PolynomialCurve,
};
use fibconn::{DomainBox, Sampling, ToleranceConfig};
use nalgebra::{DMatrix, DVector};

fn v(c: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(c)
}

fn plane() -> DomainBox {
    DomainBox::cube(2, -1.0, 1.0).unwrap()
}

fn wavy_curve() -> BaseCurve {
    BaseCurve::polynomial(&PolynomialCurve {
        base: vec![vec![-0.5, 1.0, -0.3], vec![0.2, -0.6, 0.8]],
        sigma: vec![],
    })
}

fn constant_linear_eta(n: Vec<DMatrix<f64>>) -> LgfbConnectionField {
    let grp = LieGroupModel::additive(n[0].nrows()).unwrap().into_shared();
    LgfbConnectionField::linear_connection(grp, plane(), move |_| n.clone()).unwrap()
}

#[test]
fn constant_linear_field_matches_matrix_exponential() {
    let n = vec![
        DMatrix::from_row_slice(2, 2, &[0.0, 1.2, -1.2, 0.3]),
        DMatrix::from_row_slice(2, 2, &[0.5, -0.4, 0.2, 0.0]),
    ];
    let d = v(&[0.9, -0.6]);
    let m = &n[0] * d[0] + &n[1] * d[1];
    let eta = constant_linear_eta(n);
    let g0 = v(&[0.4, -0.7]);
    let r = integrate_lgfb_transport(&eta, &BaseCurve::line(v(&[-0.3, 0.2]), d), &g0, 256).unwrap();
    let exact = (-m).exp() * &g0;
    assert!(max_abs_vec(&(&r.final_fiber - exact)) < 1e-10);
    assert!(r.est_error < 1e-10);
    assert_eq!(r.trajectory.first().unwrap().0, 0.0);
    assert_eq!(r.trajectory.last().unwrap().0, 1.0);
    assert_eq!(r.trajectory.last().unwrap().1, r.final_fiber);
}

#[test]
fn richardson_estimate_drops_sixteenfold_per_doubling() {
    let eta = constant_linear_eta(vec![
        DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -0.3]),
    ]);
    let curve = wavy_curve();
    let g0 = v(&[1.0, 0.5]);
    let est: Vec<(usize, f64)> = [8, 16, 32, 64]
        .iter()
        .map(|&k| (k, integrate_lgfb_transport(&eta, &curve, &g0, k).unwrap().est_error))
        .collect();
    for w in est.windows(2) {
        let ratio = w[0].1 / w[1].1;
        assert!((10.0..24.0).contains(&ratio), "ratio {ratio}");
    }
    assert!(fit_order(&est) > 3.5);
}

#[test]
fn zero_field_keeps_every_point() {
    let grp = LieGroupModel::heisenberg().into_shared();
    let eta = LgfbConnectionField::trivial(grp, plane());
    let g0 = v(&[0.3, -1.1, 0.4]);
    let r = integrate_lgfb_transport(&eta, &wavy_curve(), &g0, 16).unwrap();
    assert_eq!(r.final_fiber, g0);
    let hom = check_transport_homomorphism(&eta, &wavy_curve(), Sampling::new(20, 1), 8, ToleranceConfig::default()).unwrap();
    assert_eq!(hom.max_residual(), 0.0);
}

#[test]
fn linear_field_transport_is_additive() {
    let eta = constant_linear_eta(vec![
        DMatrix::from_row_slice(3, 3, &[0.1, 0.4, 0.0, -0.2, 0.0, 0.3, 0.5, 0.1, -0.1]),
        DMatrix::from_row_slice(3, 3, &[0.0, -0.3, 0.2, 0.1, 0.2, 0.0, 0.0, 0.4, 0.1]),
    ]);
    let r = check_transport_homomorphism(&eta, &wavy_curve(), Sampling::new(50, 3), 64, ToleranceConfig::default()).unwrap();
    assert!(r.passed);
    assert!(r.max_residual() < 1e-12);
}

#[test]
fn non_multiplicative_field_stays_far_from_homomorphism() {
    let grp = LieGroupModel::additive(2).unwrap().into_shared();
    let square = LgfbConnectionField::new("square", grp.clone(), plane(), |_, g| {
        DMatrix::from_fn(2, 2, |i, _| 0.3 * g[i] * g[i])
    });
    let valid = constant_linear_eta(vec![DMatrix::identity(2, 2) * 0.3, DMatrix::identity(2, 2) * -0.2]);
    let tol = ToleranceConfig::default();
    let sampling = Sampling::new(30, 5);
    for steps in [64, 256] {
        let bad = check_transport_homomorphism(&square, &wavy_curve(), sampling, steps, tol).unwrap();
        let good = check_transport_homomorphism(&valid, &wavy_curve(), sampling, steps, tol).unwrap();
        assert!(!bad.passed);
        assert!(bad.max_residual() > 10.0 * good.max_residual().max(1e-6));
    }
}

#[test]
fn affine_transport_matches_quadrature() {
    let grp = LieGroupModel::additive(2).unwrap().into_shared();
    let sigma = |x: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[x[0].sin(), 0.3 * x[1], 1.0 - x[0] * x[1], x[1].cos()]);
    let a = GenConnectionField::affine_connection(grp, plane(), sigma, |_| vec![DMatrix::zeros(2, 2); 2]).unwrap();
    let curve = wavy_curve();
    let g0 = v(&[0.2, -0.3]);
    let r = integrate_gen_transport(&a, &curve, &g0, 128).unwrap();
    // composite Simpson rule for g0 - integral of sigma(x(t)) x'(t) dt
    let k = 2000;
    let h = 1.0 / k as f64;
    let mut integral = DVector::zeros(2);
    for i in 0..=k {
        let t = i as f64 * h;
        let w = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        integral += sigma(&curve.eval(t)) * curve.velocity(t) * w;
    }
    let expected = &g0 - integral * (h / 3.0);
    assert!(max_abs_vec(&(r.final_fiber - expected)) < 1e-8);
}

#[test]
fn standard_transport_commutes_with_right_translation() {
    let grp = LieGroupModel::heisenberg().into_shared();
    let g1 = grp.clone();
    let b = DMatrix::from_row_slice(3, 2, &[0.4, -0.3, 0.2, 0.5, -0.1, 0.3]);
    let a = GenConnectionField::standard("from-identity", grp.clone(), plane(), move |x, g| {
        g1.d1_multiply(g1.identity(), g).unwrap() * (&b * (1.0 + 0.5 * x[0]))
    });
    let curve = wavy_curve();
    let (g, h0) = (v(&[0.3, -0.2, 0.5]), v(&[-0.4, 0.7, 0.1]));
    let lhs = integrate_gen_transport(&a, &curve, &grp.multiply(&g, &h0).unwrap(), 256).unwrap().final_fiber;
    let tg = integrate_gen_transport(&a, &curve, &g, 256).unwrap().final_fiber;
    let rhs = grp.multiply(&tg, &h0).unwrap();
    assert!(max_abs_vec(&(lhs - rhs)) < 1e-10);
}

#[test]
fn heisenberg_homomorphism_residual_converges_at_fourth_order() {
    let grp = LieGroupModel::heisenberg().into_shared();
    let eta = LgfbConnectionField::heisenberg_derivation(grp, plane(), |_| {
        DMatrix::from_row_slice(2, 6, &[1.2, -0.8, 1.5, 0.9, 0.7, -1.1, -0.6, 1.0, -1.3, 1.4, 0.5, 0.8])
    })
    .unwrap();
    let curve = wavy_curve();
    let points: Vec<(usize, f64)> = [4, 8, 16, 32]
        .iter()
        .map(|&k| {
            let r = check_transport_homomorphism(&eta, &curve, Sampling::new(20, 9), k, ToleranceConfig::default()).unwrap();
            (k, r.condition("homomorphism").unwrap().stats.max_abs)
        })
        .collect();
    assert!(fit_order(&points) >= 3.5, "{points:?}");
}
