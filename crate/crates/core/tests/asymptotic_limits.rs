use closecap::asymptotics::{fit_constants, l_m, l_m_quadrature, linear_fit, AsymptoticModel};
use closecap::geometry::{build_pair, BodySpec};
use closecap::sphere_oracle::two_sphere_capacitance;
use std::f64::consts::PI;

#[test]
fn shape_constants_match_their_integrals() {
    assert_eq!(l_m::<f64>(2).unwrap(), PI);
    assert!((l_m::<f64>(4).unwrap() - PI * PI / 2.0).abs() < 1e-12);
    assert!(l_m_quadrature(2).is_err());
    for m in [3, 4, 6] {
        let closed: f64 = l_m(m).unwrap();
        assert!((l_m_quadrature(m).unwrap() - closed).abs() < 1e-9 * closed);
    }
}

#[test]
fn touching_spheres_grow_logarithmically() {
    let s = BodySpec::<f64>::sphere(1.0).unwrap();
    let v = 4.0 * PI / 3.0;
    let model = AsymptoticModel::for_pair(&build_pair(s.clone(), s, 0.01).unwrap(), [v, v]).unwrap();
    let eps: Vec<f64> = (4..=10).map(|k| (-(k as f64)).exp()).collect();
    let c11: Vec<f64> = eps
        .iter()
        .map(|&e| two_sphere_capacitance(1.0, 1.0, e, 1e-12).unwrap().c[0][0])
        .collect();
    let rho: Vec<f64> = eps.iter().map(|&e| model.rho(e).unwrap()).collect();
    let slope = linear_fit(&rho, &c11).unwrap().1;
    assert!((slope / model.leading_coefficient() - 1.0).abs() < 0.02, "slope {slope}");

    // C₁₁ − π|log ε| settles monotonically
    let rest: Vec<f64> = c11.iter().zip(&rho).map(|(c, r)| c - PI * r).collect();
    assert!(rest.windows(2).all(|w| w[1] < w[0]));
    let report = fit_constants(&model, &eps, &c11, &c11).unwrap();
    let w = report.windows[0].as_ref().unwrap();
    assert!(w.stable, "{w:?}");
}
