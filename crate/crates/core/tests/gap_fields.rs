use closecap::geometry::{build_pair, mesh_pair_with, BodySpec, MeshOptions};
use closecap::laplace_bem::{assemble, solve_densities};
use closecap::modes::{blowup_point, blowup_scan, gap_grid, keller_bound_check, keller_function};
use closecap::Vec3;

fn gap_options() -> MeshOptions<f64> {
    MeshOptions::new(3).grading(1.15).cap_fraction(0.01)
}

#[test]
fn keller_function_interpolates_between_the_surfaces() {
    let pair = build_pair(BodySpec::<f64>::sphere(1.0).unwrap(), BodySpec::sphere(1.0).unwrap(), 0.01).unwrap();
    let bottom = keller_function(&pair, Vec3::new(0.05, 0.0, pair.lower_surface(0.05, 0.0).unwrap())).unwrap();
    let top = keller_function(&pair, Vec3::new(0.05, 0.0, pair.upper_surface(0.05, 0.0).unwrap())).unwrap();
    assert!(bottom.value.abs() < 1e-12);
    assert!((top.value - 1.0).abs() < 1e-12);
    let axis = keller_function(&pair, Vec3::new(0.0, 0.0, 0.004)).unwrap();
    assert!((axis.gradient.z() - 100.0).abs() < 1e-9);
    assert!(keller_function(&pair, Vec3::new(0.0, 0.0, 0.5)).is_err());
}

#[test]
fn gap_gradient_follows_the_keller_function() {
    let pair = build_pair(BodySpec::sphere(1.0).unwrap(), BodySpec::sphere(1.0).unwrap(), 0.02).unwrap();
    let mesh = mesh_pair_with(&pair, &gap_options()).unwrap();
    let sol = solve_densities(&assemble(&mesh).unwrap(), &mesh).unwrap();
    let report = keller_bound_check(&mesh, &pair, &sol, &gap_grid(&pair)).unwrap();
    assert!(report.max_deviation < 1.0, "deviation {}", report.max_deviation);
    assert!((report.midline_scaled_gradient - 1.0).abs() < 0.02);
    assert!((report.keller_axis_gradient - 50.0).abs() < 1e-9);
}

#[test]
fn second_mode_gradient_grows_like_one_over_eps() {
    let s = BodySpec::sphere(1.0).unwrap();
    let points: Vec<_> = [0.05, 0.02, 0.008, 0.003, 0.0015]
        .iter()
        .map(|&eps| blowup_point(&build_pair(s.clone(), s.clone(), eps).unwrap(), &gap_options()).unwrap())
        .collect();
    let report = blowup_scan(&points).unwrap();
    assert!((report.slopes[1] - 1.0).abs() < 0.1, "slope {}", report.slopes[1]);
    assert!(report.ratio_decreasing, "{:?}", report.ratios);
    // equal spheres: the first mode is v₁ + v₂, whose gradient stays bounded
    for p in &points {
        assert!(p.max_gradient[0] < 0.05 * p.max_gradient[1]);
    }
}

#[test]
fn blowup_scan_needs_enough_decades() {
    let s = BodySpec::sphere(1.0).unwrap();
    let points: Vec<_> = [0.05, 0.04, 0.03, 0.02]
        .iter()
        .map(|&eps| blowup_point(&build_pair(s.clone(), s.clone(), eps).unwrap(), &MeshOptions::new(1)).unwrap())
        .collect();
    assert!(blowup_scan(&points).is_err());
    assert!(blowup_scan(&points[..3]).is_err());
}
