use closecap::capacitance::capacitance_matrix;
use closecap::geometry::{build_pair, mesh_pair, BodySpec, ResonatorPair};
use closecap::laplace_bem::{assemble, eval_gradient, eval_potential, outward_flux, solve_densities};
use closecap::modes::build_mode;
use closecap::sphere_oracle::{oracle_vs_bem, two_sphere_capacitance};
use closecap::Vec3;

fn spheres(a1: f64, a2: f64, eps: f64) -> ResonatorPair<f64> {
    build_pair(BodySpec::sphere(a1).unwrap(), BodySpec::sphere(a2).unwrap(), eps).unwrap()
}

#[test]
fn bem_matches_image_charges_at_moderate_gap() {
    let cmp = oracle_vs_bem(&spheres(1.0, 1.0, 0.5), 3, 1e-12).unwrap();
    assert!(cmp.max_deviation < 0.02, "{:?}", cmp.deviation);
}

#[test]
fn unequal_spheres_match_image_charges() {
    let cmp = oracle_vs_bem(&spheres(1.0, 2.0, 0.2), 3, 1e-12).unwrap();
    assert!(cmp.max_deviation < 0.03, "{:?}", cmp.deviation);
}

#[test]
fn widely_separated_spheres_decouple() {
    let pair = spheres(1.0, 1.0, 20.0);
    let mesh = mesh_pair(&pair, 2, 1.6).unwrap();
    let sol = solve_densities(&assemble(&mesh).unwrap(), &mesh).unwrap();
    let cap = capacitance_matrix(&mesh, &sol, None).unwrap();
    let four_pi = 4.0 * std::f64::consts::PI;
    assert!((cap.c[0][0] / four_pi - 1.0).abs() < 0.02);
    assert!(cap.c[0][1].abs() < 0.1 * cap.c[0][0]);
    let oracle = two_sphere_capacitance(1.0, 1.0, 20.0, 1e-12).unwrap();
    assert!((cap.c[0][1] / oracle.c[0][1] - 1.0).abs() < 0.05);
}

#[test]
fn capacitance_signs_and_symmetry() {
    for eps in [0.5, 0.1] {
        let pair = spheres(1.0, 1.5, eps);
        let mesh = mesh_pair(&pair, 2, 1.6).unwrap();
        let sol = solve_densities(&assemble(&mesh).unwrap(), &mesh).unwrap();
        let cap = capacitance_matrix(&mesh, &sol, None).unwrap();
        assert!(cap.valid, "{:?}", cap.flags);
        assert!(cap.c[0][0] > 0.0 && cap.c[1][1] > 0.0);
        assert!(cap.c[0][1] < 0.0 && cap.c[1][0] < 0.0);
        assert!(cap.asymmetry() < 0.01, "asymmetry {}", cap.asymmetry());
    }
}

#[test]
fn mirrored_pair_has_mirrored_densities() {
    let eps = 0.2;
    let pair = spheres(1.0, 1.0, eps);
    let mesh = mesh_pair(&pair, 2, 1.6).unwrap();
    let sol = solve_densities(&assemble(&mesh).unwrap(), &mesh).unwrap();
    let scale = sol.density(1).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, p) in mesh.panels.iter().enumerate() {
        let c = p.centroid;
        let mirror = Vec3::new(c.x(), c.y(), eps - c.z());
        let j = (0..mesh.len())
            .min_by(|&a, &b| {
                let da = mesh.panels[a].centroid.dist(&mirror);
                let db = mesh.panels[b].centroid.dist(&mirror);
                da.total_cmp(&db)
            })
            .unwrap();
        assert!(mesh.panels[j].centroid.dist(&mirror) < 1e-9);
        assert!((sol.density(2)[j] - sol.density(1)[i]).abs() < 1e-8 * scale);
    }
}

#[test]
fn potentials_respect_the_maximum_principle() {
    let pair = spheres(1.0, 1.0, 0.1);
    let mesh = mesh_pair(&pair, 2, 1.6).unwrap();
    let sol = solve_densities(&assemble(&mesh).unwrap(), &mesh).unwrap();
    let probes = [
        Vec3::new(0.0, 0.0, 0.05),
        Vec3::new(0.3, 0.0, 0.08),
        Vec3::new(2.0, 1.0, 0.5),
        Vec3::new(-1.5, 0.5, -2.0),
        Vec3::new(0.0, 10.0, 0.0),
        Vec3::new(6.0, -6.0, 5.0),
    ];
    for x in probes {
        let v = eval_potential(&mesh, sol.density(1), x).unwrap();
        assert!(v > 0.0 && v < 1.0, "v1({x:?}) = {v}");
    }
}

#[test]
fn far_flux_is_the_row_sum() {
    let pair = spheres(1.0, 1.0, 0.1);
    let mesh = mesh_pair(&pair, 2, 1.6).unwrap();
    let sol = solve_densities(&assemble(&mesh).unwrap(), &mesh).unwrap();
    let cap = capacitance_matrix(&mesh, &sol, None).unwrap();
    let row = cap.row_sums()[0];
    let fluxes: Vec<f64> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&r| outward_flux(&mesh, sol.density(1), r, 16).unwrap())
        .collect();
    for f in &fluxes {
        assert!((f / row - 1.0).abs() < 0.01, "flux {f} vs row sum {row}");
    }
}

#[test]
fn modes_take_their_boundary_values() {
    let pair = spheres(1.0, 2.0, 0.1);
    let mesh = mesh_pair(&pair, 2, 1.6).unwrap();
    let sol = solve_densities(&assemble(&mesh).unwrap(), &mesh).unwrap();
    let cap = capacitance_matrix(&mesh, &sol, None).unwrap();
    let x = Vec3::new(3.0, 1.0, 2.0);
    let v1 = eval_potential(&mesh, sol.density(1), x).unwrap();
    let v2 = eval_potential(&mesh, sol.density(2), x).unwrap();
    for n in 1..=2 {
        let mode = build_mode(n, &sol, &cap, None).unwrap();
        assert_eq!(mode.boundary_values, [mode.ratio, 1.0]);
        let u = eval_potential(&mesh, &mode.density, x).unwrap();
        assert!((u - (mode.ratio * v1 + v2)).abs() < 1e-12 * (1.0 + u.abs()));
        let g = eval_gradient(&mesh, &mode.density, x).unwrap();
        let want = eval_gradient(&mesh, sol.density(1), x).unwrap() * mode.ratio + eval_gradient(&mesh, sol.density(2), x).unwrap();
        assert!((g - want).norm() < 1e-12 * (1.0 + g.norm()));
    }
    assert!(build_mode(3, &sol, &cap, None).is_err());
}
