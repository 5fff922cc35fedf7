use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use closecap::asymptotics::{fit_constants, omega_asymptotic, AsymptoticModel};
use closecap::capacitance::{capacitance_matrix, frequency_from_eigen, CapacitanceMatrix};
use closecap::geometry::{gap_profile, mesh_pair_with, ContactCoefficient, SurfaceMesh};
use closecap::laplace_bem::{assemble, solve_densities, DensitySolution};
use closecap::modes::{blowup_scan, boundary_values_away_from_gap, build_mode, gap_grid, gap_scan, BlowupPoint, BlowupReport};
use closecap::sphere_oracle::two_sphere_capacitance;

use crate::config::{ConfigError, Experiment, SweepPoint};
use crate::record::{emit, float, read_records, SweepRecord, Table};

/// What a finished command reports back to `main`.
pub enum Outcome {
    Done,
    AllRowsFailed,
}

pub type CmdResult = Result<Outcome, Box<dyn std::error::Error>>;

fn fill_capacitance(rec: &mut SweepRecord, cap: &CapacitanceMatrix<f64>) {
    let red = &cap.reduction;
    rec.c11 = Some(cap.c[0][0]);
    rec.c12 = Some(cap.c[0][1]);
    rec.c21 = Some(cap.c[1][0]);
    rec.c22 = Some(cap.c[1][1]);
    rec.vol1 = Some(cap.volumes[0]);
    rec.vol2 = Some(cap.volumes[1]);
    rec.lambda1 = Some(red.lambda[0]);
    rec.lambda2 = Some(red.lambda[1]);
    rec.c_star = Some(red.c_star);
    rec.sigma1 = Some(red.sigma[0]);
    rec.sigma2 = Some(red.sigma[1]);
    rec.valid = cap.valid;
    for f in &cap.flags {
        rec.flag(f);
    }
}

fn fill_resonance(rec: &mut SweepRecord, exp: &Experiment, point: &SweepPoint, cap: &CapacitanceMatrix<f64>) {
    let Some(materials) = point.materials else {
        rec.flag("no materials: omega columns empty");
        return;
    };
    rec.delta = Some(materials.delta());
    let numeric = |l: f64| frequency_from_eigen(l, &materials);
    match (numeric(cap.reduction.lambda[0]), numeric(cap.reduction.lambda[1])) {
        (Ok(w1), Ok(w2)) => {
            rec.omega1 = Some(w1);
            rec.omega2 = Some(w2);
            rec.omega_ratio = Some(w2 / w1);
        }
        (Err(e), _) | (_, Err(e)) => rec.flag(format!("numeric omega: {e}")),
    }
    let asym = exp
        .pair(point.eps)
        .and_then(|pair| AsymptoticModel::for_pair(&pair, cap.volumes))
        .and_then(|model| omega_asymptotic(&model.with_materials(materials), point.eps, Some(cap.reduction.c_star)));
    match asym {
        Ok(w) => {
            rec.omega1_asym = w.omega1;
            rec.omega2_asym = Some(w.omega2);
        }
        Err(e) => rec.flag(format!("asymptotic omega: {e}")),
    }
}

fn fill_asymptotics(rec: &mut SweepRecord, exp: &Experiment, eps: f64, volumes: [f64; 2]) {
    let model = exp.pair(eps).and_then(|pair| {
        rec.lambda_contact = Some(gap_profile(&pair).lambda.effective());
        AsymptoticModel::for_pair(&pair, volumes)
    });
    match model.and_then(|m| Ok(m.leading_coefficient() * m.rho(eps)?)) {
        Ok(v) => rec.c11_leading = Some(v),
        Err(e) => rec.flag(format!("leading term: {e}")),
    }
}

fn fill_oracle(rec: &mut SweepRecord, exp: &Experiment, eps: f64, cap: &CapacitanceMatrix<f64>) {
    match two_sphere_capacitance(exp.upper.half_width, exp.lower.half_width, eps, exp.tol) {
        Ok(o) => {
            rec.oracle_c11 = Some(o.c[0][0]);
            rec.oracle_c12 = Some(o.c[0][1]);
            rec.oracle_c22 = Some(o.c[1][1]);
            let dev = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| ((cap.c[i][j] - o.c[i][j]) / o.c[i][j]).abs())
                .fold(0.0, f64::max);
            rec.oracle_dev = Some(dev);
        }
        Err(e) => rec.flag(format!("oracle: {e}")),
    }
}

/// Max gradients of both modes over the gap grid, plus the blow-up bookkeeping.
fn gradients(
    exp: &Experiment,
    eps: f64,
    mesh: &SurfaceMesh<f64>,
    sol: &DensitySolution<f64>,
    cap: &CapacitanceMatrix<f64>,
) -> closecap::Result<BlowupPoint<f64>> {
    let pair = exp.pair(eps)?;
    let grid = gap_grid(&pair);
    let modes = [build_mode(1, sol, cap, None)?, build_mode(2, sol, cap, None)?];
    let scan = |density: &[f64]| gap_scan(mesh, &pair, density, &grid).map(|s| s.max_gradient);
    let r0 = gap_profile(&pair).r0;
    Ok(BlowupPoint {
        eps,
        panels: mesh.len(),
        capacitance: cap.clone(),
        max_gradient: [scan(&modes[0].density)?, scan(&modes[1].density)?],
        max_gradient_v1: scan(sol.density(1))?,
        max_gradient_sum: scan(&sol.combine(1.0, 1.0))?,
        boundary_range: [0, 1].map(|k| boundary_values_away_from_gap(mesh, &modes[k].density, r0)),
    })
}

fn bem_row(exp: &Experiment, point: &SweepPoint, with_gradients: bool) -> (SweepRecord, Option<BlowupPoint<f64>>) {
    let m = exp.order();
    let eps = point.eps;
    let solved = exp.pair(eps).and_then(|pair| {
        let mesh = mesh_pair_with(&pair, &exp.mesh)?;
        let sol = solve_densities(&assemble(&mesh)?, &mesh)?;
        let cap = capacitance_matrix(&mesh, &sol, None)?;
        Ok((mesh, sol, cap))
    });
    let (mesh, sol, cap) = match solved {
        Ok(s) => s,
        Err(e) => return (SweepRecord::failed(eps, m, e.to_string()), None),
    };
    let mut rec = SweepRecord {
        eps,
        m,
        delta: point.materials.map(|p| p.delta()),
        panels: Some(mesh.len()),
        condition: Some(sol.condition_estimate),
        residual1: Some(sol.residual[0]),
        residual2: Some(sol.residual[1]),
        ..Default::default()
    };
    fill_capacitance(&mut rec, &cap);
    fill_asymptotics(&mut rec, exp, eps, cap.volumes);
    fill_resonance(&mut rec, exp, point, &cap);
    if exp.oracle {
        fill_oracle(&mut rec, exp, eps, &cap);
    }
    let mut blowup = None;
    if with_gradients {
        match gradients(exp, eps, &mesh, &sol, &cap) {
            Ok(p) => {
                rec.max_grad_u1 = Some(p.max_gradient[0]);
                rec.max_grad_u2 = Some(p.max_gradient[1]);
                blowup = Some(p);
            }
            Err(e) => {
                rec.valid = false;
                rec.flag(format!("gap scan: {e}"));
            }
        }
    } else {
        rec.flag("gap gradients not computed");
    }
    (rec, blowup)
}

/// Fit `M₁, M₂` over the valid rows and copy them into every row.
fn attach_fit(exp: &Experiment, records: &mut [SweepRecord]) {
    let valid: Vec<&SweepRecord> = records.iter().filter(|r| r.valid).collect();
    let fit = (|| {
        let first = valid.first().ok_or_else(|| "no valid rows".to_string())?;
        let volumes = [first.vol1.unwrap_or(1.0), first.vol2.unwrap_or(1.0)];
        let model = AsymptoticModel::for_pair(&exp.pair(first.eps).map_err(|e| e.to_string())?, volumes).map_err(|e| e.to_string())?;
        let eps: Vec<f64> = valid.iter().map(|r| r.eps).collect();
        let col = |f: fn(&SweepRecord) -> Option<f64>| valid.iter().map(|r| f(r).unwrap_or(f64::NAN)).collect::<Vec<_>>();
        fit_constants(&model, &eps, &col(|r| r.c11), &col(|r| r.c22)).map_err(|e| e.to_string())
    })();
    match fit {
        Ok(report) => {
            for r in records.iter_mut() {
                r.m1 = Some(report.fits[0].constant);
                r.m2 = Some(report.fits[1].constant);
            }
        }
        Err(e) => {
            for r in records.iter_mut() {
                r.flag(format!("M fit unavailable: {e}"));
            }
        }
    }
}

fn finish(records: &[SweepRecord], out: Option<&Path>) -> CmdResult {
    emit(&Table::from_records(records), &records, out)?;
    let mut failed = 0;
    for r in records.iter().filter(|r| !r.valid) {
        eprintln!("warning: eps = {}: {}", r.eps, r.flags);
        failed += 1;
    }
    Ok(if failed == records.len() {
        Outcome::AllRowsFailed
    } else {
        Outcome::Done
    })
}

fn sweep(exp: &Experiment, with_gradients: bool) -> (Vec<SweepRecord>, Vec<Option<BlowupPoint<f64>>>) {
    exp.points.par_iter().map(|p| bem_row(exp, p, with_gradients)).unzip()
}

pub fn capacitance(exp: &Experiment) -> CmdResult {
    let (mut records, _) = sweep(exp, false);
    attach_fit(exp, &mut records);
    finish(&records, exp.out.as_deref())
}

pub fn resonance(exp: &Experiment) -> CmdResult {
    if exp.points.iter().any(|p| p.materials.is_none()) {
        return Err(Box::new(ConfigError(
            "resonance needs materials: --delta [--vb] or --rho --rho-b --kappa --kappa-b".into(),
        )));
    }
    let (mut records, _) = sweep(exp, false);
    attach_fit(exp, &mut records);
    finish(&records, exp.out.as_deref())
}

pub fn blowup(exp: &Experiment) -> CmdResult {
    let (records, points) = sweep(exp, true);
    let points: Vec<BlowupPoint<f64>> = points.into_iter().flatten().collect();
    match blowup_scan(&points) {
        Ok(report) => {
            print_blowup(&report);
            if let Some(out) = &exp.out {
                write_json(&out.with_extension("slopes.json"), &report)?;
            }
        }
        Err(e) => eprintln!("slopes unavailable: {e}"),
    }
    finish(&records, exp.out.as_deref())
}

fn print_blowup(report: &BlowupReport<f64>) {
    eprintln!(
        "slope of max|grad u1| vs 1/eps: {:.4}; max|grad u2|: {:.4} over {:.2} decades; ratio decreasing: {}",
        report.slopes[0], report.slopes[1], report.decades, report.ratio_decreasing
    );
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> io::Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    std::fs::write(path, json + "\n")
}

pub fn oracle(exp: &Experiment) -> CmdResult {
    if !exp.is_two_spheres() {
        return Err(Box::new(ConfigError("the oracle covers two spheres only".into())));
    }
    let (a1, a2) = (exp.upper.half_width, exp.lower.half_width);
    let mut records: Vec<SweepRecord> = exp
        .points
        .par_iter()
        .map(|p| match two_sphere_capacitance(a1, a2, p.eps, exp.tol) {
            Ok(cap) => {
                let mut rec = SweepRecord {
                    eps: p.eps,
                    m: 2,
                    ..Default::default()
                };
                fill_capacitance(&mut rec, &cap);
                rec.oracle_c11 = Some(cap.c[0][0]);
                rec.oracle_c12 = Some(cap.c[0][1]);
                rec.oracle_c22 = Some(cap.c[1][1]);
                fill_asymptotics(&mut rec, exp, p.eps, cap.volumes);
                fill_resonance(&mut rec, exp, p, &cap);
                rec.flag("image charges: no mesh, condition or gradients");
                rec
            }
            Err(e) => SweepRecord::failed(p.eps, 2, e.to_string()),
        })
        .collect();
    attach_fit(exp, &mut records);
    finish(&records, exp.out.as_deref())
}

pub const MESH_COLUMNS: &[(&str, &str)] = &[
    ("body", "1 = upper body, 2 = lower body"),
    ("panels", "triangles on the body"),
    ("area", "summed panel area"),
    ("volume", "enclosed volume of the triangulation"),
    ("exact_volume", "analytic volume (empty when no closed form)"),
    ("pole_panel_diameter", "largest panel touching the contact pole"),
    ("grading_depth", "geometric steps from the pole cap to the base spacing"),
    ("min_separation", "smallest vertex distance between the bodies"),
];

pub fn mesh(exp: &Experiment) -> CmdResult {
    let eps = exp.points[0].eps;
    let pair = exp.pair(eps)?;
    let mesh = mesh_pair_with(&pair, &exp.mesh)?;
    let sep = mesh.min_vertex_separation().unwrap_or(f64::NAN);
    let mut rows = Vec::new();
    let mut mirror = Vec::new();
    for tag in [1u8, 2] {
        let body = pair.body(tag);
        let grading = mesh.grading.get(usize::from(tag - 1));
        let row = MeshRow {
            body: tag,
            panels: mesh.panels_of(tag).count(),
            area: mesh.total_area(tag),
            volume: mesh.volume(tag)?,
            exact_volume: body.spec.exact_volume(),
            pole_panel_diameter: grading.map(|g| g.pole_panel_diameter),
            grading_depth: grading.map(|g| g.depth),
            min_separation: sep,
        };
        rows.push(vec![
            tag.to_string(),
            row.panels.to_string(),
            float(row.area),
            float(row.volume),
            row.exact_volume.map(float).unwrap_or_default(),
            row.pole_panel_diameter.map(float).unwrap_or_default(),
            row.grading_depth.map(|d| d.to_string()).unwrap_or_default(),
            float(sep),
        ]);
        mirror.push(row);
    }
    let table = Table {
        header: MESH_COLUMNS.iter().map(|(c, _)| c.to_string()).collect(),
        rows,
    };
    emit(&table, &mirror, exp.out.as_deref())?;
    if let Some(out) = &exp.out {
        mesh.write_off(io::BufWriter::new(std::fs::File::create(out.with_extension("off"))?))?;
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct MeshRow {
    body: u8,
    panels: usize,
    area: f64,
    volume: f64,
    exact_volume: Option<f64>,
    pole_panel_diameter: Option<f64>,
    grading_depth: Option<u32>,
    min_separation: f64,
}

pub const FIT_COLUMNS: &[(&str, &str)] = &[
    ("eps", "gap ε"),
    ("rho", "blow-up rate ρ_m(ε)"),
    ("envelope", "remainder envelope E_m(ε)"),
    ("c11", "C11 from the sweep file"),
    ("residual1", "C11 − leading term − M1"),
    ("scaled1", "residual1 / E_m"),
    ("c22", "C22 from the sweep file"),
    ("residual2", "C22 − leading term − M2"),
    ("scaled2", "residual2 / E_m"),
];

/// Refit `M₁, M₂` from a sweep file; the model comes from the file's own
/// `m`, `lambda_contact` and volume columns.
pub fn fit(input: &Path, out: Option<&Path>) -> CmdResult {
    let records = read_records(input).map_err(ConfigError)?;
    let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.valid && r.c11.is_some() && r.c22.is_some()).collect();
    let first = rows.first().ok_or_else(|| ConfigError(format!("{}: no valid rows", input.display())))?;
    let (Some(lambda), Some(v1), Some(v2)) = (first.lambda_contact, first.vol1, first.vol2) else {
        return Err(Box::new(ConfigError(format!("{}: rows lack lambda_contact or volumes", input.display()))));
    };
    if rows.iter().any(|r| r.m != first.m || r.lambda_contact != Some(lambda)) {
        return Err(Box::new(ConfigError(format!("{}: rows mix geometries", input.display()))));
    }
    let model = AsymptoticModel::new(first.m, ContactCoefficient::Isotropic(lambda), [v1, v2])?;
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let c11: Vec<f64> = rows.iter().filter_map(|r| r.c11).collect();
    let c22: Vec<f64> = rows.iter().filter_map(|r| r.c22).collect();
    let report = fit_constants(&model, &eps, &c11, &c22).map_err(|e| ConfigError(e.to_string()))?;
    let table_rows = (0..eps.len())
        .map(|k| {
            vec![
                float(eps[k]),
                float(model.rho(eps[k]).unwrap_or(f64::NAN)),
                float(model.envelope(eps[k]).unwrap_or(f64::NAN)),
                float(c11[k]),
                float(report.fits[0].residuals[k]),
                float(report.fits[0].scaled_residuals[k]),
                float(c22[k]),
                float(report.fits[1].residuals[k]),
                float(report.fits[1].scaled_residuals[k]),
            ]
        })
        .collect();
    let table = Table {
        header: FIT_COLUMNS.iter().map(|(c, _)| c.to_string()).collect(),
        rows: table_rows,
    };
    for (i, f) in report.fits.iter().enumerate() {
        eprintln!(
            "M{} = {} (envelope coefficient {:.3e}, free slope {:.6} vs {:.6}{})",
            i + 1,
            f.constant,
            f.envelope_coefficient,
            f.free_slope,
            model.leading_coefficient(),
            if f.slope_mismatch { ", MISMATCH" } else { "" }
        );
        match &report.windows[i] {
            Some(w) => eprintln!(
                "  windows: {} / {} (difference {:.3e}, envelope {:.3e}, {})",
                w.constants.0,
                w.constants.1,
                w.difference,
                w.envelope,
                if w.stable { "stable" } else { "UNSTABLE" }
            ),
            None => eprintln!("  windows: too few points for two disjoint windows"),
        }
    }
    emit(&table, &report, out)?;
    Ok(Outcome::Done)
}
