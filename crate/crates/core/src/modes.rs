//! Leading-order eigenmodes `uₙ = S_D[φₙ]`, the Keller comparison function in
//! the gap, and gradient blow-up measurements.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::loglog_slope;
use crate::capacitance::{capacitance_matrix, frequency_from_eigen, CapacitanceMatrix};
use crate::error::{Error, Result};
use crate::geometry::{gap_profile, mesh_pair_with, MeshOptions, ResonatorPair, SurfaceMesh};
use crate::laplace_bem::{assemble, eval_gradient, eval_potential, solve_densities, DensitySolution};
use crate::materials::MaterialParams;
use crate::real::Real;
use crate::vec3::Vec3;

/// Mode `n ∈ {1, 2}` with density `φₙ = rₙψ₁ + ψ₂`; at leading order
/// `uₙ = rₙ` on `∂D₁` and `1` on `∂D₂`.
#[derive(Clone, Debug, Serialize)]
pub struct EigenMode<T> {
    pub index: usize,
    pub density: Vec<T>,
    pub ratio: T,
    pub lambda: T,
    pub omega: Option<T>,
    pub boundary_values: [T; 2],
}

pub fn build_mode<T: Real>(
    n: usize,
    densities: &DensitySolution<T>,
    capacitance: &CapacitanceMatrix<T>,
    materials: Option<&MaterialParams<T>>,
) -> Result<EigenMode<T>> {
    if !(1..=2).contains(&n) {
        return Err(Error::Domain {
            what: "mode index",
            value: n as f64,
            domain: "{1, 2}",
        });
    }
    let ratios = capacitance.reduction.ratios.ok_or(Error::Decoupled)?;
    let ratio = ratios[n - 1];
    let lambda = capacitance.reduction.lambda[n - 1];
    let omega = materials.map(|m| frequency_from_eigen(lambda, m)).transpose()?;
    Ok(EigenMode {
        index: n,
        density: densities.combine(ratio, T::one()),
        ratio,
        lambda,
        omega,
        boundary_values: [ratio, T::one()],
    })
}

/// Value and gradient of `v̄₁ = (x₃ − h₂(x'))/d(x')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KellerValue<T> {
    pub value: T,
    pub gradient: Vec3<T>,
}

/// Keller function at a point of `Ω_{2R₀}` (between the two surfaces, `|x'| < 2R₀`).
pub fn keller_function<T: Real>(pair: &ResonatorPair<T>, x: Vec3<T>) -> Result<KellerValue<T>> {
    let outside = || Error::OutsideGap(format!("({}, {}, {})", x.x(), x.y(), x.z()));
    let r0 = gap_profile(pair).r0;
    let (x1, x2) = (x.x(), x.y());
    if (x1 * x1 + x2 * x2).sqrt() >= T::lit(2.0) * r0 {
        return Err(outside());
    }
    let top = pair.upper_surface(x1, x2).ok_or_else(outside)?;
    let bottom = pair.lower_surface(x1, x2).ok_or_else(outside)?;
    if x.z() < bottom || x.z() > top {
        return Err(outside());
    }
    let gu = pair.upper.spec.pole_height_gradient(x1, x2).ok_or_else(outside)?;
    let gl = pair.lower.spec.pole_height_gradient(x1, x2).ok_or_else(outside)?;
    let d = top - bottom;
    let above = x.z() - bottom;
    // ∂ₖh₂ = −∂ₖ(lower pole height), ∂ₖd = ∂ₖh_upper + ∂ₖh_lower
    let tangential = |k: usize| (gl[k] * d - above * (gu[k] + gl[k])) / (d * d);
    Ok(KellerValue {
        value: above / d,
        gradient: Vec3::new(tangential(0), tangential(1), T::one() / d),
    })
}

/// Axial points `(0, 0, kε/10)`, `k = 1..9`, and three mid-height rings of 16
/// points at `|x'| ∈ {ε^{1/m}, 2ε^{1/m}, R₀/2}`.
pub fn gap_grid<T: Real>(pair: &ResonatorPair<T>) -> Vec<Vec3<T>> {
    let profile = gap_profile(pair);
    let eps = pair.gap;
    let mut points: Vec<Vec3<T>> = (1..10)
        .map(|k| Vec3::new(T::zero(), T::zero(), eps * T::from_usize_lossy(k) / T::lit(10.0)))
        .collect();
    let inner = eps.powf(T::one() / T::from_usize_lossy(profile.order as usize));
    let two_pi = T::lit(2.0) * T::PI();
    for radius in [inner, T::lit(2.0) * inner, profile.r0 * T::lit(0.5)] {
        for k in 0..16 {
            let phi = two_pi * T::from_usize_lossy(k) / T::lit(16.0);
            let (x1, x2) = (radius * phi.cos(), radius * phi.sin());
            if let (Some(top), Some(bottom)) = (pair.upper_surface(x1, x2), pair.lower_surface(x1, x2)) {
                points.push(Vec3::new(x1, x2, T::lit(0.5) * (top + bottom)));
            }
        }
    }
    points
}

/// Potential and gradient of one density on a set of exterior points.
#[derive(Clone, Debug, Serialize)]
pub struct GapScan<T> {
    pub points: Vec<Vec3<T>>,
    pub potentials: Vec<T>,
    pub gradients: Vec<Vec3<T>>,
    pub max_gradient: T,
    pub argmax: Vec3<T>,
    /// Points inside a body or closer to a panel centroid than the skip distance.
    pub skipped: Vec<Vec3<T>>,
}

fn too_close<T: Real>(mesh: &SurfaceMesh<T>, x: Vec3<T>, skip: T) -> bool {
    mesh.panels.iter().any(|p| p.centroid.dist(&x) < skip)
}

/// Evaluate `S_D[density]` and its gradient on `points`. Points within
/// `10⁻³ ε` of a panel centroid are skipped.
pub fn gap_scan<T: Real>(
    mesh: &SurfaceMesh<T>,
    pair: &ResonatorPair<T>,
    density: &[T],
    points: &[Vec3<T>],
) -> Result<GapScan<T>> {
    let skip = pair.gap * T::lit(1e-3);
    let evaluated: Vec<Option<(Vec3<T>, T, Vec3<T>)>> = points
        .par_iter()
        .map(|&x| -> Result<Option<_>> {
            if too_close(mesh, x, skip) || pair.containing_body(x).is_some() {
                return Ok(None);
            }
            match (eval_potential(mesh, density, x), eval_gradient(mesh, density, x)) {
                (Ok(v), Ok(g)) => Ok(Some((x, v, g))),
                (Err(Error::PointInsideBody { .. }), _) | (_, Err(Error::PointInsideBody { .. })) => Ok(None),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut scan = GapScan {
        points: Vec::new(),
        potentials: Vec::new(),
        gradients: Vec::new(),
        max_gradient: T::zero(),
        argmax: Vec3::zero(),
        skipped: Vec::new(),
    };
    for (x, e) in points.iter().zip(evaluated) {
        match e {
            Some((p, v, g)) => {
                if g.norm() > scan.max_gradient {
                    scan.max_gradient = g.norm();
                    scan.argmax = p;
                }
                scan.points.push(p);
                scan.potentials.push(v);
                scan.gradients.push(g);
            }
            None => scan.skipped.push(*x),
        }
    }
    if scan.points.is_empty() {
        return Err(Error::OutsideGap("every gap sample was skipped".into()));
    }
    Ok(scan)
}

#[derive(Clone, Debug, Serialize)]
pub struct KellerReport<T> {
    /// `max |∇v₁ − ∇v̄₁|` over the gap samples.
    pub max_deviation: T,
    pub location: Vec3<T>,
    /// `|∇v₁(0', ε/2)| · ε`.
    pub midline_scaled_gradient: T,
    /// `∂ₓ₃ v̄₁(0') = 1/ε`.
    pub keller_axis_gradient: T,
    pub skipped: Vec<Vec3<T>>,
}

/// Compare the BEM gradient of `v₁` with the Keller function on `points`
/// (points outside `Ω_{2R₀}` are skipped).
pub fn keller_bound_check<T: Real>(
    mesh: &SurfaceMesh<T>,
    pair: &ResonatorPair<T>,
    densities: &DensitySolution<T>,
    points: &[Vec3<T>],
) -> Result<KellerReport<T>> {
    let inside: Vec<Vec3<T>> = points
        .iter()
        .copied()
        .filter(|&x| keller_function(pair, x).is_ok())
        .collect();
    let mut skipped: Vec<Vec3<T>> = points
        .iter()
        .copied()
        .filter(|&x| keller_function(pair, x).is_err())
        .collect();
    let scan = gap_scan(mesh, pair, densities.density(1), &inside)?;
    skipped.extend(scan.skipped.iter().copied());
    let mut max_deviation = T::zero();
    let mut location = Vec3::zero();
    for (&x, g) in scan.points.iter().zip(&scan.gradients) {
        let k = keller_function(pair, x)?;
        let dev = (*g - k.gradient).norm();
        if dev > max_deviation {
            max_deviation = dev;
            location = x;
        }
    }
    let eps = pair.gap;
    let mid = Vec3::new(T::zero(), T::zero(), eps * T::lit(0.5));
    let midline = eval_gradient(mesh, densities.density(1), mid)?;
    Ok(KellerReport {
        max_deviation,
        location,
        midline_scaled_gradient: midline.norm() * eps,
        keller_axis_gradient: T::one() / eps,
        skipped,
    })
}

/// Everything measured at one gap width.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupPoint<T> {
    pub eps: T,
    pub panels: usize,
    pub capacitance: CapacitanceMatrix<T>,
    /// `max |∇uₙ|` over the gap grid for `n = 1, 2`.
    pub max_gradient: [T; 2],
    /// `max |∇v₁|` and `max |∇(v₁ + v₂)|` over the gap grid.
    pub max_gradient_v1: T,
    pub max_gradient_sum: T,
    /// Mode values at panels outside the gap region, `(min |u|, max |u|)` per mode.
    pub boundary_range: [(T, T); 2],
}

/// Solve, build both modes and scan the gap of one configuration.
pub fn blowup_point<T: Real>(pair: &ResonatorPair<T>, options: &MeshOptions<T>) -> Result<BlowupPoint<T>> {
    let mesh = mesh_pair_with(pair, options)?;
    let densities = solve_densities(&assemble(&mesh)?, &mesh)?;
    let capacitance = capacitance_matrix(&mesh, &densities, None)?;
    let grid = gap_grid(pair);
    let modes = [
        build_mode(1, &densities, &capacitance, None)?,
        build_mode(2, &densities, &capacitance, None)?,
    ];
    let max_gradient = [
        gap_scan(&mesh, pair, &modes[0].density, &grid)?.max_gradient,
        gap_scan(&mesh, pair, &modes[1].density, &grid)?.max_gradient,
    ];
    let max_gradient_v1 = gap_scan(&mesh, pair, densities.density(1), &grid)?.max_gradient;
    let sum = densities.combine(T::one(), T::one());
    let max_gradient_sum = gap_scan(&mesh, pair, &sum, &grid)?.max_gradient;
    let r0 = gap_profile(pair).r0;
    let boundary_range = [0, 1].map(|k| boundary_values_away_from_gap(&mesh, &modes[k].density, r0));
    Ok(BlowupPoint {
        eps: pair.gap,
        panels: mesh.len(),
        capacitance,
        max_gradient,
        max_gradient_v1,
        max_gradient_sum,
        boundary_range,
    })
}

/// `(min, max)` of `|S_D[density]|` at collocation points farther than `2R₀`
/// from the gap centre.
pub fn boundary_values_away_from_gap<T: Real>(mesh: &SurfaceMesh<T>, density: &[T], r0: T) -> (T, T) {
    let values: Vec<T> = (0..mesh.len())
        .into_par_iter()
        .map(|i| mesh.collocation_point(i))
        .filter(|x| x.norm() > T::lit(2.0) * r0)
        .map(|x| crate::laplace_bem::field::potential_unchecked(mesh, density, x).abs())
        .collect();
    values
        .iter()
        .fold((T::infinity(), T::zero()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupReport<T> {
    /// Slopes of `log max|∇uₙ|` against `log(1/ε)`.
    pub slopes: [T; 2],
    /// `max|∇u₁| / max|∇u₂|` in sweep order (decreasing ε).
    pub ratios: Vec<T>,
    pub ratio_decreasing: bool,
    pub decades: T,
}

/// Blow-up rates from four or more sweep points spanning 1.5 decades of ε.
pub fn blowup_scan<T: Real>(points: &[BlowupPoint<T>]) -> Result<BlowupReport<T>> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} sweep points, need 4",
            points.len()
        )));
    }
    let mut sorted: Vec<&BlowupPoint<T>> = points.iter().collect();
    sorted.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap_or(std::cmp::Ordering::Equal));
    let decades = (sorted[0].eps / sorted[sorted.len() - 1].eps).log10();
    if decades < T::lit(1.5) {
        return Err(Error::InsufficientData(format!(
            "sweep spans {:.2} decades of eps, need 1.5",
            decades.as_f64()
        )));
    }
    let inv: Vec<T> = sorted.iter().map(|p| T::one() / p.eps).collect();
    let slope = |k: usize| -> Result<T> {
        let g: Vec<T> = sorted.iter().map(|p| p.max_gradient[k]).collect();
        loglog_slope(&inv, &g)
    };
    let ratios: Vec<T> = sorted.iter().map(|p| p.max_gradient[0] / p.max_gradient[1]).collect();
    let ratio_decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    Ok(BlowupReport {
        slopes: [slope(0)?, slope(1)?],
        ratios,
        ratio_decreasing,
        decades,
    })
}
