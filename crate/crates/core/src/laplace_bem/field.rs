//! Off-surface evaluation of single-layer potentials and their gradients.

use rayon::prelude::*;

use super::panel_integrals::{panel_integral, InverseDistance, InverseDistanceGradient, NearFieldRule, PanelKernel};
use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::quadrature::gauss_legendre;
use crate::real::Real;
use crate::vec3::Vec3;

fn check_point<T: Real>(mesh: &SurfaceMesh<T>, density: &[T], x: Vec3<T>) -> Result<()> {
    if density.len() != mesh.len() {
        return Err(Error::DensityLength {
            expected: mesh.len(),
            got: density.len(),
        });
    }
    for (idx, body) in mesh.bodies.iter().enumerate() {
        if body.contains(x) {
            return Err(Error::PointInsideBody {
                x: x.x().as_f64(),
                y: x.y().as_f64(),
                z: x.z().as_f64(),
                body: (idx + 1) as u8,
            });
        }
    }
    Ok(())
}

fn layer_sum<T: Real, K: PanelKernel<T>>(mesh: &SurfaceMesh<T>, density: &[T], x: Vec3<T>, rule: &NearFieldRule<T>) -> K::Out {
    mesh.panels
        .iter()
        .zip(density)
        .fold(K::zero(), |acc, (p, &psi)| {
            acc + panel_integral::<T, K>(x, &p.corners, p.centroid, p.area, p.diameter, rule) * psi
        })
}

/// `S_D[ψ](x)` without the exterior-point check (collocation consistency).
pub(crate) fn potential_unchecked<T: Real>(mesh: &SurfaceMesh<T>, density: &[T], x: Vec3<T>) -> T {
    -T::inv_four_pi() * layer_sum::<T, InverseDistance>(mesh, density, x, &NearFieldRule::default())
}

/// `S_D[ψ](x)` at an exterior point.
pub fn eval_potential<T: Real>(mesh: &SurfaceMesh<T>, density: &[T], x: Vec3<T>) -> Result<T> {
    check_point(mesh, density, x)?;
    Ok(potential_unchecked(mesh, density, x))
}

/// `∇S_D[ψ](x)` at an exterior point, kernel gradient `(x − y)/(4π|x − y|³)`.
pub fn eval_gradient<T: Real>(mesh: &SurfaceMesh<T>, density: &[T], x: Vec3<T>) -> Result<Vec3<T>> {
    check_point(mesh, density, x)?;
    let g = layer_sum::<T, InverseDistanceGradient>(mesh, density, x, &NearFieldRule::default());
    Ok(g * (-T::inv_four_pi()))
}

/// Evaluate the gradient at many points in parallel, order preserved.
pub fn eval_gradients<T: Real>(mesh: &SurfaceMesh<T>, density: &[T], points: &[Vec3<T>]) -> Vec<Result<Vec3<T>>> {
    points.par_iter().map(|&x| eval_gradient(mesh, density, x)).collect()
}

/// `−∮_{|x|=R} ∂ν S_D[ψ] dσ` with a Gauss–Legendre × trapezoid rule of
/// `n_polar × 2 n_polar` nodes.
pub fn outward_flux<T: Real>(mesh: &SurfaceMesh<T>, density: &[T], radius: T, n_polar: usize) -> Result<T> {
    let rule = gauss_legendre::<T>(n_polar);
    let n_az = 2 * n_polar;
    let dphi = T::lit(2.0) * T::PI() / T::from_usize_lossy(n_az);
    let nodes: Vec<(Vec3<T>, T)> = rule
        .iter()
        .flat_map(|&(ct, w)| {
            let st = (T::one() - ct * ct).max(T::zero()).sqrt();
            (0..n_az).map(move |k| {
                let phi = dphi * T::from_usize_lossy(k);
                let dir = Vec3::new(st * phi.cos(), st * phi.sin(), ct);
                (dir, w * dphi)
            })
        })
        .collect();
    let parts: Vec<T> = nodes
        .par_iter()
        .map(|&(dir, w)| -> Result<T> {
            let g = eval_gradient(mesh, density, dir * radius)?;
            Ok(-g.dot(&dir) * w * radius * radius)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().sum())
}
