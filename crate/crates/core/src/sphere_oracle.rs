//! Two-sphere capacitance matrix by repeated Kelvin inversion (image charges).
//!
//! Sphere 1 (radius `a₁`) sits above sphere 2 (radius `a₂`) on the `x₃`-axis
//! with gap `ε`, in the same placement as [`build_pair`](crate::geometry::build_pair).
//! Charges are in units where an isolated sphere has `C = 4πa`.

use serde::Serialize;

use crate::capacitance::{capacitance_matrix, CapacitanceMatrix};
use crate::error::{Error, Result};
use crate::geometry::{mesh_pair_with, MeshOptions, ResonatorPair};
use crate::laplace_bem::{assemble, solve_densities};
use crate::real::Real;

const MAX_IMAGES: usize = 50_000_000;

/// Point charges `(value, axial position)` solving one unit-potential problem.
#[derive(Clone, Debug, Serialize)]
pub struct ImageChargeSystem<T> {
    pub radii: [T; 2],
    pub centers: [T; 2],
    /// Charges inside sphere 1 and sphere 2.
    pub families: [Vec<(T, T)>; 2],
    /// Geometric-series estimate of the truncated remainder of each family.
    pub tails: [T; 2],
    pub tol: T,
}

impl<T: Real> ImageChargeSystem<T> {
    /// Total (tail-corrected) charge of each family.
    pub fn totals(&self) -> [T; 2] {
        let sum = |k: usize| self.families[k].iter().map(|c| c.0).sum::<T>() + self.tails[k];
        [sum(0), sum(1)]
    }

    /// Potential of all charges at `(r, z)` in cylindrical coordinates, normalized
    /// so that the seeded sphere is at potential 1.
    pub fn potential(&self, r: T, z: T) -> T {
        self.families
            .iter()
            .flatten()
            .map(|&(q, zq)| q / (r * r + (z - zq) * (z - zq)).sqrt())
            .sum()
    }
}

fn check_inputs<T: Real>(a1: T, a2: T, eps: T, tol: T) -> Result<()> {
    for (what, v) in [("a1", a1), ("a2", a2)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::Domain {
                what,
                value: v.as_f64(),
                domain: "(0, inf)",
            });
        }
    }
    if !(eps > T::zero()) {
        return Err(Error::NonPositiveGap(eps.as_f64()));
    }
    if !(tol > T::lit(1e-14) && tol < T::lit(1e-6)) {
        return Err(Error::Domain {
            what: "tol",
            value: tol.as_f64(),
            domain: "(1e-14, 1e-6)",
        });
    }
    Ok(())
}

/// Image charges for unit potential on sphere `seed` (0 or 1) and zero on the other.
pub fn image_charges<T: Real>(a1: T, a2: T, eps: T, tol: T, seed: usize) -> Result<ImageChargeSystem<T>> {
    check_inputs(a1, a2, eps, tol)?;
    let radii = [a1, a2];
    let centers = [eps + a1, -a2];
    let mut families: [Vec<(T, T)>; 2] = [Vec::new(), Vec::new()];
    let stop = tol * radii[seed];
    let (mut q, mut z, mut k) = (radii[seed], centers[seed], seed);
    families[k].push((q, z));
    loop {
        let other = 1 - k;
        let (a, c) = (radii[other], centers[other]);
        let s = (z - c).abs();
        let image = -q * a / s;
        let offset = a * a / s;
        z = if z > c { c + offset } else { c - offset };
        if !(offset < a) {
            return Err(Error::NonConvergent(format!("image at offset {} outside sphere of radius {}", offset, a)));
        }
        q = image;
        k = other;
        let fam = &families[k];
        if let Some(&(prev, _)) = fam.last() {
            if q.abs() >= prev.abs() {
                return Err(Error::NonConvergent(format!(
                    "charge magnitude ratio {} >= 1",
                    (q / prev).abs()
                )));
            }
        }
        if q.abs() < stop {
            break;
        }
        families[k].push((q, z));
        if families[0].len() + families[1].len() > MAX_IMAGES {
            return Err(Error::NonConvergent(format!("more than {MAX_IMAGES} images")));
        }
    }
    let tail = |f: &Vec<(T, T)>| match f.as_slice() {
        [.., (p, _), (l, _)] => {
            let r = *l / *p;
            *l * r / (T::one() - r)
        }
        _ => T::zero(),
    };
    let tails = [tail(&families[0]), tail(&families[1])];
    Ok(ImageChargeSystem {
        radii,
        centers,
        families,
        tails,
        tol,
    })
}

/// Oracle capacitance matrix; volumes are the exact sphere volumes.
pub fn two_sphere_capacitance<T: Real>(a1: T, a2: T, eps: T, tol: T) -> Result<CapacitanceMatrix<T>> {
    let four_pi = T::lit(4.0) * T::PI();
    let v1 = image_charges(a1, a2, eps, tol, 0)?.totals();
    let v2 = image_charges(a1, a2, eps, tol, 1)?.totals();
    let c = [[four_pi * v1[0], four_pi * v2[0]], [four_pi * v1[1], four_pi * v2[1]]];
    let ball = |a: T| four_pi / T::lit(3.0) * a * a * a;
    CapacitanceMatrix::from_entries(c, [ball(a1), ball(a2)])
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison<T> {
    pub oracle: CapacitanceMatrix<T>,
    pub bem: CapacitanceMatrix<T>,
    /// `|C_bem − C_oracle| / |C_oracle|` entrywise.
    pub deviation: [[T; 2]; 2],
    pub max_deviation: T,
    pub panels: usize,
}

/// Compare the BEM capacitance of a two-sphere pair against the image charges.
pub fn oracle_vs_bem<T: Real>(pair: &ResonatorPair<T>, level: u32, tol: T) -> Result<OracleComparison<T>> {
    oracle_vs_bem_with(pair, &MeshOptions::new(level), tol)
}

pub fn oracle_vs_bem_with<T: Real>(pair: &ResonatorPair<T>, options: &MeshOptions<T>, tol: T) -> Result<OracleComparison<T>> {
    if !pair.is_two_spheres() {
        return Err(Error::Unsupported("oracle comparison needs two spheres".into()));
    }
    let (a1, a2) = (pair.upper.spec.half_width, pair.lower.spec.half_width);
    let oracle = two_sphere_capacitance(a1, a2, pair.gap, tol)?;
    let mesh = mesh_pair_with(pair, options)?;
    let solution = solve_densities(&assemble(&mesh)?, &mesh)?;
    let bem = capacitance_matrix(&mesh, &solution, None)?;
    let mut deviation = [[T::zero(); 2]; 2];
    let mut max_deviation = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let d = ((bem.c[i][j] - oracle.c[i][j]) / oracle.c[i][j]).abs();
            deviation[i][j] = d;
            max_deviation = max_deviation.max(d);
        }
    }
    Ok(OracleComparison {
        oracle,
        bem,
        deviation,
        max_deviation,
        panels: mesh.len(),
    })
}
