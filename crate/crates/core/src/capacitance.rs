//! Capacitance coefficients `Cᵢⱼ = −∫_{∂Dᵢ} ψⱼ dσ`, their volume rescaling and
//! the 2×2 eigenvalue reduction behind the two subwavelength resonances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::laplace_bem::DensitySolution;
use crate::materials::MaterialParams;
use crate::real::Real;

/// Closed-form eigen data of the rescaled matrix `C̄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenReduction<T> {
    /// `λ₁ ≤ λ₂` (λ₁ is the minus branch).
    pub lambda: [T; 2],
    /// `rₙ = (λₙ − C̄₂₂)/C̄₂₁`; `None` when the bodies decouple.
    pub ratios: Option<[T; 2]>,
    /// Row sums `σ₁ = C̄₁₁ + C̄₁₂`, `σ₂ = C̄₂₂ + C̄₂₁`.
    pub sigma: [T; 2],
    /// `C_* = (C̄₁₁σ₂ + C̄₂₂σ₁)/(C̄₁₁ + C̄₂₂)`.
    pub c_star: T,
}

pub fn eigen_reduction<T: Real>(c_bar: [[T; 2]; 2]) -> Result<EigenReduction<T>> {
    let [[a, b], [c, d]] = c_bar;
    if let Some(bad) = [a, b, c, d].into_iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            what: "rescaled capacitance entry",
            value: bad.as_f64(),
            domain: "finite",
        });
    }
    let half = T::lit(0.5);
    let disc = (a - d) * (a - d) + T::lit(4.0) * b * c;
    if disc < T::zero() {
        return Err(Error::ComplexEigenvalues(disc.as_f64()));
    }
    let root = disc.sqrt();
    let lambda = [half * (a + d - root), half * (a + d + root)];
    let ratios = (c != T::zero()).then(|| [(lambda[0] - d) / c, (lambda[1] - d) / c]);
    let sigma = [a + b, d + c];
    let c_star = (a * sigma[1] + d * sigma[0]) / (a + d);
    Ok(EigenReduction {
        lambda,
        ratios,
        sigma,
        c_star,
    })
}

/// Leading-order resonance `ωₙ = √(δ v_b² λₙ)`; the `O(δ)` remainder is not modeled.
pub fn frequency_from_eigen<T: Real>(lambda: T, materials: &MaterialParams<T>) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda.as_f64(),
            domain: "(0, inf)",
        });
    }
    let delta = materials.delta();
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Domain {
            what: "delta",
            value: delta.as_f64(),
            domain: "(0, 1)",
        });
    }
    let vb = materials.v_b();
    Ok((delta * vb * vb * lambda).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacitanceMatrix<T> {
    pub c: [[T; 2]; 2],
    pub volumes: [T; 2],
    /// `C̄ᵢⱼ = Cᵢⱼ / |Dᵢ|`.
    pub c_bar: [[T; 2]; 2],
    pub reduction: EigenReduction<T>,
    /// False when a sign condition fails or the solve was untrusted.
    pub valid: bool,
    pub flags: Vec<String>,
}

impl<T: Real> CapacitanceMatrix<T> {
    pub fn from_entries(c: [[T; 2]; 2], volumes: [T; 2]) -> Result<Self> {
        for (i, &v) in volumes.iter().enumerate() {
            if !(v > T::zero()) {
                return Err(Error::Domain {
                    what: if i == 0 { "volume of D1" } else { "volume of D2" },
                    value: v.as_f64(),
                    domain: "(0, inf)",
                });
            }
        }
        let c_bar = [
            [c[0][0] / volumes[0], c[0][1] / volumes[0]],
            [c[1][0] / volumes[1], c[1][1] / volumes[1]],
        ];
        let reduction = eigen_reduction(c_bar)?;
        let mut flags = Vec::new();
        if !(c[0][0] > T::zero() && c[1][1] > T::zero()) {
            flags.push(format!("diagonal not positive: C11={}, C22={}", c[0][0], c[1][1]));
        }
        if !(c[0][1] < T::zero() && c[1][0] < T::zero()) {
            flags.push(format!("off-diagonal not negative: C12={}, C21={}", c[0][1], c[1][0]));
        }
        Ok(CapacitanceMatrix {
            c,
            volumes,
            c_bar,
            reduction,
            valid: flags.is_empty(),
            flags,
        })
    }

    /// `|C₁₂ − C₂₁| / |C₁₂|`.
    pub fn asymmetry(&self) -> T {
        (self.c[0][1] - self.c[1][0]).abs() / self.c[0][1].abs()
    }

    /// `Cᵢ₁ + Cᵢ₂` for each body.
    pub fn row_sums(&self) -> [T; 2] {
        [self.c[0][0] + self.c[0][1], self.c[1][0] + self.c[1][1]]
    }

    pub fn lambda(&self) -> [T; 2] {
        self.reduction.lambda
    }

    pub fn c_star(&self) -> T {
        self.reduction.c_star
    }
}

fn charge<T: Real>(mesh: &SurfaceMesh<T>, body: u8, density: &[T]) -> T {
    -mesh.panels_of(body).map(|(k, p)| density[k] * p.area).sum::<T>()
}

/// Capacitance matrix of a two-body mesh. Volumes default to the mesh's own
/// divergence-theorem volumes so that `C̄` shares the discretization.
pub fn capacitance_matrix<T: Real>(
    mesh: &SurfaceMesh<T>,
    densities: &DensitySolution<T>,
    volumes: Option<[T; 2]>,
) -> Result<CapacitanceMatrix<T>> {
    if mesh.body_count() != 2 {
        return Err(Error::Unsupported(format!(
            "capacitance matrix needs two bodies, mesh has {}",
            mesh.body_count()
        )));
    }
    for j in 1..=2 {
        if densities.density(j).len() != mesh.len() {
            return Err(Error::DensityLength {
                expected: mesh.len(),
                got: densities.density(j).len(),
            });
        }
    }
    let volumes = match volumes {
        Some(v) => v,
        None => [mesh.volume(1)?, mesh.volume(2)?],
    };
    let c = [
        [charge(mesh, 1, densities.density(1)), charge(mesh, 1, densities.density(2))],
        [charge(mesh, 2, densities.density(1)), charge(mesh, 2, densities.density(2))],
    ];
    let mut out = CapacitanceMatrix::from_entries(c, volumes)?;
    if !densities.trusted {
        out.valid = false;
        out.flags.extend(densities.warnings.iter().cloned());
    }
    Ok(out)
}

/// Capacitance `−∫ ψ dσ` of a single body (mesh tag 1) from its density.
pub fn self_capacitance<T: Real>(mesh: &SurfaceMesh<T>, density: &[T]) -> Result<T> {
    if density.len() != mesh.len() {
        return Err(Error::DensityLength {
            expected: mesh.len(),
            got: density.len(),
        });
    }
    Ok(charge(mesh, 1, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_two_by_two() {
        let r = eigen_reduction([[3.0, -1.0], [-1.0, 3.0]]).unwrap();
        assert_relative_eq!(r.lambda[0], 2.0);
        assert_relative_eq!(r.lambda[1], 4.0);
        let [r1, r2] = r.ratios.unwrap();
        assert_relative_eq!(r1, 1.0);
        assert_relative_eq!(r2, -1.0);
        assert_eq!(r.sigma, [2.0, 2.0]);
        assert_relative_eq!(r.c_star, 2.0);
    }

    #[test]
    fn asymmetric_two_by_two() {
        let r = eigen_reduction([[4.0, -1.0], [-2.0, 3.0]]).unwrap();
        assert_relative_eq!(r.lambda[0], 2.0);
        assert_relative_eq!(r.lambda[1], 5.0);
        assert_relative_eq!(r.ratios.unwrap()[0], 0.5);
    }

    #[test]
    fn decoupled_and_complex_cases() {
        let r = eigen_reduction([[4.0, 0.0], [0.0, 3.0]]).unwrap();
        assert!(r.ratios.is_none());
        assert_eq!(r.lambda, [3.0, 4.0]);
        assert!(matches!(
            eigen_reduction([[1.0, 1.0], [-1.0, 1.0]]),
            Err(Error::ComplexEigenvalues(_))
        ));
        assert!(eigen_reduction([[f64::NAN, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn frequency_arithmetic() {
        let m = MaterialParams::from_contrast(1e-3, 1.0).unwrap();
        assert_relative_eq!(frequency_from_eigen(2.0, &m).unwrap(), 0.002f64.sqrt(), max_relative = 1e-12);
        let fast = MaterialParams::from_contrast(1e-3, 2.0).unwrap();
        assert_relative_eq!(
            frequency_from_eigen(2.0, &fast).unwrap(),
            2.0 * frequency_from_eigen(2.0, &m).unwrap(),
            max_relative = 1e-12
        );
        let tiny = MaterialParams::from_contrast(1e-12, 1.0).unwrap();
        assert!(frequency_from_eigen(2.0, &tiny).unwrap() < 1e-5);
        assert!(frequency_from_eigen(0.0, &m).is_err());
    }

    #[test]
    fn sign_violations_are_flagged() {
        let ok = CapacitanceMatrix::from_entries([[5.0, -1.0], [-1.0, 5.0]], [1.0, 1.0]).unwrap();
        assert!(ok.valid);
        let bad = CapacitanceMatrix::from_entries([[5.0, 1.0], [1.0, 5.0]], [1.0, 1.0]).unwrap();
        assert!(!bad.valid);
        assert_eq!(bad.flags.len(), 1);
        assert!(CapacitanceMatrix::from_entries([[5.0, -1.0], [-1.0, 5.0]], [0.0, 1.0]).is_err());
    }
}
