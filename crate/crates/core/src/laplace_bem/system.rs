//! Area-weighted single-layer matrix and the two density solves.

use std::io::{self, Write};

use rayon::prelude::*;

use super::panel_integrals::{panel_integral, tested_integral, InverseDistance, NearFieldRule};
use crate::error::{Error, Result};
use crate::geometry::{RotationalSymmetry, SurfaceMesh};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::real::Real;
use crate::vec3::Vec3;

/// Condition estimates above this mark a solve as untrusted.
pub const TRUST_CONDITION: f64 = 1e12;

/// How the unknowns of the stored matrix map onto panels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// One unknown per panel.
    Dense,
    /// One unknown per rotation orbit; the stored entry `(c, k)` is the sum of
    /// the sector-0 row of class `c` over all panels of class `k`. Exact for
    /// right-hand sides invariant under the mesh rotation.
    Rotational(RotationalSymmetry),
}

/// Discrete single-layer operator `A[i][j] = ∫_{panel j} G(cᵢ, y) dσ(y)` with
/// `G(x, y) = −1/(4π|x − y|)`.
///
/// The stored matrix is the area-weighted `W ≈ diag(areaᵢ) A` (near pairs
/// tested over the whole panel), averaged with its transpose. Panel values
/// are recovered as `A ψ ≈ W ψ / areaᵢ`.
#[derive(Clone, Debug)]
pub struct SingleLayerSystem<T> {
    pub matrix: DenseMatrix<T>,
    /// Row weights (panel areas) of the stored matrix.
    pub weights: Vec<T>,
    pub layout: Layout,
    pub rule: NearFieldRule<T>,
    /// `max|W − Wᵀ| / max|W|` before symmetrization.
    pub raw_asymmetry: T,
    /// Body tag of every unknown.
    pub unknown_body: Vec<u8>,
}

/// Row `i` of `W = diag(area) A`. Near pairs (centroids closer than
/// `near_factor` times the larger diameter) are averaged over the target panel
/// as well, so that `W` is symmetric up to quadrature error; far pairs use the
/// centroid, where both forms agree.
///
/// Test points sit on the analytic boundary (radial projection), not on the
/// chord: the flat panels lie slightly inside the body, and imposing the
/// boundary data on the true surface keeps the gap between nearly touching
/// bodies at its exact width.
fn row_entries<T: Real>(mesh: &SurfaceMesh<T>, i: usize, rule: &NearFieldRule<T>) -> Result<Vec<T>> {
    let target = &mesh.panels[i];
    let x = mesh.collocation_point(i);
    let body = mesh.body(target.body);
    let place = |y: Vec3<T>| body.map_or(y, |b| b.project(y));
    let scale = -T::inv_four_pi();
    let tiny = T::EPS * target.diameter;
    mesh.panels
        .iter()
        .enumerate()
        .map(|(j, p)| {
            if p.body != target.body && target.centroid.dist(&p.centroid) <= tiny {
                return Err(Error::OverlappingPanels(i, j));
            }
            let reach = rule.near_factor * target.diameter.max(p.diameter);
            let v = if j == i || target.centroid.dist(&p.centroid) < reach {
                tested_integral::<T, InverseDistance>(&target.corners, &p.corners, j == i, rule, place)
            } else {
                target.area * panel_integral::<T, InverseDistance>(x, &p.corners, p.centroid, p.area, p.diameter, rule)
            };
            Ok(scale * v)
        })
        .collect()
}

/// Assemble with the rotational reduction when the mesh supports it.
pub fn assemble<T: Real>(mesh: &SurfaceMesh<T>) -> Result<SingleLayerSystem<T>> {
    assemble_with(mesh, NearFieldRule::default(), mesh.symmetry.is_some())
}

/// Full `N × N` assembly regardless of symmetry.
pub fn assemble_dense<T: Real>(mesh: &SurfaceMesh<T>) -> Result<SingleLayerSystem<T>> {
    assemble_with(mesh, NearFieldRule::default(), false)
}

pub fn assemble_with<T: Real>(
    mesh: &SurfaceMesh<T>,
    rule: NearFieldRule<T>,
    use_symmetry: bool,
) -> Result<SingleLayerSystem<T>> {
    if mesh.is_empty() {
        return Err(Error::EmptyBody(1));
    }
    let (mut matrix, layout, unknown_body) = match (use_symmetry, mesh.symmetry) {
        (true, Some(sym)) => {
            let rows: Vec<Vec<T>> = (0..sym.classes)
                .into_par_iter()
                .map(|c| {
                    let full = row_entries(mesh, sym.representative(c), &rule)?;
                    let mut reduced = vec![T::zero(); sym.classes];
                    for (j, v) in full.into_iter().enumerate() {
                        reduced[sym.class_of(j)] += v;
                    }
                    Ok(reduced)
                })
                .collect::<Result<_>>()?;
            let bodies = (0..sym.classes)
                .map(|c| mesh.panels[sym.representative(c)].body)
                .collect();
            (
                DenseMatrix::from_rows(sym.classes, rows.concat()),
                Layout::Rotational(sym),
                bodies,
            )
        }
        _ => {
            let n = mesh.len();
            let mut m = DenseMatrix::zeros(n);
            m.rows_mut()
                .enumerate()
                .collect::<Vec<_>>()
                .into_par_iter()
                .try_for_each(|(i, row)| -> Result<()> {
                    row.copy_from_slice(&row_entries(mesh, i, &rule)?);
                    Ok(())
                })?;
            (m, Layout::Dense, mesh.panels.iter().map(|p| p.body).collect())
        }
    };
    let weights: Vec<T> = match layout {
        Layout::Dense => mesh.panels.iter().map(|p| p.area).collect(),
        Layout::Rotational(sym) => (0..sym.classes)
            .map(|c| mesh.panels[sym.representative(c)].area)
            .collect(),
    };
    let raw_asymmetry = matrix.asymmetry();
    matrix.symmetrize();
    Ok(SingleLayerSystem {
        matrix,
        weights,
        layout,
        rule,
        raw_asymmetry,
        unknown_body,
    })
}

impl<T: Real> SingleLayerSystem<T> {
    pub fn unknowns(&self) -> usize {
        self.matrix.dim()
    }

    fn expand(&self, reduced: &[T], panels: usize) -> Vec<T> {
        match self.layout {
            Layout::Dense => reduced.to_vec(),
            Layout::Rotational(sym) => (0..panels).map(|p| reduced[sym.class_of(p)]).collect(),
        }
    }

    fn restrict(&self, full: &[T]) -> Vec<T> {
        match self.layout {
            Layout::Dense => full.to_vec(),
            Layout::Rotational(sym) => (0..sym.classes).map(|c| full[sym.representative(c)]).collect(),
        }
    }

    /// Apply the operator to a per-panel density (rotation-invariant densities
    /// only for the reduced layout); returns values at panel centroids.
    pub fn apply(&self, density: &[T]) -> Vec<T> {
        let out: Vec<T> = self
            .matrix
            .matvec(&self.restrict(density))
            .into_iter()
            .zip(&self.weights)
            .map(|(v, &w)| v / w)
            .collect();
        self.expand(&out, density.len())
    }

    /// Binary dump: magic `SLS0`, u32 dimension, two reserved u32 words, then
    /// the stored (weighted, symmetrized) matrix as row-major little-endian f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.matrix.dim();
        w.write_all(b"SLS0")?;
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for v in self.matrix.as_slice() {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        Ok(())
    }
}

/// Densities ψ₁, ψ₂ with `S_D[ψⱼ] = δᵢⱼ` on `∂Dᵢ`, one value per panel.
#[derive(Clone, Debug)]
pub struct DensitySolution<T> {
    pub psi: [Vec<T>; 2],
    /// `‖Aψⱼ − fⱼ‖∞` for each right-hand side.
    pub residual: [T; 2],
    pub condition_estimate: T,
    pub trusted: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> DensitySolution<T> {
    pub fn density(&self, j: usize) -> &[T] {
        &self.psi[j - 1]
    }

    /// `ψ₁ + ψ₂`, or any combination `a ψ₁ + b ψ₂`.
    pub fn combine(&self, a: T, b: T) -> Vec<T> {
        self.psi[0].iter().zip(&self.psi[1]).map(|(&p, &q)| a * p + b * q).collect()
    }
}

/// Factor once, solve for both indicator right-hand sides.
pub fn solve_densities<T: Real>(system: &SingleLayerSystem<T>, mesh: &SurfaceMesh<T>) -> Result<DensitySolution<T>> {
    let expected = match system.layout {
        Layout::Dense => system.unknowns(),
        Layout::Rotational(sym) => sym.classes * sym.sectors,
    };
    if expected != mesh.len() {
        return Err(Error::DensityLength {
            expected: mesh.len(),
            got: expected,
        });
    }
    let lu = LuFactors::factor(system.matrix.clone())?;
    let condition_estimate = lu.condition_estimate();
    let mut warnings = Vec::new();
    let trusted = condition_estimate.is_finite() && condition_estimate.as_f64() <= TRUST_CONDITION;
    if !trusted {
        warnings.push(format!("condition estimate {:e} above {TRUST_CONDITION:e}", condition_estimate.as_f64()));
    }
    let mut psi: [Vec<T>; 2] = [Vec::new(), Vec::new()];
    let mut residual = [T::zero(); 2];
    for (slot, tag) in [1u8, 2].into_iter().enumerate() {
        let rhs: Vec<T> = system
            .unknown_body
            .iter()
            .map(|&b| if b == tag { T::one() } else { T::zero() })
            .collect();
        let weighted: Vec<T> = rhs.iter().zip(&system.weights).map(|(&f, &w)| f * w).collect();
        let x = lu.solve(&weighted);
        let ax = system.matrix.matvec(&x);
        residual[slot] = ax
            .iter()
            .zip(&rhs)
            .zip(&system.weights)
            .fold(T::zero(), |m, ((&a, &f), &w)| m.max((a / w - f).abs()));
        psi[slot] = system.expand(&x, mesh.len());
    }
    Ok(DensitySolution {
        psi,
        residual,
        condition_estimate,
        trusted,
        warnings,
    })
}
