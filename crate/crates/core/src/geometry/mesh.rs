//! Latitude–longitude triangulation of each body, graded toward the contact pole.
//!
//! Vertices sit on rings of constant polar angle θ (measured from the contact
//! pole) at azimuths `2πj/n_φ`. The band edges grow geometrically from a small
//! polar cap until they reach the base spacing `π/n_θ`, then stay uniform.
//! Every ring carries the same azimuths and every quad is split the same way,
//! so an axisymmetric body yields a mesh invariant under rotation by `2π/n_φ`.
//! Panels are stored class-major (`index = class · n_φ + sector`).

use std::collections::HashMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::pair::{gap_profile, ResonatorPair};
use super::shape::PlacedBody;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec3::Vec3;

/// Fraction of the flat-gap radius `(ε/Λ)^{1/m}` used as the pole cap radius.
pub const DEFAULT_CAP_FRACTION: f64 = 0.25;
pub const DEFAULT_GRADING: f64 = 1.6;
pub const MAX_LEVEL: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Panel<T> {
    pub corners: [Vec3<T>; 3],
    pub centroid: Vec3<T>,
    pub normal: Vec3<T>,
    pub area: T,
    pub diameter: T,
    pub body: u8,
}

impl<T: Real> Panel<T> {
    pub fn from_corners(corners: [Vec3<T>; 3], body: u8) -> Self {
        let [a, b, c] = corners;
        let third = T::one() / T::lit(3.0);
        let cr = (b - a).cross(&(c - a));
        let twice_area = cr.norm();
        let diameter = a.dist(&b).max(b.dist(&c)).max(c.dist(&a));
        Panel {
            corners,
            centroid: (a + b + c) * third,
            normal: cr.normalized(),
            area: twice_area * T::lit(0.5),
            diameter,
            body,
        }
    }
}

/// Panels come in `classes` orbits of `sectors` panels each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationalSymmetry {
    pub sectors: usize,
    pub classes: usize,
}

impl RotationalSymmetry {
    #[inline]
    pub fn class_of(&self, panel: usize) -> usize {
        panel / self.sectors
    }

    /// Panel index of the sector-0 member of a class.
    #[inline]
    pub fn representative(&self, class: usize) -> usize {
        class * self.sectors
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradingInfo<T> {
    pub ratio: T,
    /// Number of geometric steps between the pole cap and the base spacing.
    pub depth: u32,
    /// Base panel size `R_pole · π/n_θ`.
    pub base_size: T,
    /// Largest diameter among the panels touching the contact pole.
    pub pole_panel_diameter: T,
    pub bands: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
    pub panels: Vec<Panel<T>>,
    /// Analytic bodies, indexed by `tag - 1`.
    pub bodies: Vec<PlacedBody<T>>,
    pub symmetry: Option<RotationalSymmetry>,
    pub grading: Vec<GradingInfo<T>>,
}

/// Number of azimuthal sectors at a refinement level (`≈ 16·√2^level`, even).
pub fn azimuthal_count(level: u32) -> usize {
    2 * (8.0 * 2f64.powf(level as f64 / 2.0)).round() as usize
}

fn polar_band_edges<T: Real>(n_base: usize, cap: Option<(T, T)>) -> Vec<T> {
    let pi = T::PI();
    let base = pi / T::from_usize_lossy(n_base);
    let mut edges = vec![T::zero()];
    if let Some((theta_cap, ratio)) = cap {
        let mut t = theta_cap.min(base);
        edges.push(t);
        while t * (ratio - T::one()) < base && t * ratio < T::lit(0.5) * pi {
            t = t * ratio;
            edges.push(t);
        }
    }
    let start = *edges.last().unwrap();
    let count = ((pi - start) / base).ceil().to_usize().unwrap_or(1).max(1);
    let step = (pi - start) / T::from_usize_lossy(count);
    for k in 1..=count {
        edges.push(if k == count { pi } else { start + step * T::from_usize_lossy(k) });
    }
    edges
}

struct BodyPatch<T> {
    vertices: Vec<Vec3<T>>,
    /// Triangles grouped by class, `sectors` per class.
    classes: Vec<Vec<[usize; 3]>>,
}

fn triangulate_body<T: Real>(body: &PlacedBody<T>, edges: &[T], sectors: usize) -> BodyPatch<T> {
    let two_pi = T::lit(2.0) * T::PI();
    let rings = edges.len() - 2;
    let mut vertices = Vec::with_capacity(rings * sectors + 2);
    vertices.push(body.surface_point(T::zero(), T::zero()));
    for &theta in &edges[1..edges.len() - 1] {
        for j in 0..sectors {
            let phi = two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(sectors);
            vertices.push(body.surface_point(theta, phi));
        }
    }
    vertices.push(body.surface_point(T::PI(), T::zero()));
    let far = vertices.len() - 1;
    let ring = |k: usize, j: usize| 1 + k * sectors + (j % sectors);

    let mut classes = Vec::new();
    classes.push((0..sectors).map(|j| [0, ring(0, j), ring(0, j + 1)]).collect());
    for k in 0..rings.saturating_sub(1) {
        let (mut lo, mut hi) = (Vec::with_capacity(sectors), Vec::with_capacity(sectors));
        for j in 0..sectors {
            let (a, b) = (ring(k, j), ring(k, j + 1));
            let (c, d) = (ring(k + 1, j + 1), ring(k + 1, j));
            lo.push([a, b, c]);
            hi.push([a, c, d]);
        }
        classes.push(lo);
        classes.push(hi);
    }
    classes.push((0..sectors).map(|j| [ring(rings - 1, j), far, ring(rings - 1, j + 1)]).collect());

    // orient outward
    for class in classes.iter_mut() {
        for tri in class.iter_mut() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let n = (b - a).cross(&(c - a));
            let centroid = (a + b + c) * (T::one() / T::lit(3.0));
            if (centroid - body.center).dot(&n) < T::zero() {
                tri.swap(1, 2);
            }
        }
    }
    BodyPatch { vertices, classes }
}

fn assemble_mesh<T: Real>(
    bodies: Vec<PlacedBody<T>>,
    caps: Vec<Option<(T, T)>>,
    level: u32,
) -> Result<SurfaceMesh<T>> {
    if level > MAX_LEVEL {
        return Err(Error::InvalidMeshParameter(format!(
            "level {level} exceeds {MAX_LEVEL}"
        )));
    }
    let sectors = azimuthal_count(level);
    let n_base = sectors / 2;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut panels = Vec::new();
    let mut grading = Vec::new();
    let mut n_classes = 0;
    for (idx, (body, cap)) in bodies.iter().zip(&caps).enumerate() {
        let tag = (idx + 1) as u8;
        let edges = polar_band_edges(n_base, *cap);
        let patch = triangulate_body(body, &edges, sectors);
        let offset = vertices.len();
        vertices.extend_from_slice(&patch.vertices);
        let min_area = T::lit(1e-14) * body.spec.half_width * body.spec.half_width;
        let mut pole_diameter = T::zero();
        for (ci, class) in patch.classes.iter().enumerate() {
            for tri in class {
                let corners = tri.map(|i| patch.vertices[i]);
                let panel = Panel::from_corners(corners, tag);
                if !(panel.area >= min_area) {
                    return Err(Error::DegeneratePanel {
                        index: panels.len(),
                        area: panel.area.as_f64(),
                    });
                }
                if ci == 0 {
                    pole_diameter = pole_diameter.max(panel.diameter);
                }
                triangles.push(tri.map(|i| i + offset));
                panels.push(panel);
            }
        }
        n_classes += patch.classes.len();
        let base_size = body.spec.pole_distance() * T::PI() / T::from_usize_lossy(n_base);
        let (ratio, depth) = match cap {
            Some((theta_cap, ratio)) => {
                let cap_size = (*theta_cap).min(T::PI() / T::from_usize_lossy(n_base))
                    * body.spec.pole_distance();
                let depth = ((base_size / cap_size).ln() / ratio.ln()).floor().max(T::zero());
                (*ratio, depth.to_u32().unwrap_or(0))
            }
            None => (T::one(), 0),
        };
        grading.push(GradingInfo {
            ratio,
            depth,
            base_size,
            pole_panel_diameter: pole_diameter,
            bands: edges.len() - 1,
        });
    }
    let symmetry = bodies
        .iter()
        .all(|b| b.spec.is_axisymmetric() && b.center.radial() == T::zero())
        .then_some(RotationalSymmetry {
            sectors,
            classes: n_classes,
        });
    Ok(SurfaceMesh {
        vertices,
        triangles,
        panels,
        bodies,
        symmetry,
        grading,
    })
}

/// Resolution controls for [`mesh_pair_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions<T> {
    pub level: u32,
    /// Ratio between successive polar bands near the pole, in `(1, 3]`.
    pub grading: T,
    /// Pole cap radius as a fraction of `(ε/Λ)^{1/m}`.
    pub cap_fraction: T,
}

impl<T: Real> MeshOptions<T> {
    pub fn new(level: u32) -> Self {
        MeshOptions {
            level,
            grading: T::lit(DEFAULT_GRADING),
            cap_fraction: T::lit(DEFAULT_CAP_FRACTION),
        }
    }

    pub fn grading(self, grading: T) -> Self {
        MeshOptions { grading, ..self }
    }

    pub fn cap_fraction(self, cap_fraction: T) -> Self {
        MeshOptions { cap_fraction, ..self }
    }
}

pub fn mesh_pair_with<T: Real>(pair: &ResonatorPair<T>, options: &MeshOptions<T>) -> Result<SurfaceMesh<T>> {
    mesh_pair_with_cap(pair, options.level, options.grading, options.cap_fraction)
}

/// Mesh both bodies of a pair, graded toward the contact poles.
pub fn mesh_pair<T: Real>(pair: &ResonatorPair<T>, level: u32, grading: T) -> Result<SurfaceMesh<T>> {
    mesh_pair_with_cap(pair, level, grading, T::lit(DEFAULT_CAP_FRACTION))
}

pub fn mesh_pair_with_cap<T: Real>(
    pair: &ResonatorPair<T>,
    level: u32,
    grading: T,
    cap_fraction: T,
) -> Result<SurfaceMesh<T>> {
    if !(grading > T::one() && grading <= T::lit(3.0)) {
        return Err(Error::InvalidMeshParameter(format!(
            "grading ratio {grading} outside (1, 3]"
        )));
    }
    if !(cap_fraction > T::zero()) {
        return Err(Error::InvalidMeshParameter("cap fraction must be positive".into()));
    }
    let profile = gap_profile(pair);
    let m = T::from_usize_lossy(profile.order as usize);
    let flat_radius = (pair.gap / profile.lambda.effective()).powf(T::one() / m);
    let r_cap = cap_fraction * flat_radius;
    let caps = [&pair.upper, &pair.lower]
        .iter()
        .map(|b| Some((r_cap / b.spec.pole_distance(), grading)))
        .collect();
    assemble_mesh(vec![pair.upper.clone(), pair.lower.clone()], caps, level)
}

/// Ungraded mesh of a single body, tagged 1.
pub fn mesh_body<T: Real>(body: &PlacedBody<T>, level: u32) -> Result<SurfaceMesh<T>> {
    body.spec.validate()?;
    assemble_mesh(vec![body.clone()], vec![None], level)
}

impl<T: Real> SurfaceMesh<T> {
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn body_count(&self) -> usize {
        self.bodies.len()
    }

    pub fn body(&self, tag: u8) -> Option<&PlacedBody<T>> {
        self.bodies.get((tag as usize).wrapping_sub(1))
    }

    /// Centroid of panel `i` projected onto its analytic boundary; the flat
    /// centroid itself when the mesh carries no body description.
    pub fn collocation_point(&self, i: usize) -> Vec3<T> {
        let p = &self.panels[i];
        self.body(p.body).map_or(p.centroid, |b| b.project(p.centroid))
    }

    pub fn panels_of(&self, tag: u8) -> impl Iterator<Item = (usize, &Panel<T>)> {
        self.panels.iter().enumerate().filter(move |(_, p)| p.body == tag)
    }

    pub fn max_diameter(&self) -> T {
        self.panels.iter().map(|p| p.diameter).fold(T::zero(), T::max)
    }

    /// Every edge of the tagged body shared by exactly two of its triangles,
    /// and `V − E + F = 2`.
    pub fn check_watertight(&self, tag: u8) -> Result<()> {
        let mut edges: HashMap<(usize, usize), (u32, bool)> = HashMap::new();
        let mut faces = 0usize;
        let mut verts = std::collections::HashSet::new();
        for (tri, panel) in self.triangles.iter().zip(&self.panels) {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edges.entry((a.min(b), a.max(b))).or_insert((0, true));
                if panel.body == tag {
                    e.0 += 1;
                } else {
                    e.1 = false;
                }
            }
            if panel.body == tag {
                faces += 1;
                verts.extend(tri.iter().copied());
            }
        }
        if faces == 0 {
            return Err(Error::EmptyBody(tag));
        }
        let body_edges: Vec<_> = edges.iter().filter(|(_, (n, _))| *n > 0).collect();
        if let Some(((a, b), (n, own))) = body_edges.iter().find(|(_, (n, own))| *n != 2 || !*own) {
            return Err(Error::NotWatertight {
                body: tag,
                detail: format!("edge ({a}, {b}) used {n} times (exclusive: {own})"),
            });
        }
        let euler = verts.len() as i64 - body_edges.len() as i64 + faces as i64;
        if euler != 2 {
            return Err(Error::NotWatertight {
                body: tag,
                detail: format!("Euler characteristic {euler}"),
            });
        }
        Ok(())
    }

    /// Divergence-theorem volume `(1/3) Σ (c·ν) area` over the tagged body.
    pub fn volume(&self, tag: u8) -> Result<T> {
        self.check_watertight(tag)?;
        let third = T::one() / T::lit(3.0);
        Ok(self
            .panels_of(tag)
            .map(|(_, p)| p.centroid.dot(&p.normal) * p.area)
            .sum::<T>()
            * third)
    }

    pub fn total_area(&self, tag: u8) -> T {
        self.panels_of(tag).map(|(_, p)| p.area).sum()
    }

    /// Smallest distance between a vertex of body 1 and a vertex of body 2.
    pub fn min_vertex_separation(&self) -> Option<T> {
        let mut tagged: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (tri, p) in self.triangles.iter().zip(&self.panels) {
            if (1..=2).contains(&p.body) {
                tagged[(p.body - 1) as usize].extend_from_slice(tri);
            }
        }
        for t in tagged.iter_mut() {
            t.sort_unstable();
            t.dedup();
        }
        if tagged[0].is_empty() || tagged[1].is_empty() {
            return None;
        }
        let mut best = T::infinity();
        for &i in &tagged[0] {
            for &j in &tagged[1] {
                best = best.min(self.vertices[i].dist(&self.vertices[j]));
            }
        }
        Some(best)
    }

    /// Write the mesh as an OFF file.
    pub fn write_off<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(w, "{} {} {}", v.x(), v.y(), v.z())?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_pair, BodySpec, Facing};

    fn unit_sphere_at_origin() -> PlacedBody<f64> {
        PlacedBody {
            spec: BodySpec::sphere(1.0).unwrap(),
            center: Vec3::zero(),
            facing: Facing::Down,
        }
    }

    #[test]
    fn azimuthal_counts_are_even_and_grow() {
        let counts: Vec<_> = (0..7).map(azimuthal_count).collect();
        assert_eq!(counts, vec![16, 22, 32, 46, 64, 90, 128]);
    }

    #[test]
    fn graded_edges_are_monotone_and_end_at_pi() {
        let e = polar_band_edges::<f64>(24, Some((1e-3, 1.6)));
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), std::f64::consts::PI);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        let widths: Vec<_> = e.windows(2).map(|w| w[1] - w[0]).collect();
        let base = std::f64::consts::PI / 24.0;
        assert!(widths.iter().all(|&w| w <= base * 1.0000001));
        // geometric stage
        assert!((widths[2] / widths[1] - 1.6).abs() < 1e-12);
    }

    #[test]
    fn level_zero_is_watertight_per_body() {
        let s = BodySpec::superellipsoid(1.0, 4).unwrap();
        let pair = build_pair(s.clone(), s, 0.2).unwrap();
        let mesh = mesh_pair(&pair, 0, 1.6).unwrap();
        mesh.check_watertight(1).unwrap();
        mesh.check_watertight(2).unwrap();
        assert!(matches!(mesh.check_watertight(3), Err(Error::EmptyBody(3))));
    }

    #[test]
    fn normals_point_outward() {
        let pair = build_pair(
            BodySpec::ellipsoid(1.0, 0.6, 0.8).unwrap(),
            BodySpec::sphere(1.2).unwrap(),
            0.05,
        )
        .unwrap();
        let mesh = mesh_pair(&pair, 2, 1.6).unwrap();
        for p in &mesh.panels {
            let c = mesh.body(p.body).unwrap().center;
            assert!((p.centroid - c).dot(&p.normal) > 0.0);
            assert!(p.area > 0.0);
        }
        assert!(mesh.symmetry.is_none());
    }

    #[test]
    fn sphere_volume_converges_at_second_order() {
        let body = unit_sphere_at_origin();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        let err = |level| {
            let m = mesh_body(&body, level).unwrap();
            (m.volume(1).unwrap() - exact).abs()
        };
        let (e2, e4) = (err(2), err(4));
        assert!(e4 < e2);
        // level +2 halves the spacing, so order 2 means a 4x reduction
        let order = (e2 / e4).log2();
        assert!(order > 1.8, "observed order {order}");
        let fine = mesh_body(&body, 3).unwrap();
        assert!(((fine.volume(1).unwrap() - exact) / exact).abs() < 0.01);
    }

    #[test]
    fn ellipsoid_volume_within_one_percent() {
        let body = PlacedBody {
            spec: BodySpec::ellipsoid(1.0, 1.0, 2.0).unwrap(),
            center: Vec3::new(0.3, -0.2, 5.0),
            facing: Facing::Up,
        };
        let mesh = mesh_body(&body, 4).unwrap();
        let exact = 8.0 * std::f64::consts::PI / 3.0;
        assert!(((mesh.volume(1).unwrap() - exact) / exact).abs() < 0.01);
    }

    #[test]
    fn pair_mesh_volumes_and_separation() {
        let s = BodySpec::sphere(1.0).unwrap();
        let pair = build_pair(s.clone(), s, 0.1).unwrap();
        let mesh = mesh_pair(&pair, 3, 1.6).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        for tag in [1, 2] {
            let v = mesh.volume(tag).unwrap();
            assert!(((v - exact) / exact).abs() < 0.01, "body {tag}: {v}");
        }
        let sep = mesh.min_vertex_separation().unwrap();
        assert!((sep - 0.1).abs() < 1e-12);
        let sym = mesh.symmetry.unwrap();
        assert_eq!(sym.sectors * sym.classes, mesh.len());
    }

    #[test]
    fn pole_panels_respect_the_grading_bound() {
        let s = BodySpec::sphere(1.0).unwrap();
        for eps in [0.1f64, 0.01, 1e-3] {
            let pair = build_pair(s.clone(), s.clone(), eps).unwrap();
            let mesh = mesh_pair(&pair, 3, 1.6).unwrap();
            for g in &mesh.grading {
                let bound = (eps / 4.0).max(g.base_size * g.ratio.powi(-(g.depth as i32)));
                assert!(g.pole_panel_diameter <= bound, "eps={eps}: {g:?}");
            }
        }
    }

    #[test]
    fn rotation_maps_panels_within_a_class() {
        let q = BodySpec::superellipsoid(1.0, 4).unwrap();
        let pair = build_pair(q.clone(), q, 0.01).unwrap();
        let mesh = mesh_pair(&pair, 1, 1.6).unwrap();
        let sym = mesh.symmetry.unwrap();
        let angle = 2.0 * std::f64::consts::PI / sym.sectors as f64;
        let (s, c) = angle.sin_cos();
        for class in 0..sym.classes {
            let p0 = &mesh.panels[sym.representative(class)];
            let p1 = &mesh.panels[sym.representative(class) + 1];
            let rotated = Vec3::new(c * p0.centroid.x() - s * p0.centroid.y(), s * p0.centroid.x() + c * p0.centroid.y(), p0.centroid.z());
            assert!(rotated.dist(&p1.centroid) < 1e-12);
            assert!((p0.area - p1.area).abs() < 1e-14);
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let s = BodySpec::sphere(1.0).unwrap();
        let pair = build_pair(s.clone(), s, 0.1).unwrap();
        assert!(mesh_pair(&pair, 2, 1.0).is_err());
        assert!(mesh_pair(&pair, 2, 3.5).is_err());
        assert!(mesh_pair(&pair, MAX_LEVEL + 1, 1.6).is_err());
    }

    #[test]
    fn off_export_has_counts_header() {
        let mesh = mesh_body(&unit_sphere_at_origin(), 0).unwrap();
        let mut buf = Vec::new();
        mesh.write_off(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("OFF"));
        let counts: Vec<usize> = lines.next().unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(counts, vec![mesh.vertices.len(), mesh.triangles.len(), 0]);
        assert_eq!(text.lines().count(), 2 + mesh.vertices.len() + mesh.triangles.len());
    }

    #[test]
    fn single_precision_meshes_work() {
        let body = PlacedBody {
            spec: BodySpec::<f32>::sphere(1.0).unwrap(),
            center: Vec3::zero(),
            facing: Facing::Down,
        };
        let mesh = mesh_body(&body, 3).unwrap();
        let v = mesh.volume(1).unwrap();
        assert!((v - 4.18879).abs() / 4.18879 < 0.01);
    }
}
