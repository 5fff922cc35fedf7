//! Integrals of `1/|x − y|` and its x-gradient over flat triangles.
//!
//! The closed forms use the edge decomposition: with `d` the signed height of
//! `x` above the panel plane and `ρ` its projection, each edge contributes a
//! logarithmic line integral `f_e` and a solid-angle piece `β_e`:
//!
//! ```text
//! ∫ 1/R dS   = Σ P⁰_e f_e − |d| Σ β_e
//! ∇ ∫ 1/R dS = −Σ m̂_e f_e − sign(d) n̂ Σ β_e
//! ```
//!
//! where `P⁰_e` is the signed in-plane distance from `ρ` to edge `e` and
//! `m̂_e` its outward in-plane normal.

use std::ops::{Add, Mul};

use crate::real::Real;
use crate::vec3::Vec3;

/// Splitting policy for source panels close to the observation point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearFieldRule<T> {
    /// Pairs closer than `near_factor × diameter` are treated as near.
    pub near_factor: T,
    /// Pairs between the near and `far_factor × diameter` use the 7-point
    /// rule; farther ones the centroid.
    pub far_factor: T,
    /// Maximum number of 4-way subdivisions before the closed form is used.
    pub max_depth: u32,
}

impl<T: Real> Default for NearFieldRule<T> {
    fn default() -> Self {
        NearFieldRule {
            near_factor: T::lit(2.0),
            far_factor: T::lit(6.0),
            max_depth: 6,
        }
    }
}

/// A quantity integrated over panels: `1/R` or its gradient in `x`.
pub trait PanelKernel<T: Real> {
    type Out: Copy + Add<Output = Self::Out> + Mul<T, Output = Self::Out>;
    fn zero() -> Self::Out;
    fn point(x: Vec3<T>, y: Vec3<T>) -> Self::Out;
    fn exact(x: Vec3<T>, corners: &[Vec3<T>; 3]) -> Self::Out;
}

pub struct InverseDistance;
pub struct InverseDistanceGradient;

impl<T: Real> PanelKernel<T> for InverseDistance {
    type Out = T;
    #[inline]
    fn zero() -> T {
        T::zero()
    }
    #[inline]
    fn point(x: Vec3<T>, y: Vec3<T>) -> T {
        T::one() / x.dist(&y)
    }
    fn exact(x: Vec3<T>, corners: &[Vec3<T>; 3]) -> T {
        potential_exact(x, corners)
    }
}

impl<T: Real> PanelKernel<T> for InverseDistanceGradient {
    type Out = Vec3<T>;
    #[inline]
    fn zero() -> Vec3<T> {
        Vec3::zero()
    }
    #[inline]
    fn point(x: Vec3<T>, y: Vec3<T>) -> Vec3<T> {
        let r = x - y;
        let r2 = r.norm_sq();
        r * (-T::one() / (r2 * r2.sqrt()))
    }
    fn exact(x: Vec3<T>, corners: &[Vec3<T>; 3]) -> Vec3<T> {
        gradient_exact(x, corners)
    }
}

struct EdgeTerm<T> {
    outward: Vec3<T>,
    p0: T,
    log_term: T,
    angle_term: T,
}

fn edge_terms<T: Real>(x: Vec3<T>, c: &[Vec3<T>; 3]) -> (T, Vec3<T>, [EdgeTerm<T>; 3]) {
    let n = (c[1] - c[0]).cross(&(c[2] - c[0])).normalized();
    let d = (x - c[0]).dot(&n);
    let rho = x - n * d;
    let ad = d.abs();
    let term = |e: usize| {
        let (a, b) = (c[e], c[(e + 1) % 3]);
        let t = (b - a).normalized();
        let outward = t.cross(&n);
        let lp = (b - rho).dot(&t);
        let lm = (a - rho).dot(&t);
        let p0 = (a - rho).dot(&outward);
        let r0sq = p0 * p0 + d * d;
        let rp = (lp * lp + r0sq).sqrt();
        let rm = (lm * lm + r0sq).sqrt();
        let log_term = if lp + lm >= T::zero() {
            ((rp + lp) / (rm + lm)).ln()
        } else {
            ((rm - lm) / (rp - lp)).ln()
        };
        let angle_term = if p0 == T::zero() {
            T::zero()
        } else {
            (p0 * lp / (r0sq + ad * rp)).atan() - (p0 * lm / (r0sq + ad * rm)).atan()
        };
        EdgeTerm {
            outward,
            p0,
            log_term,
            angle_term,
        }
    };
    (d, n, [term(0), term(1), term(2)])
}

/// `∫_T 1/|x − y| dS(y)`, exact for any `x` not on an edge.
pub fn potential_exact<T: Real>(x: Vec3<T>, corners: &[Vec3<T>; 3]) -> T {
    let (d, _, terms) = edge_terms(x, corners);
    let mut sum = T::zero();
    let mut angle = T::zero();
    for t in &terms {
        if t.p0 != T::zero() {
            sum += t.p0 * t.log_term;
        }
        angle += t.angle_term;
    }
    sum - d.abs() * angle
}

/// `∇ₓ ∫_T 1/|x − y| dS(y)`, exact off the panel; the in-plane limit drops the
/// normal jump.
pub fn gradient_exact<T: Real>(x: Vec3<T>, corners: &[Vec3<T>; 3]) -> Vec3<T> {
    let (d, n, terms) = edge_terms(x, corners);
    let mut g = Vec3::zero();
    let mut angle = T::zero();
    for t in &terms {
        g -= t.outward * t.log_term;
        angle += t.angle_term;
    }
    let sign = if d > T::zero() {
        T::one()
    } else if d < T::zero() {
        -T::one()
    } else {
        T::zero()
    };
    g - n * (sign * angle)
}

/// Symmetric 7-point rule, exact for degree 5 (barycentric coords, weights sum to 1).
fn seven_point<T: Real>() -> [([T; 3], T); 7] {
    let l = T::lit;
    let (a1, b1, w1) = (l(0.059715871789770), l(0.470142064105115), l(0.132394152788506));
    let (a2, b2, w2) = (l(0.797426985353087), l(0.101286507323456), l(0.125939180544827));
    let third = T::one() / l(3.0);
    [
        ([third, third, third], l(0.225)),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

fn triangle_area<T: Real>(c: &[Vec3<T>; 3]) -> T {
    (c[1] - c[0]).cross(&(c[2] - c[0])).norm() * T::lit(0.5)
}

fn rule_integral<T: Real, K: PanelKernel<T>>(x: Vec3<T>, c: &[Vec3<T>; 3]) -> K::Out {
    let area = triangle_area(c);
    let mut acc = K::zero();
    for (bary, w) in seven_point::<T>() {
        let y = c[0] * bary[0] + c[1] * bary[1] + c[2] * bary[2];
        acc = acc + K::point(x, y) * (w * area);
    }
    acc
}

fn subdivided<T: Real, K: PanelKernel<T>>(x: Vec3<T>, c: &[Vec3<T>; 3], depth: u32, rule: &NearFieldRule<T>) -> K::Out {
    let third = T::one() / T::lit(3.0);
    let centroid = (c[0] + c[1] + c[2]) * third;
    let diameter = c[0].dist(&c[1]).max(c[1].dist(&c[2])).max(c[2].dist(&c[0]));
    if diameter < x.dist(&centroid) {
        return rule_integral::<T, K>(x, c);
    }
    if depth >= rule.max_depth {
        return K::exact(x, c);
    }
    let half = T::lit(0.5);
    let m01 = (c[0] + c[1]) * half;
    let m12 = (c[1] + c[2]) * half;
    let m20 = (c[2] + c[0]) * half;
    let kids = [[c[0], m01, m20], [m01, c[1], m12], [m20, m12, c[2]], [m01, m12, m20]];
    kids.iter().fold(K::zero(), |acc, k| acc + subdivided::<T, K>(x, k, depth + 1, rule))
}

/// Integral of kernel `K` over a triangle seen from `x`: one-point centroid rule
/// for far panels, the 7-point rule at intermediate range, recursive
/// subdivision for near ones.
pub fn panel_integral<T: Real, K: PanelKernel<T>>(
    x: Vec3<T>,
    corners: &[Vec3<T>; 3],
    centroid: Vec3<T>,
    area: T,
    diameter: T,
    rule: &NearFieldRule<T>,
) -> K::Out {
    let r = x.dist(&centroid);
    if r >= rule.far_factor * diameter {
        K::point(x, centroid) * area
    } else if r >= rule.near_factor * diameter {
        rule_integral::<T, K>(x, corners)
    } else {
        subdivided::<T, K>(x, corners, 0, rule)
    }
}

/// Panel-averaged pair integral `∫_{target} ∫_{source} K dσ dσ` with the
/// 7-point rule on the target and `panel_integral` (closed form on the
/// source itself) inside. Test points are mapped through `place` first.
pub fn tested_integral<T: Real, K: PanelKernel<T>>(
    target: &[Vec3<T>; 3],
    source: &[Vec3<T>; 3],
    same_panel: bool,
    rule: &NearFieldRule<T>,
    place: impl Fn(Vec3<T>) -> Vec3<T>,
) -> K::Out {
    let area = triangle_area(target);
    let third = T::one() / T::lit(3.0);
    let centroid = (source[0] + source[1] + source[2]) * third;
    let diameter = source[0].dist(&source[1]).max(source[1].dist(&source[2])).max(source[2].dist(&source[0]));
    let source_area = triangle_area(source);
    let mut acc = K::zero();
    for (bary, w) in seven_point::<T>() {
        let x = place(target[0] * bary[0] + target[1] * bary[1] + target[2] * bary[2]);
        let inner = if same_panel {
            K::exact(x, source)
        } else {
            panel_integral::<T, K>(x, source, centroid, source_area, diameter, rule)
        };
        acc = acc + inner * (w * area);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tri() -> [Vec3<f64>; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.1, 0.0),
            Vec3::new(0.3, 0.8, 0.0),
        ]
    }

    /// Brute force: uniform refinement with the 7-point rule on every leaf.
    fn brute<K: PanelKernel<f64>>(x: Vec3<f64>, c: &[Vec3<f64>; 3], levels: u32) -> K::Out {
        if levels == 0 {
            return rule_integral::<f64, K>(x, c);
        }
        let m01 = (c[0] + c[1]) * 0.5;
        let m12 = (c[1] + c[2]) * 0.5;
        let m20 = (c[2] + c[0]) * 0.5;
        [[c[0], m01, m20], [m01, c[1], m12], [m20, m12, c[2]], [m01, m12, m20]]
            .iter()
            .fold(K::zero(), |acc, k| acc + brute::<K>(x, k, levels - 1))
    }

    /// In-plane point inside the triangle: ∫ 1/R dS = ∫₀^{2π} R_edge(φ) dφ.
    fn polar_oracle(x: Vec3<f64>, c: &[Vec3<f64>; 3]) -> f64 {
        let n = 200_000;
        let mut total = 0.0;
        for k in 0..n {
            let phi = (k as f64 + 0.5) * 2.0 * std::f64::consts::PI / n as f64;
            let dir = Vec3::new(phi.cos(), phi.sin(), 0.0);
            let mut reach = f64::INFINITY;
            for e in 0..3 {
                let (a, b) = (c[e], c[(e + 1) % 3]);
                let edge = b - a;
                // solve x + s·dir = a + t·edge
                let det = dir.x() * (-edge.y()) - dir.y() * (-edge.x());
                if det.abs() < 1e-15 {
                    continue;
                }
                let rhs = a - x;
                let s = (rhs.x() * (-edge.y()) - rhs.y() * (-edge.x())) / det;
                let t = (dir.x() * rhs.y() - dir.y() * rhs.x()) / det;
                if s > 0.0 && (0.0..=1.0).contains(&t) {
                    reach = reach.min(s);
                }
            }
            total += reach;
        }
        total * 2.0 * std::f64::consts::PI / n as f64
    }

    #[test]
    fn self_term_matches_polar_integration() {
        let c = tri();
        let centroid = (c[0] + c[1] + c[2]) * (1.0 / 3.0);
        let exact = potential_exact(centroid, &c);
        assert_relative_eq!(exact, polar_oracle(centroid, &c), max_relative = 1e-8);
        let off = Vec3::new(0.2, 0.15, 0.0);
        assert_relative_eq!(potential_exact(off, &c), polar_oracle(off, &c), max_relative = 1e-8);
    }

    #[test]
    fn closed_forms_match_brute_force_off_panel() {
        let c = tri();
        let points = [
            Vec3::new(0.4, 0.3, 0.5),
            Vec3::new(0.4, 0.3, -0.05),
            Vec3::new(1.5, -0.4, 0.2),
            Vec3::new(-0.3, 0.9, -0.7),
            Vec3::new(2.0, 2.0, 0.0),
        ];
        for x in points {
            let p = potential_exact(x, &c);
            let pb = brute::<InverseDistance>(x, &c, 6);
            assert_relative_eq!(p, pb, max_relative = 1e-7);
            let g = gradient_exact(x, &c);
            let gb = brute::<InverseDistanceGradient>(x, &c, 6);
            for k in 0..3 {
                assert!((g[k] - gb[k]).abs() < 1e-6 * gb.norm(), "{x:?} component {k}: {} vs {}", g[k], gb[k]);
            }
        }
    }

    #[test]
    fn gradient_is_the_derivative_of_the_potential() {
        let c = tri();
        let x = Vec3::new(0.35, 0.25, 0.01);
        let h = 1e-6;
        let g = gradient_exact(x, &c);
        for k in 0..3 {
            let mut e = [0.0; 3];
            e[k] = h;
            let e = Vec3(e);
            let fd = (potential_exact(x + e, &c) - potential_exact(x - e, &c)) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-5, "component {k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn normal_derivative_jumps_by_two_pi() {
        let c = tri();
        let above = gradient_exact(Vec3::new(0.4, 0.3, 1e-10), &c);
        let below = gradient_exact(Vec3::new(0.4, 0.3, -1e-10), &c);
        assert_relative_eq!(above.z() - below.z(), -4.0 * std::f64::consts::PI, max_relative = 1e-6);
    }

    #[test]
    fn adaptive_rule_is_accurate_near_the_panel() {
        let c = tri();
        let centroid = (c[0] + c[1] + c[2]) * (1.0 / 3.0);
        let area = triangle_area(&c);
        let diam = c[0].dist(&c[1]).max(c[1].dist(&c[2])).max(c[2].dist(&c[0]));
        let rule = NearFieldRule::default();
        for h in [0.3, 0.05, 1e-3, 1e-5] {
            let x = Vec3::new(0.45, 0.2, h);
            let a = panel_integral::<f64, InverseDistance>(x, &c, centroid, area, diam, &rule);
            assert_relative_eq!(a, potential_exact(x, &c), max_relative = 1e-3);
            let g = panel_integral::<f64, InverseDistanceGradient>(x, &c, centroid, area, diam, &rule);
            let ge = gradient_exact(x, &c);
            assert!((g - ge).norm() < 2e-3 * ge.norm(), "h={h}");
        }
    }

    #[test]
    fn far_panels_reduce_to_point_kernel() {
        let c = tri();
        let centroid = (c[0] + c[1] + c[2]) * (1.0 / 3.0);
        let area = triangle_area(&c);
        let x = Vec3::new(30.0, -20.0, 40.0);
        let exact = potential_exact(x, &c);
        assert_relative_eq!(exact, area / x.dist(&centroid), max_relative = 1e-3);
    }

    #[test]
    fn single_precision_closed_form() {
        let c = tri().map(|v| v.cast::<f32>());
        let x = Vec3::new(0.4f32, 0.3, 0.5);
        let p32 = potential_exact(x, &c);
        let p64 = potential_exact(x.cast::<f64>(), &tri());
        assert!(((p32 as f64) - p64).abs() < 1e-5 * p64);
    }
}
