//! Two-body configuration and its near-contact gap profile.

use serde::{Deserialize, Serialize};

use super::shape::{BodySpec, Facing, PlacedBody, ShapeFamily};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec3::Vec3;

/// D₁ (upper) touches `{x₃ = ε}` from above, D₂ (lower) touches `{x₃ = 0}` from below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonatorPair<T> {
    pub upper: PlacedBody<T>,
    pub lower: PlacedBody<T>,
    pub gap: T,
}

/// Translate the upper body by `(0', ε)` above the lower one.
pub fn build_pair<T: Real>(upper: BodySpec<T>, lower: BodySpec<T>, gap: T) -> Result<ResonatorPair<T>> {
    upper.validate()?;
    lower.validate()?;
    if !(gap.is_finite() && gap > T::zero()) {
        return Err(Error::NonPositiveGap(gap.as_f64()));
    }
    if upper.order != lower.order {
        return Err(Error::MismatchedOrder {
            upper: upper.order,
            lower: lower.order,
        });
    }
    let zero = T::zero();
    let upper_center = Vec3::new(zero, zero, gap + upper.pole_distance());
    let lower_center = Vec3::new(zero, zero, -lower.pole_distance());
    Ok(ResonatorPair {
        upper: PlacedBody {
            spec: upper,
            center: upper_center,
            facing: Facing::Down,
        },
        lower: PlacedBody {
            spec: lower,
            center: lower_center,
            facing: Facing::Up,
        },
        gap,
    })
}

impl<T: Real> ResonatorPair<T> {
    pub fn body(&self, tag: u8) -> &PlacedBody<T> {
        match tag {
            1 => &self.upper,
            _ => &self.lower,
        }
    }

    /// Both bodies are bodies of revolution about the x₃ axis.
    pub fn is_axisymmetric(&self) -> bool {
        self.upper.spec.is_axisymmetric() && self.lower.spec.is_axisymmetric()
    }

    pub fn is_two_spheres(&self) -> bool {
        let sphere_like =
            |b: &BodySpec<T>| b.family == ShapeFamily::Sphere || (b.family == ShapeFamily::Superellipsoid && b.order == 2);
        sphere_like(&self.upper.spec) && sphere_like(&self.lower.spec)
    }

    /// Upper boundary of the gap, `ε + h₁(x')`.
    pub fn upper_surface(&self, x1: T, x2: T) -> Option<T> {
        self.upper.spec.pole_height(x1, x2).map(|h| self.gap + h)
    }

    /// Lower boundary of the gap, `h₂(x') ≤ 0`.
    pub fn lower_surface(&self, x1: T, x2: T) -> Option<T> {
        self.lower.spec.pole_height(x1, x2).map(|h| -h)
    }

    /// Local gap width `d(x') = ε + (h₁ − h₂)(x')`.
    pub fn gap_width(&self, x1: T, x2: T) -> Option<T> {
        Some(self.upper_surface(x1, x2)? - self.lower_surface(x1, x2)?)
    }

    /// `(h₁ − h₂)(x')`, the gap profile without the offset.
    pub fn profile_height(&self, x1: T, x2: T) -> Option<T> {
        Some(self.upper.spec.pole_height(x1, x2)? + self.lower.spec.pole_height(x1, x2)?)
    }

    /// Which body, if any, strictly contains `x`.
    pub fn containing_body(&self, x: Vec3<T>) -> Option<u8> {
        if self.upper.contains(x) {
            Some(1)
        } else if self.lower.contains(x) {
            Some(2)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactCoefficient<T> {
    Isotropic(T),
    /// `(Λ₁, Λ₂)` with `h₁ − h₂ ≈ Λ₁x₁² + Λ₂x₂²`.
    Anisotropic(T, T),
}

impl<T: Real> ContactCoefficient<T> {
    /// Λ for the isotropic case, `√(Λ₁Λ₂)` otherwise; in both cases
    /// `L_m / Λ_eff^{2/m}` is the leading capacitance coefficient.
    pub fn effective(&self) -> T {
        match *self {
            ContactCoefficient::Isotropic(l) => l,
            ContactCoefficient::Anisotropic(l1, l2) => (l1 * l2).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapProfile<T> {
    pub order: u32,
    pub lambda: ContactCoefficient<T>,
    /// Radius within which the profile parameterization is used.
    pub r0: T,
}

/// Leading-order gap profile `(h₁ − h₂)(x') ≈ Λ|x'|^m` from the analytic heights.
pub fn gap_profile<T: Real>(pair: &ResonatorPair<T>) -> GapProfile<T> {
    let u = pair.upper.spec.contact_coefficients();
    let l = pair.lower.spec.contact_coefficients();
    let (l1, l2) = (u[0] + l[0], u[1] + l[1]);
    let lambda = if l1 == l2 {
        ContactCoefficient::Isotropic(l1)
    } else {
        ContactCoefficient::Anisotropic(l1, l2)
    };
    let r0 = T::lit(0.5) * pair.upper.spec.half_width.min(pair.lower.spec.half_width);
    GapProfile {
        order: pair.upper.spec.order,
        lambda,
        r0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn unit_spheres_are_stacked_on_the_axis() {
        let s = BodySpec::sphere(1.0).unwrap();
        let pair = build_pair(s.clone(), s, 0.1).unwrap();
        assert!(close(pair.upper.center.z(), 1.1, 1e-15));
        assert!(close(pair.lower.center.z(), -1.0, 1e-15));
        assert!(pair.upper.contact_pole().dist(&Vec3::new(0.0, 0.0, 0.1)) < 1e-15);
        assert!(pair.lower.contact_pole().norm() < 1e-15);
    }

    #[test]
    fn superellipsoid_poles_touch_the_planes() {
        let b = BodySpec::superellipsoid(1.0, 4).unwrap();
        let pair = build_pair(b.clone(), b, 0.01).unwrap();
        assert!(pair.upper.contact_pole().dist(&Vec3::new(0.0, 0.0, 0.01)) < 1e-15);
        assert!(pair.lower.contact_pole().norm() < 1e-15);
        assert_eq!(pair.gap_width(0.0, 0.0), Some(0.01));
    }

    #[test]
    fn unequal_spheres_center_distance() {
        let pair = build_pair(BodySpec::sphere(1.0).unwrap(), BodySpec::sphere(2.0).unwrap(), 0.05).unwrap();
        assert!(close(pair.upper.center.dist(&pair.lower.center), 3.05, 1e-14));
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        let s = BodySpec::sphere(1.0).unwrap();
        assert_eq!(build_pair(s.clone(), s.clone(), 0.0), Err(Error::NonPositiveGap(0.0)));
        assert!(build_pair(s.clone(), s.clone(), -1.0).is_err());
        let q = BodySpec::superellipsoid(1.0, 4).unwrap();
        assert!(matches!(
            build_pair(s.clone(), q, 0.1),
            Err(Error::MismatchedOrder { upper: 2, lower: 4 })
        ));
        // an m = 2 superellipsoid is a sphere and mixes with one
        let q2 = BodySpec::superellipsoid(1.0, 2).unwrap();
        assert!(build_pair(s, q2, 0.1).is_ok());
    }

    #[test]
    fn profiles_of_reference_pairs() {
        let s1 = BodySpec::sphere(1.0).unwrap();
        let s2 = BodySpec::sphere(2.0).unwrap();
        let q = BodySpec::superellipsoid(1.0, 4).unwrap();

        let p = gap_profile(&build_pair(s1.clone(), s1.clone(), 0.1).unwrap());
        assert_eq!((p.order, p.lambda), (2, ContactCoefficient::Isotropic(1.0)));
        assert_eq!(p.r0, 0.5);

        let p = gap_profile(&build_pair(s1, s2, 0.1).unwrap());
        assert_eq!(p.lambda, ContactCoefficient::Isotropic(0.75));

        let p = gap_profile(&build_pair(q.clone(), q, 0.1).unwrap());
        assert_eq!((p.order, p.lambda), (4, ContactCoefficient::Isotropic(0.5)));
    }

    #[test]
    fn ellipsoid_profile_uses_half_the_hessian() {
        let e = BodySpec::ellipsoid(1.0, 2.0, 1.5).unwrap();
        let pair = build_pair(e.clone(), e, 0.1).unwrap();
        let p = gap_profile(&pair);
        let (l1, l2) = match p.lambda {
            ContactCoefficient::Anisotropic(a, b) => (a, b),
            other => panic!("{other:?}"),
        };
        // h₁ − h₂ = Λ₁x₁² + Λ₂x₂² + O(|x'|⁴)
        let x = 1e-3;
        assert!(close(pair.profile_height(x, 0.0).unwrap() / (x * x), l1, 1e-5));
        assert!(close(pair.profile_height(0.0, x).unwrap() / (x * x), l2, 1e-5));
        assert!(close(l1, 1.5, 1e-15) && close(l2, 0.375, 1e-15));
    }

    #[test]
    fn sampled_profile_converges_linearly_or_better() {
        let cases = [
            (BodySpec::sphere(1.0).unwrap(), BodySpec::sphere(2.0).unwrap()),
            (BodySpec::superellipsoid(1.0, 4).unwrap(), BodySpec::superellipsoid(1.5, 4).unwrap()),
            (BodySpec::superellipsoid(1.0, 3).unwrap(), BodySpec::superellipsoid(1.0, 3).unwrap()),
        ];
        for (u, l) in cases {
            let pair = build_pair(u, l, 0.01).unwrap();
            let prof = gap_profile(&pair);
            let lam = prof.lambda.effective();
            let mut worst: f64 = 0.0;
            let prof_r0: f64 = prof.r0;
            let mut r: f64 = 1e-3;
            while r <= prof_r0 {
                let ratio = pair.profile_height(r, 0.0).unwrap() / r.powi(prof.order as i32);
                worst = worst.max(((ratio - lam) / lam).abs() / r);
                r *= 1.5;
            }
            assert!(worst < 2.0, "relative error / |x'| = {worst}");
        }
    }
}
