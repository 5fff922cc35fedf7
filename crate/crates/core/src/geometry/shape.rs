//! Analytic convex bodies and their placement on the x₃ axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    Sphere,
    /// Body of revolution `|x'|^m + |x₃|^m = a^m`.
    Superellipsoid,
    Ellipsoid,
}

/// Shape of a single resonator, centred at the origin of its own frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec<T> {
    pub family: ShapeFamily,
    pub half_width: T,
    pub order: u32,
    /// Semiaxes along x₁, x₂, x₃ (ellipsoids only).
    pub semiaxes: Option<[T; 3]>,
}

impl<T: Real> BodySpec<T> {
    pub fn sphere(radius: T) -> Result<Self> {
        let spec = BodySpec {
            family: ShapeFamily::Sphere,
            half_width: radius,
            order: 2,
            semiaxes: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn superellipsoid(half_width: T, order: u32) -> Result<Self> {
        let spec = BodySpec {
            family: ShapeFamily::Superellipsoid,
            half_width,
            order,
            semiaxes: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ellipsoid(a1: T, a2: T, a3: T) -> Result<Self> {
        let spec = BodySpec {
            family: ShapeFamily::Ellipsoid,
            half_width: a1.min(a2),
            order: 2,
            semiaxes: Some([a1, a2, a3]),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.half_width) {
            return Err(Error::InvalidShape(format!(
                "half width must be positive, got {}",
                self.half_width
            )));
        }
        if self.order < 2 {
            return Err(Error::InvalidShape(format!(
                "convexity order must be at least 2, got {}",
                self.order
            )));
        }
        match self.family {
            ShapeFamily::Sphere if self.order != 2 => Err(Error::InvalidShape(
                "a sphere has convexity order 2".into(),
            )),
            ShapeFamily::Ellipsoid => match self.semiaxes {
                Some(ax) if ax.iter().all(|&v| positive(v)) => {
                    if self.order != 2 {
                        Err(Error::InvalidShape("an ellipsoid has convexity order 2".into()))
                    } else {
                        Ok(())
                    }
                }
                _ => Err(Error::InvalidShape(
                    "ellipsoid needs three positive semiaxes".into(),
                )),
            },
            _ => Ok(()),
        }
    }

    /// Distance from the centre to the contact pole.
    pub fn pole_distance(&self) -> T {
        match (self.family, self.semiaxes) {
            (ShapeFamily::Ellipsoid, Some(ax)) => ax[2],
            _ => self.half_width,
        }
    }

    pub fn is_axisymmetric(&self) -> bool {
        match (self.family, self.semiaxes) {
            (ShapeFamily::Ellipsoid, Some(ax)) => ax[0] == ax[1],
            _ => true,
        }
    }

    /// Leading coefficients of the pole height function: `h ≈ c₁x₁² + c₂x₂²`
    /// for m = 2, `h ≈ c|x'|^m` (both entries equal) otherwise.
    pub fn contact_coefficients(&self) -> [T; 2] {
        let two = T::lit(2.0);
        match (self.family, self.semiaxes) {
            (ShapeFamily::Ellipsoid, Some([a1, a2, a3])) => {
                [a3 / (two * a1 * a1), a3 / (two * a2 * a2)]
            }
            _ => {
                let a = self.half_width;
                let m = self.order as i32;
                let c = T::one() / (T::from_usize_lossy(self.order as usize) * a.powi(m - 1));
                [c, c]
            }
        }
    }

    /// Height of the surface above the tangent plane at the contact pole, as a
    /// function of the in-plane offset `x'`. `None` outside the footprint.
    pub fn pole_height(&self, x1: T, x2: T) -> Option<T> {
        match (self.family, self.semiaxes) {
            (ShapeFamily::Ellipsoid, Some([a1, a2, a3])) => {
                let s = T::one() - (x1 * x1) / (a1 * a1) - (x2 * x2) / (a2 * a2);
                (s >= T::zero()).then(|| a3 * (T::one() - s.sqrt()))
            }
            _ => {
                let a = self.half_width;
                let r = (x1 * x1 + x2 * x2).sqrt();
                if r > a {
                    return None;
                }
                if self.order == 2 {
                    // a - sqrt(a² - r²) without cancellation
                    let root = ((a - r) * (a + r)).sqrt();
                    Some(r * r / (a + root))
                } else {
                    let m = self.order as i32;
                    let mf = T::from_usize_lossy(self.order as usize);
                    let rest = (a.powi(m) - r.powi(m)).max(T::zero());
                    let root = rest.powf(T::one() / mf);
                    let h = a - root;
                    // Taylor branch where the subtraction loses all digits
                    let t = (r / a).powi(m);
                    if t < T::lit(1e-4) {
                        let inv = T::one() / mf;
                        // a·(1 - (1-t)^{1/m}) = a·(t/m + (m-1)t²/(2m²) + ...)
                        let two = T::lit(2.0);
                        Some(a * (t * inv + (mf - T::one()) * t * t * inv * inv / two))
                    } else {
                        Some(h)
                    }
                }
            }
        }
    }

    /// Gradient of [`BodySpec::pole_height`] with respect to `x'`.
    pub fn pole_height_gradient(&self, x1: T, x2: T) -> Option<[T; 2]> {
        match (self.family, self.semiaxes) {
            (ShapeFamily::Ellipsoid, Some([a1, a2, a3])) => {
                let s = T::one() - (x1 * x1) / (a1 * a1) - (x2 * x2) / (a2 * a2);
                if s <= T::zero() {
                    return None;
                }
                let root = s.sqrt();
                Some([a3 * x1 / (a1 * a1 * root), a3 * x2 / (a2 * a2 * root)])
            }
            _ => {
                let a = self.half_width;
                let r = (x1 * x1 + x2 * x2).sqrt();
                if r >= a {
                    return None;
                }
                if r == T::zero() {
                    return Some([T::zero(), T::zero()]);
                }
                let m = self.order as i32;
                let mf = T::from_usize_lossy(self.order as usize);
                // dh/dr = r^{m-1} (a^m - r^m)^{1/m - 1}
                let dh_dr = r.powi(m - 1) * (a.powi(m) - r.powi(m)).powf(T::one() / mf - T::one());
                Some([dh_dr * x1 / r, dh_dr * x2 / r])
            }
        }
    }

    /// Distance from the centre to the boundary along the unit direction `d`
    /// (body frame, x₃ the symmetry axis).
    pub fn radial_extent(&self, d: Vec3<T>) -> T {
        match (self.family, self.semiaxes) {
            (ShapeFamily::Sphere, _) => self.half_width,
            (ShapeFamily::Ellipsoid, Some([a1, a2, a3])) => {
                let q = (d.x() / a1).powi(2) + (d.y() / a2).powi(2) + (d.z() / a3).powi(2);
                T::one() / q.sqrt()
            }
            _ => {
                let m = self.order as i32;
                let mf = T::from_usize_lossy(self.order as usize);
                let q = d.radial().powi(m) + d.z().abs().powi(m);
                self.half_width / q.powf(T::one() / mf)
            }
        }
    }

    /// Implicit function: negative inside, zero on the boundary.
    pub fn level_set(&self, p: Vec3<T>) -> T {
        match (self.family, self.semiaxes) {
            (ShapeFamily::Sphere, _) => p.norm() - self.half_width,
            (ShapeFamily::Ellipsoid, Some([a1, a2, a3])) => {
                (p.x() / a1).powi(2) + (p.y() / a2).powi(2) + (p.z() / a3).powi(2) - T::one()
            }
            _ => {
                let m = self.order as i32;
                p.radial().powi(m) + p.z().abs().powi(m) - self.half_width.powi(m)
            }
        }
    }

    /// Closed-form volume where one exists.
    pub fn exact_volume(&self) -> Option<T> {
        let four_thirds_pi = T::lit(4.0) / T::lit(3.0) * T::PI();
        match (self.family, self.semiaxes) {
            (ShapeFamily::Ellipsoid, Some([a1, a2, a3])) => Some(four_thirds_pi * a1 * a2 * a3),
            (ShapeFamily::Sphere, _) => Some(four_thirds_pi * self.half_width.powi(3)),
            (ShapeFamily::Superellipsoid, _) if self.order == 2 => {
                Some(four_thirds_pi * self.half_width.powi(3))
            }
            _ => None,
        }
    }
}

/// Which way the contact pole points from the body centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    /// Pole below the centre: the upper body D₁.
    Down,
    /// Pole above the centre: the lower body D₂.
    Up,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedBody<T> {
    pub spec: BodySpec<T>,
    pub center: Vec3<T>,
    pub facing: Facing,
}

impl<T: Real> PlacedBody<T> {
    fn axis_sign(&self) -> T {
        match self.facing {
            Facing::Down => -T::one(),
            Facing::Up => T::one(),
        }
    }

    pub fn contact_pole(&self) -> Vec3<T> {
        self.center + Vec3::new(T::zero(), T::zero(), self.axis_sign() * self.spec.pole_distance())
    }

    /// Boundary point at polar angle `theta` from the contact pole and azimuth `phi`.
    pub fn surface_point(&self, theta: T, phi: T) -> Vec3<T> {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let d = Vec3::new(st * cp, st * sp, self.axis_sign() * ct);
        self.center + d * self.spec.radial_extent(d)
    }

    /// Radial projection of `x` onto the boundary, along the ray from the centre.
    pub fn project(&self, x: Vec3<T>) -> Vec3<T> {
        let d = (x - self.center).normalized();
        self.center + d * self.spec.radial_extent(d)
    }

    /// Strict interior test (boundary points are outside).
    pub fn contains(&self, x: Vec3<T>) -> bool {
        self.spec.level_set(x - self.center) < T::zero()
    }
}
