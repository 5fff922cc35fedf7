//! Capacitance coefficients, subwavelength resonances and eigenmode gradient
//! blow-up for two close-to-touching convex resonators.
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`); the `*64`
//! aliases below fix the working precision used by the command line tool.

pub mod asymptotics;
pub mod capacitance;
pub mod error;
pub mod geometry;
pub mod laplace_bem;
pub mod linalg;
pub mod materials;
pub mod modes;
pub mod quadrature;
pub mod real;
pub mod sphere_oracle;
pub mod vec3;

pub use error::{Error, Result};
pub use real::Real;
pub use vec3::Vec3;

pub type BodySpec64 = geometry::BodySpec<f64>;
pub type ResonatorPair64 = geometry::ResonatorPair<f64>;
pub type SurfaceMesh64 = geometry::SurfaceMesh<f64>;
pub type CapacitanceMatrix64 = capacitance::CapacitanceMatrix<f64>;
pub type MaterialParams64 = materials::MaterialParams<f64>;
