//! Two-resonator geometry: analytic shapes, the gap translation, graded
//! surface meshes and mesh volumes.

mod mesh;
mod pair;
mod shape;

pub use mesh::{
    azimuthal_count, mesh_body, mesh_pair, mesh_pair_with, mesh_pair_with_cap, GradingInfo, MeshOptions, Panel, RotationalSymmetry,
    SurfaceMesh, DEFAULT_CAP_FRACTION, DEFAULT_GRADING, MAX_LEVEL,
};
pub use pair::{build_pair, gap_profile, ContactCoefficient, GapProfile, ResonatorPair};
pub use shape::{BodySpec, Facing, PlacedBody, ShapeFamily};
