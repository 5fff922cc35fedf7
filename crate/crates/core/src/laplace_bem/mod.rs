//! First-kind single-layer equation `S_D[ψ] = f` on the two-body boundary,
//! piecewise-constant densities, centroid collocation with near pairs tested
//! over the whole panel.

pub mod field;
pub mod panel_integrals;
mod system;

pub use field::{eval_gradient, eval_gradients, eval_potential, outward_flux};
pub use panel_integrals::NearFieldRule;
pub use system::{
    assemble, assemble_dense, assemble_with, solve_densities, DensitySolution, Layout, SingleLayerSystem,
    TRUST_CONDITION,
};
