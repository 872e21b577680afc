//! Styles defined by an energy on the deformed shape rather than by a field
//! on the sphere.

mod developable;
mod polycube;

pub use developable::{
    developable_flow, developable_targets, project_ring, DevelopableParams, DevelopableStyle,
    RingProjection,
};
pub use polycube::{
    aligned_area_fraction, misalignment, polycube_flow, rescue_vertices, PolyCubeParams,
};
