//! Shared fixtures for the solver benchmarks.

use std::sync::Arc;

use stylize_core::mesh::shapes;
use stylize_core::style::AxisSet;
use stylize_core::{normalize_mesh, StyleField, TargetSource, TriangleMesh};

/// A unit-scale torus with `nu · nv` vertices.
pub fn torus(nu: usize, nv: usize) -> TriangleMesh {
    normalize_mesh(&shapes::torus(2.0, 0.7, nu, nv)).expect("torus normalizes")
}

pub fn cube_style() -> Arc<dyn TargetSource> {
    Arc::new(StyleField::axes(&AxisSet::Cube).expect("cube axes span"))
}

/// Sizes from interactive previews up to the 20k-vertex throughput target.
pub const SIZES: [(usize, usize); 3] = [(40, 20), (100, 50), (200, 100)];
