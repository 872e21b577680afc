//! Mesh stylization by matching surface normals to a style defined on the
//! unit sphere.
//!
//! A style maps every unit direction to a target normal. The input mesh
//! receives per-element targets through its own normals, and a local/global
//! solver deforms it so its rotated rest normals reach those targets while a
//! rigidity term (ARAP, face-only ARAP or ACAP) keeps the shape coherent.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod energies;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod pipeline;
pub mod solver;
pub mod style;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use error::{Error, Result};
pub use mesh::{load_obj, normalize_mesh, normalize_with_transform, save_obj, Normalization, TriangleMesh};
pub use pipeline::{stylize, RunConfig, StyleSpec};
pub use solver::{solve, Regularization, Solver, SolverParams, SolverState};
pub use style::{ElementMode, StyleField, TargetNormals, TargetSource};
