//! Target-normal fields on the unit sphere and their transfer onto a mesh
//! through the Gauss map.

mod mcf;
mod normcap;
mod snap;
mod spherical;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{face_normals, vertex_normals, TriangleMesh};
use crate::Vec3;

pub use mcf::{conformalized_mcf, sphericity, McfParams};
pub use normcap::{
    decode_normcap, encode_normal, lookup_normcap, pixel_direction, NormalCaptureImage,
    MIN_DECODED_NORM,
};
pub use snap::{
    axis_normal_set, parse_direction_list, snap_closest_normal, AxisSet, DiscreteNormalSet,
};
pub use spherical::{lookup_spherical, SphericalParam};

/// A queryable map from unit directions to unit target normals.
#[derive(Clone, Debug)]
pub enum StyleField {
    /// The identity map: every normal is its own target.
    AnalyticSphere,
    DiscreteNormalSet(DiscreteNormalSet),
    SphericalParam(Box<SphericalParam>),
    NormalCapture(NormalCaptureImage),
}

impl StyleField {
    /// Spherical parameterization of a closed genus-0 style mesh.
    pub fn from_style_mesh(style: &TriangleMesh, params: &McfParams) -> Result<Self> {
        Ok(Self::SphericalParam(Box::new(conformalized_mcf(style, params)?)))
    }

    pub fn axes(kind: &AxisSet) -> Result<Self> {
        Ok(Self::DiscreteNormalSet(axis_normal_set(kind)?))
    }

    pub fn lookup(&self, d: &Vec3) -> Result<Vec3> {
        match self {
            Self::AnalyticSphere => Ok(*d),
            Self::DiscreteNormalSet(set) => Ok(set.snap(d)),
            Self::SphericalParam(p) => Ok(p.lookup(d)),
            Self::NormalCapture(img) => img.lookup(d),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::AnalyticSphere => "sphere",
            Self::DiscreteNormalSet(_) => "normal-set",
            Self::SphericalParam(_) => "mesh",
            Self::NormalCapture(_) => "normcap",
        }
    }
}

/// Which mesh elements carry a rotation, a rest normal and a target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementMode {
    Vertex,
    Face,
}

impl ElementMode {
    pub fn element_count(self, mesh: &TriangleMesh) -> usize {
        match self {
            Self::Vertex => mesh.vertex_count(),
            Self::Face => mesh.face_count(),
        }
    }
}

/// One unit target vector per element.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetNormals {
    pub mode: ElementMode,
    pub vectors: Vec<Vec3>,
}

impl TargetNormals {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Area-weighted vertex normals or face normals of `positions`.
pub fn element_normals(
    positions: &[Vec3],
    faces: &[[usize; 3]],
    mode: ElementMode,
) -> Result<Vec<Vec3>> {
    match mode {
        ElementMode::Vertex => vertex_normals(positions, faces),
        ElementMode::Face => face_normals(positions, faces),
    }
}

/// Pastes the style field onto the given element normals: `t_k = Ñ(n̂_k)`.
pub fn build_target_normals(
    style: &StyleField,
    normals: &[Vec3],
    mode: ElementMode,
) -> Result<TargetNormals> {
    let vectors = normals
        .par_iter()
        .map(|n| style.lookup(n))
        .collect::<Result<Vec<_>>>()?;
    Ok(TargetNormals { mode, vectors })
}

/// Anything that can produce targets for a mesh state.
pub trait TargetSource: Send + Sync {
    fn targets(
        &self,
        positions: &[Vec3],
        faces: &[[usize; 3]],
        mode: ElementMode,
    ) -> Result<TargetNormals>;

    /// Element mode the source requires, if any.
    fn required_mode(&self) -> Option<ElementMode> {
        None
    }

    /// Whether targets must be recomputed from the deformed shape every
    /// iteration regardless of the solver setting.
    fn is_dynamic(&self) -> bool {
        false
    }
}

impl TargetSource for StyleField {
    fn targets(
        &self,
        positions: &[Vec3],
        faces: &[[usize; 3]],
        mode: ElementMode,
    ) -> Result<TargetNormals> {
        build_target_normals(self, &element_normals(positions, faces, mode)?, mode)
    }
}

/// Fixed targets, e.g. precomputed by the caller.
impl TargetSource for TargetNormals {
    fn targets(
        &self,
        positions: &[Vec3],
        faces: &[[usize; 3]],
        mode: ElementMode,
    ) -> Result<TargetNormals> {
        let expected = match mode {
            ElementMode::Vertex => positions.len(),
            ElementMode::Face => faces.len(),
        };
        if mode != self.mode || expected != self.vectors.len() {
            return Err(Error::InvalidParams(format!(
                "{} {:?} targets do not fit {expected} {mode:?} elements",
                self.vectors.len(),
                self.mode
            )));
        }
        Ok(self.clone())
    }

    fn required_mode(&self) -> Option<ElementMode> {
        Some(self.mode)
    }
}
