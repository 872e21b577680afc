//! Manifold triangle meshes, OBJ I/O and the discrete differential quantities
//! consumed by the solver.

mod obj;
mod quantities;
pub mod shapes;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Vec3;

pub use obj::{load_obj, parse_obj, save_obj, write_obj};
pub use quantities::{
    angle_defects, boundary_vertices, cotangent_weights, dihedral_angles, face_areas,
    face_cotangents, face_normals, total_area, triangle_quality, vertex_areas, vertex_normals,
    CotangentWeights, DiscreteQuantities, Neighborhoods, COT_CLAMP,
};

/// Faces with less area than this after unit-area normalization are rejected.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Texture coordinates carried through load/save untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct TexCoords {
    pub coords: Vec<[f64; 2]>,
    pub faces: Vec<[usize; 3]>,
}

/// An oriented, edge- and vertex-manifold triangle mesh. Boundaries are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    tex: Option<TexCoords>,
}

impl TriangleMesh {
    /// Builds a mesh and runs the manifold checks.
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        validate_topology(positions.len(), &faces)?;
        if let Some(k) = positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Degenerate(format!("vertex {k} has a non-finite coordinate")));
        }
        Ok(Self {
            positions,
            faces,
            tex: None,
        })
    }

    pub(crate) fn with_tex(mut self, tex: Option<TexCoords>) -> Self {
        self.tex = tex;
        self
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn tex_coords(&self) -> Option<&TexCoords> {
        self.tex.as_ref()
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Same connectivity, new vertex positions.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Self {
        assert_eq!(positions.len(), self.positions.len(), "vertex count mismatch");
        Self {
            positions,
            faces: self.faces.clone(),
            tex: self.tex.clone(),
        }
    }

    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        self.with_positions(self.positions.iter().map(f).collect())
    }

    pub fn total_area(&self) -> f64 {
        total_area(&self.positions, &self.faces)
    }

    /// Area-weighted centroid of the surface.
    pub fn surface_centroid(&self) -> Vec3 {
        let mut acc = Vec3::zeros();
        let mut area = 0.0;
        for f in &self.faces {
            let [a, b, c] = f.map(|i| self.positions[i]);
            let w = 0.5 * (b - a).cross(&(c - a)).norm();
            acc += w * (a + b + c) / 3.0;
            area += w;
        }
        if area > 0.0 {
            acc / area
        } else {
            Vec3::zeros()
        }
    }

    pub fn is_closed(&self) -> bool {
        boundary_vertices(self.vertex_count(), &self.faces)
            .iter()
            .all(|b| !b)
    }

    /// Number of edge-connected components.
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertex_count()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for f in &self.faces {
            for c in 0..3 {
                let a = find(&mut parent, f[c]);
                let b = find(&mut parent, f[(c + 1) % 3]);
                if a != b {
                    parent[a] = b;
                }
            }
        }
        (0..self.vertex_count())
            .filter(|&v| find(&mut parent, v) == v)
            .count()
    }

    /// V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for f in &self.faces {
            for c in 0..3 {
                let (i, j) = (f[c], f[(c + 1) % 3]);
                edges.insert((i.min(j), i.max(j)));
            }
        }
        self.vertex_count() as i64 - edges.len() as i64 + self.face_count() as i64
    }

    /// Index of the vertex closest to the area-weighted centroid (lowest index on ties).
    pub fn vertex_nearest_centroid(&self) -> usize {
        let c = self.surface_centroid();
        let mut best = (f64::INFINITY, 0);
        for (k, p) in self.positions.iter().enumerate() {
            let d = (p - c).norm_squared();
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }
}

/// Similarity transform mapping a mesh to unit surface area with its
/// centroid at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub center: Vec3,
    pub scale: f64,
}

impl Normalization {
    pub fn of(mesh: &TriangleMesh) -> Result<Self> {
        let area = mesh.total_area();
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::Degenerate(format!("total surface area is {area}")));
        }
        Ok(Self {
            center: mesh.surface_centroid(),
            scale: 1.0 / area.sqrt(),
        })
    }

    pub fn identity() -> Self {
        Self {
            center: Vec3::zeros(),
            scale: 1.0,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p - self.center) * self.scale
    }

    pub fn invert(&self, p: &Vec3) -> Vec3 {
        p / self.scale + self.center
    }
}

/// Recenters and rescales to unit surface area, rejecting faces that end up
/// with (near-)zero area.
pub fn normalize_mesh(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    normalize_with_transform(mesh).map(|(m, _)| m)
}

/// [`normalize_mesh`] that also returns the transform so results can be mapped back.
pub fn normalize_with_transform(mesh: &TriangleMesh) -> Result<(TriangleMesh, Normalization)> {
    let t = Normalization::of(mesh)?;
    let out = mesh.map_positions(|p| t.apply(p));
    for (k, a) in face_areas(out.positions(), out.faces()).iter().enumerate() {
        if *a < MIN_FACE_AREA {
            return Err(Error::Degenerate(format!(
                "face {k} has area {a:e} after normalization"
            )));
        }
    }
    Ok((out, t))
}

/// Index range, edge-manifold, consistent orientation and vertex-manifold checks.
pub fn validate_topology(vertex_count: usize, faces: &[[usize; 3]]) -> Result<()> {
    if faces.is_empty() {
        return Err(Error::Degenerate("mesh has no faces".into()));
    }
    for (k, f) in faces.iter().enumerate() {
        if let Some(&i) = f.iter().find(|&&i| i >= vertex_count) {
            return Err(Error::NonManifold(format!(
                "face {k} references vertex {i} but there are only {vertex_count}"
            )));
        }
        if f[0] == f[1] || f[1] == f[2] || f[2] == f[0] {
            return Err(Error::NonManifold(format!("face {k} repeats a vertex: {f:?}")));
        }
    }

    let mut undirected: HashMap<(usize, usize), u32> = HashMap::with_capacity(faces.len() * 2);
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
    for (k, f) in faces.iter().enumerate() {
        for c in 0..3 {
            let (i, j) = (f[c], f[(c + 1) % 3]);
            let n = undirected.entry((i.min(j), i.max(j))).or_insert(0);
            *n += 1;
            if *n > 2 {
                return Err(Error::NonManifold(format!(
                    "edge ({i}, {j}) is shared by more than two faces"
                )));
            }
            if let Some(other) = directed.insert((i, j), k) {
                return Err(Error::NonManifold(format!(
                    "faces {other} and {k} are inconsistently oriented along edge ({i}, {j})"
                )));
            }
        }
    }

    // Vertex link: each incident face (v, a, b) contributes the link edge a -> b.
    // Directed-edge uniqueness makes every link node have in/out degree <= 1, so
    // the link is a union of paths and cycles; a manifold fan is exactly one of them.
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertex_count];
    for f in faces {
        for c in 0..3 {
            link[f[c]].push((f[(c + 1) % 3], f[(c + 2) % 3]));
        }
    }
    for (v, edges) in link.iter().enumerate() {
        if edges.is_empty() {
            return Err(Error::NonManifold(format!(
                "vertex {v} is not referenced by any face"
            )));
        }
        let next: HashMap<usize, usize> = edges.iter().copied().collect();
        let has_incoming: std::collections::HashSet<usize> =
            edges.iter().map(|&(_, b)| b).collect();
        let start = edges
            .iter()
            .map(|&(a, _)| a)
            .find(|a| !has_incoming.contains(a))
            .unwrap_or(edges[0].0);
        let mut visited = 0;
        let mut cur = start;
        while let Some(&n) = next.get(&cur) {
            visited += 1;
            cur = n;
            if cur == start || visited > edges.len() {
                break;
            }
        }
        if visited != edges.len() {
            return Err(Error::NonManifold(format!(
                "the faces around vertex {v} do not form a single fan"
            )));
        }
    }
    Ok(())
}
