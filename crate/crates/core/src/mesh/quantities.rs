use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Vec3;

use super::TriangleMesh;

/// Cotangents are clamped to this magnitude so near-degenerate triangles keep
/// the Laplacian finite.
pub const COT_CLAMP: f64 = 1e4;

fn corners(positions: &[Vec3], f: &[usize; 3]) -> [Vec3; 3] {
    [positions[f[0]], positions[f[1]], positions[f[2]]]
}

/// Unnormalized normal, twice the area in magnitude.
fn area_vector(positions: &[Vec3], f: &[usize; 3]) -> Vec3 {
    let [a, b, c] = corners(positions, f);
    (b - a).cross(&(c - a))
}

pub fn face_areas(positions: &[Vec3], faces: &[[usize; 3]]) -> Vec<f64> {
    faces
        .iter()
        .map(|f| 0.5 * area_vector(positions, f).norm())
        .collect()
}

pub fn total_area(positions: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    face_areas(positions, faces).iter().sum()
}

pub fn face_normals(positions: &[Vec3], faces: &[[usize; 3]]) -> Result<Vec<Vec3>> {
    faces
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let n = area_vector(positions, f);
            let len = n.norm();
            if len < 1e-300 || !len.is_finite() {
                Err(Error::Degenerate(format!("face {k} has no normal")))
            } else {
                Ok(n / len)
            }
        })
        .collect()
}

/// Normalized area-weighted sum of incident face normals.
pub fn vertex_normals(positions: &[Vec3], faces: &[[usize; 3]]) -> Result<Vec<Vec3>> {
    let mut acc = vec![Vec3::zeros(); positions.len()];
    for f in faces {
        let n = area_vector(positions, f);
        for &i in f {
            acc[i] += n;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(k, n)| {
            let len = n.norm();
            if len < 1e-12 || !len.is_finite() {
                Err(Error::Degenerate(format!(
                    "vertex {k} has a vanishing area-weighted normal"
                )))
            } else {
                Ok(n / len)
            }
        })
        .collect()
}

/// Barycentric lumped area: a third of every incident face.
pub fn vertex_areas(positions: &[Vec3], faces: &[[usize; 3]]) -> Vec<f64> {
    let mut out = vec![0.0; positions.len()];
    for (f, a) in faces.iter().zip(face_areas(positions, faces)) {
        for &i in f {
            out[i] += a / 3.0;
        }
    }
    out
}

/// Clamped cotangent of the interior angle at each corner of each face.
pub fn face_cotangents(positions: &[Vec3], faces: &[[usize; 3]]) -> Vec<[f64; 3]> {
    faces
        .iter()
        .map(|f| {
            let p = corners(positions, f);
            std::array::from_fn(|c| {
                let u = p[(c + 1) % 3] - p[c];
                let v = p[(c + 2) % 3] - p[c];
                let dot = u.dot(&v);
                let cross = u.cross(&v).norm();
                let cot = if cross > 0.0 {
                    dot / cross
                } else {
                    dot.signum() * COT_CLAMP
                };
                cot.clamp(-COT_CLAMP, COT_CLAMP)
            })
        })
        .collect()
}

/// Undirected cotangent edge weights `w_ij = ½(cot α + cot β)`, one-sided on
/// the boundary. Lookup is symmetric in `(i, j)`.
#[derive(Clone, Debug, Default)]
pub struct CotangentWeights {
    weights: HashMap<(usize, usize), f64>,
}

impl CotangentWeights {
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.weights.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(i, j, w)` with `i < j`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(i, j), &w)| (i, j, w))
    }
}

pub fn cotangent_weights(positions: &[Vec3], faces: &[[usize; 3]]) -> CotangentWeights {
    let mut weights = HashMap::with_capacity(faces.len() * 3 / 2 + 1);
    for (f, cot) in faces.iter().zip(face_cotangents(positions, faces)) {
        for c in 0..3 {
            let (i, j) = (f[(c + 1) % 3], f[(c + 2) % 3]);
            *weights.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5 * cot[c];
        }
    }
    CotangentWeights { weights }
}

/// Per-vertex incident faces, from which the spokes-and-rims edge set of a
/// vertex and the three edges of a face are enumerated.
#[derive(Clone, Debug)]
pub struct Neighborhoods {
    offsets: Vec<usize>,
    incident: Vec<usize>,
}

impl Neighborhoods {
    pub fn new(vertex_count: usize, faces: &[[usize; 3]]) -> Self {
        let mut counts = vec![0usize; vertex_count + 1];
        for f in faces {
            for &i in f {
                counts[i + 1] += 1;
            }
        }
        for k in 0..vertex_count {
            counts[k + 1] += counts[k];
        }
        let mut fill = counts.clone();
        let mut incident = vec![0; counts[vertex_count]];
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                incident[fill[i]] = fi;
                fill[i] += 1;
            }
        }
        Self {
            offsets: counts,
            incident,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn incident_faces(&self, v: usize) -> &[usize] {
        &self.incident[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Directed edges `(i, j)` of face `f`, edge `c` being opposite corner `c`.
    pub fn face_edges(f: &[usize; 3]) -> [(usize, usize); 3] {
        std::array::from_fn(|c| (f[(c + 1) % 3], f[(c + 2) % 3]))
    }

    /// Spokes and rims of vertex `v`: every directed edge of every incident
    /// face, tagged with the face and the corner it is opposite to.
    pub fn spokes_and_rims<'a>(
        &'a self,
        v: usize,
        faces: &'a [[usize; 3]],
    ) -> impl Iterator<Item = (usize, usize, usize, usize)> + 'a {
        self.incident_faces(v).iter().flat_map(move |&fi| {
            Self::face_edges(&faces[fi])
                .into_iter()
                .enumerate()
                .map(move |(c, (i, j))| (fi, c, i, j))
        })
    }

    /// Vertices sharing an edge with `v`, without duplicates.
    pub fn one_ring(&self, v: usize, faces: &[[usize; 3]]) -> Vec<usize> {
        let mut out = Vec::new();
        for &fi in self.incident_faces(v) {
            for &i in &faces[fi] {
                if i != v && !out.contains(&i) {
                    out.push(i);
                }
            }
        }
        out
    }
}

/// Cotangent weights, areas and unit normals of one mesh.
#[derive(Clone, Debug)]
pub struct DiscreteQuantities {
    pub cotan_weights: CotangentWeights,
    pub vertex_areas: Vec<f64>,
    pub face_areas: Vec<f64>,
    pub vertex_normals: Vec<Vec3>,
    pub face_normals: Vec<Vec3>,
}

impl DiscreteQuantities {
    pub fn compute(mesh: &TriangleMesh) -> Result<Self> {
        let (p, f) = (mesh.positions(), mesh.faces());
        Ok(Self {
            cotan_weights: cotangent_weights(p, f),
            vertex_areas: vertex_areas(p, f),
            face_areas: face_areas(p, f),
            vertex_normals: vertex_normals(p, f)?,
            face_normals: face_normals(p, f)?,
        })
    }
}

/// Marks vertices lying on a boundary edge.
pub fn boundary_vertices(vertex_count: usize, faces: &[[usize; 3]]) -> Vec<bool> {
    let mut count: HashMap<(usize, usize), u8> = HashMap::with_capacity(faces.len() * 2);
    for f in faces {
        for (i, j) in Neighborhoods::face_edges(f) {
            *count.entry((i.min(j), i.max(j))).or_insert(0) += 1;
        }
    }
    let mut out = vec![false; vertex_count];
    for (&(i, j), &n) in &count {
        if n == 1 {
            out[i] = true;
            out[j] = true;
        }
    }
    out
}

/// Angle defect (discrete Gaussian curvature): `2π − Σθ` for interior vertices
/// and `π − Σθ` on the boundary.
pub fn angle_defects(positions: &[Vec3], faces: &[[usize; 3]]) -> Vec<f64> {
    let boundary = boundary_vertices(positions.len(), faces);
    let mut sum = vec![0.0; positions.len()];
    for f in faces {
        let p = corners(positions, f);
        for c in 0..3 {
            let u = p[(c + 1) % 3] - p[c];
            let v = p[(c + 2) % 3] - p[c];
            sum[f[c]] += u.cross(&v).norm().atan2(u.dot(&v));
        }
    }
    sum.iter()
        .zip(boundary)
        .map(|(s, b)| if b { std::f64::consts::PI - s } else { std::f64::consts::TAU - s })
        .collect()
}

/// Angle between the normals of the two faces of every interior edge, in radians.
pub fn dihedral_angles(positions: &[Vec3], faces: &[[usize; 3]]) -> Result<Vec<f64>> {
    let normals = face_normals(positions, faces)?;
    let mut first: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 2);
    let mut out = Vec::with_capacity(faces.len() * 3 / 2);
    for (fi, f) in faces.iter().enumerate() {
        for (i, j) in Neighborhoods::face_edges(f) {
            let key = (i.min(j), i.max(j));
            if let Some(other) = first.remove(&key) {
                let d: f64 = normals[fi].dot(&normals[other]);
                out.push(d.clamp(-1.0, 1.0).acos());
            } else {
                first.insert(key, fi);
            }
        }
    }
    Ok(out)
}

/// `2 · inradius / circumradius`: 1 for equilateral, 0 for degenerate.
pub fn triangle_quality(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let area2 = (b - a).cross(&(c - a)).norm();
    let s = la + lb + lc;
    let prod = la * lb * lc;
    if s <= 0.0 || prod <= 0.0 {
        return 0.0;
    }
    // r = 2A / s, R = abc / 4A  =>  2r/R = 16 A² / (s·abc) = 4 (2A)² / (s·abc)
    4.0 * area2 * area2 / (s * prod)
}
