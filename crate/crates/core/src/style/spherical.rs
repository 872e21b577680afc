use crate::error::{Error, Result};
use crate::mesh::{face_normals, TriangleMesh};
use crate::Vec3;

/// Point-in-spherical-triangle determinants below this are treated as ambiguous.
const AMBIGUOUS_DET: f64 = 1e-12;

/// A style mesh together with a per-vertex map onto the unit sphere.
/// Lookups return the original face normal of the spherical triangle that
/// contains the query direction.
#[derive(Clone, Debug)]
pub struct SphericalParam {
    style: TriangleMesh,
    sphere: Vec<Vec3>,
    style_normals: Vec<Vec3>,
    centroid_dirs: Vec<Vec3>,
    grid: DirectionGrid,
    flow_iterations: usize,
}

impl SphericalParam {
    pub fn new(style: TriangleMesh, sphere: Vec<Vec3>) -> Result<Self> {
        Self::with_iterations(style, sphere, 0)
    }

    pub(crate) fn with_iterations(
        style: TriangleMesh,
        sphere: Vec<Vec3>,
        flow_iterations: usize,
    ) -> Result<Self> {
        if sphere.len() != style.vertex_count() {
            return Err(Error::InvalidParams(format!(
                "{} sphere positions for {} style vertices",
                sphere.len(),
                style.vertex_count()
            )));
        }
        if let Some(k) = sphere.iter().position(|p| (p.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidParams(format!(
                "sphere position {k} has norm {}",
                sphere[k].norm()
            )));
        }
        let style_normals = face_normals(style.positions(), style.faces())?;
        let centroid_dirs: Vec<Vec3> = style
            .faces()
            .iter()
            .map(|f| {
                let c = sphere[f[0]] + sphere[f[1]] + sphere[f[2]];
                let n = c.norm();
                if n > 1e-12 {
                    c / n
                } else {
                    sphere[f[0]]
                }
            })
            .collect();
        let grid = DirectionGrid::build(&sphere, style.faces(), &centroid_dirs);
        Ok(Self {
            style,
            sphere,
            style_normals,
            centroid_dirs,
            grid,
            flow_iterations,
        })
    }

    pub fn style(&self) -> &TriangleMesh {
        &self.style
    }

    pub fn sphere_positions(&self) -> &[Vec3] {
        &self.sphere
    }

    /// Face normals of the original style mesh (the codomain of lookups).
    pub fn style_normals(&self) -> &[Vec3] {
        &self.style_normals
    }

    /// Number of flow steps taken to reach the sphere (0 if constructed directly).
    pub fn flow_iterations(&self) -> usize {
        self.flow_iterations
    }

    /// Index of the spherical triangle containing `d`, falling back to the
    /// face whose centroid direction is closest.
    pub fn locate(&self, d: &Vec3) -> usize {
        let faces = self.style.faces();
        for &fi in self.grid.candidates(d) {
            let f = faces[fi as usize];
            let [a, b, c] = f.map(|i| self.sphere[i]);
            if d.dot(&(a + b + c)) <= 0.0 {
                continue;
            }
            let s = [
                a.dot(&b.cross(d)),
                b.dot(&c.cross(d)),
                c.dot(&a.cross(d)),
            ];
            if s.iter().all(|&x| x > AMBIGUOUS_DET) {
                return fi as usize;
            }
        }
        self.nearest_centroid(d)
    }

    fn nearest_centroid(&self, d: &Vec3) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, c) in self.centroid_dirs.iter().enumerate() {
            let s = c.dot(d);
            if s > best.0 {
                best = (s, k);
            }
        }
        best.1
    }

    pub fn lookup(&self, d: &Vec3) -> Vec3 {
        self.style_normals[self.locate(d)]
    }

    /// Sphere-mapped centroid direction of face `f`.
    pub fn centroid_direction(&self, f: usize) -> Vec3 {
        self.centroid_dirs[f]
    }
}

pub fn lookup_spherical(param: &SphericalParam, d: &Vec3) -> Vec3 {
    param.lookup(d)
}

/// Uniform grid over `[-1, 1]³`; each face is listed in every cell touched by
/// the bounding cube of its spherical cap.
#[derive(Clone, Debug)]
struct DirectionGrid {
    res: usize,
    cells: Vec<Vec<u32>>,
}

impl DirectionGrid {
    fn build(sphere: &[Vec3], faces: &[[usize; 3]], centroid_dirs: &[Vec3]) -> Self {
        let res = ((faces.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(2, 48);
        let mut cells = vec![Vec::new(); res * res * res];
        let cell_of = |x: f64| (((x + 1.0) * 0.5 * res as f64).floor().max(0.0) as usize).min(res - 1);
        for (fi, f) in faces.iter().enumerate() {
            let c = centroid_dirs[fi];
            // Spherical triangles are inside the cap around their centroid
            // direction reaching the farthest corner, provided the cap is
            // smaller than a hemisphere.
            let min_cos = f
                .iter()
                .map(|&i| sphere[i].dot(&c))
                .fold(f64::INFINITY, f64::min);
            let (lo, hi) = if min_cos > 0.0 {
                let chord = (2.0 * (1.0 - min_cos)).max(0.0).sqrt() + 1e-9;
                (
                    [0, 1, 2].map(|a| cell_of(c[a] - chord)),
                    [0, 1, 2].map(|a| cell_of(c[a] + chord)),
                )
            } else {
                ([0; 3], [res - 1; 3])
            };
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        cells[(x * res + y) * res + z].push(fi as u32);
                    }
                }
            }
        }
        Self { res, cells }
    }

    fn candidates(&self, d: &Vec3) -> &[u32] {
        let res = self.res;
        let cell_of =
            |x: f64| (((x + 1.0) * 0.5 * res as f64).floor().max(0.0) as usize).min(res - 1);
        &self.cells[(cell_of(d.x) * res + cell_of(d.y)) * res + cell_of(d.z)]
    }
}
