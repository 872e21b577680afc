use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SparseBuilder, SymbolicCholesky};
use crate::mesh::{cotangent_weights, face_areas, vertex_areas, TriangleMesh};
use crate::style::SphericalParam;
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McfParams {
    /// Implicit time step, measured on a unit-area surface.
    pub step: f64,
    pub max_iterations: usize,
    /// Target `stddev(|v|) / mean(|v|)`.
    pub sphericity_tol: f64,
}

impl Default for McfParams {
    fn default() -> Self {
        Self {
            step: 1e-2,
            max_iterations: 500,
            sphericity_tol: 0.01,
        }
    }
}

/// `stddev(|v|) / mean(|v|)` about the origin.
pub fn sphericity(positions: &[Vec3]) -> f64 {
    let n = positions.len() as f64;
    let radii: Vec<f64> = positions.iter().map(|p| p.norm()).collect();
    let mean = radii.iter().sum::<f64>() / n;
    let var = radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Moves the area-weighted centroid to the origin and scales to mean radius 1.
fn recenter(positions: &mut [Vec3], faces: &[[usize; 3]]) {
    let mut c = Vec3::zeros();
    let mut area = 0.0;
    for f in faces {
        let [a, b, d] = f.map(|i| positions[i]);
        let w = 0.5 * (b - a).cross(&(d - a)).norm();
        c += w * (a + b + d) / 3.0;
        area += w;
    }
    if area > 0.0 {
        c /= area;
    }
    let mean = positions.iter().map(|p| (p - c).norm()).sum::<f64>() / positions.len() as f64;
    for p in positions.iter_mut() {
        *p = (*p - c) / mean;
    }
}

/// Stiffness matrix `Σ w_ij (e_i − e_j)(e_i − e_j)ᵀ`, positive semidefinite.
fn stiffness(positions: &[Vec3], faces: &[[usize; 3]]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (i, j, w) in cotangent_weights(positions, faces).iter() {
        out.push((i, i, w));
        out.push((j, j, w));
        out.push((i, j, -w));
        out.push((j, i, -w));
    }
    out
}

/// Maps a closed genus-0 style mesh onto the unit sphere by conformalized
/// mean curvature flow: `(M_t + δ S₀) V_{t+1} = M_t V_t` with `S₀` the
/// stiffness of the original surface and `M_t` the lumped mass of the
/// current one.
pub fn conformalized_mcf(style: &TriangleMesh, params: &McfParams) -> Result<SphericalParam> {
    if !style.is_closed() {
        return Err(Error::Genus("style mesh has a boundary".into()));
    }
    if style.connected_components() != 1 {
        return Err(Error::Genus(format!(
            "style mesh has {} connected components",
            style.connected_components()
        )));
    }
    let chi = style.euler_characteristic();
    if chi != 2 {
        return Err(Error::Genus(format!(
            "Euler characteristic {chi} (genus {})",
            (2 - chi) / 2
        )));
    }
    if !(params.step > 0.0) || params.max_iterations == 0 || !(params.sphericity_tol > 0.0) {
        return Err(Error::InvalidParams(format!("{params:?}")));
    }

    let faces = style.faces();
    let n = style.vertex_count();
    let mut v = style.positions().to_vec();
    recenter(&mut v, faces);
    let s0 = stiffness(&v, faces);

    let mut iterations = 0;
    let mut symbolic: Option<SymbolicCholesky> = None;
    while sphericity(&v) >= params.sphericity_tol {
        if iterations == params.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                sphericity: sphericity(&v),
            });
        }
        let total: f64 = face_areas(&v, faces).iter().sum();
        let mass: Vec<f64> = vertex_areas(&v, faces).iter().map(|a| a / total).collect();
        let mut a = SparseBuilder::new(n);
        for (i, &m) in mass.iter().enumerate() {
            a.add(i, i, m);
        }
        for &(i, j, w) in &s0 {
            a.add(i, j, params.step * w);
        }
        let sym = match &symbolic {
            Some(s) => s,
            None => symbolic.insert(SymbolicCholesky::analyze(&a)?),
        };
        let chol = Cholesky::refactorize(sym, &a)?;
        let rhs: Vec<Vec3> = v.iter().zip(&mass).map(|(p, m)| p * *m).collect();
        v = chol.solve(&rhs)?;
        recenter(&mut v, faces);
        iterations += 1;
    }
    let sphere = v
        .iter()
        .map(|p| {
            let r = p.norm();
            if r > 0.0 {
                p / r
            } else {
                Vec3::x()
            }
        })
        .collect();
    SphericalParam::with_iterations(style.clone(), sphere, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    fn corner_angles(p: &[Vec3; 3]) -> [f64; 3] {
        std::array::from_fn(|c| {
            let a = p[(c + 1) % 3] - p[c];
            let b = p[(c + 2) % 3] - p[c];
            a.angle(&b)
        })
    }

    fn median_angle_distortion(orig: &TriangleMesh, mapped: &[Vec3]) -> f64 {
        let mut d: Vec<f64> = orig
            .faces()
            .iter()
            .map(|f| {
                let a = corner_angles(&f.map(|i| orig.positions()[i]));
                let b = corner_angles(&f.map(|i| mapped[i]));
                (0..3).map(|c| (a[c] - b[c]).abs()).fold(0.0, f64::max)
            })
            .collect();
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    }

    #[test]
    fn icosphere_is_a_fixed_point() {
        let m = shapes::icosphere(3);
        let p = conformalized_mcf(&m, &McfParams::default()).unwrap();
        assert!(p.flow_iterations() <= 2);
        for (a, b) in p.sphere_positions().iter().zip(m.positions()) {
            assert!((a - b).norm() < 1e-3);
        }
    }

    #[test]
    fn ellipsoid_maps_bijectively_and_beats_radial_projection() {
        let m = shapes::ellipsoid(4, 2.0, 1.0, 1.0);
        let p = conformalized_mcf(&m, &McfParams::default()).unwrap();
        let s = p.sphere_positions();
        for f in m.faces() {
            let [a, b, c] = f.map(|i| s[i]);
            assert!(a.dot(&b.cross(&c)) > 0.0);
        }
        let c = m.surface_centroid();
        let radial: Vec<Vec3> = m.positions().iter().map(|q| (q - c).normalize()).collect();
        let flow = median_angle_distortion(&m, s);
        let naive = median_angle_distortion(&m, &radial);
        assert!(flow < naive, "flow {flow} vs radial {naive}");
    }

    #[test]
    fn torus_is_rejected() {
        let m = shapes::torus(1.0, 0.3, 24, 12);
        assert!(matches!(
            conformalized_mcf(&m, &McfParams::default()),
            Err(Error::Genus(_))
        ));
    }

    #[test]
    fn open_mesh_is_rejected() {
        assert!(matches!(
            conformalized_mcf(&shapes::grid(3, 3, 1.0, 1.0), &McfParams::default()),
            Err(Error::Genus(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let params = McfParams {
            max_iterations: 1,
            step: 1e-6,
            ..McfParams::default()
        };
        assert!(matches!(
            conformalized_mcf(&shapes::blob(2), &params),
            Err(Error::NonConvergence { .. })
        ));
    }
}
