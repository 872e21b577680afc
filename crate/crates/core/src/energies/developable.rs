use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{face_areas, face_normals, Neighborhoods, TriangleMesh};
use crate::solver::{Regularization, Solver, SolverParams, SolverState};
use crate::style::{ElementMode, TargetNormals, TargetSource};
use crate::Vec3;

/// Covariances with a largest eigenvalue below this count as a single direction.
const ISOTROPIC_EIGEN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DevelopableParams {
    /// One-ring normals whose second-to-first eigenvalue ratio is below this
    /// are pushed onto a single line of directions (a hinge); otherwise only
    /// the weakest direction is removed.
    pub crease_threshold: f64,
}

impl Default for DevelopableParams {
    fn default() -> Self {
        Self {
            crease_threshold: 0.3,
        }
    }
}

impl DevelopableParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.crease_threshold > 0.0 && self.crease_threshold < 1.0) {
            return Err(Error::InvalidParams(format!(
                "crease threshold must lie in (0, 1), got {}",
                self.crease_threshold
            )));
        }
        Ok(())
    }
}

/// Result of projecting one vertex's one-ring normals.
#[derive(Clone, Debug, PartialEq)]
pub struct RingProjection {
    /// Projected normals before renormalization, in incident-face order.
    pub raw: Vec<Vec3>,
    pub mean: Vec3,
    /// Eigenvectors whose components were removed (relative to the mean).
    pub dropped: Vec<Vec3>,
}

/// Projects a one-ring's face normals: area-weighted mean-free PCA, then the
/// components of `n − mean` along the one or two weakest eigenvectors are
/// zeroed. Returns `None` when the normals are (numerically) identical.
pub fn project_ring(normals: &[Vec3], areas: &[f64], crease_threshold: f64) -> Option<RingProjection> {
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mean: Vec3 = normals.iter().zip(areas).map(|(n, a)| n * *a).sum::<Vec3>() / total;
    let cov: Matrix3<f64> = normals
        .iter()
        .zip(areas)
        .map(|(n, a)| {
            let d = n - mean;
            (*a / total) * d * d.transpose()
        })
        .sum();
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]];
    if l1 < ISOTROPIC_EIGEN {
        return None;
    }
    let l2 = eig.eigenvalues[order[1]].max(0.0);
    let e = |k: usize| eig.eigenvectors.column(order[k]).into_owned();
    let dropped = if l2 / l1 < crease_threshold {
        vec![e(1), e(2)]
    } else {
        vec![e(2)]
    };
    let raw = normals
        .iter()
        .map(|n| {
            let d = n - mean;
            let mut p = *n;
            for v in &dropped {
                p -= d.dot(v) * v;
            }
            p
        })
        .collect();
    Some(RingProjection { raw, mean, dropped })
}

/// Per-face developable targets for the current positions: every vertex
/// projects its one-ring normals, and each face averages the three
/// projections it received.
pub fn developable_targets(
    positions: &[Vec3],
    faces: &[[usize; 3]],
    params: &DevelopableParams,
) -> Result<TargetNormals> {
    let normals = face_normals(positions, faces)?;
    let areas = face_areas(positions, faces);
    let nb = Neighborhoods::new(positions.len(), faces);
    let per_vertex: Vec<Vec<Vec3>> = (0..positions.len())
        .into_par_iter()
        .map(|v| {
            let inc = nb.incident_faces(v);
            let ns: Vec<Vec3> = inc.iter().map(|&f| normals[f]).collect();
            let ws: Vec<f64> = inc.iter().map(|&f| areas[f]).collect();
            match project_ring(&ns, &ws, params.crease_threshold) {
                Some(p) => p
                    .raw
                    .iter()
                    .zip(&ns)
                    .map(|(q, n)| {
                        let len = q.norm();
                        if len > 1e-12 {
                            q / len
                        } else {
                            *n
                        }
                    })
                    .collect(),
                None => ns,
            }
        })
        .collect();
    let vectors = faces
        .par_iter()
        .enumerate()
        .map(|(fi, f)| {
            let mut acc = Vec3::zeros();
            for &v in f {
                let slot = nb.incident_faces(v).iter().position(|&g| g == fi).unwrap();
                acc += per_vertex[v][slot];
            }
            let len = acc.norm();
            if len > 1e-12 {
                acc / len
            } else {
                normals[fi]
            }
        })
        .collect();
    Ok(TargetNormals {
        mode: ElementMode::Face,
        vectors,
    })
}

/// Developable targets as a dynamic target source.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DevelopableStyle(pub DevelopableParams);

impl TargetSource for DevelopableStyle {
    fn targets(
        &self,
        positions: &[Vec3],
        faces: &[[usize; 3]],
        mode: ElementMode,
    ) -> Result<TargetNormals> {
        if mode != ElementMode::Face {
            return Err(Error::InvalidParams(
                "developable targets are per face".into(),
            ));
        }
        developable_targets(positions, faces, &self.0)
    }

    fn required_mode(&self) -> Option<ElementMode> {
        Some(ElementMode::Face)
    }

    fn is_dynamic(&self) -> bool {
        true
    }
}

/// Face-rigid optimization against developable targets recomputed from the
/// deformed shape every iteration.
pub fn developable_flow(
    mesh: &TriangleMesh,
    params: &DevelopableParams,
    solver: &SolverParams,
    observer: impl FnMut(usize, &[Vec3], f64),
) -> Result<SolverState> {
    params.validate()?;
    if solver.regularization != Regularization::Farap {
        return Err(Error::InvalidParams(format!(
            "developable flow requires farap, got {}",
            solver.regularization
        )));
    }
    let sp = SolverParams {
        dynamic_targets: true,
        ..*solver
    };
    let mut s = Solver::new(mesh.clone(), Arc::new(DevelopableStyle(*params)), sp)?;
    s.run(observer)?;
    Ok(s.into_state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{dihedral_angles, normalize_mesh, shapes};
    use nalgebra::Rotation3;

    fn targets(m: &TriangleMesh, thr: f64) -> Vec<Vec3> {
        developable_targets(
            m.positions(),
            m.faces(),
            &DevelopableParams {
                crease_threshold: thr,
            },
        )
        .unwrap()
        .vectors
    }

    #[test]
    fn plane_is_unchanged() {
        let m = shapes::grid(6, 5, 1.0, 1.0);
        for t in targets(&m, 0.1) {
            assert_eq!(t, Vec3::z());
        }
    }

    #[test]
    fn hinge_is_a_fixed_point() {
        let m = shapes::hinge(4, 0.6);
        let n = face_normals(m.positions(), m.faces()).unwrap();
        for thr in [0.05, 0.5, 0.95] {
            for (t, n) in targets(&m, thr).iter().zip(&n) {
                assert!((t - n).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn cone_ring_is_projected_onto_its_top_plane() {
        // Normals of a cone around a tilted axis, uneven weights.
        let axis = Vec3::new(0.2, 0.3, 1.0).normalize();
        let rot = Rotation3::rotation_between(&Vec3::z(), &axis).unwrap();
        let ns: Vec<Vec3> = (0..7)
            .map(|k| {
                let t = k as f64 * 0.9 + 0.1 * (k as f64).sin();
                rot * Vec3::new(0.4 * t.cos(), 0.4 * t.sin(), 1.0).normalize()
            })
            .collect();
        let ws: Vec<f64> = (0..7).map(|k| 1.0 + 0.1 * k as f64).collect();
        for thr in [0.01, 0.99] {
            let p = project_ring(&ns, &ws, thr).unwrap();
            // Oracle: eigendecomposition of the same covariance built independently.
            let total: f64 = ws.iter().sum();
            let mean: Vec3 = ns.iter().zip(&ws).map(|(n, w)| n * (*w / total)).sum();
            let cov: Matrix3<f64> = ns
                .iter()
                .zip(&ws)
                .map(|(n, w)| (n - mean) * (n - mean).transpose() * (*w / total))
                .sum();
            for d in &p.dropped {
                assert!(((cov * d) - d * (d.dot(&(cov * d)))).norm() < 1e-9, "not an eigenvector");
                for q in &p.raw {
                    assert!((q - p.mean).dot(d).abs() < 1e-12);
                }
            }
            assert!(!p.dropped.is_empty());
        }
    }

    #[test]
    fn thin_spread_drops_two_directions() {
        let ns = vec![
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.3, 0.01, 1.0).normalize(),
            Vec3::new(0.6, -0.01, 1.0).normalize(),
        ];
        let p = project_ring(&ns, &[1.0, 1.0, 1.0], 0.1).unwrap();
        assert_eq!(p.dropped.len(), 2);
        let p = project_ring(&ns, &[1.0, 1.0, 1.0], 1e-9).unwrap();
        assert_eq!(p.dropped.len(), 1);
    }

    #[test]
    fn targets_are_unit_and_rotation_equivariant() {
        let m = shapes::bumpy_sphere(2, 0.15, 4.0);
        let rot = Rotation3::from_euler_angles(0.7, -0.2, 1.9);
        let r = m.map_positions(|p| rot * p);
        let a = targets(&m, 0.1);
        let b = targets(&r, 0.1);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.norm() - 1.0).abs() < 1e-9);
            assert!((rot * x - y).norm() < 1e-6);
        }
    }

    #[test]
    fn projection_is_idempotent_on_hinge() {
        let m = shapes::hinge(5, 1.0);
        let once = targets(&m, 0.1);
        let faces = m.faces();
        let nb = Neighborhoods::new(m.vertex_count(), faces);
        let areas = face_areas(m.positions(), faces);
        for v in 0..m.vertex_count() {
            let ns: Vec<Vec3> = nb.incident_faces(v).iter().map(|&f| once[f]).collect();
            let ws: Vec<f64> = nb.incident_faces(v).iter().map(|&f| areas[f]).collect();
            if let Some(p) = project_ring(&ns, &ws, 0.1) {
                for (q, n) in p.raw.iter().zip(&ns) {
                    assert!((q.normalize() - n).norm() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn cylinder_is_nearly_fixed() {
        let m = shapes::cylinder_patch(1.0, 1.0, 1.2, 12, 6);
        let params = SolverParams {
            regularization: Regularization::Farap,
            lambda: 1.0,
            max_iterations: 50,
            ..Default::default()
        };
        let s = developable_flow(&m, &DevelopableParams::default(), &params, |_, _, _| {}).unwrap();
        let d = s
            .positions
            .iter()
            .zip(m.positions())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-4, "{d}");
    }

    #[test]
    fn rejects_non_face_regularizers() {
        let m = shapes::icosphere(1);
        let params = SolverParams::default();
        assert!(developable_flow(&m, &DevelopableParams::default(), &params, |_, _, _| {}).is_err());
        let bad = DevelopableParams {
            crease_threshold: 1.5,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn two_plane_setting_keeps_at_least_as_many_creases() {
        let m = normalize_mesh(&shapes::bumpy_sphere(3, 0.12, 3.0)).unwrap();
        let creases = |thr: f64| {
            let params = SolverParams {
                regularization: Regularization::Farap,
                lambda: 10.0,
                max_iterations: 60,
                ..Default::default()
            };
            let s = developable_flow(
                &m,
                &DevelopableParams {
                    crease_threshold: thr,
                },
                &params,
                |_, _, _| {},
            )
            .unwrap();
            dihedral_angles(&s.positions, m.faces())
                .unwrap()
                .iter()
                .filter(|a| a.to_degrees() > 30.0)
                .count()
        };
        let two_plane = creases(0.02);
        let one_plane = creases(0.6);
        assert!(two_plane >= one_plane, "{two_plane} < {one_plane}");
    }
}
