use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::mesh::{face_areas, face_normals, triangle_quality, Neighborhoods, TriangleMesh};
use crate::solver::{energy, local_step, Precomputed, Regularization, SolverParams, SolverState};
use crate::style::{
    axis_normal_set, build_target_normals, element_normals, AxisSet, DiscreteNormalSet, StyleField,
};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyCubeParams {
    pub axes: DiscreteNormalSet,
    /// Faces with `2·inradius / circumradius` below this trigger vertex rescue.
    pub quality_threshold: f64,
    /// Fraction of the way a rescued vertex moves toward its one-ring average.
    pub smoothing_step: f64,
}

impl Default for PolyCubeParams {
    fn default() -> Self {
        Self {
            axes: axis_normal_set(&AxisSet::Cube).expect("cube axes span"),
            quality_threshold: 0.05,
            smoothing_step: 0.1,
        }
    }
}

impl PolyCubeParams {
    pub fn validate(&self) -> Result<()> {
        self.axes.ensure_spans()?;
        if !(0.0..1.0).contains(&self.quality_threshold) {
            return Err(Error::InvalidParams(format!(
                "quality threshold must lie in [0, 1), got {}",
                self.quality_threshold
            )));
        }
        if !(self.smoothing_step > 0.0 && self.smoothing_step < 1.0) {
            return Err(Error::InvalidParams(format!(
                "smoothing step must lie in (0, 1), got {}",
                self.smoothing_step
            )));
        }
        Ok(())
    }
}

/// `Σ_f a_f (1 − n_f · snap(n_f))`: zero exactly when every face is aligned.
pub fn misalignment(positions: &[Vec3], faces: &[[usize; 3]], axes: &DiscreteNormalSet) -> Result<f64> {
    let normals = face_normals(positions, faces)?;
    let areas = face_areas(positions, faces);
    Ok(normals
        .iter()
        .zip(&areas)
        .map(|(n, a)| a * (1.0 - n.dot(&axes.snap(n))))
        .sum())
}

fn min_ring_quality(positions: &[Vec3], faces: &[[usize; 3]], ring: &[usize]) -> f64 {
    ring.iter()
        .map(|&f| {
            let [a, b, c] = faces[f].map(|i| positions[i]);
            triangle_quality(&a, &b, &c)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Moves every unpinned vertex touching a face of quality below the
/// threshold part of the way toward its one-ring average, keeping the move
/// only if the worst quality around the vertex improves. Returns the number
/// of vertices moved.
pub fn rescue_vertices(
    positions: &mut [Vec3],
    faces: &[[usize; 3]],
    pinned: &dyn Fn(usize) -> bool,
    quality_threshold: f64,
    smoothing_step: f64,
) -> usize {
    let nb = Neighborhoods::new(positions.len(), faces);
    let mut moved = 0;
    for v in 0..positions.len() {
        if pinned(v) {
            continue;
        }
        let inc = nb.incident_faces(v);
        let before = min_ring_quality(positions, faces, inc);
        if before >= quality_threshold {
            continue;
        }
        let ring = nb.one_ring(v, faces);
        if ring.is_empty() {
            continue;
        }
        let avg = ring.iter().map(|&i| positions[i]).sum::<Vec3>() / ring.len() as f64;
        let old = positions[v];
        positions[v] = old + smoothing_step * (avg - old);
        if min_ring_quality(positions, faces, inc) > before {
            moved += 1;
        } else {
            positions[v] = old;
        }
    }
    moved
}

/// Fraction of total face area whose normal is within `tolerance_deg` of
/// some axis.
pub fn aligned_area_fraction(
    positions: &[Vec3],
    faces: &[[usize; 3]],
    axes: &DiscreteNormalSet,
    tolerance_deg: f64,
) -> Result<f64> {
    let normals = face_normals(positions, faces)?;
    let areas = face_areas(positions, faces);
    let cos = tolerance_deg.to_radians().cos();
    let total: f64 = areas.iter().sum();
    let aligned: f64 = normals
        .iter()
        .zip(&areas)
        .filter(|(n, _)| n.dot(&axes.snap(n)) >= cos)
        .map(|(_, a)| a)
        .sum();
    Ok(aligned / total)
}

/// Axis-snapping flow that re-precomputes on the current shape every
/// iteration, so each step measures rigidity against the previous one.
/// The energy history records the misalignment after each iteration.
pub fn polycube_flow(
    mesh: &TriangleMesh,
    params: &PolyCubeParams,
    solver: &SolverParams,
    mut observer: impl FnMut(usize, &[Vec3], f64),
) -> Result<SolverState> {
    params.validate()?;
    solver.validate()?;
    if solver.regularization == Regularization::Acap {
        return Err(Error::InvalidParams(
            "polycube flow supports arap and farap".into(),
        ));
    }
    let faces = mesh.faces();
    let mode = solver.regularization.mode();
    let style = StyleField::DiscreteNormalSet(params.axes.clone());
    let pin = Some(solver.pinned_vertex.unwrap_or_else(|| mesh.vertex_nearest_centroid()));

    let mut u = mesh.positions().to_vec();
    let mut history = vec![misalignment(&u, faces, &params.axes)?];
    let mut rotations = Vec::new();
    let mut scales = Vec::new();
    let mut iteration = 0;
    while iteration < solver.max_iterations {
        let pre = Precomputed::new(&u, faces, solver.regularization, pin)?;
        let targets = build_target_normals(&style, &element_normals(&u, faces, mode)?, mode)?;
        rotations = vec![Matrix3::identity(); pre.element_count()];
        scales = vec![1.0; pre.element_count()];
        local_step(&pre, &u, &targets.vectors, solver.lambda, &mut rotations, &mut scales);
        let mut next = pre.global_step(&rotations, &scales)?;
        iteration += 1;
        if next.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite { iteration });
        }
        rescue_vertices(
            &mut next,
            faces,
            &|v| pre.is_pinned(v),
            params.quality_threshold,
            params.smoothing_step,
        );
        let step_energy = energy(&pre, &next, &targets.vectors, solver.lambda, &rotations, &scales);
        u = next;
        let m = misalignment(&u, faces, &params.axes)?;
        let prev = *history.last().unwrap();
        history.push(m);
        observer(iteration, &u, step_energy.total());
        if (prev - m).abs() <= solver.tolerance * prev.abs() || m < 1e-14 {
            break;
        }
    }
    Ok(SolverState {
        positions: u,
        rotations,
        scales,
        energy_history: history,
        iteration,
    })
}
