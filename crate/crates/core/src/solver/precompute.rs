use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SparseBuilder};
use crate::mesh::{face_areas, face_cotangents, vertex_areas, Neighborhoods};
use crate::solver::Regularization;
use crate::style::{element_normals, ElementMode};
use crate::Vec3;

/// One weighted rest edge `e = v_j − v_i` of an element's edge set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeTerm {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub e: Vec3,
}

/// Everything about the rest shape the local and global steps reuse:
/// per-element edge sets, areas and normals, the gauge-fixed factorization
/// of `Q`, and the constant map `K` from element rotations to right-hand sides.
#[derive(Clone, Debug)]
pub struct Precomputed {
    pub regularization: Regularization,
    rest: Vec<Vec3>,
    elem_offsets: Vec<usize>,
    edges: Vec<EdgeTerm>,
    areas: Vec<f64>,
    rest_normals: Vec<Vec3>,
    q: SparseBuilder,
    chol: Cholesky,
    /// Per vertex `i`: `(k, c_ik)` with `rhs_i = Σ_k s_k R_k c_ik`.
    k_offsets: Vec<usize>,
    k_entries: Vec<(usize, Vec3)>,
    pins: Vec<usize>,
    pinned: Vec<bool>,
    /// `(row, pin index, Q[row][pin])` for unpinned rows coupled to a pin.
    pin_coupling: Vec<(usize, usize, f64)>,
}

impl Precomputed {
    /// `pin` selects the gauge vertex of its component (default: the vertex
    /// nearest the area-weighted centroid); every other component is pinned
    /// at its own most central vertex.
    pub fn new(
        positions: &[Vec3],
        faces: &[[usize; 3]],
        regularization: Regularization,
        pin: Option<usize>,
    ) -> Result<Self> {
        let n = positions.len();
        if let Some(p) = pin {
            if p >= n {
                return Err(Error::InvalidParams(format!(
                    "pinned vertex {p} out of range for {n} vertices"
                )));
            }
        }
        let mode = regularization.mode();
        let cots = face_cotangents(positions, faces);
        let push_face = |edges: &mut Vec<EdgeTerm>, fi: usize| {
            for (c, (i, j)) in Neighborhoods::face_edges(&faces[fi]).into_iter().enumerate() {
                edges.push(EdgeTerm {
                    i,
                    j,
                    w: 0.5 * cots[fi][c],
                    e: positions[j] - positions[i],
                });
            }
        };

        let mut elem_offsets = vec![0];
        let mut edges = Vec::new();
        match mode {
            ElementMode::Vertex => {
                let nb = Neighborhoods::new(n, faces);
                for v in 0..n {
                    for &fi in nb.incident_faces(v) {
                        push_face(&mut edges, fi);
                    }
                    elem_offsets.push(edges.len());
                }
            }
            ElementMode::Face => {
                for fi in 0..faces.len() {
                    push_face(&mut edges, fi);
                    elem_offsets.push(edges.len());
                }
            }
        }
        let areas = match mode {
            ElementMode::Vertex => vertex_areas(positions, faces),
            ElementMode::Face => face_areas(positions, faces),
        };
        let rest_normals = element_normals(positions, faces, mode)?;

        let mut q = SparseBuilder::new(n);
        for t in &edges {
            q.add(t.i, t.i, t.w);
            q.add(t.j, t.j, t.w);
            q.add(t.i, t.j, -t.w);
            q.add(t.j, t.i, -t.w);
        }

        let mut k_triplets: Vec<(usize, usize, Vec3)> = Vec::with_capacity(2 * edges.len());
        for k in 0..elem_offsets.len() - 1 {
            for t in &edges[elem_offsets[k]..elem_offsets[k + 1]] {
                k_triplets.push((t.j, k, t.w * t.e));
                k_triplets.push((t.i, k, -t.w * t.e));
            }
        }
        k_triplets.sort_by_key(|&(i, k, _)| (i, k));
        let mut k_offsets = vec![0; n + 1];
        let mut k_entries: Vec<(usize, Vec3)> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, k, c) in k_triplets {
            if last == Some((i, k)) {
                k_entries.last_mut().unwrap().1 += c;
            } else {
                k_entries.push((k, c));
                k_offsets[i + 1] += 1;
                last = Some((i, k));
            }
        }
        for i in 0..n {
            k_offsets[i + 1] += k_offsets[i];
        }

        let pins = choose_pins(positions, faces, pin);
        let mut pinned = vec![false; n];
        for &p in &pins {
            pinned[p] = true;
        }
        let pin_slot: std::collections::HashMap<usize, usize> =
            pins.iter().enumerate().map(|(s, &p)| (p, s)).collect();
        let mut fixed = SparseBuilder::new(n);
        let mut pin_coupling = Vec::new();
        for &(i, j, v) in q.entries() {
            match (pinned[i], pinned[j]) {
                (false, false) => fixed.add(i, j, v),
                (false, true) => pin_coupling.push((i, pin_slot[&j], v)),
                _ => {}
            }
        }
        for &p in &pins {
            fixed.add(p, p, 1.0);
        }
        let chol = Cholesky::factorize(&fixed)?;

        Ok(Self {
            regularization,
            rest: positions.to_vec(),
            elem_offsets,
            edges,
            areas,
            rest_normals,
            q,
            chol,
            k_offsets,
            k_entries,
            pins,
            pinned,
            pin_coupling,
        })
    }

    pub fn mode(&self) -> ElementMode {
        self.regularization.mode()
    }

    pub fn vertex_count(&self) -> usize {
        self.rest.len()
    }

    pub fn element_count(&self) -> usize {
        self.elem_offsets.len() - 1
    }

    pub fn rest_positions(&self) -> &[Vec3] {
        &self.rest
    }

    pub fn element_edges(&self, k: usize) -> &[EdgeTerm] {
        &self.edges[self.elem_offsets[k]..self.elem_offsets[k + 1]]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn rest_normals(&self) -> &[Vec3] {
        &self.rest_normals
    }

    /// `Q` before the gauge fix.
    pub fn q(&self) -> &SparseBuilder {
        &self.q
    }

    /// Gauge vertices, held at their rest positions.
    pub fn pins(&self) -> &[usize] {
        &self.pins
    }

    /// `Kᵀ Rᵀ` with scales folded into the rotations.
    pub fn rhs(&self, rotations: &[Matrix3<f64>], scales: &[f64]) -> Vec<Vec3> {
        (0..self.vertex_count())
            .into_par_iter()
            .map(|i| {
                self.k_entries[self.k_offsets[i]..self.k_offsets[i + 1]]
                    .iter()
                    .map(|(k, c)| scales[*k] * (rotations[*k] * c))
                    .sum()
            })
            .collect()
    }

    /// Solves the gauge-fixed system `Q U = Kᵀ Rᵀ`.
    pub fn global_step(&self, rotations: &[Matrix3<f64>], scales: &[f64]) -> Result<Vec<Vec3>> {
        let mut b = self.rhs(rotations, scales);
        for &p in &self.pins {
            b[p] = self.rest[p];
        }
        for &(i, s, v) in &self.pin_coupling {
            b[i] -= v * self.rest[self.pins[s]];
        }
        self.chol.solve(&b)
    }

    pub fn is_pinned(&self, v: usize) -> bool {
        self.pinned[v]
    }

    /// Multiplies every edge weight by `factor` (testing the energy's linearity in `w`).
    #[cfg(test)]
    pub(crate) fn scale_weights(&mut self, factor: f64) {
        for t in &mut self.edges {
            t.w *= factor;
        }
    }
}

fn choose_pins(positions: &[Vec3], faces: &[[usize; 3]], pin: Option<usize>) -> Vec<usize> {
    let n = positions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for f in faces {
        for c in 0..3 {
            let a = find(&mut parent, f[c]);
            let b = find(&mut parent, f[(c + 1) % 3]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let label: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    let mut roots: Vec<usize> = label.clone();
    roots.sort_unstable();
    roots.dedup();

    let areas = vertex_areas(positions, faces);
    let mut pins = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(p) = pin.filter(|&p| label[p] == r) {
            pins.push(p);
            continue;
        }
        let mut c = Vec3::zeros();
        let mut a = 0.0;
        for v in (0..n).filter(|&v| label[v] == r) {
            c += areas[v] * positions[v];
            a += areas[v];
        }
        if a > 0.0 {
            c /= a;
        }
        let mut best = (f64::INFINITY, r);
        for v in (0..n).filter(|&v| label[v] == r) {
            let d = (positions[v] - c).norm_squared();
            if d < best.0 {
                best = (d, v);
            }
        }
        pins.push(best.1);
    }
    pins
}
