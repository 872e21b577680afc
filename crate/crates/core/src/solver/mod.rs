//! Normal-driven local/global deformation.

mod local;
mod precompute;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::style::{element_normals, ElementMode, TargetNormals, TargetSource};
use crate::Vec3;

pub use local::{
    covariance, element_energy, energy, local_step, optimal_scale, procrustes, EnergyTerms,
    MIN_SCALE,
};
pub use precompute::{EdgeTerm, Precomputed};

/// Regularizer paired with the normal term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regularization {
    /// Per-vertex spokes-and-rims rigidity.
    Arap,
    /// Per-face rigidity over the three face edges.
    Farap,
    /// Per-vertex rotation plus uniform scale.
    Acap,
}

impl Regularization {
    pub fn mode(self) -> ElementMode {
        match self {
            Self::Farap => ElementMode::Face,
            Self::Arap | Self::Acap => ElementMode::Vertex,
        }
    }

    pub fn uses_scale(self) -> bool {
        self == Self::Acap
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Arap => "arap",
            Self::Farap => "farap",
            Self::Acap => "acap",
        }
    }
}

impl fmt::Display for Regularization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regularization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arap" => Ok(Self::Arap),
            "farap" => Ok(Self::Farap),
            "acap" => Ok(Self::Acap),
            other => Err(Error::InvalidParams(format!("unknown regularization `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub lambda: f64,
    pub regularization: Regularization,
    pub max_iterations: usize,
    /// Stop once `|E_prev − E| ≤ tolerance · |E_prev|`.
    pub tolerance: f64,
    /// Rebuild the targets from the deformed normals after every iteration.
    pub dynamic_targets: bool,
    pub pinned_vertex: Option<usize>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            regularization: Regularization::Arap,
            max_iterations: 500,
            tolerance: 1e-5,
            dynamic_targets: false,
            pinned_vertex: None,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParams(format!("lambda must be ≥ 0, got {}", self.lambda)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("max_iterations must be ≥ 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub positions: Vec<Vec3>,
    pub rotations: Vec<Matrix3<f64>>,
    /// ACAP scales; all 1 for the other regularizations.
    pub scales: Vec<f64>,
    /// Energy after each iteration; entry 0 is the starting configuration.
    pub energy_history: Vec<f64>,
    pub iteration: usize,
}

impl SolverState {
    fn rest(positions: Vec<Vec3>, elements: usize) -> Self {
        Self {
            positions,
            rotations: vec![Matrix3::identity(); elements],
            scales: vec![1.0; elements],
            energy_history: Vec::new(),
            iteration: 0,
        }
    }

    pub fn last_energy(&self) -> Option<f64> {
        self.energy_history.last().copied()
    }
}

/// Outcome of a single local/global iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub iteration: usize,
    pub energy: f64,
    pub converged: bool,
}

fn relative_change_small(prev: f64, cur: f64, tol: f64) -> bool {
    (prev - cur).abs() <= tol * prev.abs() || prev.abs().max(cur.abs()) < 1e-24
}

/// A resumable optimization over one mesh: params and the target source can
/// change between iterations without discarding the current positions.
pub struct Solver {
    mesh: TriangleMesh,
    params: SolverParams,
    source: Arc<dyn TargetSource>,
    pre: Precomputed,
    targets: TargetNormals,
    state: SolverState,
    /// Energy of the previous iteration under the current params and source.
    prev_energy: Option<f64>,
    converged: bool,
}

impl Solver {
    pub fn new(
        mesh: TriangleMesh,
        source: Arc<dyn TargetSource>,
        params: SolverParams,
    ) -> Result<Self> {
        params.validate()?;
        check_mode(source.as_ref(), params.regularization)?;
        let pre = Precomputed::new(
            mesh.positions(),
            mesh.faces(),
            params.regularization,
            params.pinned_vertex,
        )?;
        let targets = source.targets(mesh.positions(), mesh.faces(), pre.mode())?;
        let mut state = SolverState::rest(mesh.positions().to_vec(), pre.element_count());
        let e0 = energy(
            &pre,
            &state.positions,
            &targets.vectors,
            params.lambda,
            &state.rotations,
            &state.scales,
        );
        state.energy_history.push(e0.total());
        Ok(Self {
            mesh,
            params,
            source,
            pre,
            targets,
            state,
            prev_energy: Some(e0.total()),
            converged: false,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.state.positions
    }

    pub fn targets(&self) -> &TargetNormals {
        &self.targets
    }

    pub fn precomputed(&self) -> &Precomputed {
        &self.pre
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Current energy terms of the state under the current targets.
    pub fn energy_terms(&self) -> EnergyTerms {
        energy(
            &self.pre,
            &self.state.positions,
            &self.targets.vectors,
            self.params.lambda,
            &self.state.rotations,
            &self.state.scales,
        )
    }

    /// One local step, one global step, then the optional target rebuild.
    pub fn step(&mut self) -> Result<Step> {
        let lambda = self.params.lambda;
        local_step(
            &self.pre,
            &self.state.positions,
            &self.targets.vectors,
            lambda,
            &mut self.state.rotations,
            &mut self.state.scales,
        );
        let u = self.pre.global_step(&self.state.rotations, &self.state.scales)?;
        self.state.iteration += 1;
        if u.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite {
                iteration: self.state.iteration,
            });
        }
        self.state.positions = u;
        let e = self.energy_terms().total();
        if !e.is_finite() {
            return Err(Error::NonFinite {
                iteration: self.state.iteration,
            });
        }
        self.state.energy_history.push(e);
        self.converged = self
            .prev_energy
            .is_some_and(|prev| relative_change_small(prev, e, self.params.tolerance));
        self.prev_energy = Some(e);
        if self.is_dynamic() {
            self.rebuild_targets()?;
        }
        Ok(Step {
            iteration: self.state.iteration,
            energy: e,
            converged: self.converged,
        })
    }

    /// Iterates until convergence or `max_iterations` further steps, calling
    /// `observer(iteration, positions, energy)` after every global step.
    pub fn run(&mut self, mut observer: impl FnMut(usize, &[Vec3], f64)) -> Result<()> {
        for _ in 0..self.params.max_iterations {
            let s = self.step()?;
            observer(s.iteration, &self.state.positions, s.energy);
            if s.converged {
                break;
            }
        }
        Ok(())
    }

    fn is_dynamic(&self) -> bool {
        self.params.dynamic_targets || self.source.is_dynamic()
    }

    fn rebuild_targets(&mut self) -> Result<()> {
        let positions = if self.is_dynamic() {
            &self.state.positions
        } else {
            self.mesh.positions()
        };
        self.targets = self.source.targets(positions, self.mesh.faces(), self.pre.mode())?;
        Ok(())
    }

    /// Applies new parameters, keeping the current positions. Switching
    /// between vertex- and face-based regularizers re-precomputes and resets
    /// the rotations.
    pub fn set_params(&mut self, params: SolverParams) -> Result<()> {
        params.validate()?;
        check_mode(self.source.as_ref(), params.regularization)?;
        let old = self.params;
        if params.regularization != old.regularization || params.pinned_vertex != old.pinned_vertex {
            let pre = Precomputed::new(
                self.mesh.positions(),
                self.mesh.faces(),
                params.regularization,
                params.pinned_vertex,
            )?;
            if pre.element_count() != self.pre.element_count() {
                self.state.rotations = vec![Matrix3::identity(); pre.element_count()];
            }
            self.state.scales = vec![1.0; pre.element_count()];
            self.pre = pre;
        }
        self.params = params;
        self.rebuild_targets()?;
        self.rearm();
        Ok(())
    }

    /// Swaps the target source, keeping the current positions.
    pub fn set_source(&mut self, source: Arc<dyn TargetSource>) -> Result<()> {
        check_mode(source.as_ref(), self.params.regularization)?;
        self.source = source;
        self.rebuild_targets()?;
        self.rearm();
        Ok(())
    }

    /// Swaps params and source together, for changes that are only valid as
    /// a pair (e.g. a face-based style with a face-based regularizer).
    pub fn reconfigure(&mut self, params: SolverParams, source: Arc<dyn TargetSource>) -> Result<()> {
        check_mode(source.as_ref(), params.regularization)?;
        let old = std::mem::replace(&mut self.source, source);
        if let Err(e) = self.set_params(params) {
            self.source = old;
            return Err(e);
        }
        Ok(())
    }

    /// Rebuilds targets from the current source (e.g. after it was edited).
    pub fn refresh_targets(&mut self) -> Result<()> {
        self.rebuild_targets()?;
        self.rearm();
        Ok(())
    }

    /// Back to the rest shape with identity rotations.
    pub fn reset(&mut self) -> Result<()> {
        self.state = SolverState::rest(self.mesh.positions().to_vec(), self.pre.element_count());
        self.rebuild_targets()?;
        let e = self.energy_terms().total();
        self.state.energy_history.push(e);
        self.prev_energy = Some(e);
        self.converged = false;
        Ok(())
    }

    fn rearm(&mut self) {
        self.prev_energy = None;
        self.converged = false;
    }
}

fn check_mode(source: &dyn TargetSource, reg: Regularization) -> Result<()> {
    match source.required_mode() {
        Some(m) if m != reg.mode() => Err(Error::InvalidParams(format!(
            "style needs {m:?} elements but {reg} works on {:?} elements",
            reg.mode()
        ))),
        _ => Ok(()),
    }
}

/// Runs the optimization from the rest shape of `mesh`.
pub fn solve(
    mesh: &TriangleMesh,
    source: Arc<dyn TargetSource>,
    params: &SolverParams,
    observer: impl FnMut(usize, &[Vec3], f64),
) -> Result<SolverState> {
    let mut solver = Solver::new(mesh.clone(), source, *params)?;
    solver.run(observer)?;
    Ok(solver.into_state())
}

/// Angles in degrees between `R_k n̂_k` and the element normals of the
/// deformed positions.
pub fn rotated_normal_errors(
    pre: &Precomputed,
    state: &SolverState,
    faces: &[[usize; 3]],
) -> Result<Vec<f64>> {
    let current = element_normals(&state.positions, faces, pre.mode())?;
    Ok(current
        .iter()
        .zip(pre.rest_normals())
        .zip(&state.rotations)
        .map(|((c, n), r)| (r * n).dot(c).clamp(-1.0, 1.0).acos().to_degrees())
        .collect())
}
