use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::solver::Precomputed;
use crate::Vec3;

/// Lower bound for ACAP scales.
pub const MIN_SCALE: f64 = 1e-6;

/// Singular-value gap below which a reflection fix is considered ambiguous.
const SIGMA_GAP: f64 = 1e-12;

/// Cross-covariance `X_k = Σ w e e′ᵀ + λ a n̂ tᵀ` of element `k`.
pub fn covariance(
    pre: &Precomputed,
    k: usize,
    positions: &[Vec3],
    target: &Vec3,
    lambda: f64,
) -> Matrix3<f64> {
    let mut x = Matrix3::zeros();
    for t in pre.element_edges(k) {
        let ed = positions[t.j] - positions[t.i];
        x += t.w * t.e * ed.transpose();
    }
    x + (lambda * pre.areas()[k]) * pre.rest_normals()[k] * target.transpose()
}

/// Rotation maximizing `tr(R X)`: `R = V Uᵀ` from `X = U Σ Vᵀ`, with the
/// column of `U` belonging to the smallest singular value negated when the
/// product would be a reflection. Returns `None` when that fix is ambiguous
/// because the two smallest singular values coincide.
pub fn procrustes(x: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let svd = x.svd(true, true);
    let mut u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let mut r = v * u.transpose();
    if r.determinant() < 0.0 {
        let s = svd.singular_values;
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        if s[order[1]] - s[order[2]] < SIGMA_GAP {
            return None;
        }
        let c = order[2];
        u.set_column(c, &(-u.column(c)));
        r = v * u.transpose();
    }
    Some(r)
}

/// Closed-form isotropic scale for a fixed rotation:
/// `s = (Σ w e′ᵀ R e + λ a tᵀ R n̂) / (Σ w |e|² + λ a)`.
pub fn optimal_scale(
    pre: &Precomputed,
    k: usize,
    positions: &[Vec3],
    target: &Vec3,
    lambda: f64,
    r: &Matrix3<f64>,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for t in pre.element_edges(k) {
        let ed = positions[t.j] - positions[t.i];
        num += t.w * ed.dot(&(r * t.e));
        den += t.w * t.e.norm_squared();
    }
    let la = lambda * pre.areas()[k];
    num += la * target.dot(&(r * pre.rest_normals()[k]));
    den += la;
    if den > 0.0 {
        (num / den).max(MIN_SCALE)
    } else {
        1.0
    }
}

/// Per-element rotation (and ACAP scale) fit against the current positions.
/// Rotations whose fit is ambiguous keep their previous value.
pub fn local_step(
    pre: &Precomputed,
    positions: &[Vec3],
    targets: &[Vec3],
    lambda: f64,
    rotations: &mut [Matrix3<f64>],
    scales: &mut [f64],
) {
    let with_scale = pre.regularization.uses_scale();
    rotations
        .par_iter_mut()
        .zip(scales.par_iter_mut())
        .enumerate()
        .for_each(|(k, (r, s))| {
            let x = covariance(pre, k, positions, &targets[k], lambda);
            if let Some(fit) = procrustes(&x) {
                *r = fit;
            }
            *s = if with_scale {
                optimal_scale(pre, k, positions, &targets[k], lambda, r)
            } else {
                1.0
            };
        });
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTerms {
    pub regularization: f64,
    pub normal: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.regularization + self.normal
    }
}

/// Energy of one element: `Σ w ‖s R e − e′‖²` and `λ a ‖s R n̂ − t‖²`.
pub fn element_energy(
    pre: &Precomputed,
    k: usize,
    positions: &[Vec3],
    target: &Vec3,
    lambda: f64,
    r: &Matrix3<f64>,
    s: f64,
) -> EnergyTerms {
    let sr = s * r;
    let mut reg = 0.0;
    for t in pre.element_edges(k) {
        let ed = positions[t.j] - positions[t.i];
        reg += t.w * (sr * t.e - ed).norm_squared();
    }
    let normal = lambda * pre.areas()[k] * (sr * pre.rest_normals()[k] - target).norm_squared();
    EnergyTerms {
        regularization: reg,
        normal,
    }
}

/// Total energy, summed in element order so results are reproducible.
pub fn energy(
    pre: &Precomputed,
    positions: &[Vec3],
    targets: &[Vec3],
    lambda: f64,
    rotations: &[Matrix3<f64>],
    scales: &[f64],
) -> EnergyTerms {
    let per: Vec<EnergyTerms> = (0..pre.element_count())
        .into_par_iter()
        .map(|k| element_energy(pre, k, positions, &targets[k], lambda, &rotations[k], scales[k]))
        .collect();
    per.iter().fold(EnergyTerms::default(), |acc, e| EnergyTerms {
        regularization: acc.regularization + e.regularization,
        normal: acc.normal + e.normal,
    })
}
