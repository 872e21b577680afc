//! Measurements used by the CLI reports and the test suites.

use std::fmt::Write as _;

use crate::error::Result;
use crate::mesh::{angle_defects, boundary_vertices, dihedral_angles};
use crate::style::DiscreteNormalSet;
use crate::Vec3;

/// Angle between two unit vectors, in degrees.
pub fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Mean pairwise angle in degrees.
pub fn mean_angle_deg(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| angle_deg(x, y)).sum::<f64>() / a.len() as f64
}

/// Mean angle in degrees from each normal to its nearest member of `set`.
pub fn mean_snap_deviation_deg(normals: &[Vec3], set: &DiscreteNormalSet) -> f64 {
    let snapped: Vec<Vec3> = normals.iter().map(|n| set.snap(n)).collect();
    mean_angle_deg(normals, &snapped)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        f64::NAN
    } else {
        v[v.len() / 2]
    }
}

/// One row of the per-iteration statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub energy: f64,
    pub mean_normal_angle_deg: f64,
}

pub fn stats_csv(rows: &[IterationStats]) -> String {
    let mut out = String::from("iteration,energy,meanNormalAngleDeg\n");
    for r in rows {
        let _ = writeln!(out, "{},{:e},{}", r.iteration, r.energy, r.mean_normal_angle_deg);
    }
    out
}

pub fn energy_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,energy\n");
    for (i, e) in history.iter().enumerate() {
        let _ = writeln!(out, "{i},{e:e}");
    }
    out
}

/// Angle defects of interior vertices only.
pub fn interior_angle_defects(positions: &[Vec3], faces: &[[usize; 3]]) -> Vec<f64> {
    let boundary = boundary_vertices(positions.len(), faces);
    angle_defects(positions, faces)
        .into_iter()
        .zip(boundary)
        .filter(|(_, b)| !b)
        .map(|(d, _)| d)
        .collect()
}

/// Fraction of values with magnitude below `tol`.
pub fn flat_fraction(defects: &[f64], tol: f64) -> f64 {
    if defects.is_empty() {
        return 0.0;
    }
    defects.iter().filter(|d| d.abs() < tol).count() as f64 / defects.len() as f64
}

/// Share of `Σ|d|` held by the largest `fraction` of entries.
pub fn top_share(defects: &[f64], fraction: f64) -> f64 {
    let mut mags: Vec<f64> = defects.iter().map(|d| d.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = mags.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let k = ((mags.len() as f64 * fraction).ceil() as usize).min(mags.len());
    mags[..k].iter().sum::<f64>() / total
}

/// Equal-width histogram over `[lo, hi]`; values outside are clamped into
/// the end bins.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    for v in values {
        let t = ((v - lo) / (hi - lo) * bins as f64).floor();
        let b = (t.max(0.0) as usize).min(bins - 1);
        h[b] += 1;
    }
    h
}

/// Dihedral-angle (degrees) and angle-defect (radians) histograms as CSV
/// with columns `kind,bin_start,bin_end,count`.
pub fn crease_statistics_csv(positions: &[Vec3], faces: &[[usize; 3]], bins: usize) -> Result<String> {
    let dihedral: Vec<f64> = dihedral_angles(positions, faces)?
        .iter()
        .map(|a| a.to_degrees())
        .collect();
    let defects = interior_angle_defects(positions, faces);
    let dmax = defects.iter().fold(1e-3f64, |m, d| m.max(d.abs()));
    let mut out = String::from("kind,bin_start,bin_end,count\n");
    let mut emit = |kind: &str, lo: f64, hi: f64, counts: Vec<usize>| {
        let w = (hi - lo) / bins as f64;
        for (k, c) in counts.into_iter().enumerate() {
            let _ = writeln!(out, "{kind},{},{},{c}", lo + w * k as f64, lo + w * (k + 1) as f64);
        }
    };
    emit("dihedral_deg", 0.0, 180.0, histogram(&dihedral, 0.0, 180.0, bins));
    emit("angle_defect", -dmax, dmax, histogram(&defects, -dmax, dmax, bins));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::style::{axis_normal_set, AxisSet};

    #[test]
    fn csv_layout() {
        let s = stats_csv(&[IterationStats {
            iteration: 3,
            energy: 0.5,
            mean_normal_angle_deg: 12.0,
        }]);
        assert_eq!(s.lines().next().unwrap(), "iteration,energy,meanNormalAngleDeg");
        assert_eq!(s.lines().nth(1).unwrap(), "3,5e-1,12");
        assert_eq!(energy_csv(&[1.0, 0.25]).lines().count(), 3);
    }

    #[test]
    fn snap_deviation_of_axes_is_zero() {
        let cube = axis_normal_set(&AxisSet::Cube).unwrap();
        assert_eq!(mean_snap_deviation_deg(cube.normals(), &cube), 0.0);
        let d = [Vec3::new(1.0, 1.0, 0.0).normalize()];
        assert!((mean_snap_deviation_deg(&d, &cube) - 45.0).abs() < 1e-9);
    }

    #[test]
    fn defect_statistics() {
        assert_eq!(flat_fraction(&[0.0, 1e-4, 0.1, -0.2], 1e-3), 0.5);
        assert!((top_share(&[1.0, 1.0, 2.0, 0.0], 0.25) - 0.5).abs() < 1e-12);
        assert_eq!(histogram(&[0.0, 0.5, 1.0, 2.0], 0.0, 1.0, 2), vec![1, 3]);
    }

    #[test]
    fn crease_csv_has_both_histograms() {
        let m = shapes::cube_grid(2);
        let csv = crease_statistics_csv(m.positions(), m.faces(), 6).unwrap();
        assert_eq!(csv.lines().count(), 13);
        assert!(csv.contains("dihedral_deg,") && csv.contains("angle_defect,"));
    }
}
