use std::f64::consts::TAU;

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mesh::{face_normals, shapes};
use crate::Vec3;

/// A finite set of unit target directions (the face normals of a convex
/// primitive, or a PolyCube-style axis set).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteNormalSet {
    normals: Vec<Vec3>,
}

impl DiscreteNormalSet {
    /// Normalizes every direction; rejects an empty set or zero vectors.
    pub fn new(directions: impl IntoIterator<Item = Vec3>) -> Result<Self> {
        let normals = directions
            .into_iter()
            .enumerate()
            .map(|(k, d)| {
                let n = d.norm();
                if n > 1e-12 && n.is_finite() {
                    Ok(d / n)
                } else {
                    Err(Error::InvalidParams(format!("direction {k} has zero length")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if normals.is_empty() {
            return Err(Error::InvalidParams("empty normal set".into()));
        }
        Ok(Self { normals })
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Index of the member with the largest dot product with `d`; the lowest
    /// index wins ties.
    pub fn snap_index(&self, d: &Vec3) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, n) in self.normals.iter().enumerate() {
            let s = n.dot(d);
            if s > best.0 {
                best = (s, k);
            }
        }
        best.1
    }

    pub fn snap(&self, d: &Vec3) -> Vec3 {
        self.normals[self.snap_index(d)]
    }

    /// Checks that the directions span 3D.
    pub fn ensure_spans(&self) -> Result<()> {
        let scatter: Matrix3<f64> = self.normals.iter().map(|n| n * n.transpose()).sum();
        let eig = SymmetricEigen::new(scatter);
        let min = eig.eigenvalues.min();
        if min <= 1e-9 * eig.eigenvalues.max().max(1.0) {
            return Err(Error::Span(format!(
                "{} directions with smallest scatter eigenvalue {min:.3e}",
                self.normals.len()
            )));
        }
        Ok(())
    }

    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        Self {
            normals: self.normals.iter().map(|n| r * n).collect(),
        }
    }
}

/// Closest-normal snap of a unit direction.
pub fn snap_closest_normal(style: &DiscreteNormalSet, d: &Vec3) -> Vec3 {
    style.snap(d)
}

/// Named or user-specified target direction sets.
#[derive(Clone, Debug, PartialEq)]
pub enum AxisSet {
    /// The six signed coordinate axes.
    Cube,
    Icosahedron,
    Tetrahedron,
    /// Six equatorial directions at 60° spacing plus ±y.
    HexagonalPrism,
    Polytope(Vec<Vec3>),
}

pub fn axis_normal_set(kind: &AxisSet) -> Result<DiscreteNormalSet> {
    let dirs = match kind {
        AxisSet::Cube => vec![
            Vec3::x(),
            -Vec3::x(),
            Vec3::y(),
            -Vec3::y(),
            Vec3::z(),
            -Vec3::z(),
        ],
        AxisSet::Icosahedron => {
            let m = shapes::icosahedron();
            face_normals(m.positions(), m.faces())?
        }
        AxisSet::Tetrahedron => {
            let m = shapes::tetrahedron();
            face_normals(m.positions(), m.faces())?
        }
        AxisSet::HexagonalPrism => {
            let mut d: Vec<Vec3> = (0..6)
                .map(|k| {
                    let t = TAU * k as f64 / 6.0;
                    Vec3::new(t.cos(), 0.0, t.sin())
                })
                .collect();
            d.push(Vec3::y());
            d.push(-Vec3::y());
            d
        }
        AxisSet::Polytope(dirs) => {
            if dirs.len() < 4 {
                return Err(Error::Span(format!(
                    "a polytope needs at least 4 directions, got {}",
                    dirs.len()
                )));
            }
            dirs.clone()
        }
    };
    let set = DiscreteNormalSet::new(dirs)?;
    set.ensure_spans()?;
    Ok(set)
}

/// Polytope file text: one `x y z` direction per line, `#` comments allowed.
pub fn parse_direction_list(text: &str) -> Result<Vec<Vec3>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                path: "<directions>".into(),
                line: lineno + 1,
                message: format!("{e}"),
            })?;
        if v.len() != 3 {
            return Err(Error::Parse {
                path: "<directions>".into(),
                line: lineno + 1,
                message: format!("expected 3 components, got {}", v.len()),
            });
        }
        out.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok(out)
}
