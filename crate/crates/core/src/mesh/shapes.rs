//! Procedural meshes used as test inputs, style primitives and benchmarks.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::Vec3;

use super::TriangleMesh;

fn build(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> TriangleMesh {
    TriangleMesh::new(positions, faces).expect("generated mesh is manifold")
}

/// Regular icosahedron inscribed in the unit sphere, outward oriented.
pub fn icosahedron() -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let positions = raw
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    build(positions, faces)
}

/// Loop-style 1→4 subdivision of the icosahedron projected to the unit sphere.
/// Level `n` has `10·4ⁿ + 2` vertices (642 at level 3).
pub fn icosphere(levels: usize) -> TriangleMesh {
    let base = icosahedron();
    let mut positions = base.positions().to_vec();
    let mut faces = base.faces().to_vec();
    for _ in 0..levels {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |i: usize, j: usize, positions: &mut Vec<Vec3>| {
            *midpoint.entry((i.min(j), i.max(j))).or_insert_with(|| {
                positions.push(((positions[i] + positions[j]) * 0.5).normalize());
                positions.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    build(positions, faces)
}

pub fn tetrahedron() -> TriangleMesh {
    let positions = vec![
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ];
    build(positions, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Axis-aligned unit cube centered at the origin, 12 triangles.
pub fn cube() -> TriangleMesh {
    cube_grid(1)
}

/// Axis-aligned unit cube centered at the origin with each side split into
/// an `n × n` grid of quads (two triangles each).
pub fn cube_grid(n: usize) -> TriangleMesh {
    assert!(n >= 1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut id = |l: [usize; 3], positions: &mut Vec<Vec3>| {
        *index.entry(l).or_insert_with(|| {
            positions.push(Vec3::new(
                l[0] as f64 / n as f64 - 0.5,
                l[1] as f64 / n as f64 - 0.5,
                l[2] as f64 / n as f64 - 0.5,
            ));
            positions.len() - 1
        })
    };
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            let outward = if side == 0 { -1.0 } else { 1.0 };
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: usize, dj: usize| {
                        let mut l = [0; 3];
                        l[axis] = side;
                        l[u] = i + di;
                        l[v] = j + dj;
                        l
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]
                        .map(|l| id(l, &mut positions));
                    // (u, v, axis) is right-handed, so u→v winding faces +axis.
                    let (t0, t1) = if outward > 0.0 {
                        ([q[0], q[1], q[2]], [q[0], q[2], q[3]])
                    } else {
                        ([q[0], q[2], q[1]], [q[0], q[3], q[2]])
                    };
                    faces.push(t0);
                    faces.push(t1);
                }
            }
        }
    }
    build(positions, faces)
}

pub fn ellipsoid(levels: usize, a: f64, b: f64, c: f64) -> TriangleMesh {
    icosphere(levels).map_positions(|p| Vec3::new(a * p.x, b * p.y, c * p.z))
}

/// Icosphere with a smooth radial bump field `1 + amplitude · sin(fx)sin(fy)sin(fz)`.
pub fn bumpy_sphere(levels: usize, amplitude: f64, frequency: f64) -> TriangleMesh {
    icosphere(levels).map_positions(|p| {
        let r = 1.0
            + amplitude * (frequency * p.x).sin() * (frequency * p.y).sin() * (frequency * p.z).sin();
        p * r
    })
}

/// A non-convex genus-0 body: an elongated ellipsoid with a raised "head" lobe.
pub fn blob(levels: usize) -> TriangleMesh {
    icosphere(levels).map_positions(|p| {
        let head = (-((p - Vec3::new(0.7, 0.6, 0.0)).norm_squared()) * 4.0).exp();
        let r = 1.0 + 0.45 * head;
        Vec3::new(1.4 * p.x, 0.9 * p.y, 0.8 * p.z) * r
    })
}

/// Ring torus around the z axis with `nu × nv` quads.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriangleMesh {
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            positions.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(positions, faces)
}

/// Planar `nx × ny` quad grid in the xy plane, centered, normal +z.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> TriangleMesh {
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Vec3::new(
                width * (i as f64 / nx as f64 - 0.5),
                height * (j as f64 / ny as f64 - 0.5),
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(positions, faces)
}

/// Open cylinder segment of the given angular extent around the z axis.
pub fn cylinder_patch(radius: f64, height: f64, angle: f64, nu: usize, nv: usize) -> TriangleMesh {
    grid(nu, nv, 1.0, 1.0).map_positions(|p| {
        let t = (p.x + 0.5) * angle - angle / 2.0;
        Vec3::new(radius * t.sin(), p.y * height, radius * t.cos())
    })
}

/// Two planar sheets meeting along the y axis at `fold` radians from flat.
pub fn hinge(n: usize, fold: f64) -> TriangleMesh {
    grid(2 * n, n, 2.0, 1.0).map_positions(|p| {
        if p.x <= 0.0 {
            *p
        } else {
            Vec3::new(p.x * fold.cos(), p.y, p.x * fold.sin())
        }
    })
}

/// Closed fan: a center vertex surrounded by `k` vertices on a bumped ring.
pub fn fan(k: usize) -> TriangleMesh {
    let mut positions = vec![Vec3::new(0.0, 0.0, 0.2)];
    for i in 0..k {
        let t = TAU * i as f64 / k as f64;
        let r = 1.0 + 0.2 * (i as f64 * 1.7).sin();
        positions.push(Vec3::new(r * t.cos(), r * t.sin(), 0.1 * (i as f64).cos()));
    }
    let faces = (0..k).map(|i| [0, 1 + i, 1 + (i + 1) % k]).collect();
    build(positions, faces)
}

/// Latitude/longitude sphere with `rings × segments` vertices plus poles.
pub fn uv_sphere(rings: usize, segments: usize) -> TriangleMesh {
    let mut positions = vec![Vec3::new(0.0, 1.0, 0.0)];
    for r in 1..=rings {
        let phi = PI * r as f64 / (rings + 1) as f64;
        for s in 0..segments {
            let th = TAU * s as f64 / segments as f64;
            positions.push(Vec3::new(phi.sin() * th.cos(), phi.cos(), -phi.sin() * th.sin()));
        }
    }
    positions.push(Vec3::new(0.0, -1.0, 0.0));
    let south = positions.len() - 1;
    let id = |r: usize, s: usize| 1 + r * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, id(0, s), id(0, s + 1)]);
        faces.push([south, id(rings - 1, s + 1), id(rings - 1, s)]);
    }
    for r in 0..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (id(r, s), id(r + 1, s), id(r + 1, s + 1), id(r, s + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(positions, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{face_normals, vertex_normals};

    fn outward(m: &TriangleMesh) -> bool {
        let c = m.surface_centroid();
        let n = face_normals(m.positions(), m.faces()).unwrap();
        m.faces().iter().zip(&n).all(|(f, n)| {
            let centroid = (m.positions()[f[0]] + m.positions()[f[1]] + m.positions()[f[2]]) / 3.0;
            n.dot(&(centroid - c)) > 0.0
        })
    }

    #[test]
    fn closed_shapes_are_outward_oriented() {
        for m in [icosahedron(), icosphere(2), tetrahedron(), cube(), cube_grid(3), uv_sphere(8, 12)] {
            assert!(m.is_closed());
            assert_eq!(m.euler_characteristic(), 2);
            assert!(outward(&m));
        }
        assert_eq!(icosphere(3).vertex_count(), 642);
    }

    #[test]
    fn open_shapes() {
        let c = cylinder_patch(1.0, 1.0, 1.0, 8, 4);
        assert!(!c.is_closed());
        let h = hinge(4, 0.5);
        assert!(vertex_normals(h.positions(), h.faces()).is_ok());
        assert_eq!(fan(4).vertex_count(), 5);
    }
}
