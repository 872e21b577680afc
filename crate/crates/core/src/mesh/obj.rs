//! Wavefront OBJ: positions, triangle/polygon faces (fan-triangulated) and
//! texture coordinates. Normals, groups and materials are ignored.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::Vec3;

use super::{TexCoords, TriangleMesh};

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_obj(&text, path)
}

/// Parses OBJ text; `source` is only used in error messages.
pub fn parse_obj(text: &str, source: impl AsRef<Path>) -> Result<TriangleMesh> {
    let source = source.as_ref();
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(source),
        line,
        message,
    };

    let mut positions = Vec::new();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut faces = Vec::new();
    let mut uv_faces = Vec::new();
    let mut faces_without_uv = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(lineno, format!("bad vertex coordinate: {e}")))?;
                if coords.len() != 3 {
                    return Err(err(lineno, "vertex needs three coordinates".into()));
                }
                positions.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "vt" => {
                let coords: Vec<f64> = tokens
                    .take(2)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(lineno, format!("bad texture coordinate: {e}")))?;
                let v = coords.get(1).copied().unwrap_or(0.0);
                let u = *coords
                    .first()
                    .ok_or_else(|| err(lineno, "empty texture coordinate".into()))?;
                uvs.push([u, v]);
            }
            "f" => {
                let mut corners = Vec::new();
                for t in tokens {
                    let mut parts = t.split('/');
                    let v = resolve_index(parts.next().unwrap_or(""), positions.len())
                        .map_err(|m| err(lineno, m))?;
                    let vt = match parts.next() {
                        Some(s) if !s.is_empty() => {
                            Some(resolve_index(s, uvs.len()).map_err(|m| err(lineno, m))?)
                        }
                        _ => None,
                    };
                    corners.push((v, vt));
                }
                if corners.len() < 3 {
                    return Err(err(lineno, "face needs at least three vertices".into()));
                }
                let has_uv = corners.iter().all(|c| c.1.is_some());
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0].0, corners[k].0, corners[k + 1].0]);
                    if has_uv {
                        uv_faces.push([
                            corners[0].1.unwrap(),
                            corners[k].1.unwrap(),
                            corners[k + 1].1.unwrap(),
                        ]);
                    } else {
                        faces_without_uv += 1;
                    }
                }
            }
            _ => {}
        }
    }

    let tex = (faces_without_uv == 0 && !uv_faces.is_empty()).then_some(TexCoords {
        coords: uvs,
        faces: uv_faces,
    });
    Ok(TriangleMesh::new(positions, faces)?.with_tex(tex))
}

fn resolve_index(token: &str, count: usize) -> std::result::Result<usize, String> {
    let i: i64 = token
        .parse()
        .map_err(|_| format!("bad face index {token:?}"))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err("face index 0 is invalid".into());
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(format!("face index {i} out of range ({count} defined)"));
    }
    Ok(resolved as usize)
}

/// Writes positions with six fractional digits.
pub fn write_obj<W: Write>(mesh: &TriangleMesh, out: &mut W) -> std::io::Result<()> {
    for p in mesh.positions() {
        writeln!(out, "v {:.6} {:.6} {:.6}", p.x, p.y, p.z)?;
    }
    match mesh.tex_coords() {
        Some(tex) => {
            for uv in &tex.coords {
                writeln!(out, "vt {:.6} {:.6}", uv[0], uv[1])?;
            }
            for (f, t) in mesh.faces().iter().zip(&tex.faces) {
                writeln!(
                    out,
                    "f {}/{} {}/{} {}/{}",
                    f[0] + 1,
                    t[0] + 1,
                    f[1] + 1,
                    t[1] + 1,
                    f[2] + 1,
                    t[2] + 1
                )?;
            }
        }
        None => {
            for f in mesh.faces() {
                writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
            }
        }
    }
    Ok(())
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write_obj(mesh, &mut out)?;
    out.flush()?;
    Ok(())
}
