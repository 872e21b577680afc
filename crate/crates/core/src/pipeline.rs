//! End-to-end stylization shared by the command line and the studio.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::energies::{
    developable_flow, polycube_flow, DevelopableParams, DevelopableStyle, PolyCubeParams,
};
use crate::error::{Error, Result};
use crate::mesh::{load_obj, normalize_mesh, TriangleMesh};
use crate::solver::{solve, Regularization, SolverParams, SolverState};
use crate::style::{
    element_normals, parse_direction_list, AxisSet, McfParams, NormalCaptureImage, StyleField,
    TargetSource,
};
use crate::diagnostics::mean_angle_deg;
use crate::Vec3;

/// A style as named on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum StyleSpec {
    Sphere,
    Cube,
    Icosahedron,
    Tetrahedron,
    Polytope(PathBuf),
    Mesh(PathBuf),
    NormalCapture(PathBuf),
    Developable,
    PolyCube,
}

impl FromStr for StyleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let path = |p: &str| {
            if p.is_empty() {
                Err(Error::InvalidParams(format!("style `{s}` needs a path")))
            } else {
                Ok(PathBuf::from(p))
            }
        };
        match s.split_once(':') {
            Some(("polytope", p)) => Ok(Self::Polytope(path(p)?)),
            Some(("mesh", p)) => Ok(Self::Mesh(path(p)?)),
            Some(("normcap", p)) => Ok(Self::NormalCapture(path(p)?)),
            _ => match s {
                "sphere" => Ok(Self::Sphere),
                "cube" => Ok(Self::Cube),
                "icosahedron" => Ok(Self::Icosahedron),
                "tetrahedron" => Ok(Self::Tetrahedron),
                "developable" => Ok(Self::Developable),
                "polycube" => Ok(Self::PolyCube),
                other => Err(Error::InvalidParams(format!("unknown style `{other}`"))),
            },
        }
    }
}

impl fmt::Display for StyleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sphere => f.write_str("sphere"),
            Self::Cube => f.write_str("cube"),
            Self::Icosahedron => f.write_str("icosahedron"),
            Self::Tetrahedron => f.write_str("tetrahedron"),
            Self::Polytope(p) => write!(f, "polytope:{}", p.display()),
            Self::Mesh(p) => write!(f, "mesh:{}", p.display()),
            Self::NormalCapture(p) => write!(f, "normcap:{}", p.display()),
            Self::Developable => f.write_str("developable"),
            Self::PolyCube => f.write_str("polycube"),
        }
    }
}

impl StyleSpec {
    /// Whether the style can run with the given regularizer.
    pub fn supports(&self, reg: Regularization) -> bool {
        match self {
            Self::Developable => reg == Regularization::Farap,
            Self::PolyCube => reg != Regularization::Acap,
            _ => true,
        }
    }

    /// The sphere field behind a field-based style; `None` for the
    /// energy-defined ones.
    pub fn field(&self) -> Result<Option<StyleField>> {
        Ok(Some(match self {
            Self::Sphere => StyleField::AnalyticSphere,
            Self::Cube => StyleField::axes(&AxisSet::Cube)?,
            Self::Icosahedron => StyleField::axes(&AxisSet::Icosahedron)?,
            Self::Tetrahedron => StyleField::axes(&AxisSet::Tetrahedron)?,
            Self::Polytope(p) => {
                let text = std::fs::read_to_string(p)?;
                let dirs = parse_direction_list(&text).map_err(|e| match e {
                    Error::Parse { line, message, .. } => Error::Parse {
                        path: p.clone(),
                        line,
                        message,
                    },
                    other => other,
                })?;
                StyleField::axes(&AxisSet::Polytope(dirs))?
            }
            Self::Mesh(p) => {
                let style = normalize_mesh(&load_obj(p)?)?;
                StyleField::from_style_mesh(&style, &McfParams::default())?
            }
            Self::NormalCapture(p) => StyleField::NormalCapture(NormalCaptureImage::load_png(p)?),
            Self::Developable | Self::PolyCube => return Ok(None),
        }))
    }
}

/// Everything a run needs besides the mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub style: StyleSpec,
    pub solver: SolverParams,
    pub developable: DevelopableParams,
}

/// Target source for a style; polycube snaps to the cube axes.
pub fn target_source(spec: &StyleSpec, developable: &DevelopableParams) -> Result<Arc<dyn TargetSource>> {
    Ok(match spec {
        StyleSpec::Developable => Arc::new(DevelopableStyle(*developable)),
        StyleSpec::PolyCube => Arc::new(StyleField::axes(&AxisSet::Cube)?),
        other => Arc::new(other.field()?.expect("field-based style")),
    })
}

/// Mean angle between the element normals of `positions` and the targets the
/// source assigns to them.
pub fn target_deviation_deg(
    source: &dyn TargetSource,
    positions: &[Vec3],
    faces: &[[usize; 3]],
    reg: Regularization,
) -> Result<f64> {
    let normals = element_normals(positions, faces, reg.mode())?;
    let t = source.targets(positions, faces, reg.mode())?;
    Ok(mean_angle_deg(&normals, &t.vectors))
}

/// Stylizes an already normalized mesh. The observer sees every iteration.
pub fn stylize(
    mesh: &TriangleMesh,
    config: &RunConfig,
    observer: impl FnMut(usize, &[Vec3], f64),
) -> Result<SolverState> {
    if !config.style.supports(config.solver.regularization) {
        return Err(Error::InvalidParams(format!(
            "style {} cannot run with {}",
            config.style, config.solver.regularization
        )));
    }
    match &config.style {
        StyleSpec::Developable => developable_flow(mesh, &config.developable, &config.solver, observer),
        StyleSpec::PolyCube => polycube_flow(mesh, &PolyCubeParams::default(), &config.solver, observer),
        spec => {
            let source = target_source(spec, &config.developable)?;
            solve(mesh, source, &config.solver, observer)
        }
    }
}
