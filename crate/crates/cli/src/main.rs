use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stylize_core::diagnostics::{crease_statistics_csv, stats_csv, IterationStats};
use stylize_core::energies::DevelopableParams;
use stylize_core::pipeline::{target_deviation_deg, target_source};
use stylize_core::{
    load_obj, normalize_with_transform, save_obj, stylize, Regularization, RunConfig,
    SolverParams, StyleSpec,
};

/// Stylize a triangle mesh by matching its normals to a style.
#[derive(Debug, Parser)]
#[command(name = "stylize", version)]
struct Cli {
    /// Input OBJ.
    #[arg(short, long)]
    input: PathBuf,

    /// Output OBJ, written in the input's coordinate frame.
    #[arg(short, long)]
    output: PathBuf,

    /// sphere | cube | icosahedron | tetrahedron | polytope:PATH | mesh:PATH |
    /// normcap:PATH | developable | polycube
    #[arg(long, default_value = "sphere")]
    style: String,

    /// Weight of the normal term.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,

    /// Maximum number of iterations; 0 copies the input.
    #[arg(long, default_value_t = 500)]
    iterations: usize,

    /// Relative energy change at which to stop.
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,

    /// Eigenvalue-ratio threshold of the developable style.
    #[arg(long, default_value_t = 0.3)]
    crease_threshold: f64,

    /// arap | farap | acap (default: farap for developable and polycube, arap otherwise).
    #[arg(long = "reg", visible_alias = "regularization")]
    regularization: Option<String>,

    /// Rebuild targets from the deformed normals every iteration.
    #[arg(long)]
    dynamic_t: bool,

    /// Per-iteration CSV: iteration, energy, meanNormalAngleDeg.
    #[arg(long)]
    stats: Option<PathBuf>,

    /// Dihedral-angle and angle-defect histograms of the output, as CSV.
    #[arg(long)]
    crease_stats: Option<PathBuf>,

    /// Seed for stochastic modes; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<stylize_core::Error> for Failure {
    fn from(e: stylize_core::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn configure(cli: &Cli) -> Result<RunConfig, Failure> {
    let style: StyleSpec = cli
        .style
        .parse()
        .map_err(|e: stylize_core::Error| Failure::Usage(e.to_string()))?;
    let regularization = match &cli.regularization {
        Some(r) => r
            .parse::<Regularization>()
            .map_err(|e| Failure::Usage(e.to_string()))?,
        None => match style {
            StyleSpec::Developable | StyleSpec::PolyCube => Regularization::Farap,
            _ => Regularization::Arap,
        },
    };
    if !style.supports(regularization) {
        return Err(Failure::Usage(format!(
            "style {style} cannot be combined with --reg {regularization}"
        )));
    }
    let solver = SolverParams {
        lambda: cli.lambda,
        regularization,
        max_iterations: cli.iterations.max(1),
        tolerance: cli.tolerance,
        dynamic_targets: cli.dynamic_t,
        pinned_vertex: None,
    };
    solver.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let developable = DevelopableParams {
        crease_threshold: cli.crease_threshold,
    };
    developable
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(RunConfig {
        style,
        solver,
        developable,
    })
}

fn run(cli: &Cli, config: &RunConfig) -> Result<(), Failure> {
    let input = load_obj(&cli.input)?;
    let (mesh, frame) = normalize_with_transform(&input)?;

    let positions = if cli.iterations == 0 {
        mesh.positions().to_vec()
    } else {
        let source = match &cli.stats {
            Some(_) => Some(target_source(&config.style, &config.developable)?),
            None => None,
        };
        let reg = config.solver.regularization;
        let mut rows = Vec::new();
        let mut deviation_error = None;
        let mut deviation = |p: &[stylize_core::Vec3]| match &source {
            Some(s) => match target_deviation_deg(s.as_ref(), p, mesh.faces(), reg) {
                Ok(d) => d,
                Err(e) => {
                    deviation_error.get_or_insert(e);
                    f64::NAN
                }
            },
            None => f64::NAN,
        };
        let initial = deviation(mesh.positions());
        let state = stylize(&mesh, config, |iteration, p, energy| {
            if source.is_some() {
                rows.push(IterationStats {
                    iteration,
                    energy,
                    mean_normal_angle_deg: deviation(p),
                });
            }
        })?;
        if let Some(e) = deviation_error {
            return Err(e.into());
        }
        eprintln!(
            "{} iterations, final energy {:.6e}",
            state.iteration,
            state.energy_history.last().copied().unwrap_or(0.0)
        );
        if let Some(path) = &cli.stats {
            rows.insert(
                0,
                IterationStats {
                    iteration: 0,
                    energy: state.energy_history[0],
                    mean_normal_angle_deg: initial,
                },
            );
            std::fs::write(path, stats_csv(&rows))?;
        }
        state.positions
    };

    let out = mesh.with_positions(positions.iter().map(|p| frame.invert(p)).collect());
    save_obj(&out, &cli.output)?;
    if let Some(path) = &cli.crease_stats {
        std::fs::write(path, crease_statistics_csv(&positions, mesh.faces(), 36)?)?;
    }
    Ok(())
}

fn init_threads() {
    if let Some(n) = std::env::var("NA_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let result = configure(&cli).and_then(|config| run(&cli, &config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("stylize: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("stylize: {msg}");
            ExitCode::from(1)
        }
    }
}
