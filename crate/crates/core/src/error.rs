use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("style mesh must be a closed, connected genus-0 surface: {0}")]
    Genus(String),

    #[error("spherical flow did not converge after {iterations} iterations (sphericity {sphericity:.4})")]
    NonConvergence { iterations: usize, sphericity: f64 },

    #[error("normal capture decode failed: {0}")]
    Decode(String),

    #[error("direction set does not span 3D: {0}")]
    Span(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("non-finite coordinate after iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
