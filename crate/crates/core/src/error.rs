use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) is outside the meshed polygon")]
    PointNotFound { x: f64, y: f64 },

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("{what} must be strictly positive (found {value} at {location})")]
    NonPositive {
        what: &'static str,
        value: f64,
        location: String,
    },

    #[error("dof {dof} constrained twice with conflicting values {first} and {second}")]
    ConflictingConstraint { dof: usize, first: f64, second: f64 },

    #[error("solver did not converge: relative residual {rel_residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, rel_residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("reference gradient vanishes on triangle {triangle} (|grad| = {magnitude:.3e})")]
    VanishingGradient { triangle: usize, magnitude: f64 },

    #[error("zero gradient in symbol evaluation")]
    ZeroGradient,

    #[error("boundary condition '{label}' is not harmonic (|laplacian| = {laplacian:.3e})")]
    NotHarmonic { label: String, laplacian: f64 },

    #[error("start point is not on the characteristic set (|symbol| = {value:.3e})")]
    NotCharacteristic { value: f64 },

    #[error("inverse crime: {0}")]
    InverseCrime(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
