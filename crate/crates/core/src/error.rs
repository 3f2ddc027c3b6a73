use thiserror::Error;

use crate::integrator::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    Geometry,
    DegenerateFront,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("speed profile error: {0}")]
    Profile(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate front: {0}")]
    DegenerateFront(String),

    /// Trajectories crossed although the caller asserted they would not.
    #[error("{count} trajectory intersections found while no intersections were asserted")]
    UnexpectedIntersections { count: usize },

    /// Integration aborted; `partial` holds every sample accepted before the failure.
    #[error("integration failed at t = {time} (x = {position:?}): {source}")]
    Integration {
        time: f64,
        position: Vec<f64>,
        partial: Box<Trajectory>,
        #[source]
        source: Box<Error>,
    },

    #[error("launch index {index}: {source}")]
    Launch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("epoch {epoch}: {source}")]
    Epoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Argument(_) | Error::Configuration(_) => ErrorCategory::Validation,
            Error::Domain(_) | Error::Profile(_) | Error::Numerical(_) => ErrorCategory::Numerical,
            Error::Geometry(_) | Error::UnexpectedIntersections { .. } => ErrorCategory::Geometry,
            Error::DegenerateFront(_) => ErrorCategory::DegenerateFront,
            Error::Integration { source, .. }
            | Error::Launch { source, .. }
            | Error::Epoch { source, .. } => source.category(),
        }
    }

    /// Strips `Launch`/`Epoch`/`Integration` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Integration { source, .. }
            | Error::Launch { source, .. }
            | Error::Epoch { source, .. } => source.root(),
            other => other,
        }
    }
}
