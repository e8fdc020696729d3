use thiserror::Error;

/// Errors raised by the geometry, field, profile and growth machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate chart at u = {location:?}: {reason}")]
    DegenerateChart { location: Vec<f64>, reason: String },

    #[error("radial field is singular at u = {location:?} (point coincides with the base point)")]
    SingularRadialField { location: Vec<f64> },

    #[error("radius {r} lies outside the profile domain (limit {limit})")]
    ProfileDomain { r: f64, limit: f64 },

    #[error("operator field is not positive semidefinite at u = {location:?} (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite {
        location: Vec<f64>,
        min_eigenvalue: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("spanning fields are linearly dependent at u = {location:?}")]
    DegenerateDistribution { location: Vec<f64> },

    #[error("mesh too coarse: only {boundary_cells} cells straddle the ball boundary (need at least 8)")]
    InsufficientResolution { boundary_cells: usize },

    #[error("mesh graph is disconnected: {unreached} nodes unreachable from the center")]
    MeshDisconnected { unreached: usize },

    #[error("hypothesis violated for {check}: {certificate}")]
    HypothesisViolated { check: String, certificate: String },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("scenario `{name}`: {source}")]
    Scenario { name: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl Error {
    pub(crate) fn in_scenario(self, name: &str) -> Self {
        match self {
            e @ Error::Scenario { .. } => e,
            other => Error::Scenario {
                name: name.into(),
                source: Box::new(other),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
