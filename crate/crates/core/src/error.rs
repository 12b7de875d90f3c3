use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain filter left no points")]
    EmptyIntersection,

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("stereographic projection undefined at the projection pole")]
    ProjectionAtPole,

    #[error("grid too small for degree {degree}: need {need_lat} latitudes and {need_lon} longitudes")]
    GridTooSmall {
        degree: usize,
        need_lat: usize,
        need_lon: usize,
    },

    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("hierarchy constraint violated: {0}")]
    Hierarchy(String),

    #[error("dictionary construction failed: {0}")]
    Dictionary(String),

    #[error("Neumann solve failed: {0}")]
    Neumann(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
