use thiserror::Error;

use crate::partition::FoldReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate triangle: control angles {0} and {1} coincide (gap {2:e} rad)")]
    DegenerateTriangle(usize, usize, f64),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("viewpoint coincides with control point {0}")]
    ViewpointOnControlPoint(usize),

    #[error("cosine triple outside the open interval (-1, 1)")]
    CosineOutOfRange,

    #[error("leading coefficient of the Grunert quartic vanishes (|c4| = {0:e})")]
    LeadingCoefficientVanishes(f64),

    #[error("viewpoint height {0:e} is too close to the control plane")]
    ZeroHeight(f64),

    #[error("elimination system is singular (condition number {0:e})")]
    SingularEliminationSystem(f64),

    #[error("path does not cross the danger cylinder transversally")]
    PathNotTransversal,

    #[error("insufficient samples: {have} available, {need} required")]
    InsufficientSamples { have: usize, need: usize },

    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("path endpoint {0} lies on a partition surface")]
    EndpointOnSurface(usize),

    #[error("viewpoint is not on the danger cylinder (dc = {0:e})")]
    NotOnDangerCylinder(f64),

    #[error("no double solution found for the danger-cylinder viewpoint")]
    NoDoubleSolution,

    #[error("merging pair is complex along this direction; flip the direction for the real branch")]
    PairNotReal(Box<FoldReport>),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
