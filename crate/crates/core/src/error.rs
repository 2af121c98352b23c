use thiserror::Error;

use crate::geom2d::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The vectors all lie in the closed half-plane `{x : normal·x >= 0}`.
    #[error("vectors lie in a closed half-plane with inner normal ({}, {})", normal.x, normal.y)]
    HalfPlaneObstruction { normal: Vec2 },

    /// A largest angular gap sits within rounding distance of pi.
    #[error("half-plane test is ambiguous: largest angular gap differs from pi by {gap_minus_pi:e}")]
    Ambiguous { gap_minus_pi: f64 },

    #[error("degenerate parallelogram (parallel edge vectors)")]
    DegenerateRegion,

    #[error("coverage certification failed after {halvings} halvings; uncovered point ({}, {})", witness.x, witness.y)]
    CoverageFailure { halvings: u32, witness: Vec2 },

    #[error("scene is not normalized: total mass {total}")]
    NotNormalized { total: f64 },

    #[error("operation is only defined for segment scenes")]
    UnsupportedForCurves,

    #[error("quadrature did not converge: successive estimates differ by {difference:e}")]
    QuadratureFailure { difference: f64 },

    #[error("density query at ({}, {}) lies on a singular carrier", point.x, point.y)]
    SingularPointQuery { point: Vec2 },

    #[error("degenerate preimage at (s, t) = ({s}, {t}): |J| = {jacobian:e}")]
    Degenerate { s: f64, t: f64, jacobian: f64 },

    #[error("no preimage: point lies outside the difference set")]
    NoSolution,

    #[error("irregular curve: speed {speed:e} at parameter {t}")]
    IrregularCurve { t: f64, speed: f64 },

    #[error("found {count} self-intersection roots (limit {limit})")]
    TooManyIntersections { count: usize, limit: usize },

    #[error("scene error: {0}")]
    Scene(String),
}
