//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Degenerate geometry: zero radius, inverted rectangle, etc.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Lookup of an unknown field / map / domain / test-function name.
    #[error("unknown name: {0}")]
    UnknownName(String),

    /// Finite-difference stencil would reach outside the domain.
    #[error("point ({x}, {y}) is within {h} of the domain boundary")]
    BoundaryProximity { x: f64, y: f64, h: f64 },

    /// Sphere projection evaluated exactly on the fiber u(x) = a.
    #[error("singular point: u(x) = a at ({0}, {1})")]
    SingularPoint(f64, f64),

    /// A preimage of the degree target has a (near-)singular derivative.
    #[error("singular value: preimage with |det grad u| = {det:e} below {min:e}")]
    SingularValue { det: f64, min: f64 },

    /// Degree target too close to the image of the boundary.
    #[error("boundary value: dist(a, u(boundary)) = {dist:e} below tolerance {tol:e}")]
    BoundaryValue { dist: f64, tol: f64 },

    /// Sublevel threshold too close to a critical value of the test function.
    #[error("critical level: |grad psi| = {grad:e} on the level line of t = {t}")]
    CriticalLevel { t: f64, grad: f64 },

    /// Level-set continuation hit a point where the joint gradient is rank-deficient.
    #[error("singular curve point at ({x}, {y}, t = {t})")]
    SingularCurve { x: f64, y: f64, t: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}
