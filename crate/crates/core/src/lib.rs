//! Numerics for distributional Jacobian determinants in the plane:
//! fractional Sobolev seminorms, Brouwer degree by three routes, sphere
//! projections, mollified extensions to the half-cylinder, flat norms of
//! atomic measures, level-set tracing, and experiment drivers that test
//! the coarea formulas and chain rules they satisfy.

pub mod assignment;
pub mod contour;
pub mod degree;
pub mod domain;
pub mod error;
pub mod field;
pub mod jacobian;
pub mod linalg;
pub mod lipset;
pub mod maps;
pub mod mollifier;
pub mod measures;
pub mod norms;
pub mod oracle;
pub mod testfn;
pub mod trace;
pub mod verify;
pub mod simplex;
pub mod specstr;

pub use domain::{Domain, DomainKind};
pub use error::{Error, Result};
pub use field::{field_library, Smoothness, VectorField};
pub use linalg::{unit_ball_volume, SquareMatrix};
pub use maps::MapR2;
