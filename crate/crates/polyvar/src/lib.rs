//! Exact variational analysis for polyhedral sets and set-valued maps.

pub mod arrangement;
pub mod calculus;
pub mod cones;
pub mod criteria;
pub mod dd;
pub mod error;
pub mod generate;
pub mod limits;
pub mod linalg;
pub mod maps;
pub mod oracle;
pub mod lp;
pub mod polyhedron;
pub mod rational;
pub mod set;

pub use error::{PolyError, Result};
pub use linalg::{Matrix, RVector};
pub use polyhedron::ConvexPolyhedron;
pub use rational::Rational;
pub use set::PolyhedralSet;
