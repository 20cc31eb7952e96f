//! Numerical Jordan canonical form and staircase decomposition.
//!
//! The entry point is [`pipeline::numerical_jcf`], which identifies the
//! Jordan structure of a matrix from its minimal polynomials and then refines
//! each multiple eigenvalue to a staircase eigentriplet by Gauss-Newton
//! iteration. The building blocks are public so that individual stages can
//! be driven separately.

pub mod error;
pub mod matrix;
pub mod minpoly;
pub mod numeric;
pub mod pipeline;
pub mod polynomial;
pub mod polyroots;

pub mod staircase;
pub mod structure;
pub mod testmat;

pub use error::{JcfError, Result};
pub use matrix::{Matrix, C64};
