//! Sharp interpolation constants, spectral bounds and rigidity on symmetric
//! compact manifolds, computed on one-dimensional meridian reductions.

pub mod discretization;
pub mod error;
pub mod euclidean;
pub mod exponents;
pub mod flow;
pub mod interp;
pub mod linalg;
pub mod manifold;
pub mod quadrature;
pub mod random;
pub mod rigidity;
pub mod schrodinger;

pub use error::{Result, SmlError};
