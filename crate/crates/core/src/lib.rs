//! Straightening connections of gradient flows and relaxation asymmetry.
//!
//! Numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`.

pub mod dually_flat;
pub mod error;
pub mod fixtures;
pub mod gaussian_chain;
pub mod gradient_flow;
pub mod linalg;
pub mod manifold;
pub mod scalar;
pub mod straightening;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Trajectory64 = manifold::Trajectory<f64>;
pub type Christoffel64 = manifold::Christoffel<f64>;
