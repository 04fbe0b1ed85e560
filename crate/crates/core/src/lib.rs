pub mod discretization;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod parabolic;
pub mod verifier;

pub use error::{Error, Result};
pub use nalgebra;
