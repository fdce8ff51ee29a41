//! Optimization and certification of low-degree polynomials over Majorana
//! (quasi-Clifford) indeterminates.

pub mod algebra;
pub mod combin;
pub mod linalg;
pub mod repr;
pub mod syk;
pub mod kneser;
pub mod certify;
pub mod gaussian;
pub mod variational;
pub mod error;

pub use error::{Error, Result};
