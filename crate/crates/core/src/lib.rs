//! Exceptional Jacobi polynomials, their zeros, and the filled Julia sets of
//! the polynomial maps they define.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x <= tol)` also rejects NaN

pub mod dynamics;
pub mod error;
pub mod exceptional;
pub mod jacobi;
pub mod measure;
pub mod poly;
pub mod rootfind;
pub mod zeros;

pub use error::{Error, Result};
pub use num_complex::Complex64;
