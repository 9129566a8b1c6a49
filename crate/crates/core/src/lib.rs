//! Random homogeneous self-similar measures on the real line.
//!
//! A [`model::Model`] is a finite family of homogeneous iterated function
//! systems together with a law for picking one system per level. Most
//! routines are generic over [`scalar::Scalar`] so they run either in `f64`
//! or in exact rational arithmetic.

pub mod approx;
pub mod dimension;
pub mod ek;
pub mod error;
pub mod fourier;
pub mod measure;
pub mod model;
pub mod recoder;
pub mod scalar;
pub mod spec_file;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
