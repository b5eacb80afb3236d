//! Spectral truncations of the circle and flat tori.
//!
//! The crate provides Fejér-type kernels, Toeplitz operator systems, the compression and
//! symbol maps between the truncated and the full function algebras, a computable distance
//! between unital completely positive maps, and Gromov-Hausdorff bounds for the resulting
//! correspondences.

pub mod error;
pub mod exec;
pub mod gh;
pub mod harmonic;
pub mod lattice;
pub mod linalg;
pub mod opsys;
pub mod truncation;
pub mod ucpmetric;

pub use error::{Error, Result};
