//! Weighted-type spaces on the unit ball of `C^n`.
//!
//! The crate is organised around five numerical subsystems:
//!
//! * [`weights`]: normal weight functions and their normality checks.
//! * [`sphere`]: the pseudo-metric `d` on the unit sphere, greedy maximal
//!   separated sets and their decomposition into finer-separated classes.
//! * [`polyseries`]: zonal homogeneous polynomials, sup-norm brackets and
//!   lacunary (Hadamard gap) series with rigorous truncation tails.
//! * [`witness`]: the explicit growth-rate witness family and its certified
//!   lower-bound verification.
//! * [`compose`]: mixed-norm quadrature and the integral boundedness and
//!   compactness criteria for weighted composition operators.
//!
//! [`cli`] ties these together behind a configuration-driven front end.

pub mod cli;
pub mod compose;
pub mod error;
pub mod logmag;
pub mod poly;
pub mod polyseries;
pub mod rng;
pub mod sphere;
pub mod weights;
pub mod witness;

pub use error::{Error, Result};
pub use num_complex::Complex64;
