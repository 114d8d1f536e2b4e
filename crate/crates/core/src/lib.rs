//! Quantization of self-affine measures on Lalley-Gatzouras carpets.
//!
//! The core is generic over the [`Scalar`] field: `f64` and `f32` carry
//! products in log space, [`Rational`] keeps every comparison exact.

pub mod antichain;
pub mod carpet;
pub mod error;
pub mod fixtures;
pub mod lse;
pub mod pressure;
pub mod quantizer;
pub mod scalar;
pub mod words;

pub use carpet::{bedford_mcmullen, derived_constants, moments, parse_carpet, Carpet, CarpetParams, Cell, Column, DerivedConstants};
pub use error::{Error, Result, SpecError};
pub use scalar::{Magnitude, Scalar};
pub use words::{Letter, Rect, SplitWord};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Carpet64 = Carpet<f64>;
pub type Carpet32 = Carpet<f32>;
pub type CarpetExact = Carpet<Rational>;
