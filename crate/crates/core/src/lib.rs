//! Prime k-tuple computations: singular series with error radii, averages
//! of the singular series over tuples in an interval, prime counts in short
//! windows against Poisson predictions, empirical checks of the uniform
//! Hardy–Littlewood conjecture, and Selberg sieve upper bounds.
//!
//! Analytic kernels are generic over [`Real`] (`f32` or `f64`); the report
//! layer and the type aliases below fix the scalar to `f64`.

// `!(a > b)` is used on purpose so NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod averages;
pub mod error;
pub mod hardy_littlewood;
pub mod moments;
pub mod primes;
pub mod quad;
pub mod scalar;
pub mod selberg;
pub mod singular;
pub mod tuple;

pub use error::{Error, Result};
pub use primes::{PrimalityTable, SieveConfig, WindowHistogram};
pub use scalar::Real;
pub use tuple::Tuple;

/// `f64` singular series value.
pub type SingularValue = singular::SingularSeriesValue<f64>;
/// `f64` singular series evaluator.
pub type Evaluator = singular::SingularSeries<f64>;
/// `f32` singular series evaluator, for quick scans.
pub type Evaluator32 = singular::SingularSeries<f32>;
