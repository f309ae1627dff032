//! Scalar abstraction for the analytic kernels.
//!
//! Counting code works on integers throughout; everything that produces a
//! real number (local factors, tail products, quadrature, Poisson terms,
//! sieve weights) is generic over [`Real`] so that it can be run at `f32`
//! for quick scans or `f64` for reporting. Exact rational routes live next
//! to the float ones as `*_exact` functions returning `BigRational`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Lossy conversion from an unsigned integer.
    fn of(v: u64) -> Self {
        Self::from_u64(v).expect("u64 representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
    abs: T,
    terms: u64,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
            abs: T::zero(),
            terms: 0,
        }
    }

    pub fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp = self.comp + ((self.sum - t) + v);
        } else {
            self.comp = self.comp + ((v - t) + self.sum);
        }
        self.sum = t;
        self.abs = self.abs + v.abs();
        self.terms += 1;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }

    /// Sum of absolute values of the added terms.
    pub fn abs_total(&self) -> T {
        self.abs
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    /// Upper bound on the rounding error of [`value`](Self::value), given
    /// that every added term itself carried a relative error of at most
    /// `term_ulps` units of `epsilon`.
    pub fn error_bound(&self, term_ulps: T) -> T {
        let eps = T::epsilon();
        let n = T::of(self.terms.max(1));
        // compensated summation: 2u|S| + O(n u^2) sum|x_i|; input error term_ulps*u*sum|x_i|
        (T::lit(2.0) * self.value().abs() + (term_ulps + n * n * eps) * self.abs) * eps
    }
}
