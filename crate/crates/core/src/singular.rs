//! Singular series of a tuple with a rigorous error radius.
//!
//! The product over all primes is split three ways:
//!
//! * `p <= k`: the local factor `(1 - nu/p) / (1 - 1/p)^k` is formed as an
//!   exact rational and rounded once;
//! * `p > k` not dividing any pairwise difference: `nu = k`, so the factor
//!   depends only on `(p, k)`. The log of the product of these over *all*
//!   `p > k` is a per-`k` constant, cached by the evaluator. Primes up to
//!   the evaluator's prime limit are summed explicitly; the remainder is
//!   `sum_m (k - k^m)/m * (P(m) - sum_{p <= limit} p^-m)` with `P` the prime
//!   zeta function, truncated once the remaining powers are provably below
//!   the cancellation error of the subtraction;
//! * `p > k` dividing some difference: the cached constant assumed
//!   `nu = k`, so add `log((p - nu)/(p - k))`.
//!
//! The error radius combines the remainder bound, the rounding of every
//! summed logarithm and one unit of rounding per multiplied factor.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{distinct_prime_factors, is_prime, prime_zeta, ratio_to_f64, small_primes};
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::tuple::Tuple;

/// Default prime limit of an evaluator.
pub const DEFAULT_PRIME_LIMIT: u64 = 1 << 20;

/// Highest power kept in the prime-zeta remainder expansion.
const REMAINDER_TERMS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularSeriesValue<T> {
    pub value: T,
    /// Absolute error radius.
    pub error_radius: T,
    /// Largest prime whose factor was included exactly.
    pub prime_limit: u64,
}

impl<T: Real> SingularSeriesValue<T> {
    fn exact(value: T, prime_limit: u64) -> Self {
        Self {
            value,
            error_radius: T::zero(),
            prime_limit,
        }
    }

    pub fn lower(&self) -> T {
        self.value - self.error_radius
    }

    pub fn upper(&self) -> T {
        self.value + self.error_radius
    }
}

/// Upper bound for the diagnostic product split at `k^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenBound<T> {
    pub value: T,
    pub error_radius: T,
    /// The split point `k^3`.
    pub cutoff: u64,
}

/// `nu_H(p)`: number of residue classes mod `p` hit by the tuple.
pub fn residue_classes(tuple: &Tuple, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    Ok(nu(tuple.offsets(), p))
}

pub(crate) fn nu(offsets: &[u64], p: u64) -> u64 {
    if p <= 64 {
        let mut mask = 0u64;
        for &h in offsets {
            mask |= 1u64 << (h % p);
        }
        return u64::from(mask.count_ones());
    }
    let mut r: Vec<u64> = offsets.iter().map(|&h| h % p).collect();
    r.sort_unstable();
    r.dedup();
    r.len() as u64
}

fn check_factor_args(p: u64, nu: u64, k: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    if nu > p || nu > k {
        return Err(Error::domain(format!(
            "nu = {nu} exceeds min(k = {k}, p = {p})"
        )));
    }
    if nu == 0 && k > 0 {
        return Err(Error::domain("nu must be at least 1 for a non-empty tuple"));
    }
    Ok(())
}

/// `(1 - nu/p) / (1 - 1/p)^k` as an exact rational.
pub fn local_factor_exact(p: u64, nu: u64, k: u64) -> Result<BigRational> {
    check_factor_args(p, nu, k)?;
    if k == 0 {
        return Ok(BigRational::one());
    }
    let (num, den) = factor_parts(p, nu, k);
    Ok(BigRational::new(num.into(), den.into()))
}

// numerator (p - nu) p^(k-1), denominator (p - 1)^k; k >= 1
fn factor_parts(p: u64, nu: u64, k: u64) -> (BigUint, BigUint) {
    let e = u32::try_from(k).expect("k fits in u32");
    let num = BigUint::from(p - nu) * BigUint::from(p).pow(e - 1);
    let den = BigUint::from(p - 1).pow(e);
    (num, den)
}

fn exact_is_cheap(p: u64, k: u64) -> bool {
    (k as f64) * (p as f64).log2() <= 256.0
}

fn factor_value<T: Real>(p: u64, nu: u64, k: u64) -> T {
    if nu == p {
        return T::zero();
    }
    if k == 0 {
        return T::one();
    }
    if p <= k || exact_is_cheap(p, k) {
        let (num, den) = factor_parts(p, nu, k);
        return T::lit(ratio_to_f64(&num, &den));
    }
    let pf = T::of(p);
    let lf = (-T::of(nu) / pf).ln_1p() - T::of(k) * (-T::one() / pf).ln_1p();
    lf.exp()
}

/// The `p`-th factor of the singular series, `(1 - nu/p) / (1 - 1/p)^k`.
///
/// Exactly zero when `nu = p`. Rounded once from the exact rational when it
/// is small enough; evaluated in log space otherwise.
pub fn local_factor<T: Real>(p: u64, nu: u64, k: u64) -> Result<T> {
    check_factor_args(p, nu, k)?;
    Ok(factor_value(p, nu, k))
}

/// Upper bound on `|sum_{p > P} log(1 + a(p, k))|` for tuples whose
/// differences have no prime factor above `P`.
///
/// For `p - 1 >= 2k^2`, `|a(p, k)| <= k^2/(p-1)^2 <= 1/2`, so with the
/// slack constant 2, `|log(1 + a)| <= 2|a| <= 4k^2/(p-1)^2`, and the sum
/// over `p > P` is at most `4k^2/(P-1)`.
pub fn tail_log_bound<T: Real>(k: u64, big_p: u64) -> Result<T> {
    if k <= 1 {
        return Ok(T::zero());
    }
    if big_p < 2 || big_p < 2 * k * k {
        return Err(Error::precondition(format!(
            "truncation point {big_p} is below 2k^2 = {}",
            2 * k * k
        )));
    }
    let kk = T::of(k);
    Ok(T::lit(4.0) * kk * kk / T::of(big_p - 1))
}

/// True iff the tuple misses some residue class modulo every prime.
pub fn is_admissible(tuple: &Tuple) -> bool {
    let k = tuple.k() as u64;
    small_primes(k)
        .into_iter()
        .all(|p| nu(tuple.offsets(), p) < p)
}

#[derive(Debug, Clone, Copy)]
struct TailLog {
    /// `sum_{p > k} log((1 - k/p)/(1 - 1/p)^k)` over all primes.
    log_sum: f64,
    log_error: f64,
}

/// Singular series evaluator with a fixed prime limit and a per-`k` cache of
/// the tuple-independent tail.
pub struct SingularSeries<T> {
    primes: Vec<u64>,
    prime_limit: u64,
    inverse_power_sums: Vec<f64>,
    tails: RwLock<HashMap<u64, Arc<OnceLock<TailLog>>>>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> std::fmt::Debug for SingularSeries<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularSeries")
            .field("prime_limit", &self.prime_limit)
            .field("primes", &self.primes.len())
            .finish()
    }
}

impl<T: Real> Default for SingularSeries<T> {
    fn default() -> Self {
        Self::with_prime_limit(DEFAULT_PRIME_LIMIT).expect("default prime limit is valid")
    }
}

impl<T: Real> SingularSeries<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prime_limit(prime_limit: u64) -> Result<Self> {
        if prime_limit < 8 {
            return Err(Error::precondition("prime limit must be at least 8"));
        }
        if prime_limit > 1 << 32 {
            return Err(Error::Resource(format!(
                "prime limit {prime_limit} exceeds 2^32"
            )));
        }
        let primes = small_primes(prime_limit);
        // sum_{p <= limit} p^-m, m = 0..=REMAINDER_TERMS, compensated
        let inverse_power_sums = (0..=REMAINDER_TERMS)
            .map(|m| {
                let mut s = CompensatedSum::<f64>::new();
                if m >= 2 {
                    for &p in primes.iter().rev() {
                        s.add((p as f64).powi(-(m as i32)));
                    }
                }
                s.value()
            })
            .collect();
        Ok(Self {
            primes,
            prime_limit,
            inverse_power_sums,
            tails: RwLock::new(HashMap::new()),
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    fn tail(&self, k: u64) -> TailLog {
        let cell = {
            let read = self.tails.read().expect("tail cache poisoned");
            read.get(&k).cloned()
        };
        let cell = cell.unwrap_or_else(|| {
            let mut write = self.tails.write().expect("tail cache poisoned");
            write.entry(k).or_default().clone()
        });
        *cell.get_or_init(|| self.compute_tail(k))
    }

    fn compute_tail(&self, k: u64) -> TailLog {
        if k <= 1 {
            return TailLog {
                log_sum: 0.0,
                log_error: 0.0,
            };
        }
        let kf = k as f64;
        let eps = f64::EPSILON;
        let mut sum = CompensatedSum::<f64>::new();
        let mut magnitude = 0.0;
        // largest primes first: small terms accumulate before the big ones
        for &p in self.primes.iter().rev().take_while(|&&p| p > k) {
            let pf = p as f64;
            let a = (-kf / pf).ln_1p();
            let b = kf * (-1.0 / pf).ln_1p();
            magnitude += a.abs() + b.abs();
            sum.add(a - b);
        }
        let mut err = 3.0 * eps * magnitude + sum.error_bound(0.0);

        // beyond the prime limit: sum_m c_m S_m with S_m = P(m) - partial sum.
        // A power is summed explicitly while its size bound exceeds the
        // cancellation error of the subtraction; the rest is bounded.
        let limit = self.prime_limit as f64;
        let ratio = kf / limit;
        let mut rem = 0.0;
        let mut m = 2u32;
        while m <= REMAINDER_TERMS {
            let mf = f64::from(m);
            let c = (kf - kf.powi(m as i32)) / mf;
            let pz = prime_zeta(m);
            let size = c.abs() * limit.powf(1.0 - mf) / (mf - 1.0);
            let cancel = c.abs() * 16.0 * eps * pz;
            if size <= cancel {
                break;
            }
            let s_m = (pz - self.inverse_power_sums[m as usize]).max(0.0);
            rem += c * s_m;
            err += cancel + eps * (c * s_m).abs();
            m += 1;
        }
        let mf = f64::from(m);
        err += limit * ratio.powf(mf) / (mf * (mf - 1.0) * (1.0 - ratio));
        let log_sum = sum.value() + rem;
        err += 2.0 * eps * log_sum.abs();
        TailLog {
            log_sum,
            log_error: err,
        }
    }

    /// Distinct primes dividing some pairwise difference, ascending.
    pub fn difference_primes(&self, tuple: &Tuple) -> Vec<u64> {
        let mut diffs: Vec<u64> = tuple.differences().collect();
        diffs.sort_unstable();
        diffs.dedup();
        let mut out = Vec::new();
        for d in diffs {
            distinct_prime_factors(d, &self.primes, &mut out);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn ensure_tail_range(&self, k: u64) -> Result<()> {
        let need = 2 * k * k;
        if need > self.prime_limit {
            return Err(Error::Resource(format!(
                "k = {k} needs a prime limit of at least 2k^2 = {need}, evaluator has {}",
                self.prime_limit
            )));
        }
        Ok(())
    }

    /// `S(H)` with `error_radius <= target_error`.
    pub fn evaluate(&self, tuple: &Tuple, target_error: T) -> Result<SingularSeriesValue<T>> {
        if !(target_error > T::zero()) {
            return Err(Error::domain("target error must be positive"));
        }
        let k = tuple.k() as u64;
        if k <= 1 {
            return Ok(SingularSeriesValue::exact(T::one(), self.prime_limit));
        }
        self.ensure_tail_range(k)?;
        let offs = tuple.offsets();

        let mut direct = T::one();
        let mut mults = 0u32;
        for &p in self.primes.iter().take_while(|&&p| p <= k) {
            let v = nu(offs, p);
            if v == p {
                return Ok(SingularSeriesValue::exact(T::zero(), self.prime_limit));
            }
            direct = direct * factor_value::<T>(p, v, k);
            mults += 1;
        }

        let dps = self.difference_primes(tuple);
        let mut corr = CompensatedSum::<T>::new();
        for &p in dps.iter().filter(|&&p| p > k) {
            let v = nu(offs, p);
            if v < k {
                corr.add((T::of(k - v) / T::of(p - k)).ln_1p());
            }
        }

        let tail = self.tail(k);
        let eps = T::epsilon();
        let log_total = T::lit(tail.log_sum) + corr.value();
        let log_err = T::lit(tail.log_error)
            + eps * T::lit(tail.log_sum.abs())
            + corr.error_bound(T::lit(3.0))
            + eps * log_total.abs();
        let value = direct * log_total.exp();
        let rounding = T::of(u64::from(mults) + 2) * eps * value;
        let error_radius = value * log_err.exp_m1() + rounding;
        if error_radius > target_error {
            return Err(Error::Resource(format!(
                "target error {:e} is below the achievable radius {:e} at prime limit {}",
                target_error.as_f64(),
                error_radius.as_f64(),
                self.prime_limit
            )));
        }
        let prime_limit = dps.last().copied().unwrap_or(0).max(self.prime_limit);
        Ok(SingularSeriesValue {
            value,
            error_radius,
            prime_limit,
        })
    }

    /// Upper bound on `S(H)` from splitting the product at `k^3`:
    ///
    /// `prod_{p <= k^3} (1-1/p)^-k * prod_{p > k^3} (1-k/p)/(1-1/p)^k
    ///   * C(k,2)^-1 sum_{i<j} exp(2 C(k,2) sum_{p | h_j - h_i, p > k^3} 1/p)`.
    ///
    /// Uses `k - nu(p) <= #{pairs colliding mod p}` and `1/(p - k) <= 2/p`
    /// for `p > k^3`.
    pub fn jensen_split_bound(&self, tuple: &Tuple) -> Result<JensenBound<T>> {
        let k = tuple.k() as u64;
        if k < 2 {
            return Err(Error::domain("the split bound needs k >= 2"));
        }
        let cutoff = k
            .checked_pow(3)
            .filter(|&c| c <= self.prime_limit)
            .ok_or_else(|| {
                Error::Resource(format!("k^3 for k = {k} exceeds the prime limit"))
            })?;
        self.ensure_tail_range(k)?;
        let kf = T::of(k);
        let mut small = CompensatedSum::<T>::new();
        let mut mid = CompensatedSum::<T>::new();
        for &p in self.primes.iter().take_while(|&&p| p <= cutoff) {
            let pf = T::of(p);
            let inv = (-T::one() / pf).ln_1p();
            small.add(-kf * inv);
            if p > k {
                mid.add((-kf / pf).ln_1p() - kf * inv);
            }
        }
        let tail = self.tail(k);
        let log_head = small.value() + T::lit(tail.log_sum) - mid.value();

        let pairs = T::of(k * (k - 1) / 2);
        let mut factors = Vec::new();
        let mut avg = CompensatedSum::<T>::new();
        for d in tuple.differences() {
            factors.clear();
            distinct_prime_factors(d, &self.primes, &mut factors);
            let s: T = factors
                .iter()
                .filter(|&&p| p > cutoff)
                .map(|&p| T::one() / T::of(p))
                .sum();
            avg.add((T::lit(2.0) * pairs * s).exp());
        }
        let inner = avg.value() / pairs;
        let value = log_head.exp() * inner;
        let eps = T::epsilon();
        let log_err = T::lit(tail.log_error)
            + small.error_bound(T::lit(3.0))
            + mid.error_bound(T::lit(3.0))
            + T::lit(8.0) * eps * (log_head.abs() + T::one());
        Ok(JensenBound {
            value,
            error_radius: value * log_err.exp_m1() + T::lit(8.0) * eps * value,
            cutoff,
        })
    }
}

fn shared() -> &'static SingularSeries<f64> {
    static SHARED: OnceLock<SingularSeries<f64>> = OnceLock::new();
    SHARED.get_or_init(SingularSeries::default)
}

/// `S(H)` from the process-wide `f64` evaluator.
pub fn singular_series(tuple: &Tuple, target_error: f64) -> Result<SingularSeriesValue<f64>> {
    shared().evaluate(tuple, target_error)
}

/// The process-wide `f64` evaluator.
pub fn shared_evaluator() -> &'static SingularSeries<f64> {
    shared()
}

/// Exact rational `prod_p (1 - nu/p)/(1 - 1/p)^k` restricted to `p <= limit`.
pub fn partial_product_exact(tuple: &Tuple, limit: u64) -> BigRational {
    let k = tuple.k() as u64;
    let mut acc = BigRational::one();
    for p in small_primes(limit) {
        let v = nu(tuple.offsets(), p);
        if v == p {
            return BigRational::zero();
        }
        if k > 0 {
            let (n, d) = factor_parts(p, v, k);
            acc *= BigRational::new(n.into(), d.into());
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tuple {
        s.parse().unwrap()
    }

    #[test]
    fn residue_class_counts() {
        assert_eq!(residue_classes(&t("0,2"), 2).unwrap(), 1);
        assert_eq!(residue_classes(&t("0,2"), 3).unwrap(), 2);
        assert_eq!(residue_classes(&t("0,2,4"), 3).unwrap(), 3);
        assert_eq!(residue_classes(&t("0,67,134"), 67).unwrap(), 1);
        assert!(residue_classes(&t("0,2"), 9).is_err());
    }

    #[test]
    fn local_factor_examples() {
        assert_eq!(local_factor::<f64>(2, 1, 2).unwrap(), 2.0);
        assert_eq!(local_factor::<f64>(3, 2, 2).unwrap(), 0.75);
        assert_eq!(local_factor::<f64>(3, 3, 3).unwrap(), 0.0);
        assert!(local_factor::<f64>(3, 4, 5).is_err());
        assert!(local_factor::<f64>(5, 3, 2).is_err());
        assert!(local_factor::<f64>(4, 1, 2).is_err());
        assert_eq!(local_factor::<f32>(2, 1, 2).unwrap(), 2.0);
    }

    #[test]
    fn log_space_branch_is_close_to_exact() {
        // k log2 p > 256 takes the log-space route
        let p = 1_000_003u64;
        let (k, v) = (40u64, 37u64);
        assert!(!exact_is_cheap(p, k));
        let approx: f64 = local_factor(p, v, k).unwrap();
        let exact = ratio_to_f64(&factor_parts(p, v, k).0, &factor_parts(p, v, k).1);
        assert!((approx - exact).abs() <= 8.0 * f64::EPSILON * exact);
    }

    #[test]
    fn tail_bound_examples() {
        assert_eq!(tail_log_bound::<f64>(1, 3).unwrap(), 0.0);
        assert!(tail_log_bound::<f64>(3, 17).is_err());
        let a: f64 = tail_log_bound(5, 10_000).unwrap();
        let b: f64 = tail_log_bound(5, 100_000).unwrap();
        assert!(b < a);
    }

    #[test]
    fn trivial_values() {
        let s = singular_series(&t("5"), 1e-12).unwrap();
        assert_eq!((s.value, s.error_radius), (1.0, 0.0));
        let s = singular_series(&Tuple::empty(), 1e-12).unwrap();
        assert_eq!(s.value, 1.0);
        let s = singular_series(&t("0,1"), 1e-12).unwrap();
        assert_eq!((s.value, s.error_radius), (0.0, 0.0));
        assert!(singular_series(&t("0,2"), 0.0).is_err());
        assert!(singular_series(&t("0,2"), -1.0).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(is_admissible(&t("0,2")));
        assert!(!is_admissible(&t("0,2,4")));
        assert!(is_admissible(&Tuple::empty()));
        assert!(is_admissible(&t("0,2,6,8,12,18,20,26,30,32")));
    }

    #[test]
    fn unreachable_target_is_a_resource_error() {
        let e = singular_series(&t("0,2"), 1e-30).unwrap_err();
        assert!(e.is_resource());
        let small = SingularSeries::<f64>::with_prime_limit(100).unwrap();
        assert!(small.evaluate(&t("0,2,6,8,12,18,20,26"), 1e-6).unwrap_err().is_resource());
    }

    #[test]
    fn f32_evaluator_tracks_f64() {
        let e32 = SingularSeries::<f32>::with_prime_limit(1 << 16).unwrap();
        let v32 = e32.evaluate(&t("0,2,6"), 1e-4).unwrap();
        assert!((f64::from(v32.value) - 2.858_248_595_719_22).abs() <= f64::from(v32.error_radius));
    }

    #[test]
    fn difference_primes_of_triplet() {
        let e = shared_evaluator();
        assert_eq!(e.difference_primes(&t("0,2,6")), vec![2, 3]);
        assert_eq!(e.difference_primes(&t("0,1000003")), vec![1_000_003]);
    }
}
