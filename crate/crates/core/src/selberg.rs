//! Selberg upper-bound sieve for prime tuples.
//!
//! The sifted set is `A = {prod_i (n + h_i) : n <= x}` and `P(z)` is the
//! product of the primes `p < z`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::arith::{small_primes, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::primes::{tuple_hit_positions, PrimalityTable};
use crate::scalar::{CompensatedSum, Real};
use crate::singular::{is_admissible, nu, SingularSeries};
use crate::tuple::Tuple;

/// Largest `z` accepted by the enumeration routines.
pub const MAX_Z: u64 = 1 << 32;

fn check_z(z: u64) -> Result<()> {
    if z < 2 {
        return Err(Error::domain(format!("z must be at least 2, got {z}")));
    }
    if z > MAX_Z {
        return Err(Error::Resource(format!("z = {z} exceeds {MAX_Z}")));
    }
    Ok(())
}

/// Prime factors of a squarefree `d`; errors if `d` is not squarefree.
fn squarefree_factors(d: u64) -> Result<Vec<u64>> {
    if d == 0 {
        return Err(Error::domain("d must be positive"));
    }
    let mut out = Vec::new();
    let mut n = d;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return Err(Error::domain(format!("{d} is not squarefree")));
            }
            out.push(p);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    Ok(out)
}

/// `g(d) = prod_{p | d} nu(p) / (p - nu(p))` for squarefree `d`.
pub fn g_value<T: Real>(d: u64, tuple: &Tuple) -> Result<T> {
    let mut g = T::one();
    for p in squarefree_factors(d)? {
        let v = nu(tuple.offsets(), p);
        if v == p {
            return Err(Error::InadmissibleModulus { p });
        }
        g = g * T::of(v) / T::of(p - v);
    }
    Ok(g)
}

/// [`g_value`] as an exact rational.
pub fn g_value_exact(d: u64, tuple: &Tuple) -> Result<BigRational> {
    let mut g = BigRational::one();
    for p in squarefree_factors(d)? {
        let v = nu(tuple.offsets(), p);
        if v == p {
            return Err(Error::InadmissibleModulus { p });
        }
        g *= BigRational::new(BigInt::from(v), BigInt::from(p - v));
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue<T> {
    pub value: T,
    /// Squarefree `d < z` left out because some `p | d` has `nu(p) = p`.
    pub excluded: u64,
}

struct GSearch<'a, T> {
    primes: &'a [u64],
    // g(p), or None when nu(p) = p
    gp: &'a [Option<T>],
    z: u64,
}

impl<T: Real> GSearch<'_, T> {
    // adds g(d q) for every squarefree q > 1 built from primes[from..]
    fn walk(&self, from: usize, d: u64, g: T, blocked: bool, sum: &mut CompensatedSum<T>, excl: &mut u64) {
        for i in from..self.primes.len() {
            let p = self.primes[i];
            let Some(nd) = d.checked_mul(p).filter(|&nd| nd < self.z) else {
                break;
            };
            let (ng, nb) = match self.gp[i] {
                Some(gp) => (g * gp, blocked),
                None => (g, true),
            };
            if nb {
                *excl += 1;
            } else if ng == T::zero() {
                continue;
            } else {
                sum.add(ng);
            }
            self.walk(i + 1, nd, ng, nb, sum, excl);
        }
    }
}

/// `G(z) = sum_{d < z} mu(d)^2 g(d)`, skipping `d` divisible by a prime
/// with `nu(p) = p`.
///
/// Branches by least prime factor are summed independently and reduced in
/// order, so the value does not depend on `threads`.
pub fn big_g<T: Real>(z: u64, tuple: &Tuple, threads: usize) -> Result<GValue<T>> {
    check_z(z)?;
    let primes = small_primes(z - 1);
    let gp: Vec<Option<T>> = primes
        .iter()
        .map(|&p| {
            let v = nu(tuple.offsets(), p);
            (v < p).then(|| T::of(v) / T::of(p - v))
        })
        .collect();
    let search = GSearch {
        primes: &primes,
        gp: &gp,
        z,
    };
    let branch = |i: usize| {
        let mut sum = CompensatedSum::new();
        let mut excl = 0u64;
        let p = primes[i];
        match gp[i] {
            Some(g) if g == T::zero() => {}
            Some(g) => {
                sum.add(g);
                search.walk(i + 1, p, g, false, &mut sum, &mut excl);
            }
            None => {
                excl += 1;
                search.walk(i + 1, p, T::one(), true, &mut sum, &mut excl);
            }
        }
        (sum.value(), excl)
    };
    let parts: Vec<(T, u64)> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?;
        pool.install(|| (0..primes.len()).into_par_iter().map(branch).collect())
    } else {
        (0..primes.len()).map(branch).collect()
    };
    let mut total = CompensatedSum::new();
    total.add(T::one());
    let mut excluded = 0;
    for (v, e) in parts {
        total.add(v);
        excluded += e;
    }
    Ok(GValue {
        value: total.value(),
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WValue<T> {
    pub value: T,
    /// Least prime `p < z` with `nu(p) = p`, where the product vanishes.
    pub zero_at: Option<u64>,
}

/// `W(z) = prod_{p < z} (1 - nu(p)/p)`.
pub fn big_w<T: Real>(z: u64, tuple: &Tuple) -> Result<WValue<T>> {
    check_z(z)?;
    let mut w = T::one();
    for p in small_primes(z - 1) {
        let v = nu(tuple.offsets(), p);
        if v == p {
            return Ok(WValue {
                value: T::zero(),
                zero_at: Some(p),
            });
        }
        w = w * (T::one() - T::of(v) / T::of(p));
    }
    Ok(WValue {
        value: w,
        zero_at: None,
    })
}

/// [`big_w`] as an exact rational.
pub fn big_w_exact(z: u64, tuple: &Tuple) -> Result<BigRational> {
    check_z(z)?;
    let mut w = BigRational::one();
    for p in small_primes(z - 1) {
        let v = nu(tuple.offsets(), p);
        w *= BigRational::new(BigInt::from(p - v), BigInt::from(p));
        if w.is_zero() {
            break;
        }
    }
    Ok(w)
}

/// `x / G(z) + z^2 / W(z)^3`.
pub fn sieve_upper_bound<T: Real>(tuple: &Tuple, x: u64, z: u64, threads: usize) -> Result<T> {
    let w = big_w::<T>(z, tuple)?;
    if let Some(p) = w.zero_at {
        return Err(Error::InadmissibleModulus { p });
    }
    let g = big_g::<T>(z, tuple, threads)?;
    let zf = T::of(z);
    Ok(T::of(x) / g.value + zf * zf / w.value.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremBound<T> {
    /// `(2 + eps)^k k! S(H) x / (log x)^k`.
    pub bound: T,
    /// `x^(1/(2+eps))`, the sieve level the bound belongs to.
    pub z: T,
    /// `(log log 3x + k^3 + k log log 3|D_H|) / log x`, the relative size of
    /// the lower-order correction, which is not folded into `bound`.
    pub diagnostic: T,
    pub singular: T,
    /// The tuple is inadmissible and the bound is vacuous.
    pub inadmissible: bool,
}

/// `log log (3 |D_H|)` from the logarithms of the differences.
fn log_log_3d(tuple: &Tuple) -> f64 {
    (3.0f64.ln() + tuple.log_abs_discriminant()).ln()
}

pub fn theorem_bound<T: Real>(
    ev: &SingularSeries<T>,
    tuple: &Tuple,
    x: u64,
    epsilon: T,
) -> Result<TheoremBound<T>> {
    if x < 16 {
        return Err(Error::domain(format!("x must be at least 16, got {x}")));
    }
    if !(epsilon > T::zero()) {
        return Err(Error::domain("epsilon must be positive"));
    }
    let k = tuple.k() as u64;
    let xf = T::of(x);
    let lx = xf.ln();
    let two_eps = T::lit(2.0) + epsilon;
    let z = xf.powf(two_eps.recip());
    let kf = T::of(k);
    let diagnostic = ((T::lit(3.0) * xf).ln().ln()
        + kf * kf * kf
        + kf * T::lit(log_log_3d(tuple)))
        / lx;
    if !is_admissible(tuple) {
        return Ok(TheoremBound {
            bound: T::zero(),
            z,
            diagnostic,
            singular: T::zero(),
            inadmissible: true,
        });
    }
    let s = ev.evaluate(tuple, T::lit(1e-9).max(T::epsilon() * T::lit(64.0)))?.value;
    let kfact = (1..=k).fold(T::one(), |a, i| a * T::of(i));
    let bound = two_eps.powi(k as i32) * kfact * s * xf / lx.powi(k as i32);
    Ok(TheoremBound {
        bound,
        z,
        diagnostic,
        singular: s,
        inadmissible: false,
    })
}

/// `(alpha_1, L) = (k + 1, k log log 3|D_H|)`.
pub fn omega_constants(tuple: &Tuple) -> (u64, f64) {
    let k = tuple.k() as u64;
    (k + 1, k as f64 * log_log_3d(tuple))
}

/// `sum_{w <= p < z} nu(p) log p / p - k log(z / w)`.
pub fn omega2_deviation(tuple: &Tuple, w: u64, z: u64) -> Result<f64> {
    check_z(z)?;
    if w < 2 || w > z {
        return Err(Error::domain("need 2 <= w <= z"));
    }
    let mut s = CompensatedSum::<f64>::new();
    for p in small_primes(z - 1).into_iter().filter(|&p| p >= w) {
        let pf = p as f64;
        s.add(nu(tuple.offsets(), p) as f64 * pf.ln() / pf);
    }
    Ok(s.value() - tuple.k() as f64 * (z as f64 / w as f64).ln())
}

/// `1 / (G(z) W(z) e^(gamma k) k!)`, which tends to 1 as `z` grows.
pub fn gamma_cross_check<T: Real>(tuple: &Tuple, z: u64, threads: usize) -> Result<T> {
    if z < 16 {
        return Err(Error::domain(format!("z must be at least 16, got {z}")));
    }
    let w = big_w::<T>(z, tuple)?;
    if let Some(p) = w.zero_at {
        return Err(Error::InadmissibleModulus { p });
    }
    let g = big_g::<T>(z, tuple, threads)?;
    let k = tuple.k() as u64;
    let kfact = (1..=k).fold(T::one(), |a, i| a * T::of(i));
    let e = (T::lit(EULER_GAMMA) * T::of(k)).exp();
    Ok((g.value * w.value * e * kfact).recip())
}

/// `S(A; P, z)`: the `n <= x` with no `n + h_i` divisible by a prime `p < z`.
pub fn sifted_count(tuple: &Tuple, x: u64, z: u64) -> Result<u64> {
    check_z(z)?;
    let top = x
        .checked_add(tuple.max_offset().unwrap_or(0))
        .ok_or_else(|| Error::domain("x + max offset overflows"))?;
    let len = usize::try_from(top + 1).map_err(|_| Error::Resource("x too large".into()))?;
    let mut rough = vec![true; len];
    for p in small_primes(z - 1) {
        for m in (p..=top).step_by(p as usize) {
            rough[m as usize] = false;
        }
    }
    let offs = tuple.offsets();
    Ok((1..=x)
        .filter(|&n| offs.iter().all(|&h| rough[(n + h) as usize]))
        .count() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SieveReport {
    pub tuple: Tuple,
    pub x: u64,
    pub z: u64,
    pub epsilon: Option<f64>,
    pub g_z: f64,
    pub w_z: f64,
    pub excluded_moduli: u64,
    /// `x / G(z) + z^2 / W(z)^3`.
    pub raw_bound: f64,
    pub theorem_bound: Option<f64>,
    pub diagnostic: Option<f64>,
    /// Tuple hits with `n <= x`.
    pub actual: u64,
    /// Hits with every `n + h_i > z`; these survive the sieve.
    pub actual_above_z: u64,
    pub sifted: u64,
    /// `actual / theorem_bound`.
    pub ratio_actual_over_bound: Option<f64>,
    pub alpha1: u64,
    pub l_estimate: f64,
}

/// Sieve level choice for [`sieve_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Z(u64),
    /// `z = floor(x^(1/(2+eps)))`.
    Epsilon(f64),
}

pub fn sieve_report(
    table: &PrimalityTable,
    ev: &SingularSeries<f64>,
    tuple: &Tuple,
    x: u64,
    level: Level,
    threads: usize,
) -> Result<SieveReport> {
    if tuple.is_empty() {
        return Err(Error::domain("the sieve needs a non-empty tuple"));
    }
    let (z, epsilon) = match level {
        Level::Z(z) => (z, None),
        Level::Epsilon(e) => {
            let tb = theorem_bound(ev, tuple, x, e)?;
            (tb.z.floor() as u64, Some(e))
        }
    };
    let g = big_g::<f64>(z, tuple, threads)?;
    let w = big_w::<f64>(z, tuple)?;
    if let Some(p) = w.zero_at {
        return Err(Error::InadmissibleModulus { p });
    }
    let zf = z as f64;
    let raw_bound = x as f64 / g.value + zf * zf / w.value.powi(3);
    let tb = epsilon.map(|e| theorem_bound(ev, tuple, x, e)).transpose()?;
    let hits = tuple_hit_positions(table, tuple, x)?;
    let lo = tuple.min_offset().unwrap_or(0);
    let actual_above_z = hits.iter().filter(|&&n| n + lo > z).count() as u64;
    let actual = hits.len() as u64;
    let (alpha1, l_estimate) = omega_constants(tuple);
    Ok(SieveReport {
        tuple: tuple.clone(),
        x,
        z,
        epsilon,
        g_z: g.value,
        w_z: w.value,
        excluded_moduli: g.excluded,
        raw_bound,
        theorem_bound: tb.map(|t| t.bound),
        diagnostic: tb.map(|t| t.diagnostic),
        actual,
        actual_above_z,
        sifted: sifted_count(tuple, x, z)?,
        ratio_actual_over_bound: tb.map(|t| actual as f64 / t.bound),
        alpha1,
        l_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[u64]) -> Tuple {
        Tuple::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn g_examples() {
        let twin = t(&[0, 2]);
        assert_eq!(g_value::<f64>(1, &twin).unwrap(), 1.0);
        assert_eq!(g_value::<f64>(3, &twin).unwrap(), 2.0);
        assert_eq!(g_value::<f64>(2, &twin).unwrap(), 1.0);
        assert!(g_value::<f64>(4, &twin).is_err());
        assert!(matches!(
            g_value::<f64>(3, &t(&[0, 1, 2])),
            Err(Error::InadmissibleModulus { p: 3 })
        ));
    }

    #[test]
    fn big_g_examples() {
        let twin = t(&[0, 2]);
        assert_eq!(big_g::<f64>(2, &twin, 1).unwrap().value, 1.0);
        assert_eq!(big_g::<f64>(4, &twin, 1).unwrap().value, 4.0);
        let a = big_g::<f64>(2000, &twin, 1).unwrap();
        let b = big_g::<f64>(2000, &twin, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn big_g_excludes_blocked_moduli() {
        // nu(2) = 2 for {0, 1}: d = 2 and d = 6 drop out below 7
        let g = big_g::<f64>(7, &t(&[0, 1]), 1).unwrap();
        assert_eq!(g.excluded, 2);
        // 1 + g(3) + g(5) = 1 + 2 + 2/3
        assert!((g.value - (1.0 + 2.0 + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn big_w_examples() {
        let twin = t(&[0, 2]);
        assert_eq!(big_w::<f64>(3, &twin).unwrap().value, 0.5);
        assert_eq!(big_w_exact(5, &twin).unwrap(), BigRational::new(1.into(), 6.into()));
        let w = big_w::<f64>(5, &t(&[0, 2, 4])).unwrap();
        assert_eq!((w.value, w.zero_at), (0.0, Some(3)));
    }

    #[test]
    fn omega_examples() {
        let (a, l) = omega_constants(&t(&[0, 2]));
        assert_eq!(a, 3);
        assert!((l - 2.0 * 6f64.ln().ln()).abs() < 1e-14);
        let (a, l) = omega_constants(&t(&[0, 2, 6]));
        assert_eq!(a, 4);
        assert!((l - 3.0 * 144f64.ln().ln()).abs() < 1e-14);
    }

    #[test]
    fn sifted_small() {
        // n <= 30 with n, n+2 free of 2, 3: n = 5, 11, 17, 23, 29
        assert_eq!(sifted_count(&t(&[0, 2]), 30, 5).unwrap(), 5);
    }
}
