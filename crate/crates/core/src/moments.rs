//! Moments of the window-count distribution and Poisson comparisons.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::ratio_to_f64;
use crate::error::{Error, Result};
use crate::primes::WindowHistogram;
use crate::scalar::{CompensatedSum, Real};

/// Largest `r` accepted by [`stirling2`].
pub const STIRLING_MAX: u32 = 64;

/// Stirling number of the second kind `{r over l}`; zero when `l > r`.
pub fn stirling2(r: u32, l: u32) -> Result<BigUint> {
    if r > STIRLING_MAX {
        return Err(Error::precondition(format!(
            "stirling2 needs r <= {STIRLING_MAX}, got {r}"
        )));
    }
    if l > r {
        return Ok(BigUint::zero());
    }
    Ok(stirling_row(r).swap_remove(l as usize))
}

/// `{r over 0}, ..., {r over r}`.
pub fn stirling_row(r: u32) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for n in 1..=r as usize {
        let mut next = vec![BigUint::zero(); n + 1];
        for k in 1..=n {
            let mut v = if k < n { &row[k] * k } else { BigUint::zero() };
            v += &row[k - 1];
            next[k] = v;
        }
        row = next;
    }
    row
}

/// Number of maps from an `r`-set onto an `l`-set, `l! {r over l}`.
pub fn surjection_count(r: u32, l: u32) -> Result<BigUint> {
    Ok(crate::arith::factorial(u64::from(l)) * stirling2(r, l)?)
}

/// `(1/x) sum_c N_c c^r`, accumulated exactly.
pub fn empirical_moment(hist: &WindowHistogram, r: u32) -> f64 {
    if hist.x == 0 {
        return 0.0;
    }
    let mut acc = BigUint::zero();
    for (c, &n) in hist.counts().iter().enumerate() {
        if n > 0 {
            acc += BigUint::from(c as u64).pow(r) * n;
        }
    }
    ratio_to_f64(&acc, &BigUint::from(hist.x))
}

/// `sum_{l=1}^r {r over l} lambda^l`, the `r`-th moment of Poisson(lambda).
pub fn predicted_moment<T: Real>(r: u32, lambda: T) -> Result<T> {
    if r == 0 {
        return Ok(T::one());
    }
    if !(lambda > T::zero()) {
        return Err(Error::domain("lambda must be positive"));
    }
    let row = stirling_row(r);
    // Horner in lambda: sum_l s_l lambda^l
    let mut acc = T::zero();
    for s in row.iter().skip(1).rev() {
        acc = (acc + T::lit(s.to_f64().unwrap_or(f64::INFINITY))) * lambda;
    }
    Ok(acc)
}

/// `pi_k(x; h)`, the number of windows holding exactly `k` primes.
pub fn exact_count(hist: &WindowHistogram, k: usize) -> u64 {
    hist.get(k)
}

/// `I(x; k, h)`, the number of windows holding at least `k` primes.
pub fn tail_count(hist: &WindowHistogram, k: usize) -> u64 {
    hist.counts().iter().skip(k).sum()
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "lambda must be positive and finite, got {}",
            lambda.as_f64()
        )));
    }
    Ok(())
}

fn ln_gamma_int<T: Real>(k: u64) -> T {
    T::lit(crate::arith::ln_factorial(k))
}

/// `lambda^k e^-lambda / k!`.
pub fn poisson_pmf<T: Real>(lambda: T, k: u64) -> Result<T> {
    check_lambda(lambda)?;
    Ok((T::of(k) * lambda.ln() - lambda - ln_gamma_int::<T>(k)).exp())
}

/// `P(X >= k)` for `X ~ Poisson(lambda)`.
///
/// Above the mode the terms are summed upward from `k` (they decrease
/// geometrically); otherwise the complement of the lower sum is used.
pub fn poisson_tail<T: Real>(lambda: T, k: u64) -> Result<T> {
    check_lambda(lambda)?;
    if k == 0 {
        return Ok(T::one());
    }
    if T::of(k) > lambda {
        let mut term = poisson_pmf(lambda, k)?;
        let mut sum = CompensatedSum::new();
        let mut j = k;
        while term > sum.value() * T::epsilon() * T::lit(0.25) {
            sum.add(term);
            j += 1;
            term = term * lambda / T::of(j);
            if j > k + 100_000 {
                break;
            }
        }
        Ok(sum.value())
    } else {
        let mut sum = CompensatedSum::new();
        for j in 0..k {
            sum.add(poisson_pmf(lambda, j)?);
        }
        Ok((T::one() - sum.value()).max(T::zero()))
    }
}

/// `exp(-k / (lambda e))` for `lambda >= 1`, `exp(-k / ((lambda + 1) e))`
/// below; multiply by `x` to compare with `I(x; k, h)`.
pub fn corollary_bound<T: Real>(k: u64, lambda: T) -> Result<T> {
    if k == 0 {
        return Err(Error::precondition("corollary bound needs k >= 1"));
    }
    check_lambda(lambda)?;
    let e = T::lit(std::f64::consts::E);
    let denom = if lambda >= T::one() {
        lambda
    } else {
        lambda + T::one()
    };
    Ok((-T::of(k) / (denom * e)).exp())
}

/// `exp((log h)^(1-delta) (log(lambda + 1) + (1-delta) log log h - log k))`.
pub fn biggerk_bound<T: Real>(k: u64, lambda: T, h: T, delta: T) -> Result<T> {
    if k == 0 {
        return Err(Error::precondition("bound needs k >= 1"));
    }
    check_lambda(lambda)?;
    if !(h > T::lit(std::f64::consts::E)) {
        return Err(Error::domain(format!("h must exceed e, got {}", h.as_f64())));
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::domain("delta must lie in (0, 1)"));
    }
    let lh = h.ln();
    let a = T::one() - delta;
    Ok((lh.powf(a) * (lambda.ln_1p() + a * lh.ln() - T::of(k).ln())).exp())
}

/// Total variation distance between the empirical window-count
/// distribution and Poisson(lambda).
pub fn total_variation(hist: &WindowHistogram, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if hist.x == 0 {
        return Err(Error::domain("empty histogram"));
    }
    let x = hist.x as f64;
    let mut sum = CompensatedSum::new();
    let mut covered = CompensatedSum::new();
    for (c, &n) in hist.counts().iter().enumerate() {
        let p = poisson_pmf(lambda, c as u64)?;
        covered.add(p);
        sum.add((n as f64 / x - p).abs());
    }
    // Poisson mass beyond the largest observed count
    sum.add((1.0 - covered.value()).max(0.0));
    Ok(0.5 * sum.value())
}

/// `h / log x`.
pub fn lambda_of(x: u64, h: f64) -> Result<f64> {
    if x < 2 {
        return Err(Error::domain("lambda needs x >= 2"));
    }
    Ok(h / (x as f64).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub x: u64,
    pub h: f64,
    pub lambda: f64,
    /// Measured first moment.
    pub lambda_eff: f64,
    pub r: u32,
    pub empirical: f64,
    /// Poisson moment at `lambda`.
    pub predicted: f64,
    pub ratio: f64,
    pub predicted_eff: f64,
    pub ratio_eff: f64,
}

pub fn moment_report(hist: &WindowHistogram, r: u32) -> Result<MomentReport> {
    if r == 0 {
        return Err(Error::precondition("moment reports start at r = 1"));
    }
    let lambda = lambda_of(hist.x, hist.h)?;
    let lambda_eff = empirical_moment(hist, 1);
    let empirical = empirical_moment(hist, r);
    let predicted = predicted_moment(r, lambda)?;
    let predicted_eff = predicted_moment(r, lambda_eff)?;
    Ok(MomentReport {
        x: hist.x,
        h: hist.h,
        lambda,
        lambda_eff,
        r,
        empirical,
        predicted,
        ratio: empirical / predicted,
        predicted_eff,
        ratio_eff: empirical / predicted_eff,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub x: u64,
    pub h: f64,
    pub lambda: f64,
    pub lambda_eff: f64,
    pub k: u64,
    pub i_count: u64,
    pub pi_k_count: u64,
    pub poisson_tail: f64,
    pub poisson_tail_eff: f64,
    /// Per-`n` bound at `lambda_eff`.
    pub corollary_bound: f64,
}

pub fn tail_report(hist: &WindowHistogram, k: u64) -> Result<TailReport> {
    if k == 0 {
        return Err(Error::precondition("tail reports start at k = 1"));
    }
    let lambda = lambda_of(hist.x, hist.h)?;
    let lambda_eff = empirical_moment(hist, 1);
    let idx = usize::try_from(k).unwrap_or(usize::MAX);
    Ok(TailReport {
        x: hist.x,
        h: hist.h,
        lambda,
        lambda_eff,
        k,
        i_count: tail_count(hist, idx),
        pi_k_count: exact_count(hist, idx),
        poisson_tail: poisson_tail(lambda, k)?,
        poisson_tail_eff: poisson_tail(lambda_eff, k)?,
        corollary_bound: corollary_bound(k, lambda_eff)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_hist() -> WindowHistogram {
        WindowHistogram::new(10, 2.0, vec![2, 7, 1])
    }

    #[test]
    fn stirling_examples() {
        assert_eq!(stirling2(4, 2).unwrap(), BigUint::from(7u32));
        assert_eq!(stirling2(5, 5).unwrap(), BigUint::one());
        assert_eq!(stirling2(5, 1).unwrap(), BigUint::one());
        assert_eq!(stirling2(2, 3).unwrap(), BigUint::zero());
        assert_eq!(stirling2(0, 0).unwrap(), BigUint::one());
        assert!(stirling2(65, 2).is_err());
        // {64 over 2} = 2^63 - 1
        assert_eq!(stirling2(64, 2).unwrap(), BigUint::from(u64::MAX >> 1));
    }

    #[test]
    fn surjections() {
        assert_eq!(surjection_count(3, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(surjection_count(5, 5).unwrap(), BigUint::from(120u32));
        assert_eq!(surjection_count(2, 3).unwrap(), BigUint::zero());
    }

    #[test]
    fn moments_of_small_histogram() {
        let h = small_hist();
        assert_eq!(empirical_moment(&h, 0), 1.0);
        assert_eq!(empirical_moment(&h, 1), 0.9);
        assert_eq!(empirical_moment(&h, 2), 1.1);
        assert_eq!((exact_count(&h, 1), tail_count(&h, 1)), (7, 8));
        assert_eq!(tail_count(&h, 0), 10);
        assert_eq!((exact_count(&h, 3), tail_count(&h, 3)), (0, 0));
    }

    #[test]
    fn predicted_examples() {
        assert_eq!(predicted_moment(1, 0.7).unwrap(), 0.7);
        assert_eq!(predicted_moment(2, 1.0).unwrap(), 2.0);
        assert_eq!(predicted_moment(3, 1.0).unwrap(), 5.0);
        assert_eq!(predicted_moment(4, 1.0f32).unwrap(), 15.0);
    }

    #[test]
    fn poisson_values() {
        let p: f64 = poisson_pmf(1.0, 0).unwrap();
        assert!((p - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(poisson_tail(2.5, 0).unwrap(), 1.0);
        let t: f64 = poisson_tail(1.0, 4).unwrap();
        assert!((t - 0.018_988_156_876_153_81).abs() < 1e-15);
        // lower branch agrees with the upper one
        let a: f64 = poisson_tail(6.0, 5).unwrap();
        let b: f64 = (5..200).map(|j| poisson_pmf(6.0, j).unwrap()).sum();
        assert!((a - b).abs() < 1e-14);
        assert!(poisson_pmf(0.0, 1).is_err());
    }

    #[test]
    fn corollary_examples() {
        let a: f64 = corollary_bound(8, 1.0).unwrap();
        assert!((a - 0.052_705_496_583_760_5).abs() < 1e-15);
        let b: f64 = corollary_bound(4, 0.5).unwrap();
        assert!((b - 0.374_931_534_958_665).abs() < 1e-15);
        assert!(corollary_bound(9, 1.0).unwrap() < a);
    }

    #[test]
    fn biggerk_examples() {
        let h = std::f64::consts::E.powf(std::f64::consts::E.powi(2));
        let v: f64 = biggerk_bound(8, 1.0, h, 0.5).unwrap();
        assert!((v - 0.349_917_823_429_236_08).abs() < 1e-12);
        assert!(biggerk_bound(8, 1.0, 2.0, 0.5).is_err());
        assert!(biggerk_bound(9, 1.0, h, 0.5).unwrap() < v);
    }

    #[test]
    fn total_variation_of_exact_poisson_is_small() {
        let x = 1_000_000u64;
        let counts: Vec<u64> = (0..20)
            .map(|c| (poisson_pmf(1.0, c).unwrap() * x as f64).round() as u64)
            .collect();
        let hist = WindowHistogram::new(x, 1.0, counts);
        assert!(total_variation(&hist, 1.0).unwrap() < 1e-5);
    }
}
