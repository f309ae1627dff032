//! Sums of the singular series over tuples drawn from `[1, h]`.
//!
//! `T_k(h)` sums `S({h_1..h_k})` over ordered tuples of distinct integers in
//! `[1, h]`. Since the singular series is symmetric, every routine here
//! works with sorted subsets and multiplies by `k!`.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;

use crate::arith::{binomial_saturating, small_primes};
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::singular::SingularSeries;
use crate::tuple::Tuple;

/// Per-tuple target error used when the caller does not choose one.
pub const DEFAULT_TUPLE_ERROR: f64 = 1e-10;

/// Default cap on the number of subsets [`tkh_exact`] will enumerate.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueWithError<T> {
    pub value: T,
    pub error: T,
}

/// Monte Carlo estimate of the mean of `S` over uniform random sorted
/// `k`-subsets of `[1, h]`. `T_k(h) = k! * C(h, k) * mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError<T> {
    pub mean: T,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: T,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl<T: Real> EstimateWithError<T> {
    /// `k! * C(h, k)`, the number of ordered tuples the mean stands for.
    pub fn ordered_tuple_count(k: u64, h: u64) -> T {
        let lnc = crate::arith::ln_factorial(h) - crate::arith::ln_factorial(h - k);
        T::lit(lnc.exp())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AverageOptions {
    pub tuple_error: f64,
    pub budget: u128,
    pub threads: usize,
}

impl Default for AverageOptions {
    fn default() -> Self {
        Self {
            tuple_error: DEFAULT_TUPLE_ERROR,
            budget: DEFAULT_ENUMERATION_BUDGET,
            threads: 1,
        }
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Resource(e.to_string()))
}

fn k_factorial<T: Real>(k: u64) -> T {
    (1..=k).fold(T::one(), |acc, i| acc * T::of(i))
}

// Sum of S over sorted subsets of [1, h] of size k whose least element is `first`.
fn subsets_with_first<T: Real>(
    ev: &SingularSeries<T>,
    first: u64,
    k: usize,
    h: u64,
    target: T,
) -> Result<(CompensatedSum<T>, T)> {
    let mut sum = CompensatedSum::new();
    let mut radius = T::zero();
    let mut cur: Vec<u64> = (0..k as u64).map(|i| first + i).collect();
    if *cur.last().expect("k >= 1") > h {
        return Ok((sum, radius));
    }
    loop {
        let tup = Tuple::new(cur.iter().copied())?;
        let s = ev.evaluate(&tup, target)?;
        sum.add(s.value);
        radius = radius + s.error_radius;
        // next combination with cur[0] fixed
        let mut i = k - 1;
        loop {
            if i == 0 {
                return Ok((sum, radius));
            }
            let max_here = h - (k - 1 - i) as u64;
            if cur[i] < max_here {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// `T_k(h)` by enumerating all `C(h, k)` sorted subsets.
///
/// The reported error is `k! * C(h, k) * tuple_error`. Per-first-element
/// partial sums are reduced in a fixed order, so the value does not depend
/// on the thread count.
pub fn tkh_exact<T: Real>(
    ev: &SingularSeries<T>,
    k: u64,
    h: u64,
    opts: &AverageOptions,
) -> Result<ValueWithError<T>> {
    if k == 0 || h == 0 {
        return Err(Error::precondition("tkh_exact needs k >= 1 and h >= 1"));
    }
    if k > h {
        return Ok(ValueWithError {
            value: T::zero(),
            error: T::zero(),
        });
    }
    let subsets = binomial_saturating(h, k);
    if subsets > opts.budget {
        return Err(Error::Resource(format!(
            "C({h}, {k}) = {subsets} subsets exceeds the budget of {}; use Monte Carlo",
            opts.budget
        )));
    }
    let target = T::lit(opts.tuple_error);
    let firsts: Vec<u64> = (1..=h - k + 1).collect();
    let work = |&f: &u64| subsets_with_first(ev, f, k as usize, h, target);
    let parts: Vec<Result<(CompensatedSum<T>, T)>> = if opts.threads > 1 {
        pool(opts.threads)?.install(|| firsts.par_iter().map(work).collect())
    } else {
        firsts.iter().map(work).collect()
    };
    let mut total = CompensatedSum::new();
    for part in parts {
        total.add(part?.0.value());
    }
    let kf = k_factorial::<T>(k);
    Ok(ValueWithError {
        value: kf * total.value(),
        error: kf * T::lit(subsets as f64) * target,
    })
}

/// `T_2(h) = 2 sum_{d=1}^{h-1} (h - d) S({0, d})`.
pub fn tkh_pair_fast<T: Real>(ev: &SingularSeries<T>, h: u64, tuple_error: T) -> Result<ValueWithError<T>> {
    if h < 2 {
        return Err(Error::precondition("tkh_pair_fast needs h >= 2"));
    }
    let mut sum = CompensatedSum::new();
    let mut err = T::zero();
    // odd d gives an inadmissible pair
    for d in (2..h).step_by(2) {
        let s = ev.evaluate(&Tuple::new([0, d])?, tuple_error)?;
        let w = T::of(h - d);
        sum.add(w * s.value);
        err = err + w * s.error_radius;
    }
    let two = T::lit(2.0);
    Ok(ValueWithError {
        value: two * sum.value(),
        error: two * err + T::lit(4.0) * T::epsilon() * sum.abs_total(),
    })
}

/// Uniform sorted `k`-subset of `[1, h]`.
struct SubsetSampler {
    k: usize,
    h: u64,
    by_rejection: bool,
    pool: Vec<u64>,
}

impl SubsetSampler {
    fn new(k: usize, h: u64) -> Self {
        let by_rejection = (k as u64) * (k as u64) <= h / 2;
        let pool = if by_rejection {
            Vec::new()
        } else {
            (1..=h).collect()
        };
        Self {
            k,
            h,
            by_rejection,
            pool,
        }
    }

    fn draw<R: Rng>(&mut self, rng: &mut R, out: &mut Vec<u64>) {
        out.clear();
        if self.by_rejection {
            'retry: loop {
                out.clear();
                for _ in 0..self.k {
                    let v = rng.gen_range(1..=self.h);
                    if out.contains(&v) {
                        continue 'retry;
                    }
                    out.push(v);
                }
                break;
            }
        } else {
            // partial Fisher–Yates; the pool stays a permutation between draws
            let n = self.pool.len();
            for i in 0..self.k {
                let j = rng.gen_range(i..n);
                self.pool.swap(i, j);
            }
            out.extend_from_slice(&self.pool[..self.k]);
        }
        out.sort_unstable();
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    // Chan et al. pairwise merge
    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let mean = self.mean + d * o.n as f64 / n as f64;
        let m2 = self.m2 + o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }
}

/// Seed of worker `w`: the run seed mixed with the worker index.
pub fn worker_seed(seed: u64, worker: usize) -> u64 {
    let mut z = seed ^ (worker as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte Carlo estimate of the mean singular series over random
/// `k`-subsets of `[1, h]`.
///
/// Worker `w` draws its share of the samples from `SplitMix64` seeded with
/// [`worker_seed`]`(seed, w)`; results are merged in worker order, so a run
/// is bit-reproducible for a fixed `(seed, samples, workers)`.
pub fn tkh_monte_carlo<T: Real>(
    ev: &SingularSeries<T>,
    k: u64,
    h: u64,
    samples: u64,
    seed: u64,
    workers: usize,
    tuple_error: T,
) -> Result<EstimateWithError<T>> {
    if k == 0 || h < k {
        return Err(Error::precondition("Monte Carlo needs h >= k >= 1"));
    }
    if samples < 100 {
        return Err(Error::precondition(format!(
            "{samples} samples is below the minimum of 100"
        )));
    }
    let workers = workers.max(1);
    let per = samples / workers as u64;
    let extra = samples % workers as u64;
    let run = |w: usize| -> Result<Moments> {
        let n = per + u64::from((w as u64) < extra);
        let mut rng = SplitMix64::seed_from_u64(worker_seed(seed, w));
        let mut sampler = SubsetSampler::new(k as usize, h);
        let mut buf = Vec::with_capacity(k as usize);
        let mut acc = Moments {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        };
        for _ in 0..n {
            sampler.draw(&mut rng, &mut buf);
            let s = ev.evaluate(&Tuple::new(buf.iter().copied())?, tuple_error)?;
            acc.push(s.value.as_f64());
        }
        Ok(acc)
    };
    let parts: Vec<Result<Moments>> = if workers > 1 {
        pool(workers)?.install(|| (0..workers).into_par_iter().map(run).collect())
    } else {
        vec![run(0)]
    };
    let mut total = Moments {
        n: 0,
        mean: 0.0,
        m2: 0.0,
    };
    for p in parts {
        total = total.merge(p?);
    }
    let var = if total.n > 1 {
        total.m2 / (total.n - 1) as f64
    } else {
        0.0
    };
    Ok(EstimateWithError {
        mean: T::lit(total.mean),
        stderr: T::lit((var / total.n as f64).sqrt()),
        samples: total.n,
        seed,
        workers,
    })
}

/// Largest `k^3` that [`allk_bound`] will sieve to.
pub const ALLK_SIEVE_BUDGET: u64 = 1 << 32;

/// `(prod_{p <= k^3} (1 - 1/p)^-k, (3 log k)^k)`.
pub fn allk_bound<T: Real>(k: u64) -> Result<(T, T)> {
    if k < 2 {
        return Err(Error::precondition("allk_bound needs k >= 2"));
    }
    let cube = k
        .checked_pow(3)
        .filter(|&c| c <= ALLK_SIEVE_BUDGET)
        .ok_or_else(|| Error::Resource(format!("k^3 for k = {k} exceeds the sieve budget")))?;
    let mut s = CompensatedSum::<T>::new();
    for p in small_primes(cube) {
        s.add(-(-T::one() / T::of(p)).ln_1p());
    }
    let kf = T::of(k);
    let first = (kf * s.value()).exp();
    let second = (T::lit(3.0) * kf.ln()).powf(kf);
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::singular::shared_evaluator;

    #[test]
    fn singletons_sum_to_h() {
        let ev = shared_evaluator();
        let v = tkh_exact(ev, 1, 10, &AverageOptions::default()).unwrap();
        assert_eq!(v.value, 10.0);
    }

    #[test]
    fn k_above_h_is_zero() {
        let ev = shared_evaluator();
        let v = tkh_exact(ev, 5, 3, &AverageOptions::default()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn only_odd_difference_is_zero() {
        let ev = shared_evaluator();
        assert_eq!(tkh_exact(ev, 2, 2, &AverageOptions::default()).unwrap().value, 0.0);
        assert_eq!(tkh_pair_fast(ev, 2, 1e-10).unwrap().value, 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let ev = shared_evaluator();
        let opts = AverageOptions {
            budget: 100,
            ..Default::default()
        };
        assert!(tkh_exact(ev, 3, 30, &opts).unwrap_err().is_resource());
    }

    #[test]
    fn monte_carlo_preconditions() {
        let ev = shared_evaluator();
        assert!(tkh_monte_carlo(ev, 3, 30, 99, 1, 1, 1e-10).is_err());
        assert!(tkh_monte_carlo(ev, 5, 4, 1000, 1, 1, 1e-10).is_err());
    }

    #[test]
    fn constant_integrand() {
        let ev = shared_evaluator();
        let e = tkh_monte_carlo(ev, 1, 100, 1000, 9, 1, 1e-10).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn sampler_covers_both_paths_uniformly() {
        // k = 2 from [1, 4]: six subsets, each with frequency near 1/6
        for h in [4u64, 40] {
            let mut s = SubsetSampler::new(2, h);
            assert_eq!(s.by_rejection, h == 40);
            let mut rng = SplitMix64::seed_from_u64(5);
            let mut buf = Vec::new();
            let mut hits = std::collections::HashMap::new();
            for _ in 0..60_000 {
                s.draw(&mut rng, &mut buf);
                assert!(buf[0] < buf[1] && buf[1] <= h);
                *hits.entry((buf[0], buf[1])).or_insert(0u32) += 1;
            }
            let expect = 60_000.0 / binomial_saturating(h, 2) as f64;
            assert_eq!(hits.len() as u128, binomial_saturating(h, 2));
            for &c in hits.values() {
                assert!((f64::from(c) - expect).abs() < 6.0 * expect.sqrt());
            }
        }
    }

    #[test]
    fn allk_small_cases() {
        let (a, b): (f64, f64) = allk_bound(2).unwrap();
        assert!((a - 19.140_625).abs() < 1e-12);
        assert!((b - 4.324_077_125_263_813).abs() < 1e-12);
        assert!(a >= 1.0);
        let (a3, _): (f64, f64) = allk_bound(3).unwrap();
        assert!((a3 - 228.425_253_540_530_26).abs() < 1e-9);
        assert!(allk_bound::<f64>(1).is_err());
        assert!(allk_bound::<f64>(2000).unwrap_err().is_resource());
    }
}
