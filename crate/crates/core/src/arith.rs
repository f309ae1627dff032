//! Integer helpers shared by the evaluators: small prime lists, trial
//! factorization, exact-to-float conversion and the prime zeta function.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// All primes `<= limit`, by a plain sieve of Eratosthenes.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Deterministic primality by trial division. Meant for argument checks,
/// not for hot loops.
pub fn is_prime(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// Distinct prime factors of `n`, ascending. `primes` must be an ascending
/// list starting at 2; trial division continues past its end if needed.
pub fn distinct_prime_factors(mut n: u64, primes: &[u64], out: &mut Vec<u64>) {
    for &p in primes {
        if p.saturating_mul(p) > n {
            break;
        }
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
    }
    let mut d = primes.last().map_or(2, |&p| p + 1).max(2);
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
}

/// Returns `Some(p)` if `n = p^m` for a prime `p` and `m >= 1`.
pub fn prime_power_base(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    let mut m = 1u32;
    let mut best = None;
    while m <= 63 {
        let r = integer_root(n, m);
        if r < 2 {
            break;
        }
        if r.checked_pow(m) == Some(n) && is_prime(r) {
            best = Some(r);
        }
        m += 1;
    }
    best
}

/// `floor(n^(1/m))`.
pub fn integer_root(n: u64, m: u32) -> u64 {
    if m == 1 || n < 2 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / f64::from(m)) as u64;
    while r > 0 && r.checked_pow(m).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(m).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// Correctly rounded `num / den`.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new_raw(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .unwrap_or(f64::NAN)
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `ln(n!)` as a float, summed directly for small `n` and via Stirling's
/// series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 64 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    // ln Gamma(x), Stirling series with three correction terms
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial_saturating(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        let Some(m) = acc.checked_mul(u128::from(n - i)) else {
            return u128::MAX;
        };
        acc = m / u128::from(i + 1);
    }
    acc
}

const BERNOULLI_2I_OVER_FACT: [f64; 7] = [
    1.0 / 12.0,               // B2 / 2!
    -1.0 / 720.0,             // B4 / 4!
    1.0 / 30_240.0,           // B6 / 6!
    -1.0 / 1_209_600.0,       // B8 / 8!
    1.0 / 47_900_160.0,       // B10 / 10!
    -691.0 / 1_307_674_368_000.0, // B12 / 12!
    1.0 / 74_724_249_600.0,   // B14 / 14!
];

/// `zeta(s) - 1` for integer `s >= 2`, by direct summation to `N = 16` and
/// an Euler–Maclaurin tail.
pub fn zeta_minus_one(s: u32) -> f64 {
    assert!(s >= 2, "zeta_minus_one needs s >= 2");
    const N: u32 = 16;
    let sf = f64::from(s);
    let mut head = 0.0;
    for j in (2..N).rev() {
        head += f64::from(j).powf(-sf);
    }
    let n = f64::from(N);
    let mut tail = n.powf(1.0 - sf) / (sf - 1.0) + 0.5 * n.powf(-sf);
    // rising factorial s (s+1) ... (s + 2i - 2)
    let mut rising = sf;
    let mut npow = n.powf(-sf - 1.0);
    for (i, b) in BERNOULLI_2I_OVER_FACT.iter().enumerate() {
        tail += b * rising * npow;
        let i = i as f64;
        rising *= (sf + 2.0 * i + 1.0) * (sf + 2.0 * i + 2.0);
        npow /= n * n;
    }
    head + tail
}

fn mobius_small(n: u32) -> i32 {
    let mut n = n;
    let mut mu = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// Prime zeta function `P(s) = sum_p p^{-s}` for integer `s >= 2`, via
/// `P(s) = sum_n mu(n)/n log zeta(n s)`.
pub fn prime_zeta(s: u32) -> f64 {
    assert!(s >= 2, "prime_zeta needs s >= 2");
    let mut acc = 0.0;
    let mut n = 1u32;
    loop {
        let t = n * s;
        // log zeta(t) ~ 2^-t; stop once far below double precision
        if t > 80 {
            break;
        }
        let mu = mobius_small(n);
        if mu != 0 {
            acc += f64::from(mu) / f64::from(n) * zeta_minus_one(t).ln_1p();
        }
        n += 1;
    }
    acc
}
