use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use ktuple_core::moments::{
    empirical_moment, exact_count, moment_report, poisson_pmf, predicted_moment, stirling2,
    surjection_count, tail_count, tail_report,
};
use ktuple_core::primes::{sieve_range, window_counts};

// number of set partitions of {0..r} into exactly l blocks, by restricted growth strings
fn partitions(r: usize, l: usize) -> u64 {
    fn go(i: usize, r: usize, used: usize, l: usize) -> u64 {
        if i == r {
            return u64::from(used == l);
        }
        (0..=used.min(l - 1))
            .map(|b| go(i + 1, r, used.max(b + 1), l))
            .sum()
    }
    if l == 0 {
        return u64::from(r == 0);
    }
    go(0, r, 0, l)
}

#[test]
fn stirling_matches_partition_count() {
    for r in 0..=8u32 {
        for l in 0..=r {
            assert_eq!(
                stirling2(r, l).unwrap(),
                BigUint::from(partitions(r as usize, l as usize)),
                "S({r}, {l})"
            );
        }
    }
}

#[test]
fn falling_factorial_identity() {
    for m in 0..=10u64 {
        for r in 0..=10u32 {
            let mut sum = BigUint::zero();
            for l in 0..=r {
                let mut c = BigUint::from(1u32);
                for i in 0..u64::from(l) {
                    c = c * (m.saturating_sub(i)) / (i + 1);
                }
                sum += surjection_count(r, l).unwrap() * c;
            }
            assert_eq!(sum, BigUint::from(m).pow(r), "m = {m}, r = {r}");
        }
    }
}

#[test]
fn touchard_identity() {
    for lambda in [0.5, 1.0, 2.0] {
        for r in 1..=8u32 {
            let direct: f64 = (0..=200u64)
                .map(|j| poisson_pmf(lambda, j).unwrap() * (j as f64).powi(r as i32))
                .sum();
            let p = predicted_moment(r, lambda).unwrap();
            assert!(((p - direct) / direct).abs() <= 1e-9, "lambda {lambda}, r {r}");
        }
    }
}

#[test]
fn empirical_moment_matches_direct_definition() {
    let t = sieve_range(0, 10_100).unwrap();
    let x = 10_000u64;
    let h = 9.2;
    let hist = window_counts(&t, x, h).unwrap();
    for r in 0..=6u32 {
        let mut acc = BigUint::zero();
        for n in 1..=x {
            let c = t.count_primes(n + 1, n + 9);
            acc += BigUint::from(c).pow(r);
        }
        let direct = acc.to_f64().unwrap() / x as f64;
        assert_eq!(empirical_moment(&hist, r), direct, "r = {r}");
    }
}

#[test]
fn tail_differences_are_exact_counts() {
    let t = sieve_range(0, 101_000).unwrap();
    let hist = window_counts(&t, 100_000, 23.0).unwrap();
    for k in 0..20 {
        assert_eq!(tail_count(&hist, k) - tail_count(&hist, k + 1), exact_count(&hist, k));
    }
    assert_eq!(tail_count(&hist, 0), 100_000);
}

#[test]
fn reports_carry_both_lambdas() {
    let t = sieve_range(0, 101_000).unwrap();
    let x = 100_000u64;
    let h = (x as f64).ln();
    let hist = window_counts(&t, x, h).unwrap();
    let m = moment_report(&hist, 1).unwrap();
    assert!((m.lambda - 1.0).abs() < 1e-15);
    assert_eq!(m.ratio_eff, 1.0);
    let tr = tail_report(&hist, 3).unwrap();
    assert_eq!(tr.i_count, tail_count(&hist, 3));
    assert!(tr.lambda_eff > 1.0);
    let tr4 = tail_report(&hist, 4).unwrap();
    assert!(tr4.i_count <= tr.i_count);
}
