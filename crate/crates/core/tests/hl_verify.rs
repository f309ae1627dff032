use ktuple_core::hardy_littlewood::{hl_error, hl_error_lambda, hl_sweep, li_k, normalize};
use ktuple_core::primes::{sieve_range, SieveConfig, sieve_range_with};
use ktuple_core::singular::shared_evaluator;
use ktuple_core::Tuple;

// composite Simpson rule with an even number of panels
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn li_matches_simpson() {
    let v: f64 = li_k(1e6, 1).unwrap();
    let oracle = simpson(|t| 1.0 / t.ln(), 2.0, 1e6, 1_000_000);
    assert!(((v - oracle) / oracle).abs() < 1e-6);
    assert!((v - 78_626.503_995_682_07).abs() < 1e-5);
    let v10: f64 = li_k(100.0, 10).unwrap();
    assert!(((v10 - 6.596_581_322_723_466) / v10).abs() < 1e-10);
    let v10: f64 = li_k(5500.0, 10).unwrap();
    assert!(((v10 - 6.596_608_737_109_585) / v10).abs() < 1e-10);
}

#[test]
fn single_prime_counts() {
    let t = sieve_range(0, 1_000_001).unwrap();
    let one = Tuple::new([0]).unwrap();
    for (x, pi) in [(10_000u64, 1229u64), (100_000, 9592), (1_000_000, 78498)] {
        let r = hl_error(&t, shared_evaluator(), &one, x).unwrap();
        assert_eq!(r.hits, pi);
        assert!((r.prediction - li_k(x as f64, 1).unwrap()).abs() < 1e-9);
    }
    let r = hl_error(&t, shared_evaluator(), &one, 1_000_000).unwrap();
    assert!((r.abs_error - 128.5).abs() < 1.0);
}

#[test]
fn lambda_form_on_consecutive_pair() {
    let t = sieve_range(0, 2000).unwrap();
    let pair = Tuple::new([0, 1]).unwrap();
    let lam = |m: u64| -> f64 {
        (2..=m)
            .find(|d| m.is_multiple_of(*d))
            .filter(|&p| {
                let mut q = m;
                while q.is_multiple_of(p) {
                    q /= p;
                }
                q == 1
            })
            .map_or(0.0, |p| (p as f64).ln())
    };
    let direct: f64 = (1..=1000u64).map(|n| lam(n) * lam(n + 1)).sum();
    let got = hl_error_lambda(&t, shared_evaluator(), &pair, 1000).unwrap();
    assert!((got - direct).abs() < 1e-9);
}

#[test]
fn sweep_matches_pointwise_and_segment_size() {
    let tuple: Tuple = "0,2,6,8,12,18,20,26,30,32".parse().unwrap();
    let a = sieve_range(0, 6000).unwrap();
    let cfg = SieveConfig {
        segment_bits: 1 << 9,
        threads: 1,
    };
    let b = sieve_range_with(0, 6000, &cfg).unwrap();
    let sweep = hl_sweep(&a, shared_evaluator(), &tuple, 100, 5500, 300).unwrap();
    for r in &sweep {
        assert_eq!(r, &hl_error(&b, shared_evaluator(), &tuple, r.x).unwrap());
        assert_eq!(r.normalized, normalize(r.abs_error, r.x, 6));
    }
    assert_eq!(
        hl_error_lambda(&a, shared_evaluator(), &tuple, 5000).unwrap(),
        hl_error_lambda(&b, shared_evaluator(), &tuple, 5000).unwrap()
    );
}
