//! Empirical checks of the uniform Hardy–Littlewood prediction
//! `#{n <= x : n + h_i all prime} ~ S(H) li_k(x)`.

use crate::error::{Error, Result};
use crate::primes::{tuple_hit_positions, PrimalityTable};
use crate::quad::integrate;
use crate::scalar::{CompensatedSum, Real};
use crate::singular::SingularSeries;
use crate::tuple::Tuple;

/// Relative tolerance for [`li_k`].
pub const LI_TOLERANCE: f64 = 1e-10;

/// Absolute error requested from the singular series.
pub const SINGULAR_TARGET: f64 = 1e-9;

/// `li_k(x) = int_2^x dt / (log t)^k`; zero for `x <= 2`.
///
/// The lower limit is 2, which keeps clear of the pole at `t = 1`. Other
/// conventions differ by a constant that does not depend on the tuple.
pub fn li_k<T: Real>(x: T, k: u32) -> Result<T> {
    let two = T::lit(2.0);
    if !(x > two) {
        return Ok(T::zero());
    }
    if k == 0 {
        return Ok(x - two);
    }
    let kk = k as i32;
    integrate(|t: T| t.ln().powi(-kk), two, x, T::lit(LI_TOLERANCE))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HlReport {
    pub tuple: Tuple,
    pub x: u64,
    pub hits: u64,
    pub singular: f64,
    /// `S(H) li_k(x)`.
    pub prediction: f64,
    pub abs_error: f64,
    /// `abs_error / (sqrt(x) (log x)^6)`.
    pub normalized: f64,
    /// `abs_error / (sqrt(x) (log x)^k)`.
    pub normalized_alt: f64,
    /// `|sum_{n <= x} prod_i Lambda(n + h_i) - S(H) x|`, when computed.
    pub lambda_form_error: Option<f64>,
}

/// `abs_error / (sqrt(x) (log x)^power)`.
pub fn normalize(abs_error: f64, x: u64, power: u32) -> f64 {
    let xf = x as f64;
    abs_error / (xf.sqrt() * xf.ln().powi(power as i32))
}

fn report(tuple: &Tuple, x: u64, hits: u64, singular: f64) -> Result<HlReport> {
    let k = tuple.k() as u32;
    let prediction = singular * li_k(x as f64, k)?;
    let abs_error = (hits as f64 - prediction).abs();
    Ok(HlReport {
        tuple: tuple.clone(),
        x,
        hits,
        singular,
        prediction,
        abs_error,
        normalized: normalize(abs_error, x, 6),
        normalized_alt: normalize(abs_error, x, k),
        lambda_form_error: None,
    })
}

fn check_x(x: u64) -> Result<()> {
    if x < 2 {
        return Err(Error::domain(format!("x must be at least 2, got {x}")));
    }
    Ok(())
}

/// Compares the tuple count up to `x` with `S(H) li_k(x)`.
pub fn hl_error(
    table: &PrimalityTable,
    ev: &SingularSeries<f64>,
    tuple: &Tuple,
    x: u64,
) -> Result<HlReport> {
    check_x(x)?;
    let hits = tuple_hit_positions(table, tuple, x)?.len() as u64;
    let s = ev.evaluate(tuple, SINGULAR_TARGET)?.value;
    report(tuple, x, hits, s)
}

/// [`hl_error`] at every `x = start, start + step, ...` up to `stop`,
/// ordered by `x`.
pub fn hl_sweep(
    table: &PrimalityTable,
    ev: &SingularSeries<f64>,
    tuple: &Tuple,
    start: u64,
    stop: u64,
    step: u64,
) -> Result<Vec<HlReport>> {
    check_x(start)?;
    if step == 0 || stop < start {
        return Err(Error::domain("sweep needs step >= 1 and stop >= start"));
    }
    let positions = tuple_hit_positions(table, tuple, stop)?;
    let s = ev.evaluate(tuple, SINGULAR_TARGET)?.value;
    (start..=stop)
        .step_by(step as usize)
        .map(|x| {
            let hits = positions.partition_point(|&n| n <= x) as u64;
            report(tuple, x, hits, s)
        })
        .collect()
}

/// `Lambda(m)` for `m = 0..=top`.
pub fn von_mangoldt_values(table: &PrimalityTable, top: u64) -> Result<Vec<f64>> {
    table.ensure_covers(table.base().min(2), top.max(2))?;
    if table.base() > 2 {
        return Err(Error::Coverage {
            base: table.base(),
            limit: table.limit(),
            required_base: 2,
            required_limit: top,
        });
    }
    let mut out = vec![0.0f64; top as usize + 1];
    for p in table.primes().take_while(|&p| p <= top) {
        let lp = (p as f64).ln();
        let mut q = p;
        loop {
            out[q as usize] = lp;
            match q.checked_mul(p) {
                Some(n) if n <= top => q = n,
                _ => break,
            }
        }
    }
    Ok(out)
}

/// `|sum_{n <= x} prod_i Lambda(n + h_i) - S(H) x|`.
pub fn hl_error_lambda(
    table: &PrimalityTable,
    ev: &SingularSeries<f64>,
    tuple: &Tuple,
    x: u64,
) -> Result<f64> {
    check_x(x)?;
    let top = x
        .checked_add(tuple.max_offset().unwrap_or(0))
        .ok_or_else(|| Error::domain("x + max offset overflows"))?;
    let lam = von_mangoldt_values(table, top)?;
    let offs = tuple.offsets();
    let mut sum = CompensatedSum::<f64>::new();
    for n in 1..=x {
        let mut prod = 1.0;
        for &h in offs {
            prod *= lam[(n + h) as usize];
            if prod == 0.0 {
                break;
            }
        }
        if prod != 0.0 {
            sum.add(prod);
        }
    }
    let s = ev.evaluate(tuple, SINGULAR_TARGET)?.value;
    Ok((sum.value() - s * x as f64).abs())
}
