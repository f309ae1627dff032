//! Bit-level primality over an integer range and the counts derived from it.
//!
//! A [`PrimalityTable`] stores one bit per integer in `[base, limit]`;
//! bit `j` of word `w` is the primality of `base + 64 w + j`. This is also
//! the on-disk layout of the `PKT1` cache format, so a table can be written
//! and mapped back without repacking.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::arith::small_primes;
use crate::error::{Error, Result};
use crate::tuple::Tuple;

const CACHE_MAGIC: &[u8; 4] = b"PKT1";

/// Sieve tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    /// Bits per segment; rounded up to a multiple of 64.
    pub segment_bits: usize,
    pub threads: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_bits: 1 << 20,
            threads: 1,
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PrimalityTable {
    base: u64,
    limit: u64,
    words: Vec<u64>,
}

impl std::fmt::Debug for PrimalityTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrimalityTable")
            .field("base", &self.base)
            .field("limit", &self.limit)
            .field("words", &self.words.len())
            .finish()
    }
}

fn words_for(base: u64, limit: u64) -> usize {
    ((limit - base) / 64 + 1) as usize
}

impl PrimalityTable {
    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Builds a table from raw words, validating the length.
    pub fn from_words(base: u64, limit: u64, mut words: Vec<u64>) -> Result<Self> {
        if limit <= base {
            return Err(Error::InvalidRange { base, limit });
        }
        let want = words_for(base, limit);
        if words.len() != want {
            return Err(Error::Cache(format!(
                "expected {want} words for [{base}, {limit}], found {}",
                words.len()
            )));
        }
        clear_padding(base, limit, &mut words);
        Ok(Self { base, limit, words })
    }

    /// Primality of `n`; `None` outside `[base, limit]`.
    pub fn get(&self, n: u64) -> Option<bool> {
        (n >= self.base && n <= self.limit).then(|| self.bit(n))
    }

    /// Primality of `n`. Panics outside the table.
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(
            n >= self.base && n <= self.limit,
            "{n} outside [{}, {}]",
            self.base,
            self.limit
        );
        self.bit(n)
    }

    #[inline]
    fn bit(&self, n: u64) -> bool {
        let i = n - self.base;
        (self.words[(i >> 6) as usize] >> (i & 63)) & 1 == 1
    }

    /// Fails with a coverage error unless `[lo, hi]` lies inside the table.
    pub fn ensure_covers(&self, lo: u64, hi: u64) -> Result<()> {
        if lo < self.base || hi > self.limit {
            return Err(Error::Coverage {
                base: self.base,
                limit: self.limit,
                required_base: lo,
                required_limit: hi,
            });
        }
        Ok(())
    }

    /// Number of primes in `[lo, hi]`, both inside the table.
    pub fn count_primes(&self, lo: u64, hi: u64) -> u64 {
        if hi < lo {
            return 0;
        }
        let a = lo - self.base;
        let b = hi - self.base;
        let (wa, wb) = ((a >> 6) as usize, (b >> 6) as usize);
        let lo_mask = !0u64 << (a & 63);
        let hi_mask = !0u64 >> (63 - (b & 63));
        if wa == wb {
            return u64::from((self.words[wa] & lo_mask & hi_mask).count_ones());
        }
        let mut total = u64::from((self.words[wa] & lo_mask).count_ones());
        total += self.words[wa + 1..wb]
            .iter()
            .map(|w| u64::from(w.count_ones()))
            .sum::<u64>();
        total + u64::from((self.words[wb] & hi_mask).count_ones())
    }

    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Primes in the table, ascending.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let start = self.base + 64 * wi as u64;
            BitIter(w).map(move |j| start + u64::from(j))
        })
    }

    /// Writes the `PKT1` cache: magic, base, limit (u64 LE), then the words
    /// as u64 LE.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&self.base.to_le_bytes())?;
        w.write_all(&self.limit.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.words.len() * 8);
        for word in &self.words {
            buf.extend_from_slice(&word.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Cache(format!("bad magic {magic:?}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let base = u64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let limit = u64::from_le_bytes(b8);
        if limit <= base {
            return Err(Error::Cache(format!("limit {limit} <= base {base}")));
        }
        let n = words_for(base, limit);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * 8 {
            return Err(Error::Cache(format!(
                "expected {} payload bytes, found {}",
                n * 8,
                bytes.len()
            )));
        }
        let words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_words(base, limit, words)
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let j = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(j)
    }
}

fn clear_padding(base: u64, limit: u64, words: &mut [u64]) {
    let used = (limit - base) % 64 + 1;
    if used < 64 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << used) - 1;
        }
    }
}

/// Exact primality for every integer in `[base, limit]`.
pub fn sieve_range(base: u64, limit: u64) -> Result<PrimalityTable> {
    sieve_range_with(base, limit, &SieveConfig::default())
}

pub fn sieve_range_with(base: u64, limit: u64, cfg: &SieveConfig) -> Result<PrimalityTable> {
    if limit <= base {
        return Err(Error::InvalidRange { base, limit });
    }
    if limit > 1 << 48 {
        return Err(Error::Resource(format!(
            "limit {limit} exceeds the supported 2^48"
        )));
    }
    let n_words = words_for(base, limit);
    let seg_words = cfg.segment_bits.div_ceil(64).max(1);
    let root = crate::arith::integer_root(limit, 2);
    let base_primes: Vec<u64> = small_primes(root).into_iter().skip(1).collect();
    let mut words = vec![0u64; n_words];

    let fill = |(si, chunk): (usize, &mut [u64])| {
        let lo = base + (si * seg_words * 64) as u64;
        sieve_segment(lo, chunk, &base_primes);
    };
    if cfg.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?;
        pool.install(|| words.par_chunks_mut(seg_words).enumerate().for_each(fill));
    } else {
        words.chunks_mut(seg_words).enumerate().for_each(fill);
    }
    PrimalityTable::from_words(base, limit, words)
}

// `chunk` covers [lo, lo + 64 * chunk.len()); odd_primes are the odd primes up to sqrt(limit).
fn sieve_segment(lo: u64, chunk: &mut [u64], odd_primes: &[u64]) {
    const ODD_WHEN_EVEN_START: u64 = 0xAAAA_AAAA_AAAA_AAAA;
    let mask = if lo.is_multiple_of(2) {
        ODD_WHEN_EVEN_START
    } else {
        !ODD_WHEN_EVEN_START
    };
    chunk.fill(mask);
    let hi = lo + 64 * chunk.len() as u64; // exclusive
    fn clear(chunk: &mut [u64], lo: u64, n: u64) {
        let i = n - lo;
        chunk[(i >> 6) as usize] &= !(1u64 << (i & 63));
    }
    if lo <= 1 && 1 < hi {
        clear(chunk, lo, 1);
    }
    if lo <= 2 && 2 < hi {
        let i = 2 - lo;
        chunk[(i >> 6) as usize] |= 1u64 << (i & 63);
    }
    for &p in odd_primes {
        let sq = p * p;
        if sq >= hi {
            break;
        }
        let mut m = if sq >= lo { sq } else { lo.div_ceil(p) * p };
        if m % 2 == 0 {
            m += p;
        }
        let step = 2 * p;
        while m < hi {
            clear(chunk, lo, m);
            m += step;
        }
    }
}

/// Plain sieve of Eratosthenes over `[0, limit]` in one pass, in the same
/// table layout. Used to cross-check the segmented sieve.
pub fn sieve_monolithic(limit: u64) -> Result<PrimalityTable> {
    if limit == 0 {
        return Err(Error::InvalidRange { base: 0, limit });
    }
    let mut words = vec![0u64; words_for(0, limit)];
    for p in small_primes(limit) {
        words[(p >> 6) as usize] |= 1u64 << (p & 63);
    }
    PrimalityTable::from_words(0, limit, words)
}

/// Distribution of prime counts over the windows `(n, n + h]`, `n = 1..=x`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowHistogram {
    pub x: u64,
    pub h: f64,
    /// `counts[c]` is the number of windows holding exactly `c` primes.
    counts: Vec<u64>,
}

impl WindowHistogram {
    pub fn new(x: u64, h: f64, counts: Vec<u64>) -> Self {
        let mut counts = counts;
        while counts.last() == Some(&0) {
            counts.pop();
        }
        Self { x, h, counts }
    }

    pub fn get(&self, c: usize) -> u64 {
        self.counts.get(c).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Largest `c` with `N_c > 0`.
    pub fn max_count(&self) -> Option<usize> {
        self.counts.len().checked_sub(1)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_map(&self) -> BTreeMap<usize, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(c, &n)| (c, n))
            .collect()
    }
}

/// Number of integers in `(n, n + h]`, i.e. `floor(h)`.
pub fn window_width(h: f64) -> u64 {
    h.floor() as u64
}

/// Histogram of `pi(n + h) - pi(n)` over `n = 1..=x`.
pub fn window_counts(table: &PrimalityTable, x: u64, h: f64) -> Result<WindowHistogram> {
    window_counts_with(table, x, h, 1)
}

pub fn window_counts_with(
    table: &PrimalityTable,
    x: u64,
    h: f64,
    threads: usize,
) -> Result<WindowHistogram> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("window length must be positive, got {h}")));
    }
    let w = window_width(h);
    let need = x
        .checked_add(h.ceil() as u64)
        .ok_or_else(|| Error::domain("x + h overflows"))?;
    table.ensure_covers(1, need.max(2))?;
    if x == 0 {
        return Ok(WindowHistogram::new(0, h, Vec::new()));
    }

    let run = |start: u64, end: u64| -> Vec<u64> {
        let mut hist = vec![0u64; 8];
        let mut c = table.count_primes(start + 1, start + w) as usize;
        for n in start..=end {
            if c >= hist.len() {
                hist.resize(c + 1, 0);
            }
            hist[c] += 1;
            if w > 0 && n < end {
                c = c + usize::from(table.bit(n + 1 + w)) - usize::from(table.bit(n + 1));
            }
        }
        hist
    };

    let threads = threads.max(1) as u64;
    let hist = if threads == 1 || x < 1 << 16 {
        run(1, x)
    } else {
        let chunk = x.div_ceil(threads);
        let ranges: Vec<(u64, u64)> = (0..threads)
            .map(|t| (1 + t * chunk, ((t + 1) * chunk).min(x)))
            .filter(|(a, b)| a <= b)
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?;
        let parts: Vec<Vec<u64>> =
            pool.install(|| ranges.par_iter().map(|&(a, b)| run(a, b)).collect());
        merge_counts(parts)
    };
    Ok(WindowHistogram::new(x, h, hist))
}

fn merge_counts(parts: Vec<Vec<u64>>) -> Vec<u64> {
    let len = parts.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![0u64; len];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// `#{1 <= n <= x : n + h_i prime for every i}`.
pub fn count_tuple_hits(table: &PrimalityTable, tuple: &Tuple, x: u64) -> Result<u64> {
    Ok(tuple_hit_positions(table, tuple, x)?.len() as u64)
}

/// The starts `n` counted by [`count_tuple_hits`], ascending.
pub fn tuple_hit_positions(table: &PrimalityTable, tuple: &Tuple, x: u64) -> Result<Vec<u64>> {
    let (Some(lo), Some(hi)) = (tuple.min_offset(), tuple.max_offset()) else {
        // empty tuple: every n qualifies
        return Ok((1..=x).collect());
    };
    if x == 0 {
        return Ok(Vec::new());
    }
    let top = x
        .checked_add(hi)
        .ok_or_else(|| Error::domain("x + max offset overflows"))?;
    table.ensure_covers(1 + lo, top)?;
    let offs = tuple.offsets();
    Ok((1..=x)
        .filter(|&n| offs.iter().all(|&h| table.bit(n + h)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(n: u64) -> bool {
        crate::arith::is_prime(n)
    }

    #[test]
    fn small_range() {
        let t = sieve_range(0, 30).unwrap();
        let primes: Vec<u64> = t.primes().collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(t.get(0), Some(false));
        assert_eq!(t.get(1), Some(false));
        assert_eq!(t.get(31), None);
    }

    #[test]
    fn offset_range_against_trial_division() {
        let t = sieve_range(1_000_000, 1_000_100).unwrap();
        let primes: Vec<u64> = t.primes().collect();
        assert_eq!(
            primes,
            vec![1_000_003, 1_000_033, 1_000_037, 1_000_039, 1_000_081, 1_000_099]
        );
        for n in 1_000_000..=1_000_100 {
            assert_eq!(t.is_prime(n), trial(n), "{n}");
        }
    }

    #[test]
    fn odd_base_and_tiny_segments() {
        let cfg = SieveConfig {
            segment_bits: 64,
            threads: 1,
        };
        let t = sieve_range_with(1, 5000, &cfg).unwrap();
        for n in 1..=5000 {
            assert_eq!(t.is_prime(n), trial(n), "{n}");
        }
        let t = sieve_range_with(3, 4, &cfg).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn invalid_range() {
        assert!(matches!(sieve_range(10, 10), Err(Error::InvalidRange { .. })));
        assert!(matches!(sieve_range(10, 3), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn pi_of_a_million() {
        let t = sieve_range(0, 1_000_000).unwrap();
        assert_eq!(t.popcount(), 78_498);
        assert_eq!(t.count_primes(2, 1_000_000), 78_498);
        assert_eq!(t.count_primes(2, 100), 25);
        assert_eq!(t.count_primes(90, 96), 0);
        assert_eq!(t.count_primes(97, 97), 1);
    }

    #[test]
    fn threaded_sieve_is_identical() {
        let cfg = SieveConfig {
            segment_bits: 1 << 14,
            threads: 4,
        };
        let a = sieve_range_with(0, 3_000_000, &cfg).unwrap();
        let b = sieve_range(0, 3_000_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_small_case() {
        let t = sieve_range(0, 100).unwrap();
        let h = window_counts(&t, 10, 2.0).unwrap();
        assert_eq!(h.counts(), &[2, 7, 1]);
        assert_eq!(h.total(), 10);
    }

    #[test]
    fn half_width_windows_hold_nothing() {
        let t = sieve_range(0, 100).unwrap();
        let h = window_counts(&t, 5, 0.5).unwrap();
        assert_eq!(h.to_map(), BTreeMap::from([(0, 5)]));
    }

    #[test]
    fn coverage_error_names_required_limit() {
        let t = sieve_range(0, 50).unwrap();
        match window_counts(&t, 50, 3.5) {
            Err(Error::Coverage { required_limit, .. }) => assert_eq!(required_limit, 54),
            other => panic!("unexpected {other:?}"),
        }
        assert!(window_counts(&t, 10, 0.0).is_err());
        let t2 = sieve_range(5, 100).unwrap();
        assert!(matches!(
            window_counts(&t2, 10, 2.0),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn threaded_histogram_is_identical() {
        let t = sieve_range(0, 400_100).unwrap();
        let a = window_counts_with(&t, 400_000, 12.9, 1).unwrap();
        let b = window_counts_with(&t, 400_000, 12.9, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tuple_hits() {
        let t = sieve_range(0, 20_000).unwrap();
        let twins = Tuple::new([0, 2]).unwrap();
        assert_eq!(
            tuple_hit_positions(&t, &twins, 100).unwrap(),
            vec![3, 5, 11, 17, 29, 41, 59, 71]
        );
        assert_eq!(count_tuple_hits(&t, &Tuple::new([0, 1]).unwrap(), 10_000).unwrap(), 1);
        assert_eq!(count_tuple_hits(&t, &Tuple::new([0]).unwrap(), 100).unwrap(), 25);
        assert!(count_tuple_hits(&t, &twins, 19_999).is_err());
    }

    #[test]
    fn cache_round_trip_and_layout() {
        let t = sieve_range(3, 200).unwrap();
        let mut buf = Vec::new();
        t.write_cache(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PKT1");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 200);
        let w0 = u64::from_le_bytes(buf[20..28].try_into().unwrap());
        // bit j of word 0 is primality of 3 + j
        assert_eq!(w0 & 0b1_0101, 0b1_0101); // 3, 5, 7
        assert_eq!((w0 >> 1) & 1, 0); // 4
        let back = PrimalityTable::read_cache(&buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn cache_rejects_corruption() {
        let t = sieve_range(0, 1000).unwrap();
        let mut buf = Vec::new();
        t.write_cache(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(PrimalityTable::read_cache(&bad[..]).is_err());
        assert!(PrimalityTable::read_cache(&buf[..buf.len() - 1]).is_err());
    }
}
