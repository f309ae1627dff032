use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A finite set of distinct non-negative offsets, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Tuple(Vec<u64>);

impl Tuple {
    /// Builds a tuple from offsets in any order. Duplicates are rejected.
    pub fn new(offsets: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut v: Vec<u64> = offsets.into_iter().collect();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::TupleParse {
                input: join(&v),
                reason: format!("duplicate offset {}", w[0]),
            });
        }
        Ok(Tuple(v))
    }

    pub fn empty() -> Self {
        Tuple(Vec::new())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.0
    }

    pub fn min_offset(&self) -> Option<u64> {
        self.0.first().copied()
    }

    pub fn max_offset(&self) -> Option<u64> {
        self.0.last().copied()
    }

    pub fn span(&self) -> u64 {
        match (self.min_offset(), self.max_offset()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    /// Shifts every offset by `c`.
    pub fn translate(&self, c: u64) -> Result<Self> {
        let v = self
            .0
            .iter()
            .map(|&h| h.checked_add(c))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::domain("translated offset overflows u64"))?;
        Ok(Tuple(v))
    }

    /// Positive pairwise differences `h_j - h_i` for `i < j`.
    pub fn differences(&self) -> impl Iterator<Item = u64> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(move |(i, &a)| self.0[i + 1..].iter().map(move |&b| b - a))
    }

    /// `log |D_H|`, where `D_H` is the product of all pairwise differences.
    /// Zero for `k < 2` (empty product).
    pub fn log_abs_discriminant(&self) -> f64 {
        self.differences().map(|d| (d as f64).ln()).sum()
    }

    /// `|D_H|` when it fits in 128 bits.
    pub fn abs_discriminant(&self) -> Option<u128> {
        self.differences()
            .try_fold(1u128, |acc, d| acc.checked_mul(u128::from(d)))
    }
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.0))
    }
}

impl FromStr for Tuple {
    type Err = Error;

    /// Parses comma-separated non-negative integers, e.g. `"0,2,6"`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Ok(Tuple::empty());
        }
        let mut v = Vec::new();
        for tok in trimmed.split(',') {
            let tok = tok.trim();
            let h = tok.parse::<u64>().map_err(|e| Error::TupleParse {
                input: s.to_string(),
                reason: format!("{tok:?}: {e}"),
            })?;
            v.push(h);
        }
        Tuple::new(v).map_err(|_| Error::TupleParse {
            input: s.to_string(),
            reason: "duplicate offsets".into(),
        })
    }
}

impl TryFrom<&[u64]> for Tuple {
    type Error = Error;

    fn try_from(v: &[u64]) -> Result<Self> {
        Tuple::new(v.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_sorts() {
        let t: Tuple = "6, 0,2".parse().unwrap();
        assert_eq!(t.offsets(), &[0, 2, 6]);
        assert_eq!(t.to_string(), "0,2,6");
        assert_eq!(t.span(), 6);
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!("0,2,2".parse::<Tuple>().is_err());
        assert!("0,-2".parse::<Tuple>().is_err());
        assert!("0,,2".parse::<Tuple>().is_err());
    }

    #[test]
    fn empty_string_is_empty_tuple() {
        let t: Tuple = "".parse().unwrap();
        assert!(t.is_empty());
        assert_eq!(t.log_abs_discriminant(), 0.0);
    }

    #[test]
    fn discriminant_of_triplet() {
        let t: Tuple = "0,2,6".parse().unwrap();
        assert_eq!(t.abs_discriminant(), Some(48));
        assert_eq!(t.differences().collect::<Vec<_>>(), vec![2, 6, 4]);
    }
}
