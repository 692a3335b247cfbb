//! Exhaustive perfect b-Byzantine tolerance checks.
//!
//! Two independent routes decide whether every message survives any
//! corruption of up to `b` worker outputs:
//!
//! - [`verify_lemma2`] enumerates the `C(n, ⌊n/2⌋)` binary messages of weight
//!   `⌊n/2⌋` and checks that at most `⌊n/2⌋ - b` workers vote 1.
//! - [`verify_bruteforce`] enumerates all `2^n` messages, encodes them and
//!   applies the worst-case flip of `b` worker outputs toward the wrong side.
//!
//! Messages are binary masks (bit `j` is partition `j`), enumerated in
//! increasing mask order, which for fixed weight is Gosper's next-combination
//! order. The message space is cut into fixed chunks scanned in parallel;
//! the reported witness is always the first one in enumeration order.

use std::fmt;

use rayon::prelude::*;

use crate::allocation::AllocationMatrix;
use crate::error::{Error, Result};
use crate::voting::{encode_mask, SignVector};

/// Largest `n` accepted by [`verify_lemma2`].
pub const LEMMA2_MAX_N: usize = 31;
/// Largest `n` accepted by [`verify_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 15;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lemma2,
    BruteForce,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lemma2 => "lemma2",
            Method::BruteForce => "bruteforce",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma2" => Ok(Method::Lemma2),
            "bruteforce" => Ok(Method::BruteForce),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

/// A message on which tolerance fails, with the number of workers that
/// voted 1 on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub message: SignVector,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToleranceReport {
    pub n: usize,
    pub b: usize,
    pub verdict: bool,
    pub witness: Option<Witness>,
    /// Messages examined up to and including the witness, or the whole
    /// space when the verdict is true.
    pub messages_checked: u64,
    pub method: Method,
}

impl fmt::Display for ToleranceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "method={} n={} b={} tolerant={} messages_checked={}",
            self.method, self.n, self.b, self.verdict, self.messages_checked
        )?;
        if let Some(w) = &self.witness {
            write!(f, " witness={} count={}", w.message.to_binary_string(), w.count)?;
        }
        Ok(())
    }
}

/// `C(n, k)` for `n <= 64`, `u64` arithmetic.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Next mask with the same popcount (Gosper's hack).
#[inline]
fn next_combination(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

/// The `rank`-th weight-`k` mask in increasing order.
fn unrank_combination(mut rank: u64, k: usize, n: usize) -> u64 {
    let mut mask = 0u64;
    for i in (1..=k).rev() {
        let mut c = i - 1;
        while c + 1 < n && binomial(c + 1, i) <= rank {
            c += 1;
        }
        rank -= binomial(c, i);
        mask |= 1 << c;
    }
    mask
}

fn odd_row_masks(g: &AllocationMatrix, limit: usize) -> Result<Vec<u64>> {
    if g.n() > limit {
        return Err(Error::TooLarge { n: g.n(), limit });
    }
    if let Some((row, weight)) = g.first_even_row() {
        return Err(Error::EvenRowWeight { row, weight });
    }
    Ok(g.row_masks().expect("n <= 64"))
}

/// Weight-condition check: tolerant iff every weight-`⌊n/2⌋` message makes
/// at most `⌊n/2⌋ - b` workers vote 1.
pub fn verify_lemma2(g: &AllocationMatrix, b: usize) -> Result<ToleranceReport> {
    let n = g.n();
    let rows = odd_row_masks(g, LEMMA2_MAX_N)?;
    if b >= n.div_ceil(2) {
        return Err(Error::InvalidParams(format!("b = {b} must be below ⌈n/2⌉ = {}", n.div_ceil(2))));
    }
    let k = n / 2;
    let limit = k - b;
    let total = binomial(n, k);
    let chunks = total.div_ceil(CHUNK);

    let found = (0..chunks).into_par_iter().find_map_first(|chunk| {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut m = unrank_combination(start, k, n);
        for rank in start..end {
            let count = encode_mask(m, &rows).count_ones() as usize;
            if count > limit {
                return Some((rank, m, count));
            }
            if k > 0 && rank + 1 < end {
                m = next_combination(m);
            }
        }
        None
    });

    Ok(report(n, b, Method::Lemma2, total, found))
}

/// Exhaustive check over all `2^n` messages with the worst-case flip of `b`
/// worker outputs. Rows of even weight are allowed here; their ties vote 1.
pub fn verify_bruteforce(g: &AllocationMatrix, b: usize) -> Result<ToleranceReport> {
    let n = g.n();
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge { n, limit: BRUTEFORCE_MAX_N });
    }
    if let Some(row) = g.first_empty_row() {
        return Err(Error::EmptyRow { row });
    }
    let rows = g.row_masks().expect("n <= 64");
    let half = n / 2;
    let total = 1u64 << n;
    let chunks = total.div_ceil(CHUNK);

    let found = (0..chunks).into_par_iter().find_map_first(|chunk| {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(total);
        (start..end).find_map(|m| {
            let truth = m.count_ones() as usize > half;
            let ones = encode_mask(m, &rows).count_ones() as usize;
            // Worst case: the attacker pushes the vote count toward the
            // wrong side by as many positions as it controls.
            let attacked = if truth { ones - ones.min(b) } else { ones + b.min(n - ones) };
            let decoded = attacked > half;
            (decoded != truth).then_some((m, m, ones))
        })
    });

    Ok(report(n, b, Method::BruteForce, total, found))
}

fn report(n: usize, b: usize, method: Method, total: u64, found: Option<(u64, u64, usize)>) -> ToleranceReport {
    match found {
        Some((rank, m, count)) => ToleranceReport {
            n,
            b,
            verdict: false,
            witness: Some(Witness { message: SignVector::from_mask(m, n), count }),
            messages_checked: rank + 1,
            method,
        },
        None => ToleranceReport { n, b, verdict: true, witness: None, messages_checked: total, method },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::build_deterministic;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(31, 15), 300_540_195);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn unrank_follows_gosper_order() {
        for (n, k) in [(7, 3), (9, 4), (6, 1), (5, 5)] {
            let mut m = (1u64 << k) - 1;
            for rank in 0..binomial(n, k) {
                assert_eq!(unrank_combination(rank, k, n), m, "n={n} k={k} rank={rank}");
                if rank + 1 < binomial(n, k) {
                    m = next_combination(m);
                }
            }
        }
    }

    #[test]
    fn identity_fails_with_first_witness() {
        let g = AllocationMatrix::identity(5).unwrap();
        let r = verify_lemma2(&g, 1).unwrap();
        assert!(!r.verdict);
        let w = r.witness.unwrap();
        assert_eq!(w.message.to_binary_string(), "11000");
        assert_eq!(w.count, 2);
        assert_eq!(r.messages_checked, 1);
    }

    #[test]
    fn deterministic_5_1_passes_both() {
        let g = build_deterministic(5, 1).unwrap();
        let a = verify_lemma2(&g, 1).unwrap();
        assert!(a.verdict && a.witness.is_none());
        assert_eq!(a.messages_checked, 10);
        let b = verify_bruteforce(&g, 1).unwrap();
        assert!(b.verdict);
        assert_eq!(b.messages_checked, 32);
    }

    #[test]
    fn identity_3_bruteforce_fails() {
        let g = AllocationMatrix::identity(3).unwrap();
        let r = verify_bruteforce(&g, 1).unwrap();
        assert!(!r.verdict);
        assert!(r.witness.is_some());
    }

    #[test]
    fn guards() {
        let big = AllocationMatrix::identity(33).unwrap();
        assert!(matches!(verify_lemma2(&big, 1), Err(Error::TooLarge { .. })));
        let mid = AllocationMatrix::identity(17).unwrap();
        assert!(matches!(verify_bruteforce(&mid, 1), Err(Error::TooLarge { .. })));
        let even = AllocationMatrix::from_rows(&[vec![true, true], vec![false, true]]).unwrap();
        assert!(matches!(verify_lemma2(&even, 0), Err(Error::EvenRowWeight { .. })));
        let g = build_deterministic(5, 1).unwrap();
        assert!(verify_lemma2(&g, 3).is_err());
    }

    #[test]
    fn chunked_scan_crosses_boundaries() {
        // C(21, 10) = 352716 spans many chunks.
        let g = build_deterministic(21, 4).unwrap();
        let r = verify_lemma2(&g, 4).unwrap();
        assert!(r.verdict);
        assert_eq!(r.messages_checked, binomial(21, 10));
        let r = verify_lemma2(&AllocationMatrix::identity(21).unwrap(), 1).unwrap();
        assert_eq!(r.witness.unwrap().message.to_mask(), Some(0b11_1111_1111));
    }
}
