//! Hierarchical majority voting.
//!
//! Worker `i` outputs `c_i = maj{m_j : j ∈ P_i}` and the server outputs
//! `μ̂ = maj(y)`. Conventions: `sign(0) = +1`; an encoder tie (even row
//! weight) resolves to `+1` in the pure sign domain; a decoder tie at
//! weight exactly `⌊n/2⌋` resolves to `-1`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use crate::allocation::AllocationMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    /// Sign of a real value, with `sign(0) = +1`.
    #[inline]
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    #[inline]
    pub fn from_bit(bit: bool) -> Sign {
        if bit {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    #[inline]
    pub fn bit(self) -> bool {
        self == Sign::Plus
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// A vector over {+1, -1}: a message `m`, codeword `c` or received word `y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<Sign>);

impl SignVector {
    pub fn new(values: Vec<Sign>) -> Self {
        Self(values)
    }

    pub fn filled(n: usize, s: Sign) -> Self {
        Self(vec![s; n])
    }

    /// Binary view: bit `j` of `mask` set ↦ `+1` at position `j`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self((0..n).map(|j| Sign::from_bit((mask >> j) & 1 == 1)).collect())
    }

    /// Binary view as a mask; `None` if `len > 64`.
    pub fn to_mask(&self) -> Option<u64> {
        (self.0.len() <= 64).then(|| self.0.iter().enumerate().fold(0u64, |acc, (j, s)| acc | ((s.bit() as u64) << j)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of `+1` entries.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|s| s.bit()).count()
    }

    pub fn as_slice(&self) -> &[Sign] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Sign] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<Sign> {
        self.0
    }

    /// Binary string, `1` for `+1`.
    pub fn to_binary_string(&self) -> String {
        self.0.iter().map(|s| if s.bit() { '1' } else { '0' }).collect()
    }

    pub fn hamming(&self, other: &SignVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl Neg for SignVector {
    type Output = SignVector;
    fn neg(self) -> SignVector {
        SignVector(self.0.into_iter().map(|s| -s).collect())
    }
}

impl Neg for &SignVector {
    type Output = SignVector;
    fn neg(self) -> SignVector {
        SignVector(self.0.iter().map(|&s| -s).collect())
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(if s.bit() { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Accepts either `+`/`-` or `1`/`0` strings; commas and spaces are ignored.
impl FromStr for SignVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '+' | '1' => Ok(Sign::Plus),
                '-' | '0' => Ok(Sign::Minus),
                other => Err(Error::Parse { line: 1, msg: format!("bad sign character {other:?}") }),
            })
            .collect::<Result<Vec<_>>>()
            .map(SignVector)
    }
}

/// Majority of `plus` positive votes out of `total`, with `tie` on equality.
#[inline]
pub fn majority(plus: usize, total: usize, tie: Sign) -> Sign {
    match (2 * plus).cmp(&total) {
        std::cmp::Ordering::Greater => Sign::Plus,
        std::cmp::Ordering::Less => Sign::Minus,
        std::cmp::Ordering::Equal => tie,
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// Local encoders: `c_i = maj{m_j : j ∈ P_i}`.
pub fn encode(m: &SignVector, g: &AllocationMatrix) -> Result<SignVector> {
    check_len(g.n(), m.len())?;
    if let Some(row) = g.first_empty_row() {
        return Err(Error::EmptyRow { row });
    }
    let c = (0..g.n())
        .map(|i| {
            let (plus, total) = g.row_indices(i).fold((0, 0), |(p, t), j| (p + m.0[j].bit() as usize, t + 1));
            majority(plus, total, Sign::Plus)
        })
        .collect();
    Ok(SignVector(c))
}

/// Global decoder: `+1` iff more than `⌊n/2⌋` entries are `+1`.
pub fn decode(y: &SignVector) -> Sign {
    Sign::from_bit(y.weight() > y.len() / 2)
}

/// Plain majority of a message, the quantity the pipeline estimates.
pub fn majority_opinion(m: &SignVector) -> Sign {
    decode(m)
}

/// Encoder over row masks (`n <= 64`): bit `i` of the result is `c_i`.
/// Ties resolve to 1.
#[inline]
pub fn encode_mask(m: u64, rows: &[u64]) -> u64 {
    rows.iter().enumerate().fold(0u64, |acc, (i, &row)| {
        let hits = (m & row).count_ones();
        acc | (((2 * hits >= row.count_ones()) as u64) << i)
    })
}

/// `|S_v(m)|` for every `v` that occurs as `(w+1)/2` for some row weight `w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvCounts(pub BTreeMap<usize, usize>);

impl SvCounts {
    pub fn get(&self, v: usize) -> usize {
        self.0.get(&v).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

/// Count the rows of weight `2v-1` whose overlap with the positive entries
/// of `m` is at least `v`.
pub fn s_v_count(m: &SignVector, g: &AllocationMatrix) -> Result<SvCounts> {
    check_len(g.n(), m.len())?;
    if let Some((row, weight)) = g.first_even_row() {
        return Err(Error::EvenRowWeight { row, weight });
    }
    let mut counts = BTreeMap::new();
    for i in 0..g.n() {
        let w = g.row_weight(i);
        let v = w.div_ceil(2);
        let overlap = g.row_indices(i).filter(|&j| m.0[j].bit()).count();
        *counts.entry(v).or_insert(0) += (overlap >= v) as usize;
    }
    Ok(SvCounts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::build_deterministic;

    fn sv(s: &str) -> SignVector {
        s.parse().unwrap()
    }

    #[test]
    fn identity_encoder_is_transparent() {
        let g = AllocationMatrix::identity(5).unwrap();
        for mask in 0..32u64 {
            let m = SignVector::from_mask(mask, 5);
            assert_eq!(encode(&m, &g).unwrap(), m);
            assert_eq!(decode(&encode(&m, &g).unwrap()), majority_opinion(&m));
        }
    }

    #[test]
    fn deterministic_5_1_encoding() {
        let g = build_deterministic(5, 1).unwrap();
        let c = encode(&sv("++---"), &g).unwrap();
        assert_eq!(c, sv("+----"));
    }

    #[test]
    fn odd_rows_are_sign_equivariant() {
        let g = build_deterministic(5, 1).unwrap();
        for mask in 0..32u64 {
            let m = SignVector::from_mask(mask, 5);
            assert_eq!(encode(&-&m, &g).unwrap(), -encode(&m, &g).unwrap());
        }
    }

    #[test]
    fn decoder_ties_go_negative() {
        assert_eq!(decode(&sv("+++--")), Sign::Plus);
        assert_eq!(decode(&sv("++--")), Sign::Minus);
        assert_eq!(decode(&sv("++---")), Sign::Minus);
    }

    #[test]
    fn encoder_tie_goes_positive() {
        let g = AllocationMatrix::from_rows(&[vec![true, true], vec![true, false]]).unwrap();
        let c = encode(&sv("+-"), &g).unwrap();
        assert_eq!(c, sv("++"));
        assert_eq!(encode_mask(0b01, &g.row_masks().unwrap()), 0b11);
    }

    #[test]
    fn encode_errors() {
        let g = AllocationMatrix::from_rows(&[vec![true, false], vec![false, false]]).unwrap();
        assert_eq!(encode(&sv("++"), &g), Err(Error::EmptyRow { row: 1 }));
        let id = AllocationMatrix::identity(3).unwrap();
        assert!(matches!(encode(&sv("++"), &id), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn s_v_for_5_1() {
        let g = build_deterministic(5, 1).unwrap();
        let counts = s_v_count(&sv("11000"), &g).unwrap();
        assert_eq!(counts.get(1), 1);
        assert_eq!(counts.get(2), 0);
        assert_eq!(counts.get(3), 0);
        assert_eq!(counts.total(), 1);
        assert_eq!(counts.total(), encode(&sv("11000"), &g).unwrap().weight());
        assert_eq!(s_v_count(&sv("00000"), &g).unwrap().total(), 0);
    }

    #[test]
    fn s_v_rejects_even_rows() {
        let g = AllocationMatrix::from_rows(&[vec![true, true], vec![true, false]]).unwrap();
        assert_eq!(s_v_count(&sv("10"), &g), Err(Error::EvenRowWeight { row: 0, weight: 2 }));
    }

    #[test]
    fn mask_encoder_matches_vector_encoder() {
        let g = build_deterministic(7, 2).unwrap();
        let rows = g.row_masks().unwrap();
        for mask in 0..128u64 {
            let m = SignVector::from_mask(mask, 7);
            let c = encode(&m, &g).unwrap();
            assert_eq!(c.to_mask().unwrap(), encode_mask(mask, &rows));
        }
    }

    #[test]
    fn parse_and_display() {
        let m = sv("+-+");
        assert_eq!(m.to_string(), "+-+");
        assert_eq!(m.to_binary_string(), "101");
        assert_eq!(sv("1,0,1"), m);
        assert!("+x".parse::<SignVector>().is_err());
        assert_eq!(Sign::of(0.0), Sign::Plus);
        assert_eq!(Sign::of(-0.0), Sign::Plus);
    }
}
