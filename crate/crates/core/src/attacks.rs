//! Byzantine behaviour on the worker-to-server links.
//!
//! Attacks act on codewords only: an intact worker forwards `c_i`, a
//! Byzantine worker sends something else in `{+1, -1}`.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::voting::{Sign, SignVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackModel {
    /// Send `-c_i`.
    Reverse,
    /// Send a fixed sign per coordinate of the model. In the single-bit
    /// setting this is just the sign attached to the current coordinate.
    Directional(Sign),
    /// Send `-sign(g)`, the worst case for the global error.
    OracleReverse,
}

impl fmt::Display for AttackModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackModel::Reverse => f.write_str("reverse"),
            AttackModel::Directional(Sign::Plus) => f.write_str("directional"),
            AttackModel::Directional(Sign::Minus) => f.write_str("directional-negative"),
            AttackModel::OracleReverse => f.write_str("oracle-reverse"),
        }
    }
}

impl FromStr for AttackModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "reverse" => Ok(AttackModel::Reverse),
            "directional" => Ok(AttackModel::Directional(Sign::Plus)),
            "directional-negative" => Ok(AttackModel::Directional(Sign::Minus)),
            "oracle-reverse" => Ok(AttackModel::OracleReverse),
            other => Err(Error::InvalidParams(format!("unknown attack model {other:?}"))),
        }
    }
}

/// A fixed Byzantine set plus the behaviour of its members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSpec {
    byzantine: Vec<usize>,
    pub model: AttackModel,
}

impl AttackSpec {
    /// Sorted, deduplicated Byzantine indices (0-based).
    pub fn new(n: usize, mut byzantine: Vec<usize>, model: AttackModel) -> Result<Self> {
        byzantine.sort_unstable();
        byzantine.dedup();
        if let Some(&index) = byzantine.iter().find(|&&i| i >= n) {
            return Err(Error::ByzantineOutOfRange { index, n });
        }
        Ok(Self { byzantine, model })
    }

    pub fn none() -> Self {
        Self { byzantine: Vec::new(), model: AttackModel::Reverse }
    }

    /// Draw `b` distinct Byzantine workers uniformly.
    pub fn random<R: Rng + ?Sized>(n: usize, b: usize, model: AttackModel, rng: &mut R) -> Result<Self> {
        if b > n {
            return Err(Error::InvalidParams(format!("b = {b} exceeds n = {n}")));
        }
        let set = index::sample(rng, n, b).into_vec();
        Self::new(n, set, model)
    }

    pub fn byzantine(&self) -> &[usize] {
        &self.byzantine
    }

    pub fn b(&self) -> usize {
        self.byzantine.len()
    }

    /// Byzantine fraction `α = b / n`.
    pub fn alpha(&self, n: usize) -> f64 {
        self.b() as f64 / n as f64
    }

    /// What worker `i` sends given its codeword bit.
    #[inline]
    pub fn corrupt(&self, codeword: Sign, true_sign: Option<Sign>) -> Result<Sign> {
        Ok(match self.model {
            AttackModel::Reverse => -codeword,
            AttackModel::Directional(d) => d,
            AttackModel::OracleReverse => -true_sign.ok_or(Error::MissingTrueSign)?,
        })
    }

    /// In-place form of [`apply_attack`].
    pub fn apply_in_place(&self, y: &mut [Sign], true_sign: Option<Sign>) -> Result<()> {
        if self.model == AttackModel::OracleReverse && true_sign.is_none() {
            return Err(Error::MissingTrueSign);
        }
        let n = y.len();
        for &i in &self.byzantine {
            let slot = y.get_mut(i).ok_or(Error::ByzantineOutOfRange { index: i, n })?;
            *slot = self.corrupt(*slot, true_sign)?;
        }
        Ok(())
    }
}

/// Received word `y`: intact workers pass `c_i` through, Byzantine workers
/// send according to the model.
pub fn apply_attack(c: &SignVector, spec: &AttackSpec, true_sign: Option<Sign>) -> Result<SignVector> {
    let mut y = c.clone();
    spec.apply_in_place(y.as_mut_slice(), true_sign)?;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn sv(s: &str) -> SignVector {
        s.parse().unwrap()
    }

    #[test]
    fn empty_set_passes_through() {
        let c = sv("+-+--");
        for model in [AttackModel::Reverse, AttackModel::Directional(Sign::Plus), AttackModel::OracleReverse] {
            let spec = AttackSpec::new(5, vec![], model).unwrap();
            assert_eq!(apply_attack(&c, &spec, Some(Sign::Plus)).unwrap(), c);
        }
    }

    #[test]
    fn reverse_single_flip() {
        let spec = AttackSpec::new(3, vec![1], AttackModel::Reverse).unwrap();
        assert_eq!(apply_attack(&sv("+-+"), &spec, None).unwrap(), sv("+++"));
    }

    #[test]
    fn directional_all_ones() {
        let spec = AttackSpec::new(5, vec![0, 1], AttackModel::Directional(Sign::Plus)).unwrap();
        assert_eq!(apply_attack(&sv("--+-+"), &spec, None).unwrap(), sv("+++-+"));
    }

    #[test]
    fn oracle_reverse_needs_truth() {
        let spec = AttackSpec::new(3, vec![0], AttackModel::OracleReverse).unwrap();
        assert_eq!(apply_attack(&sv("+++"), &spec, None), Err(Error::MissingTrueSign));
        assert_eq!(apply_attack(&sv("+++"), &spec, Some(Sign::Plus)).unwrap(), sv("-++"));
    }

    #[test]
    fn out_of_range() {
        assert!(AttackSpec::new(3, vec![3], AttackModel::Reverse).is_err());
        let spec = AttackSpec::new(5, vec![4], AttackModel::Reverse).unwrap();
        assert!(apply_attack(&sv("+++"), &spec, None).is_err());
    }

    #[test]
    fn random_sets_are_reproducible() {
        let a = AttackSpec::random(9, 3, AttackModel::Reverse, &mut stream(1, Stream::Byzantine)).unwrap();
        let b = AttackSpec::random(9, 3, AttackModel::Reverse, &mut stream(1, Stream::Byzantine)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.b(), 3);
        assert!(a.byzantine().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn model_names_round_trip() {
        for s in ["reverse", "directional", "oracle-reverse", "directional-negative"] {
            assert_eq!(s.parse::<AttackModel>().unwrap().to_string(), s);
        }
        assert!("flip".parse::<AttackModel>().is_err());
    }
}
