//! Data-allocation matrices.
//!
//! `G` is an `n × n` bit matrix: entry `(i, j)` is set iff worker `i`
//! computes the gradient of data partition `j`. Rows are stored packed,
//! 64 columns per word, row-major.
//!
//! The text format is one row of `0`/`1` characters per line, preceded by
//! an optional `#` metadata header:
//!
//! ```text
//! # kind=deterministic b=1 n=5 r=3.8 r_exact=19/5
//! 10000
//! 01110
//! 11111
//! 11111
//! 11111
//! ```

use std::fmt::Write as _;

use num_rational::Ratio;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// How a matrix came to be.
#[derive(Debug, Clone, PartialEq)]
pub enum CodeKind {
    /// Built by the deterministic construction for `b` Byzantines.
    Deterministic { b: usize },
    /// Sampled entry-wise from Bernoulli(`p`). `redraws` counts how many
    /// all-zero rows had to be sampled again.
    Bernoulli { p: f64, seed: u64, redraws: u64 },
    /// Uncoded: worker `i` holds partition `i` only.
    Identity,
    /// Loaded or assembled by hand.
    Custom,
}

impl CodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            CodeKind::Deterministic { .. } => "deterministic",
            CodeKind::Bernoulli { .. } => "bernoulli",
            CodeKind::Identity => "identity",
            CodeKind::Custom => "custom",
        }
    }
}

/// Parameters from which a code is built.
#[derive(Debug, Clone, PartialEq)]
pub enum CodeParams {
    Deterministic {
        n: usize,
        b: usize,
    },
    Bernoulli {
        n: usize,
        p: f64,
        seed: u64,
    },
    /// Bernoulli with `p = min(1, 2·sqrt(C ln n / n))`.
    BernoulliFactor {
        n: usize,
        c: f64,
        seed: u64,
    },
    Identity {
        n: usize,
    },
}

impl CodeParams {
    pub fn n(&self) -> usize {
        match *self {
            CodeParams::Deterministic { n, .. }
            | CodeParams::Bernoulli { n, .. }
            | CodeParams::BernoulliFactor { n, .. }
            | CodeParams::Identity { n } => n,
        }
    }

    /// Connection probability for Bernoulli parameters.
    pub fn probability(&self) -> Option<f64> {
        match *self {
            CodeParams::Bernoulli { p, .. } => Some(p),
            CodeParams::BernoulliFactor { n, c, .. } => Some(crate::bounds::p_star(n as f64, c)),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<AllocationMatrix> {
        match *self {
            CodeParams::Deterministic { n, b } => build_deterministic(n, b),
            CodeParams::Bernoulli { n, p, seed } => sample_bernoulli(n, p, seed),
            CodeParams::BernoulliFactor { n, c, seed } => {
                if !(c > 0.0) {
                    return Err(Error::InvalidParams(format!("connection factor C = {c} must be > 0")));
                }
                sample_bernoulli(n, crate::bounds::p_star(n as f64, c), seed)
            }
            CodeParams::Identity { n } => AllocationMatrix::identity(n),
        }
    }
}

/// Row counts of the deterministic construction: `s` identity rows and
/// `l` banded rows of weight `2b+1`; the remaining `n - s - l` rows are full.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeterministicLayout {
    pub s: usize,
    pub l: usize,
}

impl DeterministicLayout {
    pub fn new(n: usize, b: usize) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("deterministic codes need odd n >= 3, got n = {n}")));
        }
        if b == 0 || b >= n / 2 {
            return Err(Error::InvalidParams(format!(
                "deterministic codes need 0 < b < {} for n = {n}, got b = {b}",
                n / 2
            )));
        }
        let s = (n - 1) / 2 - b;
        let l = (n - (2 * b + 1)) / (2 * (b + 1)) + 1;
        if s + l > n {
            return Err(Error::InvalidParams(format!("(n = {n}, b = {b}) gives s + L > n")));
        }
        Ok(Self { s, l })
    }

    pub fn full_rows(&self, n: usize) -> usize {
        n - self.s - self.l
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    kind: CodeKind,
}

impl AllocationMatrix {
    fn zeros(n: usize, kind: CodeKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        let words = n.div_ceil(64);
        Ok(Self { n, words, bits: vec![0; n * words], kind })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut g = Self::zeros(n, CodeKind::Identity)?;
        for i in 0..n {
            g.set(i, i, true);
        }
        Ok(g)
    }

    /// Assemble a custom matrix from dense rows.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        let mut g = Self::zeros(n, CodeKind::Custom)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: row.len() });
            }
            for (j, &bit) in row.iter().enumerate() {
                g.set(i, j, bit);
            }
        }
        Ok(g)
    }

    /// Assemble a custom matrix from row masks (bit `j` of `rows[i]` is
    /// entry `(i, j)`). Requires `n <= 64`.
    pub fn from_row_masks(n: usize, rows: &[u64]) -> Result<Self> {
        if n > 64 {
            return Err(Error::TooLarge { n, limit: 64 });
        }
        if rows.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: rows.len() });
        }
        let mut g = Self::zeros(n, CodeKind::Custom)?;
        let valid = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        for (i, &r) in rows.iter().enumerate() {
            g.bits[i] = r & valid;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &CodeKind {
        &self.kind
    }

    pub(crate) fn with_kind(mut self, kind: CodeKind) -> Self {
        self.kind = kind;
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: bool) {
        let w = &mut self.bits[i * self.words + j / 64];
        if v {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Number of partitions assigned to worker `i`.
    pub fn row_weight(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// The partitions `P_i` assigned to worker `i`, in increasing order.
    pub fn row_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(i).iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + t)
            })
        })
    }

    /// Row `i` as a mask, for `n <= 64`.
    pub fn row_mask(&self, i: usize) -> Option<u64> {
        (self.n <= 64).then(|| self.bits[i])
    }

    /// All rows as masks, for `n <= 64`.
    pub fn row_masks(&self) -> Option<Vec<u64>> {
        (self.n <= 64).then(|| self.bits.clone())
    }

    /// Total number of ones, `‖G‖₀`.
    pub fn ones(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Computational redundancy `r = ‖G‖₀ / n`, exact.
    pub fn redundancy(&self) -> Ratio<u64> {
        Ratio::new(self.ones(), self.n as u64)
    }

    pub fn redundancy_f64(&self) -> f64 {
        self.ones() as f64 / self.n as f64
    }

    pub fn first_empty_row(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.row_words(i).iter().all(|&w| w == 0))
    }

    pub fn first_even_row(&self) -> Option<(usize, usize)> {
        (0..self.n).map(|i| (i, self.row_weight(i))).find(|&(_, w)| w % 2 == 0)
    }

    pub fn has_odd_rows(&self) -> bool {
        self.first_even_row().is_none()
    }

    /// Metadata header line (without trailing newline).
    pub fn header(&self) -> String {
        let r = self.redundancy();
        let mut h = format!("# kind={}", self.kind.name());
        match &self.kind {
            CodeKind::Deterministic { b } => write!(h, " b={b}").unwrap(),
            CodeKind::Bernoulli { p, seed, redraws } => {
                write!(h, " p={p} seed={seed} redraws={redraws} expected_r={}", self.n as f64 * p).unwrap()
            }
            CodeKind::Identity | CodeKind::Custom => {}
        }
        write!(h, " n={} r={} r_exact={}/{}", self.n, self.redundancy_f64(), r.numer(), r.denom()).unwrap();
        h
    }

    /// Serialize to the text format, header included.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1) + 64);
        out.push_str(&self.header());
        out.push('\n');
        for i in 0..self.n {
            for j in 0..self.n {
                out.push(if self.get(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parse the text format. A `kind=` header restores the matrix kind;
    /// without one the matrix is `Custom`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if kind.is_none() && rows.is_empty() {
                    kind = parse_header(meta, lineno)?;
                }
                continue;
            }
            let row = line
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Error::Parse { line: lineno, msg: format!("unexpected character {other:?}") }),
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("row has {} columns, expected {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse { line: 0, msg: "no matrix rows".into() });
        }
        if rows[0].len() != rows.len() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("matrix is {}x{}, expected square", rows.len(), rows[0].len()),
            });
        }
        let g = Self::from_rows(&rows)?;
        Ok(match kind {
            Some(k) => g.with_kind(k),
            None => g,
        })
    }

    /// SHA-256 of the serialized text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

fn parse_header(meta: &str, line: usize) -> Result<Option<CodeKind>> {
    let mut fields = std::collections::HashMap::new();
    for tok in meta.split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k, v);
        }
    }
    let num = |key: &str| -> Result<&str> {
        fields.get(key).copied().ok_or_else(|| Error::Parse { line, msg: format!("header is missing {key}") })
    };
    let bad = |key: &str| Error::Parse { line, msg: format!("bad header value for {key}") };
    let kind = match fields.get("kind").copied() {
        None => return Ok(None),
        Some("deterministic") => CodeKind::Deterministic { b: num("b")?.parse().map_err(|_| bad("b"))? },
        Some("bernoulli") => CodeKind::Bernoulli {
            p: num("p")?.parse().map_err(|_| bad("p"))?,
            seed: num("seed")?.parse().map_err(|_| bad("seed"))?,
            redraws: num("redraws")?.parse().map_err(|_| bad("redraws"))?,
        },
        Some("identity") => CodeKind::Identity,
        Some("custom") => CodeKind::Custom,
        Some(other) => return Err(Error::Parse { line, msg: format!("unknown kind {other:?}") }),
    };
    Ok(Some(kind))
}

/// Deterministic allocation that tolerates `b` Byzantine workers.
///
/// Layout, with `s = (n-1)/2 - b` and `L = ⌊(n-2b-1) / (2(b+1))⌋ + 1`:
/// the top-left `s × s` block is the identity; rows `s+1..=s+L` each hold
/// `2b+1` consecutive ones inside columns `s+1..=n`, row `l` starting at
/// offset `(l-1)(b+1)`; the remaining rows are all ones.
pub fn build_deterministic(n: usize, b: usize) -> Result<AllocationMatrix> {
    let DeterministicLayout { s, l } = DeterministicLayout::new(n, b)?;
    let mut g = AllocationMatrix::zeros(n, CodeKind::Deterministic { b })?;
    for i in 0..s {
        g.set(i, i, true);
    }
    for row in 0..l {
        let start = s + row * (b + 1);
        let end = start + 2 * b + 1;
        if end > n {
            return Err(Error::InvalidParams(format!("(n = {n}, b = {b}) overflows the band")));
        }
        for j in start..end {
            g.set(s + row, j, true);
        }
    }
    for i in s + l..n {
        for j in 0..n {
            g.set(i, j, true);
        }
    }
    Ok(g)
}

/// Closed-form redundancy of the deterministic construction:
/// `(n + 2b + 1)/2 - (⌊(n-2b-1)/(2(b+1))⌋ + 1/2)·(n-2b-1)/n`.
pub fn theoretical_redundancy(n: usize, b: usize) -> Result<Ratio<i64>> {
    DeterministicLayout::new(n, b)?;
    let (n, b) = (n as i64, b as i64);
    let k = n - (2 * b + 1);
    let fl = k / (2 * (b + 1));
    let first = Ratio::new(n + 2 * b + 1, 2);
    let second = (Ratio::from_integer(fl) + Ratio::new(1, 2)) * Ratio::new(k, n);
    Ok(first - second)
}

/// Sample a random Bernoulli(`p`) code from `seed`. All-zero rows are
/// redrawn until nonempty; the redraw count is kept in the matrix kind.
pub fn sample_bernoulli(n: usize, p: f64, seed: u64) -> Result<AllocationMatrix> {
    let mut rng = rng::stream(seed, Stream::Code);
    let (mut g, redraws) = sample_bernoulli_with(n, p, &mut rng)?;
    g.kind = CodeKind::Bernoulli { p, seed, redraws };
    Ok(g)
}

/// Sample a Bernoulli code from a caller-owned generator. Returns the matrix
/// (kind `Custom`) and the number of redrawn rows.
pub fn sample_bernoulli_with<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<(AllocationMatrix, u64)> {
    check_probability(p)?;
    let mut g = AllocationMatrix::zeros(n, CodeKind::Custom)?;
    let mut redraws = 0;
    for i in 0..n {
        loop {
            for j in 0..n {
                let bit = rng.gen_bool(p);
                g.set(i, j, bit);
            }
            if g.row_weight(i) > 0 {
                break;
            }
            redraws += 1;
        }
    }
    Ok((g, redraws))
}

/// Sample a single nonempty Bernoulli(`p`) row as a list of partitions.
/// Returns the number of redraws alongside.
pub fn sample_bernoulli_row<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R, out: &mut Vec<usize>) -> u64 {
    let mut redraws = 0;
    loop {
        out.clear();
        for j in 0..n {
            if rng.gen_bool(p) {
                out.push(j);
            }
        }
        if !out.is_empty() {
            return redraws;
        }
        redraws += 1;
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("connection probability p = {p} must lie in (0, 1]")))
    }
}
