//! Closed-form error bounds for Bernoulli-coded majority voting.
//!
//! Logarithms are natural. Every probability is clamped to `[0, 1]`, so a
//! vacuous bound reads 1.

use crate::error::{Error, Result};

/// Minimum connection probability `min(1, 2·sqrt(C ln n / n))`.
pub fn p_star(n: f64, c: f64) -> f64 {
    (2.0 * (c * n.ln() / n).sqrt()).min(1.0)
}

/// Connection factor `C` for which `p_star(n, C) = p` (ignoring the clamp).
pub fn connection_factor(n: f64, p: f64) -> f64 {
    n * p * p / (4.0 * n.ln())
}

/// `S² / (2(S² + 4))`, continuous at `S = ∞`.
fn snr_exponent(s: f64) -> f64 {
    if s.is_infinite() {
        0.5
    } else {
        let s2 = s * s;
        s2 / (2.0 * (s2 + 4.0))
    }
}

/// Local error bound
/// `q* = 2·max{2/n^{2C}, exp(-sqrt(C n ln n)·S²/(2(S²+4)))}`, clamped.
pub fn q_star(n: f64, c: f64, s: f64) -> f64 {
    let poly = 2.0 * (-2.0 * c * n.ln()).exp();
    let expo = (-(c * n * n.ln()).sqrt() * snr_exponent(s)).exp();
    (2.0 * poly.max(expo)).min(1.0)
}

/// Error bound of one worker holding `n_i` partitions:
/// `exp(-n_i·S²/(2(S²+4)))`, clamped.
pub fn conditional_local_error(n_i: usize, s: f64) -> f64 {
    (-(n_i as f64) * snr_exponent(s)).exp().min(1.0)
}

/// One-sided Hoeffding tail for a Binomial(n, p) sum:
/// `P[X - np >= nε] <= exp(-2ε²n)`. The bound does not depend on `p`.
pub fn hoeffding_tail(n: f64, eps: f64) -> f64 {
    (-2.0 * eps * eps * n).exp().min(1.0)
}

/// Sign-error bound of a unimodal symmetric estimate with SNR `S`:
/// `2/(9S²)` when `S > 2/√3`, else `1/2 - S/(2√3)`.
pub fn sign_error_bound(s: f64) -> f64 {
    let knee = 2.0 / 3f64.sqrt();
    if s > knee {
        2.0 / (9.0 * s * s)
    } else {
        0.5 - s / (2.0 * 3f64.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// Number of workers.
    pub n: f64,
    /// Connection factor.
    pub c: f64,
    /// Worst-coordinate SNR.
    pub s: f64,
    /// Byzantine fraction.
    pub alpha: f64,
    /// Certification target; the certified error is `1/Δ`.
    pub delta: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.n >= 2.0) {
            return bad(format!("n = {} must be >= 2", self.n));
        }
        if !(self.c > 0.0) {
            return bad(format!("C = {} must be > 0", self.c));
        }
        if !(self.s >= 0.0) {
            return bad(format!("S = {} must be >= 0", self.s));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} must lie in [0, 1)", self.alpha));
        }
        if !(self.delta > 2.0) {
            return bad(format!("delta = {} must be > 2", self.delta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// `1 - α` strictly exceeds the right-hand side.
    pub certified: bool,
    /// `u*_min <= 1/2`: no Byzantine fraction can be certified.
    pub vacuous: bool,
    pub rhs: f64,
    pub q_star: f64,
    pub u_min: f64,
    /// The guaranteed global error bound `1/Δ` when certified.
    pub bound: f64,
}

/// Honest-fraction condition
/// `1 - α > (sqrt(ln Δ/n) + sqrt(ln Δ/n + 4u))² / (8u²)` with
/// `u = 1 - q*(n, C, S)`. When it holds, `P[μ̂ ≠ sign(g)] < 1/Δ`.
pub fn certify_global_error(inp: &BoundInputs) -> Result<Certificate> {
    inp.validate()?;
    let q = q_star(inp.n, inp.c, inp.s);
    let u = 1.0 - q;
    let rhs = certificate_rhs(inp.n, inp.delta, u);
    let vacuous = u <= 0.5;
    Ok(Certificate {
        certified: !vacuous && 1.0 - inp.alpha > rhs,
        vacuous,
        rhs,
        q_star: q,
        u_min: u,
        bound: 1.0 / inp.delta,
    })
}

/// Right-hand side of the honest-fraction condition for a given `u`.
pub fn certificate_rhs(n: f64, delta: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return f64::INFINITY;
    }
    let a = delta.ln() / n;
    let num = a.sqrt() + (a + 4.0 * u).sqrt();
    num * num / (8.0 * u * u)
}

/// Everything the `bounds` command prints, as one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRow {
    pub inputs: BoundInputs,
    pub p_star: f64,
    pub certificate: Certificate,
}

impl BoundsRow {
    pub const HEADER: &'static str = "n,C,S,alpha,delta,p_star,q_star,u_min,rhs,bound,certified,vacuous";

    pub fn evaluate(inputs: BoundInputs) -> Result<Self> {
        let certificate = certify_global_error(&inputs)?;
        Ok(Self { inputs, p_star: p_star(inputs.n, inputs.c), certificate })
    }

    pub fn to_csv(&self) -> String {
        let i = &self.inputs;
        let c = &self.certificate;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            i.n, i.c, i.s, i.alpha, i.delta, self.p_star, c.q_star, c.u_min, c.rhs, c.bound, c.certified, c.vacuous
        )
    }
}
