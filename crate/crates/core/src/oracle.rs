//! Simulated stochastic-gradient oracle.
//!
//! A per-sample gradient is `g + ξ` with `ξ` zero-mean, symmetric and
//! unimodal with standard deviation `σ`. A partition's mini-batch gradient
//! averages `B` such samples, so its noise has variance `σ²/B` and the
//! per-partition SNR is `S = |g|·√B/σ`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::par_count;
use crate::voting::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    Gaussian,
    Laplace,
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Laplace => "laplace",
        })
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseFamily::Gaussian),
            "laplace" => Ok(NoiseFamily::Laplace),
            other => Err(Error::InvalidParams(format!("unknown noise family {other:?}"))),
        }
    }
}

impl NoiseFamily {
    /// One zero-mean draw with standard deviation `sigma`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(self, sigma: f64, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::Gaussian => sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::Laplace => {
                // Inverse CDF; scale σ/√2 gives variance σ².
                let u: f64 = rng.gen::<f64>() - 0.5;
                let scale = sigma / std::f64::consts::SQRT_2;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    /// Mean of `batch` zero-mean draws with standard deviation `sigma`.
    ///
    /// For Gaussian noise the mean is drawn directly from `N(0, σ²/B)`,
    /// which has the same law as averaging `B` draws.
    #[inline]
    pub fn batch_mean<R: Rng + ?Sized>(self, sigma: f64, batch: usize, rng: &mut R) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        match self {
            NoiseFamily::Gaussian => self.draw(sigma / (batch as f64).sqrt(), rng),
            NoiseFamily::Laplace => (0..batch).map(|_| self.draw(sigma, rng)).sum::<f64>() / batch as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// True gradient on the coordinate.
    pub g: f64,
    /// Per-sample noise standard deviation.
    pub sigma: f64,
    /// Mini-batch size per partition.
    pub batch: usize,
    pub noise: NoiseFamily,
}

impl OracleConfig {
    pub fn new(g: f64, sigma: f64, batch: usize, noise: NoiseFamily) -> Result<Self> {
        let cfg = Self { g, sigma, batch, noise };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Gaussian oracle with `|g|/σ = 1` at the given SNR, batch `B`.
    pub fn with_snr(snr: f64, batch: usize) -> Self {
        Self { g: 1.0, sigma: (batch as f64).sqrt() / snr, batch, noise: NoiseFamily::Gaussian }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParams(format!("sigma = {} must be finite and >= 0", self.sigma)));
        }
        if self.batch == 0 {
            return Err(Error::InvalidParams("batch must be >= 1".into()));
        }
        if !self.g.is_finite() {
            return Err(Error::InvalidParams("g must be finite".into()));
        }
        Ok(())
    }

    /// Standard deviation of a mini-batch gradient, `σ/√B`.
    pub fn batch_sigma(&self) -> f64 {
        self.sigma / (self.batch as f64).sqrt()
    }

    /// `S = |g|·√B/σ`; infinite when noiseless.
    pub fn snr(&self) -> f64 {
        if self.sigma == 0.0 {
            f64::INFINITY
        } else {
            self.g.abs() / self.batch_sigma()
        }
    }

    pub fn true_sign(&self) -> Sign {
        Sign::of(self.g)
    }

    /// One mini-batch gradient `g̃_j`.
    #[inline]
    pub fn sample_partition_gradient<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.g + self.noise.batch_mean(self.sigma, self.batch, rng)
    }
}

/// A Monte Carlo proportion with its normal-approximation standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let value = hits as f64 / trials as f64;
        let std_err = (value * (1.0 - value) / trials as f64).sqrt();
        Self { value, std_err, trials }
    }

    /// Standard error evaluated at a reference probability; useful when the
    /// empirical rate is zero.
    pub fn std_err_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Empirical `P[sign(g̃) ≠ sign(g)]` over `trials` draws.
pub fn sign_error_rate(cfg: &OracleConfig, trials: u64, seed: u64) -> Result<Estimate> {
    cfg.validate()?;
    if cfg.g == 0.0 {
        return Err(Error::ZeroGradient);
    }
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    let truth = cfg.true_sign();
    let hits = par_count(seed, trials, |rng, _, len| {
        (0..len).filter(|_| Sign::of(cfg.sample_partition_gradient(rng)) != truth).count() as u64
    });
    Ok(Estimate::from_counts(hits, trials))
}

/// Exact sign error of a Gaussian mini-batch gradient, `Φ(-S)`.
pub fn gaussian_sign_error(snr: f64) -> f64 {
    0.5 * erfc(snr / std::f64::consts::SQRT_2)
}
