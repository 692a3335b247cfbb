//! Monte Carlo estimates of the local error `q = P[c_i ≠ sign(g)]` and the
//! global error `P[μ̂ ≠ sign(g)]` under coded voting and Byzantine attack.
//!
//! Trials are split into fixed chunks with one RNG stream each, so the
//! estimates depend only on the seed and the configuration.

use std::fmt::Write as _;

use rand::Rng;

use crate::allocation::{
    build_deterministic, check_probability, sample_bernoulli, sample_bernoulli_row, AllocationMatrix,
};
use crate::attacks::{AttackModel, AttackSpec};
use crate::bounds::{self, BoundInputs};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::oracle::{Estimate, NoiseFamily, OracleConfig};
use crate::rng::{self, par_count, Stream};
use crate::voting::{majority, Sign};

/// Whether each Bernoulli trial draws a fresh matrix or reuses one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMode {
    /// Fresh matrix per trial: the code-ensemble average.
    Ensemble,
    /// One realization drawn from the seed: a deployed code.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum McCode {
    Bernoulli { p: f64, mode: EnsembleMode },
    Deterministic { b: usize },
    Identity,
}

impl McCode {
    pub fn name(&self) -> &'static str {
        match self {
            McCode::Bernoulli { .. } => "bernoulli",
            McCode::Deterministic { .. } => "deterministic",
            McCode::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub code: McCode,
    pub oracle: OracleConfig,
    /// Number of Byzantine workers.
    pub b: usize,
    pub attack: AttackModel,
    pub trials: u64,
    /// Escalation ceiling; equal to `trials` disables escalation.
    pub max_trials: u64,
    pub seed: u64,
    /// Certification target for the global-error bound.
    pub delta: f64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        self.oracle.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be >= 1".into()));
        }
        if self.b > self.n {
            return Err(Error::InvalidParams(format!("b = {} exceeds n = {}", self.b, self.n)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be >= 1".into()));
        }
        if let McCode::Bernoulli { p, .. } = self.code {
            check_probability(p)?;
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.b as f64 / self.n as f64
    }

    /// Read from flat config keys. See the README for the key list.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let n: usize = kv.require("n")?;
        let b = match (kv.get::<usize>("b")?, kv.get::<f64>("alpha")?) {
            (Some(b), _) => b,
            (None, Some(alpha)) => (alpha * n as f64).round() as usize,
            (None, None) => 0,
        };
        let code = match kv.get_str("code").unwrap_or("bernoulli") {
            "bernoulli" => {
                let p = match (kv.get::<f64>("p")?, kv.get::<f64>("C")?) {
                    (Some(p), _) => p,
                    (None, Some(c)) => bounds::p_star(n as f64, c),
                    (None, None) => return Err(Error::Config("bernoulli code needs p or C".into())),
                };
                let mode = match kv.get_str("mode").unwrap_or("ensemble") {
                    "ensemble" => EnsembleMode::Ensemble,
                    "fixed" => EnsembleMode::Fixed,
                    other => return Err(Error::Config(format!("unknown mode {other:?}"))),
                };
                McCode::Bernoulli { p, mode }
            }
            "deterministic" => McCode::Deterministic { b: kv.get_or("code_b", b)? },
            "identity" => McCode::Identity,
            other => return Err(Error::Config(format!("unknown code {other:?}"))),
        };
        let g: f64 = kv.get_or("g", 1.0)?;
        let batch: usize = kv.get_or("batch", 128)?;
        let sigma = match (kv.get::<f64>("sigma")?, kv.get::<f64>("S")?) {
            (Some(s), _) => s,
            (None, Some(snr)) => g.abs() * (batch as f64).sqrt() / snr,
            (None, None) => 1.0,
        };
        let noise: NoiseFamily = kv.get_or("noise", NoiseFamily::Gaussian)?;
        let trials: u64 = kv.get_or("trials", 100_000)?;
        let cfg = Self {
            n,
            code,
            oracle: OracleConfig::new(g, sigma, batch, noise)?,
            b,
            attack: kv.get_or("attack", AttackModel::OracleReverse)?,
            trials,
            max_trials: kv.get_or("max_trials", trials)?,
            seed: kv.get_or("seed", 0)?,
            delta: kv.get_or("delta", 100.0)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fully resolved key set; `from_kv(to_kv(cfg)) == cfg`.
    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        kv.set("n", self.n.to_string());
        kv.set("b", self.b.to_string());
        kv.set("code", self.code.name());
        match self.code {
            McCode::Bernoulli { p, mode } => {
                kv.set("p", p.to_string());
                kv.set("mode", if mode == EnsembleMode::Ensemble { "ensemble" } else { "fixed" });
            }
            McCode::Deterministic { b } => kv.set("code_b", b.to_string()),
            McCode::Identity => {}
        }
        kv.set("g", self.oracle.g.to_string());
        kv.set("batch", self.oracle.batch.to_string());
        kv.set("sigma", self.oracle.sigma.to_string());
        kv.set("noise", self.oracle.noise.to_string());
        kv.set("attack", self.attack.to_string());
        kv.set("trials", self.trials.to_string());
        kv.set("max_trials", self.max_trials.to_string());
        kv.set("seed", self.seed.to_string());
        kv.set("delta", self.delta.to_string());
        kv
    }

    /// The matrix used on every trial, or `None` in ensemble mode.
    pub fn fixed_matrix(&self) -> Result<Option<AllocationMatrix>> {
        Ok(match self.code {
            McCode::Bernoulli { mode: EnsembleMode::Ensemble, .. } => None,
            McCode::Bernoulli { p, mode: EnsembleMode::Fixed } => Some(sample_bernoulli(self.n, p, self.seed)?),
            McCode::Deterministic { b } => Some(build_deterministic(self.n, b)?),
            McCode::Identity => Some(AllocationMatrix::identity(self.n)?),
        })
    }

    pub fn attack_spec(&self) -> Result<AttackSpec> {
        AttackSpec::random(self.n, self.b, self.attack.clone(), &mut rng::stream(self.seed, Stream::Byzantine))
    }

    fn with_trials(&self, trials: u64) -> Self {
        Self { trials, ..self.clone() }
    }
}

/// Signs seen on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// `sign(g)`.
    pub truth: Sign,
    /// Majority of the partition signs, `μ`.
    pub mu: Sign,
    /// Decoded without attack.
    pub clean: Sign,
    /// Decoded with attack, `μ̂`.
    pub attacked: Sign,
}

/// Local vote of a worker over real-valued partition gradients. An even
/// split falls back to the sign of the sum.
#[inline]
pub fn local_vote(values: impl Iterator<Item = f64>) -> Sign {
    let (plus, total, sum) =
        values.fold((0usize, 0usize, 0.0f64), |(p, t, s), v| (p + Sign::of(v).bit() as usize, t + 1, s + v));
    majority(plus, total, Sign::of(sum))
}

struct Simulator {
    cfg: McConfig,
    fixed: Option<AllocationMatrix>,
    spec: AttackSpec,
}

impl Simulator {
    fn new(cfg: &McConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg: cfg.clone(), fixed: cfg.fixed_matrix()?, spec: cfg.attack_spec()? })
    }

    fn global_trial<R: Rng>(
        &self,
        rng: &mut R,
        grads: &mut Vec<f64>,
        row: &mut Vec<usize>,
        c: &mut Vec<Sign>,
    ) -> TrialOutcome {
        let n = self.cfg.n;
        let oracle = &self.cfg.oracle;
        grads.clear();
        grads.extend((0..n).map(|_| oracle.sample_partition_gradient(rng)));
        c.clear();
        for i in 0..n {
            let vote = match &self.fixed {
                Some(g) => local_vote(g.row_indices(i).map(|j| grads[j])),
                None => {
                    let McCode::Bernoulli { p, .. } = self.cfg.code else { unreachable!() };
                    sample_bernoulli_row(n, p, rng, row);
                    local_vote(row.iter().map(|&j| grads[j]))
                }
            };
            c.push(vote);
        }
        let truth = oracle.true_sign();
        let half = n / 2;
        let mu = Sign::from_bit(grads.iter().filter(|&&x| Sign::of(x).bit()).count() > half);
        let clean = Sign::from_bit(c.iter().filter(|s| s.bit()).count() > half);
        self.spec.apply_in_place(c, Some(truth)).expect("attack spec validated against n");
        let attacked = Sign::from_bit(c.iter().filter(|s| s.bit()).count() > half);
        TrialOutcome { truth, mu, clean, attacked }
    }

    fn local_trial<R: Rng>(&self, rng: &mut R, trial: u64, row: &mut Vec<usize>) -> bool {
        let oracle = &self.cfg.oracle;
        let vote = match &self.fixed {
            Some(g) => {
                let i = (trial % self.cfg.n as u64) as usize;
                local_vote(g.row_indices(i).map(|_| oracle.sample_partition_gradient(rng)))
            }
            None => {
                let McCode::Bernoulli { p, .. } = self.cfg.code else { unreachable!() };
                sample_bernoulli_row(self.cfg.n, p, rng, row);
                local_vote(row.iter().map(|_| oracle.sample_partition_gradient(rng)))
            }
        };
        vote != oracle.true_sign()
    }
}

/// Fraction of trials in which an intact worker's vote disagrees with
/// `sign(g)`. Ensemble mode draws a fresh row per trial; otherwise trial `t`
/// uses row `t mod n` of the fixed matrix.
pub fn estimate_local_error(cfg: &McConfig) -> Result<Estimate> {
    let sim = Simulator::new(cfg)?;
    let hits = par_count(cfg.seed, cfg.trials, |rng, first, len| {
        let mut row = Vec::with_capacity(cfg.n);
        (first..first + len).filter(|&t| sim.local_trial(rng, t, &mut row)).count() as u64
    });
    Ok(Estimate::from_counts(hits, cfg.trials))
}

/// Fraction of trials in which the decoded sign under attack differs from
/// `sign(g)`.
pub fn estimate_global_error(cfg: &McConfig) -> Result<Estimate> {
    let sim = Simulator::new(cfg)?;
    // Separate streams from the local-error run.
    let seed = cfg.seed ^ 0x9e37_79b9_7f4a_7c15;
    let hits = par_count(seed, cfg.trials, |rng, _, len| {
        let (mut grads, mut row, mut c) = (Vec::new(), Vec::new(), Vec::new());
        (0..len)
            .filter(|_| {
                let out = sim.global_trial(rng, &mut grads, &mut row, &mut c);
                out.attacked != out.truth
            })
            .count() as u64
    });
    Ok(Estimate::from_counts(hits, cfg.trials))
}

/// Per-trial outcomes of the global-error experiment, in trial order. Uses
/// the same random draws as [`estimate_global_error`].
pub fn global_trial_outcomes(cfg: &McConfig) -> Result<Vec<TrialOutcome>> {
    use rayon::prelude::*;
    let sim = Simulator::new(cfg)?;
    let seed = cfg.seed ^ 0x9e37_79b9_7f4a_7c15;
    let chunks = cfg.trials.div_ceil(rng::TRIALS_PER_CHUNK);
    let out: Vec<Vec<TrialOutcome>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = rng::TRIALS_PER_CHUNK.min(cfg.trials - k * rng::TRIALS_PER_CHUNK);
            let mut rng = rng::stream(seed, Stream::Chunk(k));
            let (mut grads, mut row, mut c) = (Vec::new(), Vec::new(), Vec::new());
            (0..len).map(|_| sim.global_trial(&mut rng, &mut grads, &mut row, &mut c)).collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// One CSV row of a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub n: usize,
    pub code: &'static str,
    pub p_or_b: String,
    pub alpha: f64,
    pub snr: f64,
    pub trials: u64,
    pub q_hat: Estimate,
    pub q_star: Option<f64>,
    pub p_hat: Estimate,
    pub delta_bound: f64,
    pub certified: Option<bool>,
}

impl McRow {
    pub const HEADER: &'static str = "n,code,p_or_b,alpha,S,trials,q_hat,q_star,P_hat,delta_bound,certified";

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},",
            self.n, self.code, self.p_or_b, self.alpha, self.snr, self.trials, self.q_hat.value
        )
        .unwrap();
        if let Some(q) = self.q_star {
            write!(s, "{q}").unwrap();
        }
        write!(s, ",{},{},", self.p_hat.value, self.delta_bound).unwrap();
        if let Some(c) = self.certified {
            write!(s, "{c}").unwrap();
        }
        s
    }
}

fn near(est: &Estimate, bound: f64) -> bool {
    (est.value - bound).abs() < 2.0 * est.std_err.max(est.std_err_at(bound))
}

/// Run both estimators and evaluate the matching bounds. Trials escalate
/// tenfold while an estimate sits within two standard errors of its bound,
/// up to `max_trials`.
pub fn run_experiment(cfg: &McConfig) -> Result<McRow> {
    cfg.validate()?;
    let snr = cfg.oracle.snr();
    let (q_star, certificate) = match cfg.code {
        McCode::Bernoulli { p, .. } => {
            let n = cfg.n as f64;
            let c = bounds::connection_factor(n, p);
            let q = bounds::q_star(n, c, snr);
            let cert = if cfg.n >= 2 && cfg.delta > 2.0 && cfg.alpha() < 1.0 {
                Some(bounds::certify_global_error(&BoundInputs { n, c, s: snr, alpha: cfg.alpha(), delta: cfg.delta })?)
            } else {
                None
            };
            (Some(q), cert)
        }
        _ => (None, None),
    };
    let certified = certificate.map(|c| c.certified);
    let delta_bound = 1.0 / cfg.delta;

    let mut trials = cfg.trials;
    let (q_hat, p_hat) = loop {
        let run = cfg.with_trials(trials);
        let q_hat = estimate_local_error(&run)?;
        let p_hat = estimate_global_error(&run)?;
        let close = q_star.is_some_and(|q| near(&q_hat, q)) || (certified == Some(true) && near(&p_hat, delta_bound));
        if !close || trials >= cfg.max_trials {
            break (q_hat, p_hat);
        }
        trials = (trials * 10).min(cfg.max_trials);
    };

    let p_or_b = match cfg.code {
        McCode::Bernoulli { p, .. } => format!("{p}"),
        McCode::Deterministic { b } => format!("{b}"),
        McCode::Identity => String::new(),
    };
    Ok(McRow {
        n: cfg.n,
        code: cfg.code.name(),
        p_or_b,
        alpha: cfg.alpha(),
        snr,
        trials,
        q_hat,
        q_star,
        p_hat,
        delta_bound,
        certified,
    })
}
