//! Coded SignSGD / Signum training on synthetic tasks.
//!
//! Each step, for every data partition `j`:
//!
//! 1. draw a mini-batch of `⌈ρB⌉` samples and compute `g̃_j`;
//! 2. fold it into the partition's momentum buffer (`η = 0` is plain SignSGD).
//!
//! Then, independently per coordinate, each worker majority-votes the signs
//! of its partitions' buffers, the attack corrupts the Byzantine workers'
//! bits, and the server majority-decodes `μ̂`. The model moves by `-γ·μ̂`.
//!
//! Partition batches come from per-partition RNG streams, so a run is
//! bit-reproducible from its seed at any thread count.

use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::allocation::{AllocationMatrix, CodeParams};
use crate::attacks::{AttackModel, AttackSpec};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::montecarlo::local_vote;
use crate::oracle::NoiseFamily;
use crate::rng::{self, Stream, StreamRng};
use crate::voting::Sign;

/// Runs whose loss exceeds this are stopped and flagged as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSpec {
    /// `f(w) = ½·Σ_k curvature·(w_k - w*_k)²`, with per-sample gradient
    /// noise of standard deviation `sigma` on every coordinate.
    Quadratic { d: usize, curvature: f64, sigma: f64, noise: NoiseFamily },
    /// Logistic regression on standard-normal features with labels from a
    /// planted weight vector, each flipped with probability `label_noise`.
    Logistic { d: usize, samples: usize, label_noise: f64 },
}

impl TaskSpec {
    pub fn dim(&self) -> usize {
        match *self {
            TaskSpec::Quadratic { d, .. } | TaskSpec::Logistic { d, .. } => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Fixed(f64),
    /// `γ = sqrt((f(w₀) - f*) / (‖L‖₁·T))`.
    Theory,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainCode {
    Identity,
    Deterministic { b: usize },
    Bernoulli { p: f64 },
    BernoulliFactor { c: f64 },
}

impl TrainCode {
    pub fn params(&self, n: usize, seed: u64) -> CodeParams {
        match *self {
            TrainCode::Identity => CodeParams::Identity { n },
            TrainCode::Deterministic { b } => CodeParams::Deterministic { n, b },
            TrainCode::Bernoulli { p } => CodeParams::Bernoulli { n, p, seed },
            TrainCode::BernoulliFactor { c } => CodeParams::BernoulliFactor { n, c, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub task: TaskSpec,
    /// Workers, which is also the number of data partitions.
    pub n: usize,
    pub code: TrainCode,
    /// Byzantine workers, drawn once per run from the seed.
    pub b: usize,
    pub attack: AttackModel,
    pub steps: usize,
    pub lr: LrSchedule,
    pub momentum: f64,
    pub batch: usize,
    /// Mini-batch shrink factor `ρ`; partitions draw `⌈ρB⌉` samples.
    pub batch_reduction: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.b > self.n {
            return bad(format!("b = {} exceeds n = {}", self.b, self.n));
        }
        if !(self.batch_reduction > 0.0 && self.batch_reduction <= 1.0) {
            return bad(format!("batch_reduction = {} must lie in (0, 1]", self.batch_reduction));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum = {} must lie in [0, 1)", self.momentum));
        }
        if let LrSchedule::Fixed(lr) = self.lr {
            if !(lr > 0.0) {
                return bad(format!("lr = {lr} must be > 0"));
            }
        }
        if self.batch == 0 {
            return bad("batch must be >= 1".into());
        }
        match self.task {
            TaskSpec::Quadratic { d, curvature, sigma, .. } => {
                if d == 0 || !(curvature > 0.0) || !(sigma >= 0.0) {
                    return bad("quadratic task needs d >= 1, curvature > 0, sigma >= 0".into());
                }
            }
            TaskSpec::Logistic { d, samples, label_noise } => {
                if d == 0 || samples < self.n || !(0.0..=0.5).contains(&label_noise) {
                    return bad("logistic task needs d >= 1, samples >= n, label_noise in [0, 0.5]".into());
                }
            }
        }
        Ok(())
    }

    /// Samples drawn per partition per step, `⌈ρB⌉`.
    pub fn effective_batch(&self) -> usize {
        ((self.batch_reduction * self.batch as f64).ceil() as usize).max(1)
    }

    /// Read from flat config keys. See the README for the key list.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let d: usize = kv.require("d")?;
        let task = match kv.get_str("task").unwrap_or("quadratic") {
            "quadratic" => TaskSpec::Quadratic {
                d,
                curvature: kv.get_or("curvature", 1.0)?,
                sigma: kv.get_or("sigma", 0.0)?,
                noise: kv.get_or("noise", NoiseFamily::Gaussian)?,
            },
            "logistic" => TaskSpec::Logistic {
                d,
                samples: kv.get_or("samples", 2000)?,
                label_noise: kv.get_or("label_noise", 0.0)?,
            },
            other => return Err(Error::Config(format!("unknown task {other:?}"))),
        };
        let b: usize = kv.get_or("b", 0)?;
        let code = match kv.get_str("code").unwrap_or("identity") {
            "identity" | "uncoded" => TrainCode::Identity,
            "deterministic" => TrainCode::Deterministic { b: kv.get_or("code_b", b)? },
            "bernoulli" => match (kv.get::<f64>("p")?, kv.get::<f64>("C")?) {
                (Some(p), _) => TrainCode::Bernoulli { p },
                (None, Some(c)) => TrainCode::BernoulliFactor { c },
                (None, None) => return Err(Error::Config("bernoulli code needs p or C".into())),
            },
            other => return Err(Error::Config(format!("unknown code {other:?}"))),
        };
        let lr = match kv.get_str("lr") {
            None => LrSchedule::Fixed(1e-3),
            Some("theory") => LrSchedule::Theory,
            Some(v) => LrSchedule::Fixed(v.parse().map_err(|_| Error::Config(format!("cannot parse lr = {v:?}")))?),
        };
        let cfg = Self {
            task,
            n: kv.require("n")?,
            code,
            b,
            attack: kv.get_or("attack", AttackModel::Reverse)?,
            steps: kv.require("steps")?,
            lr,
            momentum: kv.get_or("momentum", 0.0)?,
            batch: kv.get_or("batch", 32)?,
            batch_reduction: kv.get_or("batch_reduction", 1.0)?,
            seed: kv.get_or("seed", 0)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fully resolved key set; `from_kv(to_kv(cfg)) == cfg`.
    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        match self.task {
            TaskSpec::Quadratic { d, curvature, sigma, noise } => {
                kv.set("task", "quadratic");
                kv.set("d", d.to_string());
                kv.set("curvature", curvature.to_string());
                kv.set("sigma", sigma.to_string());
                kv.set("noise", noise.to_string());
            }
            TaskSpec::Logistic { d, samples, label_noise } => {
                kv.set("task", "logistic");
                kv.set("d", d.to_string());
                kv.set("samples", samples.to_string());
                kv.set("label_noise", label_noise.to_string());
            }
        }
        kv.set("n", self.n.to_string());
        match self.code {
            TrainCode::Identity => kv.set("code", "identity"),
            TrainCode::Deterministic { b } => {
                kv.set("code", "deterministic");
                kv.set("code_b", b.to_string());
            }
            TrainCode::Bernoulli { p } => {
                kv.set("code", "bernoulli");
                kv.set("p", p.to_string());
            }
            TrainCode::BernoulliFactor { c } => {
                kv.set("code", "bernoulli");
                kv.set("C", c.to_string());
            }
        }
        kv.set("b", self.b.to_string());
        kv.set("attack", self.attack.to_string());
        kv.set("steps", self.steps.to_string());
        kv.set(
            "lr",
            match self.lr {
                LrSchedule::Fixed(lr) => lr.to_string(),
                LrSchedule::Theory => "theory".to_owned(),
            },
        );
        kv.set("momentum", self.momentum.to_string());
        kv.set("batch", self.batch.to_string());
        kv.set("batch_reduction", self.batch_reduction.to_string());
        kv.set("seed", self.seed.to_string());
        kv
    }
}

/// A training problem split into `n` data partitions.
enum Problem {
    Quadratic { target: Vec<f64>, curvature: f64, sigma: f64, noise: NoiseFamily },
    Logistic { features: Vec<f64>, labels: Vec<f64>, d: usize, per_partition: usize },
}

impl Problem {
    fn new(task: &TaskSpec, n: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Stream::Task);
        match *task {
            TaskSpec::Quadratic { d, curvature, sigma, noise } => {
                // |w*_k| in [0.5, 1] so every coordinate starts well away
                // from the optimum.
                let target = (0..d)
                    .map(|_| {
                        let mag = rng.gen_range(0.5..1.0);
                        if rng.gen_bool(0.5) {
                            mag
                        } else {
                            -mag
                        }
                    })
                    .collect();
                Problem::Quadratic { target, curvature, sigma, noise }
            }
            TaskSpec::Logistic { d, samples, label_noise } => {
                let per_partition = samples / n;
                let total = per_partition * n;
                let planted: Vec<f64> = (0..d).map(|_| NoiseFamily::Gaussian.draw(1.0, &mut rng)).collect();
                let features: Vec<f64> = (0..total * d).map(|_| NoiseFamily::Gaussian.draw(1.0, &mut rng)).collect();
                let labels = features
                    .chunks(d)
                    .map(|x| {
                        let clean = if dot(x, &planted) >= 0.0 { 1.0 } else { -1.0 };
                        if rng.gen_bool(label_noise) {
                            -clean
                        } else {
                            clean
                        }
                    })
                    .collect();
                Problem::Logistic { features, labels, d, per_partition }
            }
        }
    }

    fn loss(&self, w: &[f64]) -> f64 {
        match self {
            Problem::Quadratic { target, curvature, .. } => {
                0.5 * curvature * w.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            Problem::Logistic { features, labels, d, .. } => {
                let m = labels.len() as f64;
                features.chunks(*d).zip(labels).map(|(x, &y)| softplus(-y * dot(x, w))).sum::<f64>() / m
            }
        }
    }

    fn full_gradient(&self, w: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        match self {
            Problem::Quadratic { target, curvature, .. } => {
                for ((o, a), b) in out.iter_mut().zip(w).zip(target) {
                    *o = curvature * (a - b);
                }
            }
            Problem::Logistic { features, labels, d, .. } => {
                for (x, &y) in features.chunks(*d).zip(labels) {
                    accumulate_logistic(x, y, w, out);
                }
                let m = labels.len() as f64;
                out.iter_mut().for_each(|o| *o /= m);
            }
        }
    }

    /// Mini-batch gradient of partition `j`.
    fn partition_gradient(&self, j: usize, w: &[f64], batch: usize, rng: &mut StreamRng, out: &mut [f64]) {
        match self {
            Problem::Quadratic { sigma, noise, .. } => {
                self.full_gradient(w, out);
                for o in out.iter_mut() {
                    *o += noise.batch_mean(*sigma, batch, rng);
                }
            }
            Problem::Logistic { features, labels, d, per_partition } => {
                out.fill(0.0);
                let base = j * per_partition;
                for _ in 0..batch {
                    let idx = base + rng.gen_range(0..*per_partition);
                    accumulate_logistic(&features[idx * d..(idx + 1) * d], labels[idx], w, out);
                }
                out.iter_mut().for_each(|o| *o /= batch as f64);
            }
        }
    }

    fn optimum(&self) -> f64 {
        0.0
    }

    /// `‖L‖₁`: exact for the quadratic, `¼·Σ_k mean_i x_ik²` for logistic.
    fn l1_smoothness(&self) -> f64 {
        match self {
            Problem::Quadratic { target, curvature, .. } => curvature * target.len() as f64,
            Problem::Logistic { features, labels, .. } => {
                0.25 * features.iter().map(|x| x * x).sum::<f64>() / labels.len() as f64
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Adds `∇ log(1 + exp(-y·xᵀw)) = -y·σ(-y·xᵀw)·x` to `out`.
#[inline]
fn accumulate_logistic(x: &[f64], y: f64, w: &[f64], out: &mut [f64]) {
    let scale = -y * sigmoid(-y * dot(x, w));
    for (o, xi) in out.iter_mut().zip(x) {
        *o += scale * xi;
    }
}

struct Partition {
    rng: StreamRng,
    grad: Vec<f64>,
    buffer: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// `f(w_t)`.
    pub loss: f64,
    /// `‖g(w_t)‖₁`.
    pub l1_grad: f64,
    /// Truncated SHA-256 of the decoded sign vector.
    pub mu_digest: String,
}

/// Run metadata needed to reproduce or interpret a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRunInfo {
    pub seed: u64,
    pub byzantine: Vec<usize>,
    pub code_kind: String,
    pub redundancy: f64,
    pub matrix_hash: String,
    pub lr: f64,
    /// `f(w₀) - f*` with the `f*` estimate used by the theory schedule.
    pub initial_gap: f64,
    pub l1_smoothness: f64,
    /// Whether `f*` and `‖L‖₁` are exact (quadratic) or estimates.
    pub smoothness_exact: bool,
    /// Gradient samples computed per step, `Σ_i |P_i|·⌈ρB⌉`.
    pub samples_per_step: u64,
    pub effective_redundancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<StepRecord>,
    pub final_weights: Vec<f64>,
    pub final_loss: f64,
    pub diverged: bool,
    pub info: TrainRunInfo,
    pub matrix: AllocationMatrix,
}

impl TrainTrace {
    pub const CSV_HEADER: &'static str = "step,loss,l1_grad,mu_digest";

    /// Running average `(1/T)·Σ_t ‖g(w_t)‖₁` at every prefix.
    pub fn running_l1(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.records
            .iter()
            .enumerate()
            .map(|(t, r)| {
                acc += r.l1_grad;
                acc / (t + 1) as f64
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.step, r.loss, r.l1_grad, r.mu_digest));
        }
        out
    }
}

/// `(1/T)·Σ_t ‖g(w_t)‖₁` over the recorded steps.
pub fn convergence_metric(trace: &TrainTrace) -> f64 {
    if trace.records.is_empty() {
        return 0.0;
    }
    trace.records.iter().map(|r| r.l1_grad).sum::<f64>() / trace.records.len() as f64
}

/// Convergence-rate bound `3‖L‖₁ / (2(1 - 2/Δ)) · γ`.
pub fn theoretical_rate(l1_smoothness: f64, delta: f64, lr: f64) -> Result<f64> {
    if !(delta > 2.0) {
        return Err(Error::InvalidParams(format!("delta = {delta} must be > 2")));
    }
    Ok(3.0 * l1_smoothness / (2.0 * (1.0 - 2.0 / delta)) * lr)
}

fn digest(signs: &[Sign]) -> String {
    let mut bytes = vec![0u8; signs.len().div_ceil(8)];
    for (k, s) in signs.iter().enumerate() {
        bytes[k / 8] |= (s.bit() as u8) << (k % 8);
    }
    hex::encode(&Sha256::digest(&bytes)[..8])
}

pub fn train(cfg: &TrainConfig) -> Result<TrainTrace> {
    cfg.validate()?;
    let n = cfg.n;
    let d = cfg.task.dim();
    let matrix = cfg.code.params(n, cfg.seed).build()?;
    if let Some(row) = matrix.first_empty_row() {
        return Err(Error::EmptyRow { row });
    }
    let spec = AttackSpec::random(n, cfg.b, cfg.attack.clone(), &mut rng::stream(cfg.seed, Stream::Byzantine))?;
    let problem = Problem::new(&cfg.task, n, cfg.seed);
    let batch = cfg.effective_batch();

    let mut w = vec![0.0; d];
    let f0 = problem.loss(&w);
    let initial_gap = f0 - problem.optimum();
    let l1_smoothness = problem.l1_smoothness();
    let lr = match cfg.lr {
        LrSchedule::Fixed(lr) => lr,
        LrSchedule::Theory => (initial_gap / (l1_smoothness * cfg.steps as f64)).sqrt(),
    };

    let rows: Vec<Vec<usize>> = (0..n).map(|i| matrix.row_indices(i).collect()).collect();
    let mut partitions: Vec<Partition> = (0..n)
        .map(|j| Partition {
            rng: rng::stream(cfg.seed, Stream::Partition(j as u64)),
            grad: vec![0.0; d],
            buffer: vec![0.0; d],
        })
        .collect();

    let info = TrainRunInfo {
        seed: cfg.seed,
        byzantine: spec.byzantine().to_vec(),
        code_kind: matrix.kind().name().to_owned(),
        redundancy: matrix.redundancy_f64(),
        matrix_hash: matrix.hash(),
        lr,
        initial_gap,
        l1_smoothness,
        smoothness_exact: matches!(cfg.task, TaskSpec::Quadratic { .. }),
        samples_per_step: matrix.ones() * batch as u64,
        effective_redundancy: matrix.redundancy_f64() * cfg.batch_reduction,
    };

    let mut records = Vec::with_capacity(cfg.steps);
    let mut full = vec![0.0; d];
    let mut diverged = false;
    let eta = cfg.momentum;

    for step in 0..cfg.steps {
        let loss = problem.loss(&w);
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            diverged = true;
            break;
        }
        problem.full_gradient(&w, &mut full);
        let l1_grad = full.iter().map(|x| x.abs()).sum();

        partitions.par_iter_mut().enumerate().for_each(|(j, part)| {
            problem.partition_gradient(j, &w, batch, &mut part.rng, &mut part.grad);
            if eta == 0.0 {
                part.buffer.copy_from_slice(&part.grad);
            } else {
                for (m, g) in part.buffer.iter_mut().zip(&part.grad) {
                    *m = eta * *m + (1.0 - eta) * g;
                }
            }
        });

        let mu_hat: Vec<Sign> = (0..d)
            .into_par_iter()
            .map(|k| {
                let mut y: Vec<Sign> =
                    rows.iter().map(|row| local_vote(row.iter().map(|&j| partitions[j].buffer[k]))).collect();
                spec.apply_in_place(&mut y, Some(Sign::of(full[k]))).expect("attack spec validated against n");
                Sign::from_bit(y.iter().filter(|s| s.bit()).count() > n / 2)
            })
            .collect();

        records.push(StepRecord { step, loss, l1_grad, mu_digest: digest(&mu_hat) });
        for (wk, s) in w.iter_mut().zip(&mu_hat) {
            *wk -= lr * s.value();
        }
    }

    let final_loss = problem.loss(&w);
    if !final_loss.is_finite() || final_loss > DIVERGENCE_LOSS {
        diverged = true;
    }
    Ok(TrainTrace { records, final_weights: w, final_loss, diverged, info, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn quadratic(d: usize, sigma: f64) -> TrainConfig {
        TrainConfig {
            task: TaskSpec::Quadratic { d, curvature: 1.0, sigma, noise: NoiseFamily::Gaussian },
            n: 5,
            code: TrainCode::Identity,
            b: 0,
            attack: AttackModel::Reverse,
            steps: 100,
            lr: LrSchedule::Fixed(1e-3),
            momentum: 0.0,
            batch: 8,
            batch_reduction: 1.0,
            seed: 1,
        }
    }

    #[test]
    fn noiseless_loss_strictly_decreases() {
        let trace = train(&quadratic(10, 0.0)).unwrap();
        assert_eq!(trace.records.len(), 100);
        assert!(trace.records.windows(2).all(|w| w[1].loss < w[0].loss));
        assert!(trace.final_loss < trace.records.last().unwrap().loss);
    }

    #[test]
    fn sign_descent_staircase() {
        // With σ = 0 every coordinate moves exactly γ toward w* until it is
        // within γ of it.
        let mut cfg = quadratic(6, 0.0);
        cfg.lr = LrSchedule::Fixed(0.05);
        cfg.steps = 40;
        let Problem::Quadratic { target, .. } = Problem::new(&cfg.task, cfg.n, cfg.seed) else { unreachable!() };
        let mut cfg_k = cfg.clone();
        let mut prev: Vec<f64> = target.iter().map(|t| t.abs()).collect();
        for steps in 1..=cfg.steps {
            cfg_k.steps = steps;
            let w = train(&cfg_k).unwrap().final_weights;
            for k in 0..6 {
                let dist = (w[k] - target[k]).abs();
                if prev[k] >= 0.05 {
                    assert!((prev[k] - dist - 0.05).abs() < 1e-9, "step {steps} coord {k}");
                } else {
                    assert!(dist < 0.05 + 1e-9);
                }
                prev[k] = dist;
            }
        }
    }

    #[test]
    fn metric_decreases_with_horizon() {
        let metric = |steps| {
            let mut cfg = quadratic(8, 0.0);
            cfg.steps = steps;
            cfg.lr = LrSchedule::Theory;
            convergence_metric(&train(&cfg).unwrap())
        };
        let (a, b, c) = (metric(100), metric(400), metric(1600));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn theory_schedule_meets_rate_bound() {
        for steps in [50, 200, 800] {
            let mut cfg = quadratic(10, 0.0);
            cfg.steps = steps;
            cfg.lr = LrSchedule::Theory;
            let trace = train(&cfg).unwrap();
            let bound = theoretical_rate(trace.info.l1_smoothness, 100.0, trace.info.lr).unwrap();
            let metric = convergence_metric(&trace);
            assert!(metric <= bound, "T={steps}: {metric} > {bound}");
        }
        assert!(theoretical_rate(1.0, 2.0, 0.1).is_err());
    }

    #[test]
    fn divergence_is_flagged_not_fatal() {
        let mut cfg = quadratic(4, 0.0);
        cfg.lr = LrSchedule::Fixed(1e4);
        cfg.steps = 50;
        let trace = train(&cfg).unwrap();
        assert!(trace.diverged);
        assert!(trace.records.len() < 50);
    }

    #[test]
    fn effective_batch_and_sample_accounting() {
        let mut cfg = quadratic(3, 1.0);
        cfg.batch = 10;
        cfg.batch_reduction = 0.25;
        cfg.n = 5;
        cfg.code = TrainCode::Deterministic { b: 1 };
        cfg.steps = 2;
        assert_eq!(cfg.effective_batch(), 3);
        let trace = train(&cfg).unwrap();
        // r = 3.8 for (5, 1): 19 partition-gradients of 3 samples each.
        assert_eq!(trace.info.samples_per_step, 57);
        assert!((trace.info.effective_redundancy - 0.95).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = quadratic(3, 0.0);
        cfg.batch_reduction = 0.0;
        assert!(train(&cfg).is_err());
        let mut cfg = quadratic(3, 0.0);
        cfg.momentum = 1.0;
        assert!(train(&cfg).is_err());
        let mut cfg = quadratic(3, 0.0);
        cfg.code = TrainCode::Deterministic { b: 1 };
        cfg.n = 6;
        assert!(train(&cfg).is_err());
        let mut cfg = quadratic(3, 0.0);
        cfg.steps = 0;
        assert!(train(&cfg).is_err());
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let task = TaskSpec::Logistic { d: 4, samples: 30, label_noise: 0.1 };
        let p = Problem::new(&task, 3, 9);
        let w = [0.3, -0.2, 0.1, 0.5];
        let mut g = [0.0; 4];
        p.full_gradient(&w, &mut g);
        for k in 0..4 {
            let h = 1e-6;
            let (mut up, mut dn) = (w, w);
            up[k] += h;
            dn[k] -= h;
            let fd = (p.loss(&up) - p.loss(&dn)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7, "coord {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn from_kv() {
        let kv = KvConfig::parse(
            "task = logistic\nd = 5\nsamples = 90\nn = 9\ncode = deterministic\nb = 3\nsteps = 10\nlr = theory\nmomentum = 0.9\n",
        )
        .unwrap();
        let cfg = TrainConfig::from_kv(&kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(cfg.code, TrainCode::Deterministic { b: 3 });
        assert_eq!(cfg.lr, LrSchedule::Theory);
        assert!(TrainConfig::from_kv(&KvConfig::parse("d = 2\nn = 3\nsteps = 1\ntask = cubic").unwrap()).is_err());
        let back = TrainConfig::from_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
        let q = quadratic(3, 0.25);
        assert_eq!(TrainConfig::from_kv(&q.to_kv()).unwrap(), q);
    }
}
