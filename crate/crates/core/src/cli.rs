//! The `election` command-line front end.
//!
//! Exit codes: 0 success, 1 negative verdict (not tolerant, not certified,
//! decode mismatch, diverged training), 2 usage or input error.
//!
//! Every subcommand that writes a file with `--out` also writes
//! `<out>.manifest.json`. `election replay` regenerates the file from it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::allocation::{AllocationMatrix, CodeParams};
use crate::attacks::{apply_attack, AttackModel, AttackSpec};
use crate::bounds::{self, BoundInputs, BoundsRow};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::manifest::{CodeInfo, RunManifest};
use crate::montecarlo::{self, McConfig, McRow};
use crate::tolerance::{verify_bruteforce, verify_lemma2, ToleranceReport};
use crate::trainer::{self, TrainConfig, TrainTrace};
use crate::voting::{decode, encode, majority_opinion, Sign, SignVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "election", version, about = "Election-coded majority-vote signSGD toolkit")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "ELECTION_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Lemma2,
    Bruteforce,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an allocation matrix: deterministic (--b), Bernoulli (--p or --C) or identity.
    BuildCode {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        b: Option<usize>,
        #[arg(long, conflicts_with = "c")]
        p: Option<f64>,
        #[arg(long = "C", id = "c")]
        c: Option<f64>,
        #[arg(long, env = "ELECTION_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, conflicts_with_all = ["b", "p", "c"])]
        identity: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check b-Byzantine tolerance of a matrix file.
    Verify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        b: usize,
        #[arg(long, value_enum, default_value = "lemma2")]
        method: MethodArg,
    },
    /// Encode, attack and decode a single message, printing each stage.
    SimulateVote {
        /// Matrix file; otherwise the deterministic code for --n and --code-b.
        #[arg(long, conflicts_with_all = ["n", "code_b"])]
        matrix: Option<PathBuf>,
        #[arg(long, requires = "code_b")]
        n: Option<usize>,
        #[arg(long)]
        code_b: Option<usize>,
        /// Partition signs, e.g. `++-+-` or `11010`.
        #[arg(long)]
        message: String,
        /// Comma-separated 0-based Byzantine workers.
        #[arg(long, value_delimiter = ',')]
        byzantine: Vec<usize>,
        #[arg(long, default_value = "reverse")]
        attack: String,
        /// True gradient sign for oracle-reverse; defaults to the message majority.
        #[arg(long, allow_hyphen_values = true)]
        truth: Option<String>,
    },
    /// Evaluate the closed-form bounds and the global-error certificate.
    Bounds {
        #[arg(long)]
        n: f64,
        #[arg(long = "C")]
        c: f64,
        #[arg(long = "S")]
        s: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo local and global error estimates.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "ELECTION_SEED")]
        seed: Option<u64>,
    },
    /// Coded SignSGD training on a synthetic task.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "ELECTION_SEED")]
        seed: Option<u64>,
    },
    /// Regenerate an output file from its manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parse `argv` (program name first), run the subcommand, return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_USAGE;
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| run(cli.command, &args)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn run(command: Command, args: &[String]) -> Result<i32> {
    match command {
        Command::BuildCode { n, b, p, c, seed, identity, out } => {
            let mut kv = KvConfig::default();
            kv.set("n", n.to_string());
            if identity {
                kv.set("code", "identity");
            } else if p.is_some() || c.is_some() {
                kv.set("code", "bernoulli");
                let p = p.unwrap_or_else(|| bounds::p_star(n as f64, c.unwrap_or(0.0)));
                if let Some(c) = c {
                    if !(c > 0.0) {
                        return Err(Error::InvalidParams(format!("connection factor C = {c} must be > 0")));
                    }
                }
                kv.set("p", p.to_string());
                kv.set("seed", seed.to_string());
            } else {
                let b = b.ok_or_else(|| Error::Config("build-code needs --b, --p, --C or --identity".into()))?;
                kv.set("code", "deterministic");
                kv.set("b", b.to_string());
            }
            finish("build-code", args, &kv, out.as_deref())
        }
        Command::Verify { matrix, b, method } => verify(&matrix, b, method),
        Command::SimulateVote { matrix, n, code_b, message, byzantine, attack, truth } => {
            let g = match (matrix, n, code_b) {
                (Some(path), _, _) => read_matrix(&path)?,
                (None, Some(n), Some(b)) => CodeParams::Deterministic { n, b }.build()?,
                _ => return Err(Error::Config("simulate-vote needs --matrix or --n with --code-b".into())),
            };
            simulate_vote(&g, &message, byzantine, &attack, truth.as_deref())
        }
        Command::Bounds { n, c, s, alpha, delta, out } => {
            let mut kv = KvConfig::default();
            for (k, v) in [("n", n), ("C", c), ("S", s), ("alpha", alpha), ("delta", delta)] {
                kv.set(k, v.to_string());
            }
            finish("bounds", args, &kv, out.as_deref())
        }
        Command::Montecarlo { config, out, seed } => {
            let kv = load_with_seed(&config, seed)?;
            let cfg = McConfig::from_kv(&kv)?;
            kv.finish()?;
            finish("montecarlo", args, &cfg.to_kv(), out.as_deref())
        }
        Command::Train { config, out, seed } => {
            let kv = load_with_seed(&config, seed)?;
            let cfg = TrainConfig::from_kv(&kv)?;
            kv.finish()?;
            finish("train", args, &cfg.to_kv(), out.as_deref())
        }
        Command::Replay { manifest, out } => {
            let m = RunManifest::load(&manifest)?;
            finish(&m.command, args, &m.config_kv(), Some(&out))
        }
    }
}

fn load_with_seed(path: &Path, seed: Option<u64>) -> Result<KvConfig> {
    let mut kv = KvConfig::load(path)?;
    if let Some(seed) = seed {
        kv.set("seed", seed.to_string());
    }
    Ok(kv)
}

fn read_matrix(path: &Path) -> Result<AllocationMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    AllocationMatrix::from_text(&text)
}

/// Output text, exit code and manifest of a file-producing subcommand.
pub struct Produced {
    pub text: String,
    pub status: i32,
    pub manifest: RunManifest,
}

/// Run a file-producing subcommand from its resolved configuration.
pub fn produce(command: &str, args: &[String], kv: &KvConfig) -> Result<Produced> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(command, args, kv);
    let (text, status) = match command {
        "build-code" => {
            let n: usize = kv.require("n")?;
            let params = match kv.get_str("code").unwrap_or("deterministic") {
                "identity" => CodeParams::Identity { n },
                "bernoulli" => {
                    let seed = kv.get_or("seed", 0)?;
                    manifest.seed = Some(seed);
                    CodeParams::Bernoulli { n, p: kv.require("p")?, seed }
                }
                "deterministic" => CodeParams::Deterministic { n, b: kv.require("b")? },
                other => return Err(Error::Config(format!("unknown code {other:?}"))),
            };
            kv.finish()?;
            let g = params.build()?;
            manifest.code = Some(CodeInfo::of(&g));
            (g.to_text(), EXIT_OK)
        }
        "bounds" => {
            let inputs = BoundInputs {
                n: kv.require("n")?,
                c: kv.require("C")?,
                s: kv.require("S")?,
                alpha: kv.require("alpha")?,
                delta: kv.require("delta")?,
            };
            kv.finish()?;
            let row = BoundsRow::evaluate(inputs)?;
            let status = if row.certificate.certified { EXIT_OK } else { EXIT_NEGATIVE };
            (format!("{}\n{}\n", BoundsRow::HEADER, row.to_csv()), status)
        }
        "montecarlo" => {
            let cfg = McConfig::from_kv(kv)?;
            kv.finish()?;
            manifest.seed = Some(cfg.seed);
            manifest.byzantine = Some(cfg.attack_spec()?.byzantine().to_vec());
            if let Some(g) = cfg.fixed_matrix()? {
                manifest.code = Some(CodeInfo::of(&g));
            }
            let row = montecarlo::run_experiment(&cfg)?;
            manifest.notes.insert("trials_used".into(), row.trials.to_string());
            manifest.notes.insert("q_hat_std_err".into(), row.q_hat.std_err.to_string());
            manifest.notes.insert("P_hat_std_err".into(), row.p_hat.std_err.to_string());
            (format!("{}\n{}\n", McRow::HEADER, row.to_csv()), EXIT_OK)
        }
        "train" => {
            let cfg = TrainConfig::from_kv(kv)?;
            kv.finish()?;
            let trace = trainer::train(&cfg)?;
            record_training(&mut manifest, &trace);
            let status = if trace.diverged { EXIT_NEGATIVE } else { EXIT_OK };
            (trace.to_csv(), status)
        }
        other => return Err(Error::Config(format!("subcommand {other:?} produces no file"))),
    };
    manifest.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(Produced { text, status, manifest })
}

fn record_training(manifest: &mut RunManifest, trace: &TrainTrace) {
    let info = &trace.info;
    manifest.seed = Some(info.seed);
    manifest.byzantine = Some(info.byzantine.clone());
    manifest.code = Some(CodeInfo::of(&trace.matrix));
    let notes = &mut manifest.notes;
    notes.insert("diverged".into(), trace.diverged.to_string());
    notes.insert("steps_completed".into(), trace.records.len().to_string());
    notes.insert("final_loss".into(), trace.final_loss.to_string());
    notes.insert("convergence_metric".into(), trainer::convergence_metric(trace).to_string());
    notes.insert("lr".into(), info.lr.to_string());
    notes.insert("initial_gap".into(), info.initial_gap.to_string());
    notes.insert("l1_smoothness".into(), info.l1_smoothness.to_string());
    notes.insert(
        "smoothness".into(),
        if info.smoothness_exact { "exact" } else { "estimate: f*=0, L1 from feature second moments" }.into(),
    );
    notes.insert("samples_per_step".into(), info.samples_per_step.to_string());
    notes.insert("effective_redundancy".into(), info.effective_redundancy.to_string());
}

fn finish(command: &str, args: &[String], kv: &KvConfig, out: Option<&Path>) -> Result<i32> {
    let mut produced = produce(command, args, kv)?;
    match out {
        Some(path) => {
            std::fs::write(path, &produced.text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let sidecar = produced.manifest.write_beside(path, produced.text.as_bytes())?;
            eprintln!("wrote {} and {}", path.display(), sidecar.display());
            if command == "build-code" {
                println!("{}", produced.text.lines().next().unwrap_or_default());
            }
        }
        None => print!("{}", produced.text),
    }
    Ok(produced.status)
}

fn verify(path: &Path, b: usize, method: MethodArg) -> Result<i32> {
    let g = read_matrix(path)?;
    let reports: Vec<ToleranceReport> = match method {
        MethodArg::Lemma2 => vec![verify_lemma2(&g, b)?],
        MethodArg::Bruteforce => vec![verify_bruteforce(&g, b)?],
        MethodArg::Both => vec![verify_lemma2(&g, b)?, verify_bruteforce(&g, b)?],
    };
    for r in &reports {
        println!("{r}");
    }
    if reports.windows(2).any(|w| w[0].verdict != w[1].verdict) {
        return Err(Error::InvalidParams("verifiers disagree".into()));
    }
    Ok(if reports[0].verdict { EXIT_OK } else { EXIT_NEGATIVE })
}

fn simulate_vote(
    g: &AllocationMatrix,
    message: &str,
    byzantine: Vec<usize>,
    attack: &str,
    truth: Option<&str>,
) -> Result<i32> {
    let m: SignVector = message.parse()?;
    let model: AttackModel = attack.parse()?;
    let spec = AttackSpec::new(g.n(), byzantine, model)?;
    let mu = majority_opinion(&m);
    let truth = match truth {
        None => mu,
        Some("+" | "+1" | "1") => Sign::Plus,
        Some("-" | "-1" | "0") => Sign::Minus,
        Some(other) => return Err(Error::InvalidParams(format!("cannot parse truth {other:?}"))),
    };
    let c = encode(&m, g)?;
    let y = apply_attack(&c, &spec, Some(truth))?;
    let mu_hat = decode(&y);
    let list: Vec<String> = spec.byzantine().iter().map(|i| i.to_string()).collect();
    println!("m         {m}");
    println!("mu        {mu}");
    println!("c         {c}");
    println!("byzantine [{}] {}", list.join(","), spec.model);
    println!("y         {y}");
    println!("mu_hat    {mu_hat}");
    println!("correct   {}", mu_hat == mu);
    Ok(if mu_hat == mu { EXIT_OK } else { EXIT_NEGATIVE })
}
