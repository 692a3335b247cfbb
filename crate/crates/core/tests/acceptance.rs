//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Each criterion runs twice, in a 1-thread and an 8-thread pool, and
//! returns a text artifact. Criterion 9 compares the two artifacts.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use election_coding::allocation::{build_deterministic, theoretical_redundancy, DeterministicLayout};
use election_coding::bounds::{self, certify_global_error, BoundInputs};
use election_coding::montecarlo::{self, EnsembleMode, McCode, McConfig};
use election_coding::oracle::{gaussian_sign_error, sign_error_rate, OracleConfig};
use election_coding::tolerance::{verify_bruteforce, verify_lemma2};
use election_coding::trainer::{self, LrSchedule, TaskSpec, TrainCode, TrainConfig};
use election_coding::{AllocationMatrix, AttackModel, NoiseFamily};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
    artifact: String,
}

/// `(n, b)` pairs for which the deterministic construction exists.
fn valid_codes(max_n: usize) -> Vec<(usize, usize)> {
    (3..=max_n)
        .step_by(2)
        .flat_map(|n| (1..n.div_ceil(2)).map(move |b| (n, b)))
        .filter(|&(n, b)| DeterministicLayout::new(n, b).is_ok())
        .collect()
}

fn redundancy_reproduction() -> Outcome {
    let headline = theoretical_redundancy(5, 1).unwrap();
    let mut pass = headline == Ratio::new(19, 5) && *headline.numer() as f64 / *headline.denom() as f64 == 3.8;
    let mut artifact = String::new();
    let codes = valid_codes(15);
    for &(n, b) in &codes {
        let g = build_deterministic(n, b).unwrap();
        let theory = theoretical_redundancy(n, b).unwrap();
        let counted = g.redundancy();
        let equal = *theory.numer() as u64 == *counted.numer() && *theory.denom() as u64 == *counted.denom();
        pass &= equal;
        writeln!(artifact, "{n} {b} {theory} {counted}").unwrap();
    }
    Outcome {
        pass,
        detail: format!("r(5,1) = {headline}; entry count matches formula on {} (n,b) pairs", codes.len()),
        artifact,
    }
}

fn theorem_confirmation() -> Outcome {
    let mut pass = true;
    let mut artifact = String::new();
    let (mut det_checked, mut id_checked) = (0, 0);
    for n in (5..=15).step_by(2) {
        for b in 1..n / 2 {
            let r = verify_lemma2(&build_deterministic(n, b).unwrap(), b).unwrap();
            pass &= r.verdict;
            det_checked += 1;
            writeln!(artifact, "det {r}").unwrap();
        }
        let id = AllocationMatrix::identity(n).unwrap();
        for b in 1..n.div_ceil(2) {
            let r = verify_lemma2(&id, b).unwrap();
            pass &= !r.verdict && r.witness.is_some();
            id_checked += 1;
            writeln!(artifact, "id {r}").unwrap();
        }
    }
    Outcome {
        pass,
        detail: format!(
            "{det_checked} deterministic codes tolerant, {id_checked} identity cases rejected with witness"
        ),
        artifact,
    }
}

/// Odd-weight rows: weight uniform over odd values, then uniform positions.
fn random_odd_row_matrix(n: usize, rng: &mut ChaCha8Rng) -> AllocationMatrix {
    let rows: Vec<Vec<bool>> = (0..n)
        .map(|_| {
            let w = 2 * rng.gen_range(0..n.div_ceil(2)) + 1;
            let mut row = vec![false; n];
            for j in rand::seq::index::sample(rng, n, w) {
                row[j] = true;
            }
            row
        })
        .collect();
    AllocationMatrix::from_rows(&rows).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut artifact = String::new();
    let mut pass = true;
    let (mut cases, mut tolerant, mut disagreements) = (0, 0, 0);
    let mut check = |g: &AllocationMatrix, label: &str, artifact: &mut String| {
        for b in 0..g.n().div_ceil(2) {
            let a = verify_lemma2(g, b).unwrap();
            let z = verify_bruteforce(g, b).unwrap();
            cases += 1;
            tolerant += a.verdict as usize;
            if a.verdict != z.verdict {
                disagreements += 1;
                pass = false;
            }
            writeln!(artifact, "{label} {} b={b} {} {}", g.hash(), a.verdict, z.verdict).unwrap();
        }
    };
    for i in 0..200 {
        let n = [3, 5, 7, 9][i % 4];
        let g = random_odd_row_matrix(n, &mut rng);
        check(&g, "random", &mut artifact);
    }
    for (n, b) in valid_codes(11) {
        check(&build_deterministic(n, b).unwrap(), "det", &mut artifact);
    }
    Outcome {
        pass,
        detail: format!("{cases} (matrix, b) cases, {tolerant} tolerant, {disagreements} disagreements"),
        artifact,
    }
}

fn criterion4_inputs() -> BoundInputs {
    BoundInputs { n: 40.0, c: 1.0, s: 128f64.sqrt(), alpha: 0.2, delta: 100.0 }
}

fn numeric_bound() -> Outcome {
    let cert = certify_global_error(&criterion4_inputs()).unwrap();
    Outcome {
        pass: cert.certified,
        detail: format!("certified={} rhs={:.10} < 1-alpha=0.8, q*={:.6e}", cert.certified, cert.rhs, cert.q_star),
        artifact: format!("{cert:?}"),
    }
}

fn monte_carlo_dominance() -> Outcome {
    let inp = criterion4_inputs();
    let cfg = McConfig {
        n: 40,
        code: McCode::Bernoulli { p: bounds::p_star(inp.n, inp.c), mode: EnsembleMode::Ensemble },
        oracle: OracleConfig::with_snr(inp.s, 128),
        b: 8,
        attack: AttackModel::OracleReverse,
        trials: 100_000,
        max_trials: 100_000,
        seed: SEED,
        delta: inp.delta,
    };
    let row = montecarlo::run_experiment(&cfg).unwrap();
    let q_star = bounds::q_star(inp.n, inp.c, inp.s);
    let p_ok = row.p_hat.value < 0.01 + 3.0 * row.p_hat.std_err;
    let q_ok = row.q_hat.value <= q_star + 3.0 * row.q_hat.std_err;
    Outcome {
        pass: p_ok && q_ok,
        detail: format!(
            "P_hat={} (se {:.2e}) vs 0.01; q_hat={} (se {:.2e}) vs q*={q_star:.6e}; trials={}",
            row.p_hat.value, row.p_hat.std_err, row.q_hat.value, row.q_hat.std_err, row.trials
        ),
        artifact: row.to_csv(),
    }
}

fn perfect_tolerance_identity() -> Outcome {
    let attacked = TrainConfig {
        task: TaskSpec::Quadratic { d: 20, curvature: 1.0, sigma: 1.0, noise: NoiseFamily::Gaussian },
        n: 9,
        code: TrainCode::Deterministic { b: 3 },
        b: 3,
        attack: AttackModel::Reverse,
        steps: 500,
        lr: LrSchedule::Fixed(0.01),
        momentum: 0.0,
        batch: 8,
        batch_reduction: 1.0,
        seed: SEED,
    };
    let clean = TrainConfig { b: 0, ..attacked.clone() };
    let a = trainer::train(&attacked).unwrap();
    let c = trainer::train(&clean).unwrap();
    let bits = |w: &[f64]| w.iter().map(|x| format!("{:016x}", x.to_bits())).collect::<Vec<_>>().join(",");
    let identical = bits(&a.final_weights) == bits(&c.final_weights);
    let digests_equal = a.records.iter().zip(&c.records).all(|(x, y)| x.mu_digest == y.mu_digest);
    Outcome {
        pass: identical && digests_equal && a.info.byzantine.len() == 3 && !a.diverged,
        detail: format!(
            "byzantine={:?}; w_T bit-identical={identical}; all 500 mu digests equal={digests_equal}; loss {:.4} -> {:.4}",
            a.info.byzantine, a.records[0].loss, a.final_loss
        ),
        artifact: bits(&a.final_weights),
    }
}

fn robust_training() -> Outcome {
    let base = TrainConfig {
        task: TaskSpec::Logistic { d: 50, samples: 1800, label_noise: 0.05 },
        n: 9,
        code: TrainCode::Deterministic { b: 3 },
        b: 3,
        attack: AttackModel::Reverse,
        steps: 2000,
        lr: LrSchedule::Fixed(1e-3),
        momentum: 0.9,
        batch: 16,
        batch_reduction: 1.0,
        seed: 7,
    };
    let coded = trainer::train(&base).unwrap();
    let uncoded = trainer::train(&TrainConfig { code: TrainCode::Identity, ..base.clone() }).unwrap();
    let baseline = trainer::train(&TrainConfig { code: TrainCode::Identity, b: 0, ..base.clone() }).unwrap();
    let (fc, fu, fb) = (coded.final_loss, uncoded.final_loss, baseline.final_loss);
    Outcome {
        pass: fc < fu && fu > fb,
        detail: format!("final loss coded={fc:.5} uncoded={fu:.5} baseline(b=0)={fb:.5}"),
        artifact: format!("{:x} {:x} {:x}", fc.to_bits(), fu.to_bits(), fb.to_bits()),
    }
}

fn oracle_statistics() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    let mut artifact = String::new();
    for (i, s) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
        let cfg = OracleConfig::with_snr(s, 1);
        let est = sign_error_rate(&cfg, 1_000_000, SEED + i as u64).unwrap();
        let exact = gaussian_sign_error(s);
        let bound = bounds::sign_error_bound(s);
        let within = (est.value - exact).abs() <= 3.0 * est.std_err_at(exact);
        let under = est.value < bound;
        pass &= within && under;
        detail.push(format!("S={s}: {:.5} vs {:.5} (bound {:.4})", est.value, exact, bound));
        writeln!(artifact, "{s} {}", est.value).unwrap();
    }
    Outcome { pass, detail: detail.join("; "), artifact }
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "redundancy reproduction", Duration::from_secs(1), redundancy_reproduction),
        (2, "deterministic codes tolerant, identity not", Duration::from_secs(60), theorem_confirmation),
        (3, "weight-condition and brute-force verifiers agree", Duration::from_secs(300), oracle_equivalence),
        (4, "certificate at n=40, C=1, S=sqrt(128), alpha=0.2, delta=100", Duration::from_secs(1), numeric_bound),
        (5, "Monte Carlo under the bounds", Duration::from_secs(120), monte_carlo_dominance),
        (6, "perfect tolerance: attacked w_T equals clean w_T", Duration::from_secs(30), perfect_tolerance_identity),
        (7, "coded training beats uncoded under attack", Duration::from_secs(300), robust_training),
        (8, "Gaussian sign error vs Phi(-S) and two-arm bound", Duration::from_secs(60), oracle_statistics),
    ];
    let pool = |t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
    let (single, eight) = (pool(1), pool(8));

    let mut failures = 0;
    let mut reproducible = Vec::new();
    for (id, name, budget, run) in criteria {
        let started = Instant::now();
        let a = eight.install(run);
        let elapsed = started.elapsed();
        let b = single.install(run);
        let in_budget = elapsed < budget;
        let pass = a.pass && in_budget;
        failures += !pass as usize;
        reproducible.push((id, a.artifact == b.artifact));
        println!(
            "[{}] {id}. {name} ({:.2}s, budget {}s): {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            a.detail
        );
    }
    let differing: Vec<usize> = reproducible.iter().filter(|(_, same)| !same).map(|(id, _)| *id).collect();
    let pass = differing.is_empty();
    failures += !pass as usize;
    println!(
        "[{}] 9. identical outputs at 1 and 8 threads: {}",
        if pass { "PASS" } else { "FAIL" },
        if pass { "criteria 1-8 all match".to_owned() } else { format!("differ for criteria {differing:?}") }
    );
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
