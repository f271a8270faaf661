//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` are implemented faithfully but are
//! known not to hold; they still print FAIL. The process exits nonzero on
//! any other failure, or if an expected failure starts passing.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use latticeproc::archsim::{check_hazards, model_sampling_cycles, schedule_ntt};
use latticeproc::keccak::KNOWN_ANSWERS;
use latticeproc::kem::{self, Kem, KemParams, PRESETS};
use latticeproc::ntt::{compression_report, find_ntt_prime};
use latticeproc::reference::negacyclic_schoolbook;
use latticeproc::sampler::{
    binomial_sample, expected_bits_per_sample, rejection_sample_uniform, sample_polynomial, BitReader,
    ChunkSource,
};
use latticeproc::vm::{self, RegisterFile, CONVOLUTION_PROGRAM};
use latticeproc::{
    negacyclic_multiply, ntt_forward, ntt_inverse, Direction, Distribution, Domain, Modulus, NttTables,
    Polynomial, SamplerConfig, XofMode, XofState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::factorial::ln_binomial;

const EXPECTED_FAILURES: &[u32] = &[7];

const KAT_TIME_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_PAIRS: usize = 100;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);
const ROUND_TRIPS: usize = 1000;
const NTT_CYCLES_TARGET: u64 = 1288;
const SAMPLE_CYCLES_TARGET: f64 = 1009.0;
const SAMPLE_CYCLES_TOLERANCE: f64 = 0.15;
const CHI_SQUARE_ALPHA: f64 = 0.001;
const CHI_SQUARE_MIN_EXPECTED: f64 = 5.0;
const BINOMIAL_SAMPLES: u64 = 1_000_000;
const VARIANCE_TOLERANCE: f64 = 0.05;
const UNIFORM_SAMPLES: u64 = 100_000;
const MIN_TABLE_SAVING: f64 = 0.33;
const KEM_TRIALS: u64 = 1000;
const KEM_TIME_LIMIT: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, m: Modulus) -> Polynomial {
    let q = m.value();
    let coeffs = (0..n).map(|_| rng.random_range(0..q)).collect();
    Polynomial::new(coeffs, m, Domain::Coefficient).unwrap()
}

fn keccak_known_answers() -> Outcome {
    let start = Instant::now();
    let failed: Vec<&str> = KNOWN_ANSWERS.iter().filter(|k| !k.check()).map(|k| k.name).collect();
    let elapsed = start.elapsed();
    let ok = failed.is_empty() && elapsed < KAT_TIME_LIMIT;
    Outcome::new(
        ok,
        format!(
            "{} vectors, {} failed {:?}, {:.3} s (limit {} s)",
            KNOWN_ANSWERS.len(),
            failed.len(),
            failed,
            elapsed.as_secs_f64(),
            KAT_TIME_LIMIT.as_secs()
        ),
    )
}

fn ntt_oracle() -> Outcome {
    let start = Instant::now();
    let q2048 = find_ntt_prime(2048).unwrap();
    let sets = [
        (4, Modulus::new(17).unwrap()),
        (64, Modulus::new(7681).unwrap()),
        (256, Modulus::new(7681).unwrap()),
        (512, Modulus::new(12289).unwrap()),
        (1024, Modulus::new(12289).unwrap()),
        (2048, q2048),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for &(n, m) in &sets {
        let t = NttTables::new(n, m, true).unwrap();
        for _ in 0..ORACLE_PAIRS {
            let a = random_poly(&mut rng, n, m);
            let b = random_poly(&mut rng, n, m);
            let fast = negacyclic_multiply(&a, &b, &t).unwrap();
            if fast.coeffs() != negacyclic_schoolbook(a.coeffs(), b.coeffs(), m.value()) {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        mismatches == 0 && elapsed < ORACLE_TIME_LIMIT,
        format!(
            "{} pairs x {} parameter sets (n=2048 uses q={q2048}), {mismatches} mismatches, {:.1} s",
            ORACLE_PAIRS,
            sets.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    let mut checked = Vec::new();
    for &(name, n, q, ..) in PRESETS {
        let m = Modulus::new(q).unwrap();
        let t = NttTables::new(n, m, true).unwrap();
        for _ in 0..ROUND_TRIPS {
            let p = random_poly(&mut rng, n, m);
            if ntt_inverse(&ntt_forward(&p, &t).unwrap(), &t).unwrap() != p {
                failures += 1;
            }
        }
        checked.push(name);
    }
    Outcome::new(
        failures == 0,
        format!("{ROUND_TRIPS} polynomials per preset {checked:?}, {failures} failures"),
    )
}

fn cycle_model() -> Outcome {
    let ntt = schedule_ntt(256, Direction::Forward).unwrap().total_cycles;
    let s = model_sampling_cycles(512, 16, XofMode::Shake256);
    let gap = (s.cycles as f64 - SAMPLE_CYCLES_TARGET) / SAMPLE_CYCLES_TARGET;
    let ok = ntt == NTT_CYCLES_TARGET && gap.abs() <= SAMPLE_CYCLES_TOLERANCE;
    let mut sponge = XofState::shake256(&[0u8; 32]);
    let cfg = SamplerConfig::new(&Modulus::new(12289).unwrap(), 16, XofMode::Shake256).unwrap();
    sample_polynomial(&mut sponge, 512, &Modulus::new(12289).unwrap(), Distribution::Binomial, &cfg).unwrap();
    Outcome::new(
        ok,
        format!(
            "ntt n=256 forward {ntt} cycles (target {NTT_CYCLES_TARGET}); sampling n=512 k=16 {} cycles \
             (target {SAMPLE_CYCLES_TARGET}, gap {:+.1}%, tolerance {:.0}%)",
            s.cycles,
            100.0 * gap,
            100.0 * SAMPLE_CYCLES_TOLERANCE
        ),
    )
    .note("ntt model: one butterfly per cycle, n/2 + 1 cycles per stage, n cycles for the psi scaling pass")
    .note(format!(
        "sampling model: {} PRNG bits = {} SHAKE-256 blocks of 1088 bits, plus {} absorb call, \
         24 cycles per Keccak call, 1 cycle per coefficient",
        s.prng_bits, s.squeeze_blocks, s.absorb_permutations
    ))
    .note(format!(
        "the software sponge fuses absorb with the first block and uses {} permutations ({} cycles)",
        sponge.permutations(),
        24 * sponge.permutations() + 512
    ))
    .note("residual gap: control, seed loading and pipeline fill are not modeled")
}

fn hazard_freedom() -> Outcome {
    let mut checked = 0;
    let mut violations = 0;
    for log_n in 3..=11 {
        for dir in [Direction::Forward, Direction::Inverse] {
            violations += check_hazards(&schedule_ntt(1 << log_n, dir).unwrap()).len();
            checked += 1;
        }
    }
    Outcome::new(
        violations == 0,
        format!("{checked} schedules (n = 8..2048, both directions), {violations} bank conflicts"),
    )
}

/// Merges adjacent bins from each tail until every bin expects at least
/// `min_expected` observations.
fn pool_tails(bins: &[(f64, f64)], min_expected: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(o, e) in bins {
        acc = (acc.0 + o, acc.1 + e);
        if acc.1 >= min_expected {
            out.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        let last = out.last_mut().expect("at least one populated bin");
        *last = (last.0 + acc.0, last.1 + acc.1);
    }
    out
}

fn binomial_statistics() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut notes = Vec::new();
    for k in [4u32, 8, 16, 32] {
        let mut xof = XofState::shake256(&[b'k', k as u8]);
        let mut reader = BitReader::new(&mut xof);
        let mut counts = vec![0u64; 2 * k as usize + 1];
        let (mut sum, mut sum_sq) = (0f64, 0f64);
        for _ in 0..BINOMIAL_SAMPLES {
            let d = binomial_sample(&mut reader, k);
            counts[(d + k as i32) as usize] += 1;
            sum += d as f64;
            sum_sq += (d as f64).powi(2);
        }
        let bits_exact = reader.bits_consumed() == 2 * k as u64 * BINOMIAL_SAMPLES;
        let total = BINOMIAL_SAMPLES as f64;
        let bins: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let p = (ln_binomial(2 * k as u64, i as u64) - 2.0 * k as f64 * std::f64::consts::LN_2).exp();
                (c as f64, p * total)
            })
            .collect();
        let pooled = pool_tails(&bins, CHI_SQUARE_MIN_EXPECTED);
        let stat: f64 = pooled.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
        let df = (pooled.len() - 1) as f64;
        let critical = ChiSquared::new(df).unwrap().inverse_cdf(1.0 - CHI_SQUARE_ALPHA);
        let mean = sum / total;
        let variance = sum_sq / total - mean * mean;
        let var_err = (variance - k as f64 / 2.0).abs() / (k as f64 / 2.0);
        let pass = stat < critical && var_err <= VARIANCE_TOLERANCE && bits_exact;
        ok &= pass;
        parts.push(format!("k={k}:{}", if pass { "ok" } else { "bad" }));
        notes.push(format!(
            "k={k}: chi2 {stat:.1} < {critical:.1} (df {df}, {} bins), variance {variance:.3} vs {} ({:.2}%), \
             {} bits = 2k per sample: {bits_exact}",
            pooled.len(),
            k as f64 / 2.0,
            100.0 * var_err,
            reader.bits_consumed()
        ));
    }
    let mut out = Outcome::new(
        ok,
        format!("{BINOMIAL_SAMPLES} samples per k, alpha {CHI_SQUARE_ALPHA}: {}", parts.join(" ")),
    );
    out.notes = notes;
    out
}

/// Average PRNG bits per accepted sample at the given chunk width.
fn measured_bits(q: u64, width: u32, seed: u8) -> f64 {
    let m = Modulus::new(q).unwrap();
    let mut xof = XofState::shake256(&[b'u', seed]);
    let mut reader = BitReader::new(&mut xof);
    for _ in 0..UNIFORM_SAMPLES {
        rejection_sample_uniform(&mut reader, &m, width);
    }
    reader.bits_consumed() as f64 / UNIFORM_SAMPLES as f64
}

fn rejection_efficiency() -> Outcome {
    let bounded = measured_bits(7681, 16, 1);
    let naive = measured_bits(7681, 13, 2);
    let alt_bounded = measured_bits(12289, 16, 3);
    let alt_naive = measured_bits(12289, 14, 4);
    Outcome::new(
        bounded < naive,
        format!(
            "q=7681: bounded w=16 {bounded:.3} bits/sample, naive w=13 {naive:.3}, ratio {:.3}",
            bounded / naive
        ),
    )
    .note(format!(
        "expected values: w=16 {:.3}, w=13 {:.3}; 2^16 = 8 * 2^13 so both accept with probability 7681/8192",
        expected_bits_per_sample(7681, 16),
        expected_bits_per_sample(7681, 13)
    ))
    .note(format!(
        "q=12289 for comparison: bounded w=16 {alt_bounded:.3}, naive w=14 {alt_naive:.3}, ratio {:.3}",
        alt_bounded / alt_naive
    ))
}

/// Square-and-multiply with plain `%`, independent of the crate's Barrett path.
fn mod_exp(base: u64, mut exp: u64, q: u64) -> u64 {
    let (mut acc, mut b) = (1u128, base as u128 % q as u128);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % q as u128;
        }
        b = b * b % q as u128;
        exp >>= 1;
    }
    acc as u64
}

fn table_compression() -> Outcome {
    let mut ok = true;
    let mut savings = Vec::new();
    let mut mismatches = 0;
    for &(_, n, q, ..) in PRESETS {
        let m = Modulus::new(q).unwrap();
        let r = compression_report(n, m).unwrap();
        ok &= r.saving >= MIN_TABLE_SAVING;
        savings.push(format!("n={n} {}/{} ({:.1}%)", r.compressed_entries, r.baseline_entries, 100.0 * r.saving));
        for compressed in [true, false] {
            let t = NttTables::new(n, m, compressed).unwrap();
            let psi = t.psi() as u64;
            let psi_inv = mod_exp(psi, q - 2, q);
            let omega = mod_exp(psi, 2, q);
            let omega_inv = mod_exp(omega, q - 2, q);
            for i in 0..2 * n {
                mismatches += (t.psi_pow(i) as u64 != mod_exp(psi, i as u64, q)) as usize;
            }
            for i in 0..n {
                mismatches += (t.psi_inv_pow(i) as u64 != mod_exp(psi_inv, i as u64, q)) as usize;
                mismatches += (t.omega_pow(i) as u64 != mod_exp(omega, i as u64, q)) as usize;
                mismatches += (t.omega_inv_pow(i) as u64 != mod_exp(omega_inv, i as u64, q)) as usize;
            }
            mismatches += (t.n_inv() as u64 != mod_exp(n as u64, q - 2, q)) as usize;
        }
    }
    Outcome::new(
        ok && mismatches == 0,
        format!("{}; {mismatches} derived constants differ from recomputation", savings.join(", ")),
    )
    .note("baseline: psi^i and psi^-i (n each) plus omega^i and omega^-i (n/2 each); compressed: psi^i only")
    .note(format!("threshold {:.0}%", 100.0 * MIN_TABLE_SAVING))
}

fn kem_round_trip() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    let mut parts = Vec::new();
    for &(name, ..) in PRESETS {
        let kem = Kem::new(KemParams::preset(name).unwrap()).unwrap();
        let r = kem::selftest(&kem, name.as_bytes(), KEM_TRIALS).unwrap();
        total += r.mismatches;
        parts.push(format!("{name} {}/{}", r.mismatches, r.trials));
    }
    let elapsed = start.elapsed();
    Outcome::new(
        total == 0 && elapsed < KEM_TIME_LIMIT,
        format!("mismatches {}, {:.1} s (limit {} s)", parts.join(", "), elapsed.as_secs_f64(), KEM_TIME_LIMIT.as_secs()),
    )
}

fn vm_equivalence() -> Outcome {
    let prog = vm::parse_program(CONVOLUTION_PROGRAM).unwrap();
    let exec = vm::execute(&prog, RegisterFile::new()).unwrap();
    let m = Modulus::new(7681).unwrap();
    let t = NttTables::new(256, m, true).unwrap();
    let draw = |dist, k: u32, seed: u8| {
        let cfg = SamplerConfig::new(&m, k.max(1), XofMode::Shake256).unwrap();
        sample_polynomial(&mut XofState::shake256(&[seed]), 256, &m, dist, &cfg).unwrap()
    };
    let (a, _) = draw(Distribution::Binomial, 4, 0);
    let (b, b_stats) = draw(Distribution::Uniform, 0, 1);
    let want = negacyclic_multiply(&a, &b, &t).unwrap();
    let identical = exec.registers.get("r2".parse().unwrap()) == Some(&want);
    let model = [
        0,
        model_sampling_cycles(256, 4, XofMode::Shake256).cycles,
        24 * b_stats.permutations + 256,
        NTT_CYCLES_TARGET,
        NTT_CYCLES_TARGET,
        256,
        NTT_CYCLES_TARGET,
        0,
    ];
    let additive = exec.per_instruction == model
        && exec.cycle_total == exec.per_instruction.iter().sum::<u64>()
        && exec.cycle_total == model.iter().sum::<u64>();
    Outcome::new(
        identical && additive,
        format!(
            "r2 bit-identical to library composition: {identical}; cycle total {} = sum of per-instruction model costs: {additive}",
            exec.cycle_total
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "keccak known answers", keccak_known_answers),
        (2, "ntt matches schoolbook", ntt_oracle),
        (3, "ntt round trip", round_trip),
        (4, "cycle model", cycle_model),
        (5, "hazard freedom", hazard_freedom),
        (6, "binomial statistics", binomial_statistics),
        (7, "rejection efficiency", rejection_efficiency),
        (8, "table compression", table_compression),
        (9, "kem round trip", kem_round_trip),
        (10, "vm equivalence", vm_equivalence),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, check) in criteria {
        let out = check();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let tag = match (out.pass, expected_fail) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
        };
        println!("{tag} {id} {name}: {}", out.detail);
        for n in &out.notes {
            println!("    {n}");
        }
        if out.pass {
            passed += 1;
        }
        if out.pass == expected_fail {
            if out.pass {
                println!("    criterion {id} is listed as an expected failure but passed");
            }
            unexpected.push(id);
        }
    }
    println!(
        "{passed}/{} criteria pass; expected failures {EXPECTED_FAILURES:?}; unexpected outcomes {unexpected:?}",
        criteria.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
