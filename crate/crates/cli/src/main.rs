mod report;

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use latticeproc::archsim::{model_sampling_cycles, ntt_cycles, schedule_ntt, KECCAK_CYCLES};
use latticeproc::keccak::{keccak_f1600, KNOWN_ANSWERS};
use latticeproc::kem::{self, Ciphertext, Kem, KemParams, PublicKey, SecretKey};
use latticeproc::ntt::find_ntt_prime;
use latticeproc::reference::negacyclic_schoolbook;
use latticeproc::sampler::sample_polynomial;
use latticeproc::vm::{self, Reg, RegisterFile};
use latticeproc::{
    negacyclic_multiply, ntt_forward, ntt_inverse, Direction, Distribution, Modulus, NttTables,
    Polynomial, SamplerConfig, XofMode, XofState,
};
use rayon::prelude::*;
use serde_json::json;

use report::{pass_fail, RunReport};

#[derive(Parser)]
#[command(name = "latticeproc", version, about = "Lattice cryptography processor toolkit")]
struct Cli {
    /// Print a single-line JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the embedded Keccak reference vectors.
    Kat,
    /// Transform a seeded polynomial, or check it against an oracle.
    Ntt(NttArgs),
    /// Sample a polynomial from the seeded PRNG.
    Sample(SampleArgs),
    /// Schedule an NTT on the banked memory model.
    Simulate(SimulateArgs),
    /// Key encapsulation.
    Kem {
        #[command(subcommand)]
        op: KemOp,
    },
    /// Polynomial VM.
    Vm {
        #[command(subcommand)]
        op: VmOp,
    },
    /// Wall-clock timings beside modeled cycle counts.
    Bench(BenchArgs),
}

#[derive(Args)]
struct NttArgs {
    #[arg(long)]
    n: usize,
    /// Defaults to the largest 24-bit prime with a 2n-th root of unity.
    #[arg(long)]
    q: Option<u64>,
    #[arg(long, default_value = "00")]
    seed: String,
    /// Check inverse(forward(p)) == p.
    #[arg(long, conflicts_with = "convolve")]
    roundtrip: bool,
    /// Check the NTT product against schoolbook multiplication.
    #[arg(long)]
    convolve: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value = "binomial")]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: u64,
    #[arg(long, default_value_t = 16)]
    k: u32,
    #[arg(long, default_value = "00")]
    seed: String,
    #[arg(long, default_value = "shake256")]
    prng: String,
    /// Chunk width for uniform sampling; defaults to the most bit-efficient.
    #[arg(long)]
    width: Option<u32>,
    /// Also print bits consumed, permutations and rejections.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "forward")]
    dir: String,
    /// Write every bank access as `cycle,bank,addr,R|W`.
    #[arg(long)]
    dump_trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum KemOp {
    /// Prints `pk` and `sk` lines.
    Keygen(KemSeeded),
    /// Reads a `pk` line; prints `ct` and `ss` lines.
    Encaps(KemSeeded),
    /// Reads `sk` and `ct` lines; prints an `ss` line.
    Decaps(KemPreset),
    /// Seeded encaps/decaps trials; fails on any mismatch.
    Selftest(KemSelftest),
}

#[derive(Args)]
struct KemPreset {
    #[arg(long, default_value = "module-kyber768-like")]
    preset: String,
}

#[derive(Args)]
struct KemSeeded {
    #[command(flatten)]
    preset: KemPreset,
    /// Hex of any length; hashed to 32 bytes.
    #[arg(long)]
    seed: String,
}

#[derive(Args)]
struct KemSelftest {
    #[command(flatten)]
    preset: KemPreset,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value = "00")]
    seed: String,
}

#[derive(Subcommand)]
enum VmOp {
    /// Assemble and execute a program file.
    Run {
        file: PathBuf,
        /// Register to print; repeatable. Registers named by `out` are
        /// always printed.
        #[arg(long)]
        dump: Vec<String>,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 16)]
    trials: usize,
    #[arg(long, default_value = "module-kyber768-like")]
    preset: String,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type CmdResult = Result<RunReport, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn parse_seed(s: &str) -> Result<Vec<u8>, Failure> {
    hex::decode(s).map_err(|e| usage(format!("seed {s:?}: {e}")))
}

fn parse_seed32(s: &str) -> Result<kem::Seed, Failure> {
    let bytes = parse_seed(s)?;
    Ok(XofState::shake256(&bytes)
        .squeeze_vec(kem::SEED_LEN)
        .try_into()
        .expect("32 bytes"))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn seeded_uniform(n: usize, m: &Modulus, seed: &[u8], tag: u8) -> Result<Polynomial, Failure> {
    let mut input = seed.to_vec();
    input.push(tag);
    let cfg = SamplerConfig::new(m, 1, XofMode::Shake128).map_err(usage)?;
    sample_polynomial(&mut XofState::shake128(&input), n, m, Distribution::Uniform, &cfg)
        .map(|(p, _)| p)
        .map_err(usage)
}

fn cmd_kat() -> CmdResult {
    let mut r = RunReport::new("kat", json!({}));
    let mut all = true;
    let mut vectors = Vec::new();
    for kat in KNOWN_ANSWERS {
        let ok = kat.check();
        all &= ok;
        r.line(format!("{} {}", pass_fail(ok), kat.name));
        vectors.push(json!({"name": kat.name, "pass": ok}));
    }
    r.output("vectors", vectors).verdict(all);
    Ok(r)
}

fn cmd_ntt(a: NttArgs) -> CmdResult {
    let m = match a.q {
        Some(q) => Modulus::new(q).map_err(usage)?,
        None => find_ntt_prime(a.n).map_err(usage)?,
    };
    let t = NttTables::new(a.n, m, true).map_err(usage)?;
    let seed = parse_seed(&a.seed)?;
    let p = seeded_uniform(a.n, &m, &seed, 0)?;
    let mode = match (a.roundtrip, a.convolve) {
        (true, _) => "roundtrip",
        (_, true) => "convolve",
        _ => "forward",
    };
    let mut r = RunReport::new(
        "ntt",
        json!({"n": a.n, "q": m.value(), "seed": a.seed, "mode": mode, "psi": t.psi()}),
    );
    match mode {
        "roundtrip" => {
            let back = ntt_inverse(&ntt_forward(&p, &t).map_err(runtime)?, &t).map_err(runtime)?;
            let ok = back == p;
            r.line(pass_fail(ok)).verdict(ok);
        }
        "convolve" => {
            let b = seeded_uniform(a.n, &m, &seed, 1)?;
            let fast = negacyclic_multiply(&p, &b, &t).map_err(runtime)?;
            let slow = negacyclic_schoolbook(p.coeffs(), b.coeffs(), m.value());
            let ok = fast.coeffs() == slow;
            r.output("product", fast.coeffs());
            r.line(pass_fail(ok)).verdict(ok);
        }
        _ => {
            let out = ntt_forward(&p, &t).map_err(runtime)?;
            r.output("input", p.coeffs()).output("output", out.coeffs());
            r.line(join(out.coeffs()));
        }
    }
    Ok(r)
}

fn cmd_sample(a: SampleArgs) -> CmdResult {
    let m = Modulus::new(a.q).map_err(usage)?;
    let dist: Distribution = a.dist.parse().map_err(usage)?;
    let mode: XofMode = a.prng.parse().map_err(usage)?;
    let mut cfg = SamplerConfig::new(&m, a.k, mode).map_err(usage)?;
    if let Some(w) = a.width {
        cfg = cfg.with_uniform_width(w);
    }
    let seed = parse_seed(&a.seed)?;
    let mut xof = XofState::with_input(mode, &seed);
    let (p, stats) = sample_polynomial(&mut xof, a.n, &m, dist, &cfg).map_err(usage)?;
    let mut r = RunReport::new(
        "sample",
        json!({"dist": dist, "n": a.n, "q": m.value(), "k": a.k, "seed": a.seed,
               "prng": mode, "uniform_width": cfg.uniform_width}),
    );
    r.output("coefficients", p.coeffs())
        .stat("bits_consumed", stats.bits_consumed)
        .stat("permutations", stats.permutations)
        .stat("rejected", stats.rejected);
    r.line(join(p.coeffs()));
    if a.stats {
        r.line(serde_json::to_string(&stats).expect("stats serialize"));
    }
    Ok(r)
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let dir: Direction = a.dir.parse().map_err(usage)?;
    let trace = schedule_ntt(a.n, dir).map_err(usage)?;
    if let Some(path) = &a.dump_trace {
        let file = std::fs::File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        let mut w = io::BufWriter::new(file);
        trace.write_csv(&mut w).and_then(|_| w.flush()).map_err(runtime)?;
    }
    let summary = trace.summary();
    let mut r = RunReport::new("simulate", json!({"n": a.n, "dir": dir}));
    r.outputs_from(&summary);
    r.line(format!("total_cycles {}", summary.total_cycles))
        .line(format!("violations {}", summary.violations));
    for p in &summary.per_stage_counts {
        r.line(format!(
            "{:?} {} cycles={} reads={} writes={}",
            p.kind, p.index, p.cycles, p.reads, p.writes
        ));
    }
    r.verdict(summary.violations == 0);
    Ok(r)
}

/// Reads `label hex` lines from standard input.
fn read_labeled() -> Result<HashMap<String, Vec<u8>>, Failure> {
    let mut out = HashMap::new();
    for line in io::stdin().lock().lines() {
        let line = line.map_err(runtime)?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (label, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| usage(format!("expected `label hex`, got {line:?}")))?;
        let bytes = hex::decode(value.trim()).map_err(|e| usage(format!("{label}: {e}")))?;
        out.insert(label.to_string(), bytes);
    }
    Ok(out)
}

fn take(map: &mut HashMap<String, Vec<u8>>, label: &str) -> Result<Vec<u8>, Failure> {
    map.remove(label)
        .ok_or_else(|| usage(format!("missing `{label}` line on standard input")))
}

fn cmd_kem(op: KemOp) -> CmdResult {
    let preset = match &op {
        KemOp::Keygen(s) | KemOp::Encaps(s) => &s.preset.preset,
        KemOp::Decaps(p) => &p.preset,
        KemOp::Selftest(s) => &s.preset.preset,
    };
    let params = KemParams::preset(preset).map_err(usage)?;
    let kem = Kem::new(params.clone()).map_err(runtime)?;
    let p = json!({"preset": params.name, "n": params.n, "q": params.modulus.value(),
                   "rank": params.rank, "k": params.binomial_k});
    match op {
        KemOp::Keygen(s) => {
            let kp = kem.keygen(&parse_seed32(&s.seed)?).map_err(runtime)?;
            let (pk, sk) = (hex::encode(kp.public.to_bytes()), hex::encode(kp.secret.to_bytes()));
            let mut r = RunReport::new("kem keygen", p);
            r.line(format!("pk {pk}")).line(format!("sk {sk}"));
            r.output("pk", pk).output("sk", sk);
            Ok(r)
        }
        KemOp::Encaps(s) => {
            let coins = parse_seed32(&s.seed)?;
            let mut input = read_labeled()?;
            let pk = PublicKey::from_bytes(&params, &take(&mut input, "pk")?).map_err(usage)?;
            let (ct, ss) = kem.encaps(&pk, &coins).map_err(runtime)?;
            let (ct, ss) = (hex::encode(ct.to_bytes()), hex::encode(ss));
            let mut r = RunReport::new("kem encaps", p);
            r.line(format!("ct {ct}")).line(format!("ss {ss}"));
            r.output("ct", ct).output("ss", ss);
            Ok(r)
        }
        KemOp::Decaps(_) => {
            let mut input = read_labeled()?;
            let sk = SecretKey::from_bytes(&params, &take(&mut input, "sk")?).map_err(usage)?;
            let ct = Ciphertext::from_bytes(&params, &take(&mut input, "ct")?).map_err(usage)?;
            let ss = hex::encode(kem.decaps(&sk, &ct).map_err(runtime)?);
            let mut r = RunReport::new("kem decaps", p);
            r.line(format!("ss {ss}"));
            r.output("ss", ss);
            Ok(r)
        }
        KemOp::Selftest(s) => {
            let seed = parse_seed(&s.seed)?;
            let rep = kem::selftest(&kem, &seed, s.trials).map_err(runtime)?;
            let mut r = RunReport::new("kem selftest", p);
            r.outputs_from(rep);
            r.line(format!("trials {} mismatches {}", rep.trials, rep.mismatches))
                .line(pass_fail(rep.mismatches == 0))
                .verdict(rep.mismatches == 0);
            Ok(r)
        }
    }
}

fn cmd_vm(op: VmOp) -> CmdResult {
    let VmOp::Run { file, dump } = op;
    let src = std::fs::read_to_string(&file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let prog = vm::parse_program(&src).map_err(usage)?;
    let mut regs: Vec<Reg> = dump
        .iter()
        .map(|d| d.parse::<Reg>().map_err(usage))
        .collect::<Result<_, _>>()?;
    let exec = vm::execute(&prog, RegisterFile::new()).map_err(runtime)?;
    for &o in exec.registers.outputs() {
        if !regs.contains(&o) {
            regs.push(o);
        }
    }
    let mut r = RunReport::new(
        "vm run",
        json!({"file": file.display().to_string(), "instructions": prog.len()}),
    );
    let mut registers = serde_json::Map::new();
    for reg in regs {
        let hex = exec
            .registers
            .get(reg)
            .map(|p| hex::encode(p.to_bytes()))
            .ok_or_else(|| runtime(format!("{reg} is empty")))?;
        r.line(format!("{reg} {hex}"));
        registers.insert(reg.to_string(), hex.into());
    }
    r.line(format!("cycles {}", exec.cycle_total));
    r.output("registers", registers)
        .output("cycle_total", exec.cycle_total)
        .stat("per_instruction", &exec.per_instruction);
    Ok(r)
}

struct Kernel {
    name: String,
    modeled_cycles: Option<u64>,
    run: Box<dyn Fn(u64) + Sync>,
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let params = KemParams::preset(&a.preset).map_err(usage)?;
    let kem = Kem::new(params.clone()).map_err(runtime)?;
    let q7681 = Modulus::new(7681).map_err(runtime)?;
    let q12289 = Modulus::new(12289).map_err(runtime)?;
    let t256 = NttTables::new(256, q7681, true).map_err(runtime)?;
    let p256 = seeded_uniform(256, &q7681, b"bench", 0)?;
    let cfg = SamplerConfig::new(&q12289, 16, XofMode::Shake256).map_err(runtime)?;

    let kernels = vec![
        Kernel {
            name: "keccak-f1600".into(),
            modeled_cycles: Some(KECCAK_CYCLES),
            run: Box::new(|t| {
                let mut s = [t; 25];
                keccak_f1600(&mut s);
                std::hint::black_box(s);
            }),
        },
        Kernel {
            name: "ntt-forward n=256 q=7681".into(),
            modeled_cycles: Some(ntt_cycles(256)),
            run: Box::new(move |_| {
                std::hint::black_box(ntt_forward(&p256, &t256).expect("valid"));
            }),
        },
        Kernel {
            name: "binomial-sample n=512 k=16".into(),
            modeled_cycles: Some(model_sampling_cycles(512, 16, XofMode::Shake256).cycles),
            run: Box::new(move |t| {
                let mut xof = XofState::shake256(&t.to_le_bytes());
                let out = sample_polynomial(&mut xof, 512, &q12289, Distribution::Binomial, &cfg);
                std::hint::black_box(out.expect("valid"));
            }),
        },
        Kernel {
            name: format!("kem-roundtrip {}", params.name),
            modeled_cycles: None,
            run: Box::new(move |t| {
                let (seed, coins) = kem::trial_seeds(b"bench", t);
                let kp = kem.keygen(&seed).expect("valid");
                let (ct, _) = kem.encaps(&kp.public, &coins).expect("valid");
                std::hint::black_box(kem.decaps(&kp.secret, &ct).expect("valid"));
            }),
        },
    ];

    let mut r = RunReport::new("bench", json!({"trials": a.trials, "preset": params.name}));
    let mut rows = Vec::new();
    for k in &kernels {
        let mut ns: Vec<u128> = (0..a.trials as u64)
            .into_par_iter()
            .map(|t| {
                let start = Instant::now();
                (k.run)(t);
                start.elapsed().as_nanos()
            })
            .collect();
        ns.sort_unstable();
        let median = ns[ns.len() / 2];
        let modeled = k.modeled_cycles.map_or("-".to_string(), |c| c.to_string());
        r.line(format!("{:<32} median_ns={median:<10} modeled_cycles={modeled}", k.name));
        rows.push(json!({"kernel": k.name, "median_ns": median as u64, "modeled_cycles": k.modeled_cycles}));
    }
    r.output("kernels", rows);
    Ok(r)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kat => cmd_kat(),
        Command::Ntt(a) => cmd_ntt(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Kem { op } => cmd_kem(op),
        Command::Vm { op } => cmd_vm(op),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(r) => {
            let mut out = io::stdout().lock();
            let written = if cli.json {
                writeln!(out, "{}", r.to_json())
            } else {
                write!(out, "{}", r.text)
            };
            if written.and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            if r.pass == Some(false) {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_help());
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
