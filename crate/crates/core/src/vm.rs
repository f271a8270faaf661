//! Straight-line polynomial VM: assembler, 4-byte encoding and interpreter.
//!
//! ```text
//! config n=256 q=7681
//! sample r0 dist=binomial k=4 seed=01
//! sample r1 dist=uniform seed=02
//! ntt r0
//! ntt r1
//! pwmul r2 r0 r1
//! intt r2
//! hash r3 r2
//! out r2
//! ```
//!
//! Sampling draws from `shake256(seed)`; `hash rD rS` fills `rD` with a
//! uniform polynomial drawn from `shake128` of `rS`'s 3-byte encoding.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archsim::{model_sampling_cycles, ntt_cycles, CacheModel, CapacityVerdict, KECCAK_CYCLES};
use crate::error::Error;
use crate::keccak::{XofMode, XofState};
use crate::modarith::Modulus;
use crate::ntt::{ntt_forward, ntt_inverse, pointwise, Domain, NttTables, PointwiseOp, Polynomial};
use crate::sampler::{sample_polynomial, Distribution, SampleStats, SamplerConfig};

pub const REGISTERS: usize = 16;
pub const INSTRUCTION_BYTES: usize = 4;
pub const MAX_PROGRAM_LEN: usize = 1024 / INSTRUCTION_BYTES;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("line {line}: unknown opcode {opcode:?}")]
    UnknownOpcode { line: usize, opcode: String },
    #[error("line {line}: {reason}")]
    BadOperand { line: usize, reason: String },
    #[error("program has {0} instructions, limit is {MAX_PROGRAM_LEN}")]
    ProgramTooLarge(usize),
    #[error("pc {0} is past the end of the program")]
    ProgramEnded(usize),
    #[error("pc {0}: polynomial operation before config")]
    UnconfiguredParams(usize),
    #[error("pc {pc}: register file needs {used} bytes, cache holds {capacity}")]
    CapacityExceeded { pc: usize, used: usize, capacity: usize },
    #[error("pc {pc}: expected {expected:?} domain, found {found:?}")]
    DomainMismatch { pc: usize, expected: Domain, found: Domain },
    #[error("pc {pc}: register r{reg} is empty")]
    EmptyRegister { pc: usize, reg: u8 },
    #[error("pc {pc}: {source}")]
    Library { pc: usize, source: Error },
    #[error("malformed encoding: {0}")]
    BadEncoding(String),
}

pub type VmResult<T> = std::result::Result<T, VmError>;

fn lift(pc: usize) -> impl Fn(Error) -> VmError {
    move |e| match e {
        Error::DomainMismatch { expected, found } => VmError::DomainMismatch { pc, expected, found },
        source => VmError::Library { pc, source },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reg(u8);

impl Reg {
    pub fn new(index: u8) -> Option<Self> {
        (usize::from(index) < REGISTERS).then_some(Self(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl std::str::FromStr for Reg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.strip_prefix('r')
            .and_then(|d| d.parse::<u8>().ok())
            .and_then(Reg::new)
            .ok_or_else(|| format!("expected register r0..r{}, got {s:?}", REGISTERS - 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "opcode", rename_all = "lowercase")]
pub enum Instruction {
    Config { n: usize, q: u64 },
    Sample { dst: Reg, dist: Distribution, k: u32, seed: Vec<u8> },
    Ntt { reg: Reg },
    Intt { reg: Reg },
    Pointwise { op: PointwiseOp, dst: Reg, a: Reg, b: Reg },
    Hash { dst: Reg, src: Reg },
    Out { reg: Reg },
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Config { n, q } => write!(f, "config n={n} q={q}"),
            Instruction::Sample { dst, dist, k, seed } => {
                let dist = match dist {
                    Distribution::Uniform => "uniform",
                    Distribution::Binomial => "binomial",
                };
                write!(f, "sample {dst} dist={dist} k={k} seed={}", crate::keccak::to_hex(seed))
            }
            Instruction::Ntt { reg } => write!(f, "ntt {reg}"),
            Instruction::Intt { reg } => write!(f, "intt {reg}"),
            Instruction::Pointwise { op, dst, a, b } => {
                let name = match op {
                    PointwiseOp::Mul => "pwmul",
                    PointwiseOp::Add => "pwadd",
                    PointwiseOp::Sub => "pwsub",
                };
                write!(f, "{name} {dst} {a} {b}")
            }
            Instruction::Hash { dst, src } => write!(f, "hash {dst} {src}"),
            Instruction::Out { reg } => write!(f, "out {reg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Program {
    pub instructions: Vec<Instruction>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

struct Operands<'a> {
    line: usize,
    regs: Vec<Reg>,
    keys: Vec<(&'a str, &'a str)>,
}

impl<'a> Operands<'a> {
    fn parse(line: usize, words: &[&'a str]) -> VmResult<Self> {
        let bad = |reason: String| VmError::BadOperand { line, reason };
        let mut regs = Vec::new();
        let mut keys = Vec::new();
        for w in words {
            if let Some((k, v)) = w.split_once('=') {
                if keys.iter().any(|&(seen, _)| seen == k) {
                    return Err(bad(format!("duplicate key {k:?}")));
                }
                keys.push((k, v));
            } else {
                regs.push(w.parse().map_err(bad)?);
            }
        }
        Ok(Self { line, regs, keys })
    }

    fn bad(&self, reason: impl Into<String>) -> VmError {
        VmError::BadOperand {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn shape(&self, regs: usize, allowed: &[&str]) -> VmResult<()> {
        if self.regs.len() != regs {
            return Err(self.bad(format!("expected {regs} register(s), got {}", self.regs.len())));
        }
        match self.keys.iter().find(|(k, _)| !allowed.contains(k)) {
            Some((k, _)) => Err(self.bad(format!("unexpected key {k:?}"))),
            None => Ok(()),
        }
    }

    fn key(&self, name: &str) -> Option<&'a str> {
        self.keys.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }

    fn number<T: std::str::FromStr>(&self, name: &str) -> VmResult<T> {
        let v = self.key(name).ok_or_else(|| self.bad(format!("missing {name}=")))?;
        v.parse().map_err(|_| self.bad(format!("bad value for {name}: {v:?}")))
    }
}

fn parse_hex(s: &str) -> Option<Vec<u8>> {
    if s.len() % 2 != 0 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}

fn parse_line(line: usize, text: &str) -> VmResult<Option<Instruction>> {
    let code = text.split('#').next().unwrap_or("");
    let words: Vec<&str> = code.split_whitespace().collect();
    let Some((&opcode, rest)) = words.split_first() else {
        return Ok(None);
    };
    let ops = Operands::parse(line, rest)?;
    let r = |i: usize| ops.regs[i];
    let instr = match opcode {
        "config" => {
            ops.shape(0, &["n", "q"])?;
            Instruction::Config {
                n: ops.number("n")?,
                q: ops.number("q")?,
            }
        }
        "sample" => {
            ops.shape(1, &["dist", "k", "seed"])?;
            let dist = ops
                .key("dist")
                .ok_or_else(|| ops.bad("missing dist="))?
                .parse()
                .map_err(|e: Error| ops.bad(e.to_string()))?;
            let k = match (dist, ops.key("k")) {
                (_, Some(_)) => ops.number("k")?,
                (Distribution::Uniform, None) => 0,
                (Distribution::Binomial, None) => return Err(ops.bad("binomial needs k=")),
            };
            if k > 32 {
                return Err(ops.bad(format!("k = {k} exceeds 32")));
            }
            let seed = ops.key("seed").ok_or_else(|| ops.bad("missing seed="))?;
            let seed = parse_hex(seed).ok_or_else(|| ops.bad(format!("seed {seed:?} is not hex")))?;
            Instruction::Sample {
                dst: r(0),
                dist,
                k,
                seed,
            }
        }
        "ntt" | "intt" | "out" => {
            ops.shape(1, &[])?;
            let reg = r(0);
            match opcode {
                "ntt" => Instruction::Ntt { reg },
                "intt" => Instruction::Intt { reg },
                _ => Instruction::Out { reg },
            }
        }
        "pwmul" | "pwadd" | "pwsub" => {
            ops.shape(3, &[])?;
            let op = match opcode {
                "pwmul" => PointwiseOp::Mul,
                "pwadd" => PointwiseOp::Add,
                _ => PointwiseOp::Sub,
            };
            Instruction::Pointwise {
                op,
                dst: r(0),
                a: r(1),
                b: r(2),
            }
        }
        "hash" => {
            ops.shape(2, &[])?;
            Instruction::Hash { dst: r(0), src: r(1) }
        }
        other => {
            return Err(VmError::UnknownOpcode {
                line,
                opcode: other.to_string(),
            })
        }
    };
    Ok(Some(instr))
}

/// Parses line-oriented assembly. Line numbers in errors are 1-based.
pub fn parse_program(text: &str) -> VmResult<Program> {
    let mut instructions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(instr) = parse_line(i + 1, line)? {
            instructions.push(instr);
        }
    }
    if instructions.len() > MAX_PROGRAM_LEN {
        return Err(VmError::ProgramTooLarge(instructions.len()));
    }
    Ok(Program { instructions })
}

/// Binary form: one 4-byte word per instruction plus a pool for literals
/// too wide for a word (moduli and seeds).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Encoded {
    pub words: Vec<[u8; INSTRUCTION_BYTES]>,
    pub pool: Vec<Vec<u8>>,
}

const OP_CONFIG: u8 = 0;
const OP_SAMPLE: u8 = 1;
const OP_NTT: u8 = 2;
const OP_INTT: u8 = 3;
const OP_PWMUL: u8 = 4;
const OP_PWADD: u8 = 5;
const OP_PWSUB: u8 = 6;
const OP_HASH: u8 = 7;
const OP_OUT: u8 = 8;

fn pair(hi: Reg, lo: Reg) -> u8 {
    hi.0 << 4 | lo.0
}

fn unpair(b: u8) -> (Reg, Reg) {
    (Reg(b >> 4), Reg(b & 0xf))
}

impl Program {
    pub fn encode(&self) -> VmResult<Encoded> {
        if self.len() > MAX_PROGRAM_LEN {
            return Err(VmError::ProgramTooLarge(self.len()));
        }
        let mut enc = Encoded::default();
        for instr in &self.instructions {
            let mut intern = |bytes: Vec<u8>| -> VmResult<u16> {
                let slot = match enc.pool.iter().position(|p| *p == bytes) {
                    Some(i) => i,
                    None => {
                        enc.pool.push(bytes);
                        enc.pool.len() - 1
                    }
                };
                u16::try_from(slot).map_err(|_| VmError::BadEncoding("literal pool overflow".into()))
            };
            let word = match instr {
                Instruction::Config { n, q } => {
                    if !n.is_power_of_two() {
                        return Err(VmError::BadEncoding(format!("n = {n} is not a power of two")));
                    }
                    let [lo, hi] = intern(q.to_le_bytes().to_vec())?.to_le_bytes();
                    [OP_CONFIG, n.trailing_zeros() as u8, lo, hi]
                }
                Instruction::Sample { dst, dist, k, seed } => {
                    let d = matches!(dist, Distribution::Binomial) as u8;
                    let slot = intern(seed.clone())?;
                    let slot = u8::try_from(slot)
                        .map_err(|_| VmError::BadEncoding("seed pool overflow".into()))?;
                    [OP_SAMPLE, dst.0 | d << 4, *k as u8, slot]
                }
                Instruction::Ntt { reg } => [OP_NTT, reg.0, 0, 0],
                Instruction::Intt { reg } => [OP_INTT, reg.0, 0, 0],
                Instruction::Pointwise { op, dst, a, b } => {
                    let code = match op {
                        PointwiseOp::Mul => OP_PWMUL,
                        PointwiseOp::Add => OP_PWADD,
                        PointwiseOp::Sub => OP_PWSUB,
                    };
                    [code, dst.0, pair(*a, *b), 0]
                }
                Instruction::Hash { dst, src } => [OP_HASH, pair(*dst, *src), 0, 0],
                Instruction::Out { reg } => [OP_OUT, reg.0, 0, 0],
            };
            enc.words.push(word);
        }
        Ok(enc)
    }

    pub fn decode(enc: &Encoded) -> VmResult<Self> {
        if enc.words.len() > MAX_PROGRAM_LEN {
            return Err(VmError::ProgramTooLarge(enc.words.len()));
        }
        let pool = |slot: usize| {
            enc.pool
                .get(slot)
                .ok_or_else(|| VmError::BadEncoding(format!("pool slot {slot} missing")))
        };
        let reg = |b: u8| Reg::new(b).ok_or_else(|| VmError::BadEncoding(format!("register {b}")));
        let instructions = enc
            .words
            .iter()
            .map(|w| {
                Ok(match w[0] {
                    OP_CONFIG => {
                        let q = pool(u16::from_le_bytes([w[2], w[3]]) as usize)?;
                        let q: [u8; 8] = q
                            .as_slice()
                            .try_into()
                            .map_err(|_| VmError::BadEncoding("modulus literal".into()))?;
                        Instruction::Config {
                            n: 1usize << w[1],
                            q: u64::from_le_bytes(q),
                        }
                    }
                    OP_SAMPLE => Instruction::Sample {
                        dst: reg(w[1] & 0xf)?,
                        dist: if w[1] >> 4 & 1 == 1 {
                            Distribution::Binomial
                        } else {
                            Distribution::Uniform
                        },
                        k: w[2] as u32,
                        seed: pool(w[3] as usize)?.clone(),
                    },
                    OP_NTT => Instruction::Ntt { reg: reg(w[1])? },
                    OP_INTT => Instruction::Intt { reg: reg(w[1])? },
                    OP_PWMUL | OP_PWADD | OP_PWSUB => {
                        let (a, b) = unpair(w[2]);
                        Instruction::Pointwise {
                            op: [PointwiseOp::Mul, PointwiseOp::Add, PointwiseOp::Sub]
                                [(w[0] - OP_PWMUL) as usize],
                            dst: reg(w[1])?,
                            a,
                            b,
                        }
                    }
                    OP_HASH => {
                        let (dst, src) = unpair(w[1]);
                        Instruction::Hash { dst, src }
                    }
                    OP_OUT => Instruction::Out { reg: reg(w[1])? },
                    op => return Err(VmError::BadEncoding(format!("opcode byte {op}"))),
                })
            })
            .collect::<VmResult<_>>()?;
        Ok(Program { instructions })
    }
}

#[derive(Debug, Clone)]
struct Params {
    n: usize,
    modulus: Modulus,
    tables: NttTables,
}

#[derive(Debug, Clone, Default)]
pub struct RegisterFile {
    slots: [Option<Polynomial>; REGISTERS],
    params: Option<Params>,
    cache: CacheModel,
    outputs: Vec<Reg>,
}

impl RegisterFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cache(cache: CacheModel) -> Self {
        Self {
            cache,
            ..Self::default()
        }
    }

    pub fn get(&self, reg: Reg) -> Option<&Polynomial> {
        self.slots[reg.index()].as_ref()
    }

    /// `(n, q)` from the most recent `config`.
    pub fn params(&self) -> Option<(usize, u32)> {
        self.params.as_ref().map(|p| (p.n, p.modulus.value()))
    }

    /// Registers named by `out`, in program order.
    pub fn outputs(&self) -> &[Reg] {
        &self.outputs
    }

    pub fn occupied(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    pub fn capacity(&self) -> CapacityVerdict {
        let allocs: Vec<(usize, usize)> = self.slots.iter().flatten().map(|p| (p.n(), 1)).collect();
        self.cache.check(&allocs)
    }

    fn params_at(&self, pc: usize) -> VmResult<&Params> {
        self.params.as_ref().ok_or(VmError::UnconfiguredParams(pc))
    }

    fn read(&self, pc: usize, reg: Reg) -> VmResult<&Polynomial> {
        self.get(reg).ok_or(VmError::EmptyRegister { pc, reg: reg.0 })
    }

    fn write(&mut self, pc: usize, reg: Reg, p: Polynomial) -> VmResult<()> {
        let old = self.slots[reg.index()].replace(p);
        if let CapacityVerdict::Exceeded { used, capacity } = self.capacity() {
            self.slots[reg.index()] = old;
            return Err(VmError::CapacityExceeded { pc, used, capacity });
        }
        Ok(())
    }
}

fn keccak_cycles(stats: SampleStats) -> u64 {
    KECCAK_CYCLES * stats.permutations
}

/// Executes `prog[pc]`. Returns the next pc and the cycles charged.
pub fn step(prog: &Program, mut rf: RegisterFile, pc: usize) -> VmResult<(RegisterFile, usize, u64)> {
    let instr = prog.instructions.get(pc).ok_or(VmError::ProgramEnded(pc))?;
    let lib = lift(pc);
    let cycles = match instr {
        Instruction::Config { n, q } => {
            let modulus = Modulus::new(*q).map_err(&lib)?;
            let tables = NttTables::new(*n, modulus, true).map_err(&lib)?;
            rf.params = Some(Params {
                n: *n,
                modulus,
                tables,
            });
            0
        }
        Instruction::Sample { dst, dist, k, seed } => {
            let p = rf.params_at(pc)?;
            let cfg = SamplerConfig::new(&p.modulus, (*k).max(1), XofMode::Shake256).map_err(&lib)?;
            let mut xof = XofState::shake256(seed);
            let (poly, stats) = sample_polynomial(&mut xof, p.n, &p.modulus, *dist, &cfg).map_err(&lib)?;
            let cycles = match dist {
                Distribution::Binomial => model_sampling_cycles(p.n, *k, XofMode::Shake256).cycles,
                Distribution::Uniform => keccak_cycles(stats) + p.n as u64,
            };
            rf.write(pc, *dst, poly)?;
            cycles
        }
        Instruction::Ntt { reg } | Instruction::Intt { reg } => {
            let p = rf.params_at(pc)?;
            let src = rf.read(pc, *reg)?;
            let out = match instr {
                Instruction::Ntt { .. } => ntt_forward(src, &p.tables),
                _ => ntt_inverse(src, &p.tables),
            }
            .map_err(&lib)?;
            let cycles = ntt_cycles(p.n);
            rf.write(pc, *reg, out)?;
            cycles
        }
        Instruction::Pointwise { op, dst, a, b } => {
            rf.params_at(pc)?;
            let (x, y) = (rf.read(pc, *a)?, rf.read(pc, *b)?);
            if *op == PointwiseOp::Mul {
                for v in [x, y] {
                    if v.domain() != Domain::Ntt {
                        return Err(VmError::DomainMismatch {
                            pc,
                            expected: Domain::Ntt,
                            found: v.domain(),
                        });
                    }
                }
            }
            let out = pointwise(x, y, *op).map_err(&lib)?;
            let cycles = out.n() as u64;
            rf.write(pc, *dst, out)?;
            cycles
        }
        Instruction::Hash { dst, src } => {
            let p = rf.params_at(pc)?;
            let mut xof = XofState::shake128(&rf.read(pc, *src)?.to_bytes());
            let cfg = SamplerConfig::new(&p.modulus, 1, XofMode::Shake128).map_err(&lib)?;
            let (poly, _) =
                sample_polynomial(&mut xof, p.n, &p.modulus, Distribution::Uniform, &cfg).map_err(&lib)?;
            let cycles = KECCAK_CYCLES * xof.permutations();
            rf.write(pc, *dst, poly)?;
            cycles
        }
        Instruction::Out { reg } => {
            rf.read(pc, *reg)?;
            rf.outputs.push(*reg);
            0
        }
    };
    Ok((rf, pc + 1, cycles))
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub registers: RegisterFile,
    pub cycle_total: u64,
    /// Cycles charged by each instruction, in program order.
    pub per_instruction: Vec<u64>,
}

/// Runs the whole program from pc 0.
pub fn execute(prog: &Program, rf: RegisterFile) -> VmResult<Execution> {
    let (registers, per_instruction) =
        (0..prog.len()).try_fold((rf, Vec::with_capacity(prog.len())), |(rf, mut costs), pc| {
            let (rf, _, cycles) = step(prog, rf, pc)?;
            costs.push(cycles);
            Ok::<_, VmError>((rf, costs))
        })?;
    Ok(Execution {
        registers,
        cycle_total: per_instruction.iter().sum(),
        per_instruction,
    })
}

/// Negacyclic product of a binomial and a uniform polynomial, left in `r2`.
pub const CONVOLUTION_PROGRAM: &str = "\
# r2 = r0 * r1 mod (x^n + 1)
config n=256 q=7681
sample r0 dist=binomial k=4 seed=00
sample r1 dist=uniform seed=01
ntt r0
ntt r1
pwmul r2 r0 r1
intt r2
out r2
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ntt::negacyclic_multiply;
    use crate::reference::negacyclic_schoolbook;

    fn run(src: &str) -> Execution {
        execute(&parse_program(src).unwrap(), RegisterFile::new()).unwrap()
    }

    fn reg(i: u8) -> Reg {
        Reg::new(i).unwrap()
    }

    fn lib_sample(n: usize, q: u64, dist: Distribution, k: u32, seed: &[u8]) -> Polynomial {
        let m = Modulus::new(q).unwrap();
        let cfg = SamplerConfig::new(&m, k.max(1), XofMode::Shake256).unwrap();
        sample_polynomial(&mut XofState::shake256(seed), n, &m, dist, &cfg).unwrap().0
    }

    #[test]
    fn parses_example() {
        let p = parse_program("config n=256 q=7681\nsample r0 dist=binomial k=16 seed=00\nntt r0").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(
            p.instructions[1],
            Instruction::Sample {
                dst: reg(0),
                dist: Distribution::Binomial,
                k: 16,
                seed: vec![0]
            }
        );
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_program("frobnicate r0"),
            Err(VmError::UnknownOpcode {
                line: 1,
                opcode: "frobnicate".into()
            })
        );
        for (src, line) in [
            ("config n=256 q=7681\nntt r16", 2),
            ("ntt", 1),
            ("# c\n\npwmul r0 r1", 3),
            ("sample r0 dist=normal seed=00", 1),
            ("sample r0 dist=binomial seed=00", 1),
            ("sample r0 dist=uniform seed=0", 1),
            ("config n=256", 1),
            ("config n=256 q=7681 q=12289", 1),
            ("out r1 x=1", 1),
        ] {
            assert!(
                matches!(parse_program(src), Err(VmError::BadOperand { line: l, .. }) if l == line),
                "{src:?}"
            );
        }
    }

    #[test]
    fn program_size_limit() {
        let ok = "out r0\n".repeat(MAX_PROGRAM_LEN);
        assert_eq!(parse_program(&ok).unwrap().len(), 256);
        let big = "out r0\n".repeat(MAX_PROGRAM_LEN + 1);
        assert_eq!(parse_program(&big), Err(VmError::ProgramTooLarge(257)));
        // comments and blank lines do not count
        let padded = format!("{ok}\n# trailing\n\n");
        assert!(parse_program(&padded).is_ok());
    }

    #[test]
    fn display_reparses() {
        let p = parse_program(CONVOLUTION_PROGRAM).unwrap();
        let text: String = p.instructions.iter().map(|i| format!("{i}\n")).collect();
        assert_eq!(parse_program(&text).unwrap(), p);
    }

    #[test]
    fn encoding_round_trip() {
        let p = parse_program(
            "config n=2048 q=16760833\nsample r15 dist=binomial k=32 seed=deadbeef\n\
             sample r3 dist=uniform seed=deadbeef\nntt r15\nintt r3\npwmul r1 r2 r3\n\
             pwadd r4 r5 r6\npwsub r7 r8 r9\nhash r10 r11\nout r12",
        )
        .unwrap();
        let enc = p.encode().unwrap();
        assert_eq!(enc.words.len() * INSTRUCTION_BYTES, 40);
        assert_eq!(enc.pool.len(), 2);
        assert_eq!(Program::decode(&enc).unwrap(), p);
        let mut bad = enc.clone();
        bad.words[0][0] = 0xff;
        assert!(Program::decode(&bad).is_err());
    }

    #[test]
    fn convolution_matches_library() {
        let exec = run(CONVOLUTION_PROGRAM);
        let m = Modulus::new(7681).unwrap();
        let t = NttTables::new(256, m, true).unwrap();
        let a = lib_sample(256, 7681, Distribution::Binomial, 4, &[0]);
        let b = lib_sample(256, 7681, Distribution::Uniform, 0, &[1]);
        let want = negacyclic_multiply(&a, &b, &t).unwrap();
        assert_eq!(exec.registers.get(reg(2)), Some(&want));
        assert_eq!(want.coeffs(), negacyclic_schoolbook(a.coeffs(), b.coeffs(), 7681));
        assert_eq!(exec.registers.outputs(), &[reg(2)]);
    }

    #[test]
    fn corpus_matches_library() {
        let m = Modulus::new(12289).unwrap();
        let t = NttTables::new(512, m, true).unwrap();
        let s = |dist, k, seed: &[u8]| lib_sample(512, 12289, dist, k, seed);
        let fwd = |p: &Polynomial| ntt_forward(p, &t).unwrap();
        let pw = |a: &Polynomial, b: &Polynomial, op| pointwise(a, b, op).unwrap();
        let hash = |p: &Polynomial| {
            let cfg = SamplerConfig::new(&m, 1, XofMode::Shake128).unwrap();
            let mut x = XofState::shake128(&p.to_bytes());
            sample_polynomial(&mut x, 512, &m, Distribution::Uniform, &cfg).unwrap().0
        };
        let cfg = "config n=512 q=12289\n";

        // add and subtract in the coefficient domain
        let e = run(&format!(
            "{cfg}sample r0 dist=binomial k=16 seed=0a\nsample r1 dist=binomial k=8 seed=0b\n\
             pwadd r2 r0 r1\npwsub r3 r0 r1\nout r2\nout r3"
        ));
        let (a, b) = (s(Distribution::Binomial, 16, &[10]), s(Distribution::Binomial, 8, &[11]));
        assert_eq!(e.registers.get(reg(2)), Some(&pw(&a, &b, PointwiseOp::Add)));
        assert_eq!(e.registers.get(reg(3)), Some(&pw(&a, &b, PointwiseOp::Sub)));

        // an LWE sample b = a*s + e computed through the NTT domain
        let e = run(&format!(
            "{cfg}sample r0 dist=uniform seed=aa\nsample r1 dist=binomial k=16 seed=bb\n\
             sample r2 dist=binomial k=16 seed=cc\nntt r0\nntt r1\nntt r2\n\
             pwmul r4 r0 r1\npwadd r4 r4 r2\nintt r4\nout r4"
        ));
        let a = s(Distribution::Uniform, 0, &[0xaa]);
        let sk = s(Distribution::Binomial, 16, &[0xbb]);
        let err = s(Distribution::Binomial, 16, &[0xcc]);
        let b = pw(&negacyclic_multiply(&a, &sk, &t).unwrap(), &err, PointwiseOp::Add);
        assert_eq!(e.registers.get(reg(4)), Some(&b));

        // decryption-style difference v - u*s with a 32-bit binomial
        let e = run(&format!(
            "{cfg}sample r0 dist=uniform seed=01\nsample r1 dist=binomial k=32 seed=02\n\
             sample r2 dist=uniform seed=03\nntt r0\nntt r1\npwmul r3 r0 r1\nntt r2\n\
             pwsub r4 r2 r3\nintt r4\nout r4"
        ));
        let u = fwd(&s(Distribution::Uniform, 0, &[1]));
        let sk = fwd(&s(Distribution::Binomial, 32, &[2]));
        let v = fwd(&s(Distribution::Uniform, 0, &[3]));
        let want = ntt_inverse(&pw(&v, &pw(&u, &sk, PointwiseOp::Mul), PointwiseOp::Sub), &t).unwrap();
        assert_eq!(e.registers.get(reg(4)), Some(&want));

        // hashing a register
        let e = run(&format!("{cfg}sample r7 dist=binomial k=1 seed=ff\nhash r8 r7\nout r8"));
        assert_eq!(e.registers.get(reg(8)), Some(&hash(&s(Distribution::Binomial, 1, &[0xff]))));
    }

    #[test]
    fn transforms_and_hash_match_library() {
        let m = Modulus::new(12289).unwrap();
        let t = NttTables::new(1024, m, true).unwrap();
        let e = run(
            "config n=1024 q=12289\nsample r5 dist=uniform seed=0102\nntt r5\nhash r6 r5\nintt r5\nout r5\nout r6",
        );
        let p = lib_sample(1024, 12289, Distribution::Uniform, 0, &[1, 2]);
        let p_hat = ntt_forward(&p, &t).unwrap();
        let cfg = SamplerConfig::new(&m, 1, XofMode::Shake128).unwrap();
        let mut x = XofState::shake128(&p_hat.to_bytes());
        let h = sample_polynomial(&mut x, 1024, &m, Distribution::Uniform, &cfg).unwrap().0;
        assert_eq!(e.registers.get(reg(5)), Some(&p));
        assert_eq!(e.registers.get(reg(6)), Some(&h));
        let costs = &e.per_instruction;
        assert_eq!(costs[0], 0);
        assert_eq!(costs[2], ntt_cycles(1024));
        assert_eq!(costs[3], KECCAK_CYCLES * x.permutations());
        assert_eq!(costs[4], ntt_cycles(1024));
        assert_eq!(&costs[5..], &[0, 0]);
    }

    #[test]
    fn domain_flags_enforced() {
        let prog = parse_program(
            "config n=256 q=7681\nsample r0 dist=uniform seed=00\nsample r1 dist=uniform seed=01\n\
             ntt r1\npwmul r2 r0 r1",
        )
        .unwrap();
        assert!(matches!(
            execute(&prog, RegisterFile::new()),
            Err(VmError::DomainMismatch {
                pc: 4,
                expected: Domain::Ntt,
                found: Domain::Coefficient
            })
        ));
        let prog = parse_program("config n=256 q=7681\nsample r0 dist=uniform seed=00\nintt r0").unwrap();
        assert!(matches!(
            execute(&prog, RegisterFile::new()),
            Err(VmError::DomainMismatch { pc: 2, .. })
        ));
        // mixed domains in an addition
        let prog = parse_program(
            "config n=256 q=7681\nsample r0 dist=uniform seed=00\nsample r1 dist=uniform seed=01\n\
             ntt r1\npwadd r2 r0 r1",
        )
        .unwrap();
        assert!(matches!(
            execute(&prog, RegisterFile::new()),
            Err(VmError::DomainMismatch { pc: 4, .. })
        ));
    }

    #[test]
    fn config_required_and_checked() {
        let prog = parse_program("sample r0 dist=uniform seed=00").unwrap();
        assert!(matches!(
            execute(&prog, RegisterFile::new()),
            Err(VmError::UnconfiguredParams(0))
        ));
        let prog = parse_program("config n=256 q=3329").unwrap();
        assert!(matches!(
            execute(&prog, RegisterFile::new()),
            Err(VmError::Library {
                pc: 0,
                source: Error::NoNegacyclicRoot { .. }
            })
        ));
        let prog = parse_program("config n=256 q=7681\nntt r3").unwrap();
        assert!(matches!(
            execute(&prog, RegisterFile::new()),
            Err(VmError::EmptyRegister { pc: 1, reg: 3 })
        ));
    }

    #[test]
    fn capacity_exceeded_at_fifth_large_register() {
        let mut src = String::from("config n=2048 q=16760833\n");
        for r in 0..5 {
            src.push_str(&format!("sample r{r} dist=binomial k=2 seed=0{r}\n"));
        }
        let prog = parse_program(&src).unwrap();
        assert!(matches!(
            execute(&prog, RegisterFile::new()),
            Err(VmError::CapacityExceeded {
                pc: 5,
                used: 30720,
                capacity: 24576
            })
        ));
        // overwriting an occupied register does not grow the footprint
        src.truncate(src.rfind("sample r4").unwrap());
        src.push_str("sample r3 dist=binomial k=2 seed=09\n");
        let exec = execute(&parse_program(&src).unwrap(), RegisterFile::new()).unwrap();
        assert_eq!(exec.registers.occupied(), 4);
        assert!(exec.registers.capacity().is_ok());
    }

    #[test]
    fn step_over_config_changes_params_only() {
        let prog = parse_program("config n=64 q=7681").unwrap();
        let (rf, pc, cycles) = step(&prog, RegisterFile::new(), 0).unwrap();
        assert_eq!((pc, cycles), (1, 0));
        assert_eq!(rf.params(), Some((64, 7681)));
        assert_eq!(rf.occupied(), 0);
        assert!(rf.outputs().is_empty());
        assert!(matches!(step(&prog, rf, 1), Err(VmError::ProgramEnded(1))));
    }

    #[test]
    fn execute_is_fold_of_step() {
        let prog = parse_program(CONVOLUTION_PROGRAM).unwrap();
        let mut rf = RegisterFile::new();
        let mut pc = 0;
        let mut total = 0;
        while pc < prog.len() {
            let (next, npc, c) = step(&prog, rf, pc).unwrap();
            rf = next;
            pc = npc;
            total += c;
        }
        let exec = execute(&prog, RegisterFile::new()).unwrap();
        assert_eq!(exec.cycle_total, total);
        for r in 0..REGISTERS as u8 {
            assert_eq!(exec.registers.get(reg(r)), rf.get(reg(r)));
        }
    }

    #[test]
    fn convolution_cycles_are_additive() {
        let exec = run(CONVOLUTION_PROGRAM);
        let mut xof = XofState::shake256(&[1]);
        let m = Modulus::new(7681).unwrap();
        let cfg = SamplerConfig::new(&m, 1, XofMode::Shake256).unwrap();
        let (_, stats) = sample_polynomial(&mut xof, 256, &m, Distribution::Uniform, &cfg).unwrap();
        let want = [
            0,
            model_sampling_cycles(256, 4, XofMode::Shake256).cycles,
            KECCAK_CYCLES * stats.permutations + 256,
            1288,
            1288,
            256,
            1288,
            0,
        ];
        assert_eq!(exec.per_instruction, want);
        assert_eq!(exec.cycle_total, want.iter().sum::<u64>());
    }
}
