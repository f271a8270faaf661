//! Cycle model of the polynomial memory: four single-port RAM banks holding
//! two 24-bit coefficients per word, one butterfly unit, and a 24-cycle
//! Keccak core.
//!
//! # Bank mapping
//!
//! The banks form two ping-pong sides, `{0, 1}` and `{2, 3}`. Within a side,
//! coefficients `i < n/2` live in the first bank and the rest in the second,
//! at word address `(i mod n/2) / 2`. Every pass reads one side and writes
//! the other, then the roles swap.
//!
//! # Schedule
//!
//! One butterfly issues per cycle and retires its result one cycle later.
//!
//! - Forward stage: butterfly `j` reads `(j, j + n/2)`. Even `j` fetches word
//!   `j/2` from both source banks, which also covers butterfly `j + 1`. The
//!   outputs `(2j, 2j + 1)` share a word and go out as a single write.
//! - Inverse stage: butterfly `j` reads the word holding `(2j, 2j + 1)`. Odd
//!   `j` writes the finished pair of words `(j - 1, j)` and
//!   `(j - 1 + n/2, j + n/2)` to both destination banks at once.
//! - Each stage spends one extra cycle draining the last write before the
//!   sides swap, giving `n/2 + 1` cycles per stage.
//! - The `psi^i` scaling pass (before the forward stages, after the inverse
//!   ones, folded with `n^-1`) handles one coefficient per cycle: `n` cycles.
//!
//! The total is `log2(n) * (n/2 + 1) + n` in both directions.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keccak::{XofMode, ROUNDS};
use crate::ntt::{Butterfly, Dataflow, Direction, MAX_N};

pub const BANKS: usize = 4;
/// Cycles per Keccak-f[1600] call: one round per cycle.
pub const KECCAK_CYCLES: u64 = ROUNDS as u64;
/// Smallest transform length the banked schedule supports.
pub const MIN_SCHEDULE_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankAccess {
    pub cycle: u64,
    pub bank: u8,
    pub address: u32,
    pub kind: AccessKind,
}

/// A butterfly pinned to the cycle it issued in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledButterfly {
    pub cycle: u64,
    pub op: Butterfly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassKind {
    Scale,
    Stage,
}

/// Access counts of one pass over the polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCounts {
    pub kind: PassKind,
    pub index: usize,
    pub cycles: u64,
    pub reads: usize,
    pub writes: usize,
}

/// All bank accesses of one transform, in cycle order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemTrace {
    pub n: usize,
    pub direction: Direction,
    pub accesses: Vec<BankAccess>,
    pub butterflies: Vec<ScheduledButterfly>,
    pub passes: Vec<PassCounts>,
    pub total_cycles: u64,
}

impl MemTrace {
    /// One access per line: `cycle,bank,addr,R|W`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for a in &self.accesses {
            let k = match a.kind {
                AccessKind::Read => 'R',
                AccessKind::Write => 'W',
            };
            writeln!(out, "{},{},{},{}", a.cycle, a.bank, a.address, k)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            total_cycles: self.total_cycles,
            violations: check_hazards(self).len(),
            per_stage_counts: self.passes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub total_cycles: u64,
    pub violations: usize,
    pub per_stage_counts: Vec<PassCounts>,
}

struct Layout {
    n: usize,
}

impl Layout {
    /// Bank and word address of coefficient `i` on ping-pong side `side`.
    fn locate(&self, side: usize, i: usize) -> (u8, u32) {
        let half = self.n / 2;
        let upper = usize::from(i >= half);
        ((2 * side + upper) as u8, ((i % half) / 2) as u32)
    }
}

struct Emitter {
    layout: Layout,
    accesses: Vec<BankAccess>,
    reads: usize,
    writes: usize,
}

impl Emitter {
    fn access(&mut self, cycle: u64, side: usize, coeff: usize, kind: AccessKind) {
        let (bank, address) = self.layout.locate(side, coeff);
        match kind {
            AccessKind::Read => self.reads += 1,
            AccessKind::Write => self.writes += 1,
        }
        self.accesses.push(BankAccess {
            cycle,
            bank,
            address,
            kind,
        });
    }

    fn take_counts(&mut self) -> (usize, usize) {
        let c = (self.reads, self.writes);
        self.reads = 0;
        self.writes = 0;
        c
    }
}

pub fn stage_cycles(n: usize) -> u64 {
    n as u64 / 2 + 1
}

/// Closed form of the schedule length: `log2(n) * (n/2 + 1) + n`.
pub fn ntt_cycles(n: usize) -> u64 {
    n.trailing_zeros() as u64 * stage_cycles(n) + n as u64
}

/// Builds the banked schedule of one forward or inverse transform.
pub fn schedule_ntt(n: usize, direction: Direction) -> Result<MemTrace> {
    if !n.is_power_of_two() || !(MIN_SCHEDULE_N..=MAX_N).contains(&n) {
        return Err(Error::UnsupportedSize(n));
    }
    let flow = Dataflow::new(n, direction);
    let mut em = Emitter {
        layout: Layout { n },
        accesses: Vec::new(),
        reads: 0,
        writes: 0,
    };
    let mut butterflies = Vec::with_capacity(flow.stages() * n / 2);
    let mut passes = Vec::new();
    let mut cycle = 0u64;
    let mut side = 0usize;

    let scale_pass = |em: &mut Emitter, cycle: &mut u64, side: &mut usize| {
        for i in 0..n {
            let kind = if i % 2 == 0 {
                AccessKind::Read
            } else {
                AccessKind::Write
            };
            let s = if kind == AccessKind::Read { *side } else { 1 - *side };
            em.access(*cycle + i as u64, s, i, kind);
        }
        *cycle += n as u64;
        *side = 1 - *side;
        let (reads, writes) = em.take_counts();
        PassCounts {
            kind: PassKind::Scale,
            index: 0,
            cycles: n as u64,
            reads,
            writes,
        }
    };

    if direction == Direction::Forward {
        let p = scale_pass(&mut em, &mut cycle, &mut side);
        passes.push(p);
    }
    for stage in 0..flow.stages() {
        let (src, dst) = (side, 1 - side);
        for bf in flow.stage(stage) {
            let issue = cycle + bf.index as u64;
            let odd = bf.index % 2 == 1;
            match direction {
                Direction::Forward => {
                    if !odd {
                        em.access(issue, src, bf.reads[0], AccessKind::Read);
                        em.access(issue, src, bf.reads[1], AccessKind::Read);
                    }
                    em.access(issue + 1, dst, bf.writes[0], AccessKind::Write);
                }
                Direction::Inverse => {
                    em.access(issue, src, bf.reads[0], AccessKind::Read);
                    if odd {
                        em.access(issue + 1, dst, bf.writes[0], AccessKind::Write);
                        em.access(issue + 1, dst, bf.writes[1], AccessKind::Write);
                    }
                }
            }
            butterflies.push(ScheduledButterfly { cycle: issue, op: bf });
        }
        cycle += stage_cycles(n);
        side = dst;
        let (reads, writes) = em.take_counts();
        passes.push(PassCounts {
            kind: PassKind::Stage,
            index: stage,
            cycles: stage_cycles(n),
            reads,
            writes,
        });
    }
    if direction == Direction::Inverse {
        let p = scale_pass(&mut em, &mut cycle, &mut side);
        passes.push(p);
    }

    em.accesses.sort_by_key(|a| a.cycle);
    Ok(MemTrace {
        n,
        direction,
        accesses: em.accesses,
        butterflies,
        passes,
        total_cycles: cycle,
    })
}

/// A bank asked to serve more than one access in a single cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub cycle: u64,
    pub bank: u8,
    pub accesses: usize,
}

/// Lists every `(cycle, bank)` with more than one access; empty means the
/// trace respects the single-port constraint.
pub fn check_hazards(trace: &MemTrace) -> Vec<Violation> {
    let mut per_slot: BTreeMap<(u64, u8), usize> = BTreeMap::new();
    for a in &trace.accesses {
        *per_slot.entry((a.cycle, a.bank)).or_default() += 1;
    }
    per_slot
        .into_iter()
        .filter(|&(_, count)| count > 1)
        .map(|((cycle, bank), accesses)| Violation {
            cycle,
            bank,
            accesses,
        })
        .collect()
}

/// Modeled binomial-sampling cost and the quantities it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingCycles {
    pub n: usize,
    pub k: u32,
    pub mode: XofMode,
    pub prng_bits: u64,
    /// Rate-sized output blocks covering `prng_bits`.
    pub squeeze_blocks: u64,
    pub absorb_permutations: u64,
    pub cycles: u64,
}

/// `24 * (ceil(2kn / rate_bits) + 1) + n`: one Keccak call per output block
/// plus one for absorbing the seed, and one cycle per emitted sample.
pub fn model_sampling_cycles(n: usize, k: u32, mode: XofMode) -> SamplingCycles {
    let prng_bits = 2 * k as u64 * n as u64;
    let rate_bits = 8 * mode.rate_bytes() as u64;
    let squeeze_blocks = prng_bits.div_ceil(rate_bits);
    let absorb_permutations = 1;
    SamplingCycles {
        n,
        k,
        mode,
        prng_bits,
        squeeze_blocks,
        absorb_permutations,
        cycles: KECCAK_CYCLES * (squeeze_blocks + absorb_permutations) + n as u64,
    }
}

/// Polynomial storage budget of the on-chip cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheModel {
    pub capacity_bytes: usize,
    pub bytes_per_coefficient: usize,
}

impl Default for CacheModel {
    fn default() -> Self {
        Self {
            capacity_bytes: 24 * 1024,
            bytes_per_coefficient: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum CapacityVerdict {
    Ok { used: usize, capacity: usize },
    Exceeded { used: usize, capacity: usize },
}

impl CapacityVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, CapacityVerdict::Ok { .. })
    }
}

impl CacheModel {
    /// `allocations` lists `(n, count)`: `count` polynomials of length `n`.
    pub fn check(&self, allocations: &[(usize, usize)]) -> CapacityVerdict {
        let used = allocations
            .iter()
            .map(|&(n, count)| n * count * self.bytes_per_coefficient)
            .sum();
        let capacity = self.capacity_bytes;
        if used <= capacity {
            CapacityVerdict::Ok { used, capacity }
        } else {
            CapacityVerdict::Exceeded { used, capacity }
        }
    }
}

pub fn capacity_check(allocations: &[(usize, usize)]) -> CapacityVerdict {
    CacheModel::default().check(allocations)
}
