//! Constant-geometry (Pease) index pattern shared by the transforms and the
//! memory scheduler.
//!
//! The forward transform reads `(j, j + n/2)` and writes `(2j, 2j + 1)` in
//! every stage. Each stage rotates the logical index bits left by one, so
//! after `log2 n` stages the data is back in place and holds the spectrum in
//! bit-reversed order. The inverse is the transpose: it reads `(2j, 2j + 1)`
//! and writes `(j, j + n/2)`, undoing the forward stages last-to-first.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forward" | "fwd" => Ok(Direction::Forward),
            "inverse" | "inv" => Ok(Direction::Inverse),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// One butterfly of one stage: which source slots it reads, which destination
/// slots it writes, and the exponent `e` of its twiddle `omega^e` (applied as
/// `omega^-e` by the inverse).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Butterfly {
    pub stage: usize,
    pub index: usize,
    pub reads: [usize; 2],
    pub writes: [usize; 2],
    pub twiddle_exp: usize,
}

/// Index generator for an `n`-point constant-geometry transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dataflow {
    n: usize,
    log_n: u32,
    direction: Direction,
}

impl Dataflow {
    /// `n` must be a power of two, at least 2.
    pub fn new(n: usize, direction: Direction) -> Self {
        assert!(n >= 2 && n.is_power_of_two(), "dataflow size {n}");
        Self {
            n,
            log_n: n.trailing_zeros(),
            direction,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stages(&self) -> usize {
        self.log_n as usize
    }

    pub fn butterflies_per_stage(&self) -> usize {
        self.n / 2
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    #[inline]
    pub fn butterfly(&self, stage: usize, j: usize) -> Butterfly {
        let half = self.n / 2;
        let (reads, writes, forward_stage) = match self.direction {
            Direction::Forward => ([j, j + half], [2 * j, 2 * j + 1], stage),
            Direction::Inverse => (
                [2 * j, 2 * j + 1],
                [j, j + half],
                self.stages() - 1 - stage,
            ),
        };
        // group index = low `forward_stage` bits of j, reversed over log n - 1 bits
        let group = j & ((1 << forward_stage) - 1);
        Butterfly {
            stage,
            index: j,
            reads,
            writes,
            twiddle_exp: bit_reverse(group, self.log_n - 1),
        }
    }

    pub fn stage(&self, stage: usize) -> impl Iterator<Item = Butterfly> + '_ {
        (0..self.butterflies_per_stage()).map(move |j| self.butterfly(stage, j))
    }

    /// Every butterfly of every stage in execution order.
    pub fn all(&self) -> impl Iterator<Item = Butterfly> + '_ {
        (0..self.stages()).flat_map(move |s| self.stage(s))
    }
}

/// Reverses the low `bits` bits of `x`.
pub fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}
