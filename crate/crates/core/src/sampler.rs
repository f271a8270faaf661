//! Samplers that turn an XOF byte stream into polynomial coefficients.
//!
//! Chunks are read least-significant bit first from the little-endian byte
//! stream. Every polynomial gets a fresh [`BitReader`], so unused bits of the
//! last byte are dropped at polynomial boundaries.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keccak::{XofMode, XofState};
use crate::modarith::{Modulus, Residue};
use crate::ntt::{Domain, Polynomial, MAX_N};

/// Largest chunk width the samplers accept.
pub const MAX_CHUNK_BITS: u32 = 32;

/// Counters accumulated over a sampling run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleStats {
    pub bits_consumed: u64,
    pub permutations: u64,
    pub rejected: u64,
}

impl Add for SampleStats {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            bits_consumed: self.bits_consumed + o.bits_consumed,
            permutations: self.permutations + o.permutations,
            rejected: self.rejected + o.rejected,
        }
    }
}

impl AddAssign for SampleStats {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Anything that hands out fixed-width random chunks.
pub trait ChunkSource {
    /// Next `width`-bit chunk, `1 <= width <= 32`.
    fn next_chunk(&mut self, width: u32) -> u32;

    fn bits_consumed(&self) -> u64;

    /// Keccak invocations attributable to this source so far.
    fn permutations(&self) -> u64 {
        0
    }
}

/// LSB-first bit reader over an XOF stream.
pub struct BitReader<'a> {
    xof: &'a mut XofState,
    buf: u64,
    avail: u32,
    bits: u64,
    start_permutations: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(xof: &'a mut XofState) -> Self {
        let start_permutations = xof.permutations();
        Self {
            xof,
            buf: 0,
            avail: 0,
            bits: 0,
            start_permutations,
        }
    }
}

impl ChunkSource for BitReader<'_> {
    fn next_chunk(&mut self, width: u32) -> u32 {
        debug_assert!((1..=MAX_CHUNK_BITS).contains(&width));
        while self.avail < width {
            self.buf |= (self.xof.next_byte() as u64) << self.avail;
            self.avail += 8;
        }
        let chunk = (self.buf & ((1u64 << width) - 1)) as u32;
        self.buf >>= width;
        self.avail -= width;
        self.bits += width as u64;
        chunk
    }

    fn bits_consumed(&self) -> u64 {
        self.bits
    }

    fn permutations(&self) -> u64 {
        self.xof.permutations() - self.start_permutations
    }
}

fn snapshot<S: ChunkSource>(src: &S) -> SampleStats {
    SampleStats {
        bits_consumed: src.bits_consumed(),
        permutations: src.permutations(),
        rejected: 0,
    }
}

fn delta(before: SampleStats, after: SampleStats, rejected: u64) -> SampleStats {
    SampleStats {
        bits_consumed: after.bits_consumed - before.bits_consumed,
        permutations: after.permutations - before.permutations,
        rejected,
    }
}

/// Acceptance bound `t * q` with `t = floor(2^width / q)`.
pub fn rejection_bound(q: u32, width: u32) -> u64 {
    let range = 1u64 << width;
    range / q as u64 * q as u64
}

/// Draws `width`-bit chunks until one falls below `floor(2^width / q) * q`,
/// then reduces it with Barrett reduction. The result is exactly uniform on
/// `[0, q)`.
pub fn rejection_sample_uniform<S: ChunkSource>(
    src: &mut S,
    m: &Modulus,
    width: u32,
) -> (Residue, SampleStats) {
    debug_assert!(width <= MAX_CHUNK_BITS && (1u64 << width) > m.value() as u64);
    let bound = rejection_bound(m.value(), width);
    let before = snapshot(src);
    let mut rejected = 0;
    loop {
        let c = src.next_chunk(width) as u64;
        if c < bound {
            return (m.reduce(c), delta(before, snapshot(src), rejected));
        }
        rejected += 1;
    }
}

/// `HW(a) - HW(b)` for two `k`-bit chunks. Always consumes exactly `2k` bits.
pub fn binomial_sample<S: ChunkSource>(src: &mut S, k: u32) -> i32 {
    debug_assert!((1..=MAX_CHUNK_BITS).contains(&k));
    let a = src.next_chunk(k);
    let b = src.next_chunk(k);
    a.count_ones() as i32 - b.count_ones() as i32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Uniform,
    Binomial,
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "binomial" => Ok(Distribution::Binomial),
            other => Err(Error::InvalidConfig(format!("unknown distribution {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Chunk width of the binomial sampler; the standard deviation is
    /// `sqrt(k / 2)`.
    pub binomial_k: u32,
    pub uniform_width: u32,
    pub prng_mode: XofMode,
}

impl SamplerConfig {
    /// Config with the default uniform chunk width for `m`.
    pub fn new(m: &Modulus, binomial_k: u32, prng_mode: XofMode) -> Result<Self> {
        let cfg = Self {
            binomial_k,
            uniform_width: default_uniform_width(m),
            prng_mode,
        };
        cfg.validate(m)?;
        Ok(cfg)
    }

    pub fn with_uniform_width(mut self, width: u32) -> Self {
        self.uniform_width = width;
        self
    }

    pub fn validate(&self, m: &Modulus) -> Result<()> {
        if !(1..=MAX_CHUNK_BITS).contains(&self.binomial_k) {
            return Err(Error::InvalidConfig(format!(
                "binomial k = {} outside [1, 32]",
                self.binomial_k
            )));
        }
        let min = min_width(m);
        if !(min..=MAX_CHUNK_BITS).contains(&self.uniform_width) {
            return Err(Error::InvalidConfig(format!(
                "uniform chunk width {} outside [{min}, 32] for q = {m}",
                self.uniform_width
            )));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        (self.binomial_k as f64 / 2.0).sqrt()
    }
}

/// `ceil(log2 q)`: the narrowest chunk that can cover `[0, q)`.
pub fn min_width(m: &Modulus) -> u32 {
    32 - (m.value() - 1).leading_zeros()
}

/// Expected chunk bits spent per accepted uniform sample.
pub fn expected_bits_per_sample(q: u32, width: u32) -> f64 {
    width as f64 * (1u64 << width) as f64 / rejection_bound(q, width) as f64
}

/// The chunk width in `[ceil(log2 q), 32]` with the lowest expected bit cost
/// per accepted sample; ties go to the narrower width.
pub fn default_uniform_width(m: &Modulus) -> u32 {
    let q = m.value();
    (min_width(m)..=MAX_CHUNK_BITS)
        .min_by(|&a, &b| {
            expected_bits_per_sample(q, a)
                .partial_cmp(&expected_bits_per_sample(q, b))
                .expect("finite")
        })
        .expect("non-empty width range")
}

/// Samples `n` coefficients from any chunk source.
pub fn sample_polynomial_from<S: ChunkSource>(
    src: &mut S,
    n: usize,
    m: &Modulus,
    dist: Distribution,
    cfg: &SamplerConfig,
) -> Result<(Polynomial, SampleStats)> {
    if n == 0 || !n.is_power_of_two() || n > MAX_N {
        return Err(Error::UnsupportedSize(n));
    }
    cfg.validate(m)?;
    let before = snapshot(src);
    let mut rejected = 0;
    let coeffs = match dist {
        Distribution::Uniform => (0..n)
            .map(|_| {
                let (c, s) = rejection_sample_uniform(src, m, cfg.uniform_width);
                rejected += s.rejected;
                c
            })
            .collect(),
        Distribution::Binomial => (0..n)
            .map(|_| m.from_signed(binomial_sample(src, cfg.binomial_k) as i64))
            .collect(),
    };
    let stats = delta(before, snapshot(src), rejected);
    Ok((Polynomial::new(coeffs, *m, Domain::Coefficient)?, stats))
}

/// Samples `n` coefficients from the XOF, starting at a fresh bit boundary.
pub fn sample_polynomial(
    xof: &mut XofState,
    n: usize,
    m: &Modulus,
    dist: Distribution,
    cfg: &SamplerConfig,
) -> Result<(Polynomial, SampleStats)> {
    sample_polynomial_from(&mut BitReader::new(xof), n, m, dist, cfg)
}
