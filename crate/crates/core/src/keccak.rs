//! Keccak-f[1600] and the SHA-3 sponge modes built on it (SHAKE-128,
//! SHAKE-256, SHA3-256).
//!
//! Lanes are packed little-endian. The permutation updates all 25 lanes per
//! round, so one call is exactly 24 rounds; [`XofState::permutations`] counts
//! calls for the cycle model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROUNDS: usize = 24;

const ROUND_CONSTANTS: [u64; ROUNDS] = [
    0x0000_0000_0000_0001,
    0x0000_0000_0000_8082,
    0x8000_0000_0000_808a,
    0x8000_0000_8000_8000,
    0x0000_0000_0000_808b,
    0x0000_0000_8000_0001,
    0x8000_0000_8000_8081,
    0x8000_0000_0000_8009,
    0x0000_0000_0000_008a,
    0x0000_0000_0000_0088,
    0x0000_0000_8000_8009,
    0x0000_0000_8000_000a,
    0x0000_0000_8000_808b,
    0x8000_0000_0000_008b,
    0x8000_0000_0000_8089,
    0x8000_0000_0000_8003,
    0x8000_0000_0000_8002,
    0x8000_0000_0000_0080,
    0x0000_0000_0000_800a,
    0x8000_0000_8000_000a,
    0x8000_0000_8000_8081,
    0x8000_0000_0000_8080,
    0x0000_0000_8000_0001,
    0x8000_0000_8000_8008,
];

// rho rotation offsets and pi destinations, walked along the pi cycle
// starting from lane 1
const RHO: [u32; 24] = [
    1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14, 27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44,
];
const PI: [usize; 24] = [
    10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4, 15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1,
];

/// Applies the 24-round Keccak-f[1600] permutation in place.
pub fn keccak_f1600(a: &mut [u64; 25]) {
    for rc in ROUND_CONSTANTS {
        // theta
        let mut c = [0u64; 5];
        for x in 0..5 {
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        }
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for y in 0..5 {
                a[x + 5 * y] ^= d;
            }
        }
        // rho + pi
        let mut carry = a[1];
        for (&dst, &rot) in PI.iter().zip(RHO.iter()) {
            let tmp = a[dst];
            a[dst] = carry.rotate_left(rot);
            carry = tmp;
        }
        // chi
        for y in 0..5 {
            let row = [a[5 * y], a[5 * y + 1], a[5 * y + 2], a[5 * y + 3], a[5 * y + 4]];
            for x in 0..5 {
                a[5 * y + x] = row[x] ^ (!row[(x + 1) % 5] & row[(x + 2) % 5]);
            }
        }
        // iota
        a[0] ^= rc;
    }
}

/// Sponge configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XofMode {
    Shake128,
    Shake256,
    /// Fixed 32-byte digest; same rate as SHAKE-256, different suffix.
    Sha3_256,
}

impl XofMode {
    pub const fn rate_bytes(self) -> usize {
        match self {
            XofMode::Shake128 => 168,
            XofMode::Shake256 | XofMode::Sha3_256 => 136,
        }
    }

    const fn suffix(self) -> u8 {
        match self {
            XofMode::Shake128 | XofMode::Shake256 => 0x1f,
            XofMode::Sha3_256 => 0x06,
        }
    }
}

impl std::str::FromStr for XofMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shake128" => Ok(XofMode::Shake128),
            "shake256" => Ok(XofMode::Shake256),
            "sha3-256" | "sha3_256" => Ok(XofMode::Sha3_256),
            other => Err(Error::InvalidConfig(format!("unknown prng mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Absorbing,
    Squeezing,
}

/// Keccak sponge with byte-position bookkeeping.
///
/// While absorbing, `position < rate`. While squeezing, `position` may equal
/// `rate` until the next output byte forces a permutation.
#[derive(Clone)]
pub struct XofState {
    lanes: [u64; 25],
    mode: XofMode,
    position: usize,
    phase: Phase,
    permutations: u64,
}

impl std::fmt::Debug for XofState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("XofState")
            .field("mode", &self.mode)
            .field("position", &self.position)
            .field("phase", &self.phase)
            .field("permutations", &self.permutations)
            .finish_non_exhaustive()
    }
}

impl XofState {
    pub fn new(mode: XofMode) -> Self {
        Self {
            lanes: [0; 25],
            mode,
            position: 0,
            phase: Phase::Absorbing,
            permutations: 0,
        }
    }

    /// Fresh sponge with `input` absorbed; the next squeeze finalizes it.
    pub fn with_input(mode: XofMode, input: &[u8]) -> Self {
        let mut s = Self::new(mode);
        s.absorb(input).expect("fresh sponge is absorbing");
        s
    }

    pub fn shake128(input: &[u8]) -> Self {
        Self::with_input(XofMode::Shake128, input)
    }

    pub fn shake256(input: &[u8]) -> Self {
        Self::with_input(XofMode::Shake256, input)
    }

    pub fn mode(&self) -> XofMode {
        self.mode
    }

    pub fn rate_bytes(&self) -> usize {
        self.mode.rate_bytes()
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Number of Keccak-f[1600] invocations so far.
    pub fn permutations(&self) -> u64 {
        self.permutations
    }

    fn permute(&mut self) {
        keccak_f1600(&mut self.lanes);
        self.permutations += 1;
    }

    #[inline]
    fn xor_byte(&mut self, i: usize, b: u8) {
        self.lanes[i / 8] ^= (b as u64) << (8 * (i % 8));
    }

    #[inline]
    fn byte(&self, i: usize) -> u8 {
        (self.lanes[i / 8] >> (8 * (i % 8))) as u8
    }

    pub fn absorb(&mut self, data: &[u8]) -> Result<()> {
        if self.phase == Phase::Squeezing {
            return Err(Error::AbsorbAfterSqueeze);
        }
        let rate = self.rate_bytes();
        for &b in data {
            self.xor_byte(self.position, b);
            self.position += 1;
            if self.position == rate {
                self.permute();
                self.position = 0;
            }
        }
        Ok(())
    }

    fn finalize(&mut self) {
        let rate = self.rate_bytes();
        self.xor_byte(self.position, self.mode.suffix());
        self.xor_byte(rate - 1, 0x80);
        self.permute();
        self.position = 0;
        self.phase = Phase::Squeezing;
    }

    /// Fills `out` with the next bytes of the output stream, finalizing the
    /// absorb phase on first use.
    pub fn squeeze(&mut self, out: &mut [u8]) {
        if self.phase == Phase::Absorbing {
            self.finalize();
        }
        let rate = self.rate_bytes();
        for o in out.iter_mut() {
            if self.position == rate {
                self.permute();
                self.position = 0;
            }
            *o = self.byte(self.position);
            self.position += 1;
        }
    }

    pub fn squeeze_vec(&mut self, n: usize) -> Vec<u8> {
        let mut v = vec![0; n];
        self.squeeze(&mut v);
        v
    }

    pub fn next_byte(&mut self) -> u8 {
        let mut b = [0u8];
        self.squeeze(&mut b);
        b[0]
    }
}

/// Number of permutations a fresh sponge performs to absorb `input_len`
/// bytes and squeeze `output_len` bytes.
pub fn permutations_for(mode: XofMode, input_len: usize, output_len: usize) -> u64 {
    let rate = mode.rate_bytes();
    (input_len / rate + output_len.div_ceil(rate).max(1)) as u64
}

/// Incremental SHA3-256.
#[derive(Debug, Clone)]
pub struct Sha3_256 {
    sponge: XofState,
}

impl Default for Sha3_256 {
    fn default() -> Self {
        Self {
            sponge: XofState::new(XofMode::Sha3_256),
        }
    }
}

impl Sha3_256 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, data: &[u8]) -> &mut Self {
        self.sponge
            .absorb(data)
            .expect("digest sponge never squeezes before finalize");
        self
    }

    pub fn finalize(mut self) -> [u8; 32] {
        let mut out = [0u8; 32];
        self.sponge.squeeze(&mut out);
        out
    }
}

pub fn sha3_256(input: &[u8]) -> [u8; 32] {
    let mut h = Sha3_256::new();
    h.update(input);
    h.finalize()
}

pub fn shake128(input: &[u8], out_len: usize) -> Vec<u8> {
    XofState::shake128(input).squeeze_vec(out_len)
}

pub fn shake256(input: &[u8], out_len: usize) -> Vec<u8> {
    XofState::shake256(input).squeeze_vec(out_len)
}

/// An embedded reference vector.
#[derive(Debug, Clone, Copy)]
pub struct KnownAnswer {
    pub name: &'static str,
    pub mode: XofMode,
    message: MessageSpec,
    pub expected_hex: &'static str,
}

#[derive(Debug, Clone, Copy)]
enum MessageSpec {
    Literal(&'static [u8]),
    Repeat(u8, usize),
}

impl KnownAnswer {
    pub fn message(&self) -> Vec<u8> {
        match self.message {
            MessageSpec::Literal(m) => m.to_vec(),
            MessageSpec::Repeat(b, n) => vec![b; n],
        }
    }

    /// Recomputes the digest / XOF prefix and compares it to the reference.
    pub fn check(&self) -> bool {
        let msg = self.message();
        let out = match self.mode {
            XofMode::Sha3_256 => sha3_256(&msg).to_vec(),
            XofMode::Shake128 => shake128(&msg, self.expected_hex.len() / 2),
            XofMode::Shake256 => shake256(&msg, self.expected_hex.len() / 2),
        };
        to_hex(&out) == self.expected_hex
    }
}

const EMPTY: MessageSpec = MessageSpec::Literal(b"");
const ABC: MessageSpec = MessageSpec::Literal(b"abc");
const A3_200: MessageSpec = MessageSpec::Repeat(0xa3, 200);

/// FIPS 202 reference vectors (SHAKE outputs truncated to 64 bytes).
pub const KNOWN_ANSWERS: &[KnownAnswer] = &[
    KnownAnswer {
        name: "sha3-256 empty",
        mode: XofMode::Sha3_256,
        message: EMPTY,
        expected_hex: "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a",
    },
    KnownAnswer {
        name: "sha3-256 abc",
        mode: XofMode::Sha3_256,
        message: ABC,
        expected_hex: "3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532",
    },
    KnownAnswer {
        name: "sha3-256 200x a3",
        mode: XofMode::Sha3_256,
        message: A3_200,
        expected_hex: "79f38adec5c20307a98ef76e8324afbfd46cfd81b22e3973c65fa1bd9de31787",
    },
    KnownAnswer {
        name: "shake128 empty",
        mode: XofMode::Shake128,
        message: EMPTY,
        expected_hex: "7f9c2ba4e88f827d616045507605853ed73b8093f6efbc88eb1a6eacfa66ef26\
                       3cb1eea988004b93103cfb0aeefd2a686e01fa4a58e8a3639ca8a1e3f9ae57e2",
    },
    KnownAnswer {
        name: "shake128 abc",
        mode: XofMode::Shake128,
        message: ABC,
        expected_hex: "5881092dd818bf5cf8a3ddb793fbcba74097d5c526a6d35f97b83351940f2cc8\
                       44c50af32acd3f2cdd066568706f509bc1bdde58295dae3f891a9a0fca578378",
    },
    KnownAnswer {
        name: "shake128 200x a3",
        mode: XofMode::Shake128,
        message: A3_200,
        expected_hex: "131ab8d2b594946b9c81333f9bb6e0ce75c3b93104fa3469d3917457385da037\
                       cf232ef7164a6d1eb448c8908186ad852d3f85a5cf28da1ab6fe343817197846",
    },
    KnownAnswer {
        name: "shake256 empty",
        mode: XofMode::Shake256,
        message: EMPTY,
        expected_hex: "46b9dd2b0ba88d13233b3feb743eeb243fcd52ea62b81b82b50c27646ed5762f\
                       d75dc4ddd8c0f200cb05019d67b592f6fc821c49479ab48640292eacb3b7c4be",
    },
    KnownAnswer {
        name: "shake256 abc",
        mode: XofMode::Shake256,
        message: ABC,
        expected_hex: "483366601360a8771c6863080cc4114d8db44530f8f1e1ee4f94ea37e78b5739\
                       d5a15bef186a5386c75744c0527e1faa9f8726e462a12a4feb06bd8801e751e4",
    },
    KnownAnswer {
        name: "shake256 200x a3",
        mode: XofMode::Shake256,
        message: A3_200,
        expected_hex: "cd8a920ed141aa0407a22d59288652e9d9f1a7ee0c1e7c1ca699424da84a904d\
                       2d700caae7396ece96604440577da4f3aa22aeb8857f961c4cd8e06f0ae6610b",
    },
];

/// First lane of Keccak-f[1600] applied once and twice to the zero state.
pub const ZERO_STATE_LANE0: [u64; 2] = [0xf125_8f79_40e1_dde7, 0x2d5c_954d_f96e_cb3c];

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
