//! CPA-style key encapsulation over Ring-LWE (rank 1) and Module-LWE
//! (rank >= 2).
//!
//! Public matrices are sampled straight into the NTT domain. Keys and the
//! ciphertext vector `u` stay in the NTT domain; only `v` is carried in the
//! coefficient domain, where the message is threshold-encoded. The shared
//! secret is SHA3-256 of the 256-bit message.
//!
//! Seed expansion:
//!
//! - keygen: `shake256(seed)` yields 32 bytes of matrix seed, then 32 bytes
//!   of noise seed. `s_i` uses nonce `i`, `e_i` nonce `rank + i`.
//! - encaps: `shake256(coins)` yields the message, then a noise seed. `r_j`
//!   uses nonce `j`, `e1_i` nonce `rank + i`, `e2` nonce `2 * rank`.
//! - matrix entry `(i, j)` comes from `shake128(matrix_seed || i || j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keccak::{sha3_256, XofMode, XofState};
use crate::modarith::Modulus;
use crate::ntt::{
    ntt_forward, ntt_inverse, pointwise, Domain, NttTables, PointwiseOp, Polynomial, MAX_N,
};
use crate::sampler::{sample_polynomial, Distribution, SamplerConfig};

pub const SEED_LEN: usize = 32;
pub const MESSAGE_BITS: usize = 256;
pub const SHARED_LEN: usize = 32;

pub type Seed = [u8; SEED_LEN];
pub type SharedSecret = [u8; SHARED_LEN];

/// Named parameter sets.
pub const PRESETS: &[(&str, usize, u64, usize, u32)] = &[
    ("ring-newhope1024", 1024, 12289, 1, 16),
    ("ring-512", 512, 12289, 1, 16),
    ("module-kyber768-like", 256, 7681, 3, 4),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KemParams {
    pub name: String,
    pub n: usize,
    pub modulus: Modulus,
    pub rank: usize,
    /// Binomial chunk width. Zero disables all noise, which is only useful
    /// for testing the algebra.
    pub binomial_k: u32,
}

impl KemParams {
    pub fn new(name: &str, n: usize, q: u64, rank: usize, binomial_k: u32) -> Result<Self> {
        if !n.is_power_of_two() || !(MESSAGE_BITS..=MAX_N).contains(&n) {
            return Err(Error::UnsupportedSize(n));
        }
        let modulus = Modulus::new(q)?;
        if (q - 1) % (2 * n as u64) != 0 {
            return Err(Error::NoNegacyclicRoot {
                n,
                q: modulus.value(),
            });
        }
        if rank == 0 || rank > 8 {
            return Err(Error::InvalidConfig(format!("module rank {rank} outside [1, 8]")));
        }
        if binomial_k > 32 {
            return Err(Error::InvalidConfig(format!("binomial k = {binomial_k} exceeds 32")));
        }
        Ok(Self {
            name: name.to_string(),
            n,
            modulus,
            rank,
            binomial_k,
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        let &(name, n, q, rank, k) = PRESETS
            .iter()
            .find(|p| p.0 == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {name:?}")))?;
        Self::new(name, n, q, rank, k)
    }

    /// Same parameters with the noise switched off.
    pub fn noiseless(mut self) -> Self {
        self.binomial_k = 0;
        self
    }

    fn poly_bytes(&self) -> usize {
        3 * self.n
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub seed_a: Seed,
    /// `b = A s + e`, NTT domain.
    pub b: Vec<Polynomial>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    /// NTT domain.
    pub s: Vec<Polynomial>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    /// NTT domain.
    pub u: Vec<Polynomial>,
    /// Coefficient domain.
    pub v: Polynomial,
}

fn polys_to_bytes(out: &mut Vec<u8>, polys: &[Polynomial]) {
    for p in polys {
        out.extend(p.to_bytes());
    }
}

fn polys_from_bytes(p: &KemParams, bytes: &[u8], count: usize, domain: Domain) -> Result<Vec<Polynomial>> {
    let len = p.poly_bytes();
    if bytes.len() != count * len {
        return Err(Error::Malformed(format!(
            "expected {} bytes of polynomials, got {}",
            count * len,
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(len)
        .map(|c| Polynomial::from_bytes(c, p.modulus, domain))
        .collect()
}

impl PublicKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.seed_a.to_vec();
        polys_to_bytes(&mut out, &self.b);
        out
    }

    pub fn from_bytes(p: &KemParams, bytes: &[u8]) -> Result<Self> {
        if bytes.len() < SEED_LEN {
            return Err(Error::Malformed("public key shorter than its seed".into()));
        }
        let (seed, rest) = bytes.split_at(SEED_LEN);
        Ok(Self {
            seed_a: seed.try_into().expect("split at seed length"),
            b: polys_from_bytes(p, rest, p.rank, Domain::Ntt)?,
        })
    }
}

impl SecretKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        polys_to_bytes(&mut out, &self.s);
        out
    }

    pub fn from_bytes(p: &KemParams, bytes: &[u8]) -> Result<Self> {
        Ok(Self {
            s: polys_from_bytes(p, bytes, p.rank, Domain::Ntt)?,
        })
    }
}

impl Ciphertext {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        polys_to_bytes(&mut out, &self.u);
        out.extend(self.v.to_bytes());
        out
    }

    pub fn from_bytes(p: &KemParams, bytes: &[u8]) -> Result<Self> {
        let split = p.rank * p.poly_bytes();
        if bytes.len() != split + p.poly_bytes() {
            return Err(Error::Malformed(format!(
                "ciphertext must be {} bytes, got {}",
                split + p.poly_bytes(),
                bytes.len()
            )));
        }
        let (u, v) = bytes.split_at(split);
        Ok(Self {
            u: polys_from_bytes(p, u, p.rank, Domain::Ntt)?,
            v: Polynomial::from_bytes(v, p.modulus, Domain::Coefficient)?,
        })
    }
}

/// Bit 1 becomes `ceil(q/2)`, bit 0 becomes 0. Bit `i` (LSB-first within each
/// byte) is repeated in coefficients `i, i + 256, i + 512, ...`.
pub fn encode_msg(msg: &[u8; 32], n: usize, m: Modulus) -> Result<Polynomial> {
    if n < MESSAGE_BITS {
        return Err(Error::LengthMismatch {
            left: n,
            right: MESSAGE_BITS,
        });
    }
    let one = m.value().div_ceil(2);
    let coeffs = (0..n)
        .map(|i| {
            let bit = i % MESSAGE_BITS;
            if (msg[bit / 8] >> (bit % 8)) & 1 == 1 {
                one
            } else {
                0
            }
        })
        .collect();
    Polynomial::new(coeffs, m, Domain::Coefficient)
}

/// A coefficient votes 1 iff `|c - ceil(q/2)| < q/4`; each bit takes the
/// majority of its repetitions, ties going to 0.
pub fn decode_msg(p: &Polynomial) -> Result<[u8; 32]> {
    let n = p.n();
    if n < MESSAGE_BITS {
        return Err(Error::LengthMismatch {
            left: n,
            right: MESSAGE_BITS,
        });
    }
    if p.domain() != Domain::Coefficient {
        return Err(Error::DomainMismatch {
            expected: Domain::Coefficient,
            found: p.domain(),
        });
    }
    let q = p.modulus().value() as i64;
    let one = (q + 1) / 2;
    let reps = n / MESSAGE_BITS;
    let mut votes = [0usize; MESSAGE_BITS];
    for (i, &c) in p.coeffs().iter().enumerate() {
        if 4 * (c as i64 - one).abs() < q {
            votes[i % MESSAGE_BITS] += 1;
        }
    }
    let mut msg = [0u8; 32];
    for (bit, &v) in votes.iter().enumerate() {
        if 2 * v > reps {
            msg[bit / 8] |= 1 << (bit % 8);
        }
    }
    Ok(msg)
}

/// A parameter set together with its transform tables.
#[derive(Debug, Clone)]
pub struct Kem {
    params: KemParams,
    tables: NttTables,
    sampler: Option<SamplerConfig>,
    uniform: SamplerConfig,
}

impl Kem {
    pub fn new(params: KemParams) -> Result<Self> {
        let tables = NttTables::new(params.n, params.modulus, true)?;
        let sampler = match params.binomial_k {
            0 => None,
            k => Some(SamplerConfig::new(&params.modulus, k, XofMode::Shake256)?),
        };
        let uniform = SamplerConfig::new(&params.modulus, 1, XofMode::Shake128)?;
        Ok(Self {
            params,
            tables,
            sampler,
            uniform,
        })
    }

    pub fn params(&self) -> &KemParams {
        &self.params
    }

    pub fn tables(&self) -> &NttTables {
        &self.tables
    }

    /// Deterministic `rank x rank` matrix, sampled directly in the NTT
    /// domain.
    pub fn expand_a(&self, seed: &Seed) -> Result<Vec<Vec<Polynomial>>> {
        let p = &self.params;
        (0..p.rank)
            .map(|i| {
                (0..p.rank)
                    .map(|j| {
                        let mut input = seed.to_vec();
                        input.extend([i as u8, j as u8]);
                        let mut xof = XofState::shake128(&input);
                        let (poly, _) = sample_polynomial(
                            &mut xof,
                            p.n,
                            &p.modulus,
                            Distribution::Uniform,
                            &self.uniform,
                        )?;
                        Ok(poly.retag(Domain::Ntt))
                    })
                    .collect()
            })
            .collect()
    }

    /// Coefficient-domain noise polynomial for `(seed, nonce)`.
    pub fn noise(&self, seed: &Seed, nonce: u8) -> Result<Polynomial> {
        let p = &self.params;
        match &self.sampler {
            None => Polynomial::zero(p.n, p.modulus, Domain::Coefficient),
            Some(cfg) => {
                let mut input = seed.to_vec();
                input.push(nonce);
                let mut xof = XofState::shake256(&input);
                Ok(sample_polynomial(&mut xof, p.n, &p.modulus, Distribution::Binomial, cfg)?.0)
            }
        }
    }

    fn noise_ntt(&self, seed: &Seed, nonce: u8) -> Result<Polynomial> {
        ntt_forward(&self.noise(seed, nonce)?, &self.tables)
    }

    fn split_seed(seed: &[u8]) -> (Seed, Seed) {
        let wide = XofState::shake256(seed).squeeze_vec(2 * SEED_LEN);
        let (a, b) = wide.split_at(SEED_LEN);
        (a.try_into().expect("32"), b.try_into().expect("32"))
    }

    /// Pointwise inner product of two NTT-domain vectors.
    fn inner(&self, a: &[&Polynomial], b: &[Polynomial]) -> Result<Polynomial> {
        let mut acc = Polynomial::zero(self.params.n, self.params.modulus, Domain::Ntt)?;
        for (x, y) in a.iter().zip(b) {
            acc = pointwise(&acc, &pointwise(x, y, PointwiseOp::Mul)?, PointwiseOp::Add)?;
        }
        Ok(acc)
    }

    pub fn keygen(&self, seed: &Seed) -> Result<KeyPair> {
        let rank = self.params.rank;
        let (seed_a, noise_seed) = Self::split_seed(seed);
        let a = self.expand_a(&seed_a)?;
        let s = (0..rank)
            .map(|i| self.noise_ntt(&noise_seed, i as u8))
            .collect::<Result<Vec<_>>>()?;
        let b = (0..rank)
            .map(|i| {
                let row: Vec<&Polynomial> = a[i].iter().collect();
                let e = self.noise_ntt(&noise_seed, (rank + i) as u8)?;
                pointwise(&self.inner(&row, &s)?, &e, PointwiseOp::Add)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KeyPair {
            public: PublicKey { seed_a, b },
            secret: SecretKey { s },
        })
    }

    fn check_shapes(&self, polys: &[Polynomial], domain: Domain) -> Result<()> {
        if polys.len() != self.params.rank {
            return Err(Error::LengthMismatch {
                left: polys.len(),
                right: self.params.rank,
            });
        }
        for p in polys {
            if p.n() != self.params.n {
                return Err(Error::LengthMismatch {
                    left: p.n(),
                    right: self.params.n,
                });
            }
            if p.domain() != domain {
                return Err(Error::DomainMismatch {
                    expected: domain,
                    found: p.domain(),
                });
            }
        }
        Ok(())
    }

    /// Returns the ciphertext and the message it carries.
    pub fn encrypt(&self, pk: &PublicKey, coins: &Seed) -> Result<(Ciphertext, [u8; 32])> {
        self.check_shapes(&pk.b, Domain::Ntt)?;
        let rank = self.params.rank;
        let (msg, noise_seed) = Self::split_seed(coins);
        let a = self.expand_a(&pk.seed_a)?;
        let r = (0..rank)
            .map(|j| self.noise_ntt(&noise_seed, j as u8))
            .collect::<Result<Vec<_>>>()?;
        let u = (0..rank)
            .map(|i| {
                let column: Vec<&Polynomial> = a.iter().map(|row| &row[i]).collect();
                let e1 = self.noise_ntt(&noise_seed, (rank + i) as u8)?;
                pointwise(&self.inner(&column, &r)?, &e1, PointwiseOp::Add)
            })
            .collect::<Result<Vec<_>>>()?;
        let b: Vec<&Polynomial> = pk.b.iter().collect();
        let br = ntt_inverse(&self.inner(&b, &r)?, &self.tables)?;
        let e2 = self.noise(&noise_seed, (2 * rank) as u8)?;
        let enc = encode_msg(&msg, self.params.n, self.params.modulus)?;
        let v = pointwise(
            &pointwise(&br, &e2, PointwiseOp::Add)?,
            &enc,
            PointwiseOp::Add,
        )?;
        Ok((Ciphertext { u, v }, msg))
    }

    /// `v - <u, s>` decoded back to 256 bits.
    pub fn decrypt(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<[u8; 32]> {
        self.check_shapes(&sk.s, Domain::Ntt)?;
        self.check_shapes(&ct.u, Domain::Ntt)?;
        let u: Vec<&Polynomial> = ct.u.iter().collect();
        let us = ntt_inverse(&self.inner(&u, &sk.s)?, &self.tables)?;
        decode_msg(&pointwise(&ct.v, &us, PointwiseOp::Sub)?)
    }

    pub fn encaps(&self, pk: &PublicKey, coins: &Seed) -> Result<(Ciphertext, SharedSecret)> {
        let (ct, msg) = self.encrypt(pk, coins)?;
        Ok((ct, sha3_256(&msg)))
    }

    /// Always returns a hash; a decryption failure shows up only as a
    /// mismatching secret.
    pub fn decaps(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<SharedSecret> {
        Ok(sha3_256(&self.decrypt(sk, ct)?))
    }
}

/// Key seed and encapsulation coins for trial `index` of a seeded run.
pub fn trial_seeds(seed: &[u8], index: u64) -> (Seed, Seed) {
    let mut input = seed.to_vec();
    input.extend(index.to_le_bytes());
    let wide = XofState::shake256(&input).squeeze_vec(2 * SEED_LEN);
    let (a, b) = wide.split_at(SEED_LEN);
    (a.try_into().expect("32"), b.try_into().expect("32"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub trials: u64,
    pub mismatches: u64,
}

/// Fresh keys and coins per trial; counts encaps/decaps secret mismatches.
pub fn selftest(kem: &Kem, seed: &[u8], trials: u64) -> Result<SelftestReport> {
    let mut mismatches = 0;
    for i in 0..trials {
        let (key_seed, coins) = trial_seeds(seed, i);
        let kp = kem.keygen(&key_seed)?;
        let (ct, ss) = kem.encaps(&kp.public, &coins)?;
        if kem.decaps(&kp.secret, &ct)? != ss {
            mismatches += 1;
        }
    }
    Ok(SelftestReport { trials, mismatches })
}
