//! Modular arithmetic over primes below 2^24.
//!
//! Every product is reduced with Barrett reduction at a fixed internal width of
//! 24 bits, so any product of two residues (< 2^48) is a valid input to
//! [`Modulus::reduce`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal reduction width in bits. Moduli must be strictly below `2^WIDTH`.
pub const WIDTH: u32 = 24;

/// Largest accepted Barrett input, exclusive.
pub const REDUCE_BOUND: u64 = 1 << (2 * WIDTH);

/// A value in `[0, q)` for some [`Modulus`]. The modulus is always carried
/// alongside, never inside.
pub type Residue = u32;

/// A validated prime modulus with its Barrett constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Modulus {
    q: u32,
    mu: u64,
}

impl Modulus {
    /// Validates `q` and precomputes `mu = floor(2^48 / q)`.
    pub fn new(q: u64) -> Result<Self> {
        if q <= 2 || q >= 1 << WIDTH {
            return Err(Error::OutOfRange(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self {
            q: q as u32,
            mu: REDUCE_BOUND / q,
        })
    }

    #[inline]
    pub fn value(&self) -> u32 {
        self.q
    }

    /// The Barrett constant `floor(2^48 / q)`.
    #[inline]
    pub fn barrett_mu(&self) -> u64 {
        self.mu
    }

    #[inline]
    pub fn width(&self) -> u32 {
        WIDTH
    }

    /// Reduces `x < 2^48` modulo q using only multiply, shift and
    /// conditional subtraction.
    #[inline]
    pub fn reduce(&self, x: u64) -> Residue {
        debug_assert!(x < REDUCE_BOUND, "barrett input {x} exceeds 2^48");
        let q = self.q as u64;
        let estimate = ((x as u128 * self.mu as u128) >> (2 * WIDTH)) as u64;
        // The estimate undershoots floor(x / q) by at most 2.
        let r = x - estimate * q;
        let r = csub(r, q);
        csub(r, q) as Residue
    }

    #[inline]
    pub fn add(&self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a < self.q && b < self.q);
        csub(a as u64 + b as u64, self.q as u64) as Residue
    }

    #[inline]
    pub fn sub(&self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a < self.q && b < self.q);
        csub(a as u64 + self.q as u64 - b as u64, self.q as u64) as Residue
    }

    #[inline]
    pub fn neg(&self, a: Residue) -> Residue {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a < self.q && b < self.q);
        self.reduce(a as u64 * b as u64)
    }

    /// Square-and-multiply exponentiation.
    pub fn pow(&self, base: Residue, mut exp: u64) -> Residue {
        let mut acc = 1 % self.q;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: Residue) -> Result<Residue> {
        if a == 0 {
            return Err(Error::InverseOfZero);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }

    /// Maps a small signed value into `[0, q)`.
    #[inline]
    pub fn from_signed(&self, v: i64) -> Residue {
        v.rem_euclid(self.q as i64) as Residue
    }

    /// Centered representative in `(-q/2, q/2]`.
    #[inline]
    pub fn centered(&self, a: Residue) -> i64 {
        let q = self.q as i64;
        let a = a as i64;
        if a > q / 2 {
            a - q
        } else {
            a
        }
    }
}

impl std::fmt::Display for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.q)
    }
}

/// Branch-free `if x >= q { x - q } else { x }` for `x < 2q`-ish inputs.
#[inline(always)]
fn csub(x: u64, q: u64) -> u64 {
    let d = x.wrapping_sub(q);
    // all-ones when x < q
    let mask = 0u64.wrapping_sub(d >> 63);
    (d & !mask) | (x & mask)
}

/// Deterministic Miller-Rabin; the base set {2, 3, 5, 7} is exact below
/// 3.2e9, which covers every modulus this crate accepts.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    'bases: for a in [2u64, 3, 5, 7] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}
