//! Negacyclic NTT over `Z_q[x] / (x^n + 1)`.
//!
//! The forward transform scales coefficient `i` by `psi^i` and then runs
//! `log2 n` Cooley-Tukey stages in constant geometry, leaving the spectrum in
//! bit-reversed order. The inverse consumes that order directly with
//! Gentleman-Sande stages and returns natural order, so neither direction
//! contains a permutation pass. Both ping-pong between the input buffer and a
//! single scratch buffer, one swap per stage.

pub mod dataflow;
pub mod tables;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modarith::{Modulus, Residue};

pub use dataflow::{bit_reverse, Butterfly, Dataflow, Direction};
pub use tables::{compression_report, find_ntt_prime, find_psi, CompressionReport, NttTables, MAX_N};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Coefficient,
    Ntt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Natural,
    BitReversed,
}

/// `n` residues modulo `q`, tagged with the domain they live in. NTT-domain
/// polynomials are always in bit-reversed order, coefficient-domain ones in
/// natural order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<Residue>,
    modulus: Modulus,
    domain: Domain,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Residue>, modulus: Modulus, domain: Domain) -> Result<Self> {
        let n = coeffs.len();
        if n == 0 || !n.is_power_of_two() || n > MAX_N {
            return Err(Error::UnsupportedSize(n));
        }
        let q = modulus.value();
        if let Some((index, &value)) = coeffs.iter().enumerate().find(|(_, &c)| c >= q) {
            return Err(Error::Unreduced { index, value, q });
        }
        Ok(Self {
            coeffs,
            modulus,
            domain,
        })
    }

    pub fn zero(n: usize, modulus: Modulus, domain: Domain) -> Result<Self> {
        Self::new(vec![0; n], modulus, domain)
    }

    /// Reduces arbitrary signed values into `[0, q)`.
    pub fn from_signed(values: &[i64], modulus: Modulus) -> Result<Self> {
        let coeffs = values.iter().map(|&v| modulus.from_signed(v)).collect();
        Self::new(coeffs, modulus, Domain::Coefficient)
    }

    pub fn coeffs(&self) -> &[Residue] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Residue> {
        self.coeffs
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn order(&self) -> Order {
        match self.domain {
            Domain::Coefficient => Order::Natural,
            Domain::Ntt => Order::BitReversed,
        }
    }

    /// Reinterprets the coefficients as belonging to `domain` without
    /// transforming them (used for matrices sampled directly in NTT form).
    pub fn retag(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// 24-bit little-endian packing, three bytes per coefficient.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 * self.n());
        for &c in &self.coeffs {
            out.extend_from_slice(&c.to_le_bytes()[..3]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], modulus: Modulus, domain: Domain) -> Result<Self> {
        if bytes.len() % 3 != 0 {
            return Err(Error::Malformed(format!(
                "{} bytes is not a whole number of 24-bit coefficients",
                bytes.len()
            )));
        }
        let coeffs = bytes
            .chunks_exact(3)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], 0]))
            .collect();
        Self::new(coeffs, modulus, domain)
    }

    fn expect_domain(&self, expected: Domain) -> Result<()> {
        if self.domain != expected {
            return Err(Error::DomainMismatch {
                expected,
                found: self.domain,
            });
        }
        Ok(())
    }

    fn check_tables(&self, t: &NttTables) -> Result<()> {
        if self.n() != t.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: t.n(),
            });
        }
        if self.modulus != *t.modulus() {
            return Err(Error::ModulusMismatch {
                left: self.modulus.value(),
                right: t.modulus().value(),
            });
        }
        Ok(())
    }
}

fn run_stages<F: FnMut(&Butterfly)>(
    mut src: Vec<Residue>,
    t: &NttTables,
    direction: Direction,
    observe: &mut F,
) -> Vec<Residue> {
    let m = t.modulus();
    let flow = Dataflow::new(t.n(), direction);
    let mut dst = vec![0; t.n()];
    for stage in 0..flow.stages() {
        for bf in flow.stage(stage) {
            observe(&bf);
            let a = src[bf.reads[0]];
            let b = src[bf.reads[1]];
            let (x, y) = match direction {
                Direction::Forward => {
                    let bw = m.mul(b, t.omega_pow(bf.twiddle_exp));
                    (m.add(a, bw), m.sub(a, bw))
                }
                Direction::Inverse => (
                    m.add(a, b),
                    m.mul(m.sub(a, b), t.omega_inv_pow(bf.twiddle_exp)),
                ),
            };
            dst[bf.writes[0]] = x;
            dst[bf.writes[1]] = y;
        }
        std::mem::swap(&mut src, &mut dst);
    }
    src
}

/// Forward transform; reports every butterfly to `observe` as it executes.
pub fn ntt_forward_observed<F: FnMut(&Butterfly)>(
    p: &Polynomial,
    t: &NttTables,
    mut observe: F,
) -> Result<Polynomial> {
    p.expect_domain(Domain::Coefficient)?;
    p.check_tables(t)?;
    let m = t.modulus();
    let scaled = p
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| m.mul(c, t.psi_pow(i)))
        .collect();
    Ok(Polynomial {
        coeffs: run_stages(scaled, t, Direction::Forward, &mut observe),
        modulus: p.modulus,
        domain: Domain::Ntt,
    })
}

/// Inverse transform; reports every butterfly to `observe` as it executes.
pub fn ntt_inverse_observed<F: FnMut(&Butterfly)>(
    p: &Polynomial,
    t: &NttTables,
    mut observe: F,
) -> Result<Polynomial> {
    p.expect_domain(Domain::Ntt)?;
    p.check_tables(t)?;
    let m = t.modulus();
    let mut coeffs = run_stages(p.coeffs.clone(), t, Direction::Inverse, &mut observe);
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c = m.mul(*c, m.mul(t.n_inv(), t.psi_inv_pow(i)));
    }
    Ok(Polynomial {
        coeffs,
        modulus: p.modulus,
        domain: Domain::Coefficient,
    })
}

pub fn ntt_forward(p: &Polynomial, t: &NttTables) -> Result<Polynomial> {
    ntt_forward_observed(p, t, |_| {})
}

pub fn ntt_inverse(p: &Polynomial, t: &NttTables) -> Result<Polynomial> {
    ntt_inverse_observed(p, t, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointwiseOp {
    Mul,
    Add,
    Sub,
}

/// Coefficient-wise modular operation; domain and order are preserved.
pub fn pointwise(a: &Polynomial, b: &Polynomial, op: PointwiseOp) -> Result<Polynomial> {
    if a.n() != b.n() {
        return Err(Error::LengthMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch {
            left: a.modulus.value(),
            right: b.modulus.value(),
        });
    }
    b.expect_domain(a.domain)?;
    let m = &a.modulus;
    let f = match op {
        PointwiseOp::Mul => Modulus::mul,
        PointwiseOp::Add => Modulus::add,
        PointwiseOp::Sub => Modulus::sub,
    };
    Ok(Polynomial {
        coeffs: a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| f(m, x, y))
            .collect(),
        modulus: a.modulus,
        domain: a.domain,
    })
}

/// `a * b mod (x^n + 1, q)` via forward transforms, pointwise product and
/// inverse transform.
pub fn negacyclic_multiply(a: &Polynomial, b: &Polynomial, t: &NttTables) -> Result<Polynomial> {
    a.expect_domain(Domain::Coefficient)?;
    b.expect_domain(Domain::Coefficient)?;
    let fa = ntt_forward(a, t)?;
    let fb = ntt_forward(b, t)?;
    ntt_inverse(&pointwise(&fa, &fb, PointwiseOp::Mul)?, t)
}
