//! Twiddle tables for negative-wrapped convolution.
//!
//! The compressed layout stores only `psi^i` for `i < n`. Everything else is
//! derived on lookup from `omega = psi^2`, `psi^n = -1` and
//! `omega^-i = omega^(n-i)`. The baseline layout stores `psi^i`, `psi^-i`
//! (n entries each) and `omega^i`, `omega^-i` (n/2 entries each).

use crate::error::{Error, Result};
use crate::modarith::{is_prime, Modulus, Residue};

/// Largest supported transform length.
pub const MAX_N: usize = 2048;

/// Smallest `psi > 1` with `psi^n = -1 (mod q)`.
pub fn find_psi(n: usize, m: &Modulus) -> Result<Residue> {
    if n == 0 || !n.is_power_of_two() || n > MAX_N {
        return Err(Error::UnsupportedSize(n));
    }
    let q = m.value();
    if (q as u64 - 1) % (2 * n as u64) != 0 {
        return Err(Error::NoNegacyclicRoot { n, q });
    }
    (2..q)
        .find(|&c| m.pow(c, n as u64) == q - 1)
        .ok_or(Error::NoNegacyclicRoot { n, q })
}

/// Largest prime `q < 2^24` with `q = 1 (mod 2n)`.
pub fn find_ntt_prime(n: usize) -> Result<Modulus> {
    if n == 0 || !n.is_power_of_two() || n > MAX_N {
        return Err(Error::UnsupportedSize(n));
    }
    let step = 2 * n as u64;
    let mut q = ((1u64 << 24) - 1) / step * step + 1;
    while q > step {
        if q < 1 << 24 && is_prime(q) {
            return Modulus::new(q);
        }
        q -= step;
    }
    Err(Error::UnsupportedSize(n))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Storage {
    Compressed {
        psi: Vec<Residue>,
    },
    Baseline {
        psi: Vec<Residue>,
        psi_inv: Vec<Residue>,
        omega: Vec<Residue>,
        omega_inv: Vec<Residue>,
    },
}

/// Precomputed constants for one `(n, q)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NttTables {
    n: usize,
    modulus: Modulus,
    psi: Residue,
    n_inv: Residue,
    storage: Storage,
}

impl NttTables {
    pub fn new(n: usize, m: Modulus, compressed: bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedSize(n));
        }
        let psi = find_psi(n, &m)?;
        let powers = |base: Residue, len: usize| -> Vec<Residue> {
            let mut v = Vec::with_capacity(len);
            let mut acc = 1;
            for _ in 0..len {
                v.push(acc);
                acc = m.mul(acc, base);
            }
            v
        };
        let psi_powers = powers(psi, n);
        let storage = if compressed {
            Storage::Compressed { psi: psi_powers }
        } else {
            let psi_inv = m.inv(psi)?;
            let omega = m.mul(psi, psi);
            let omega_inv = m.mul(psi_inv, psi_inv);
            Storage::Baseline {
                psi: psi_powers,
                psi_inv: powers(psi_inv, n),
                omega: powers(omega, n / 2),
                omega_inv: powers(omega_inv, n / 2),
            }
        };
        Ok(Self {
            n,
            modulus: m,
            psi,
            n_inv: m.inv(n as Residue % m.value())?,
            storage,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn psi(&self) -> Residue {
        self.psi
    }

    pub fn n_inv(&self) -> Residue {
        self.n_inv
    }

    pub fn is_compressed(&self) -> bool {
        matches!(self.storage, Storage::Compressed { .. })
    }

    /// Stored table entries (the scalar `n^-1` is held by both layouts and
    /// not counted).
    pub fn entries(&self) -> usize {
        match &self.storage {
            Storage::Compressed { psi } => psi.len(),
            Storage::Baseline {
                psi,
                psi_inv,
                omega,
                omega_inv,
            } => psi.len() + psi_inv.len() + omega.len() + omega_inv.len(),
        }
    }

    /// `psi^i` for `i < 2n`.
    #[inline]
    pub fn psi_pow(&self, i: usize) -> Residue {
        let psi = self.psi_table();
        if i < self.n {
            psi[i]
        } else {
            self.modulus.neg(psi[i - self.n])
        }
    }

    /// `psi^-i` for `i < n`.
    #[inline]
    pub fn psi_inv_pow(&self, i: usize) -> Residue {
        match &self.storage {
            Storage::Baseline { psi_inv, .. } => psi_inv[i],
            Storage::Compressed { psi } => {
                if i == 0 {
                    1
                } else {
                    self.modulus.neg(psi[self.n - i])
                }
            }
        }
    }

    /// `omega^e` for `e < n`.
    #[inline]
    pub fn omega_pow(&self, e: usize) -> Residue {
        let half = self.n / 2;
        match &self.storage {
            Storage::Baseline { omega, .. } => {
                if e < half {
                    omega[e]
                } else {
                    self.modulus.neg(omega[e - half])
                }
            }
            Storage::Compressed { .. } => self.psi_pow(2 * e),
        }
    }

    /// `omega^-e` for `e < n`.
    #[inline]
    pub fn omega_inv_pow(&self, e: usize) -> Residue {
        let half = self.n / 2;
        match &self.storage {
            Storage::Baseline { omega_inv, .. } => {
                if e < half {
                    omega_inv[e]
                } else {
                    self.modulus.neg(omega_inv[e - half])
                }
            }
            Storage::Compressed { .. } => {
                if e == 0 {
                    1
                } else {
                    self.omega_pow(self.n - e)
                }
            }
        }
    }

    fn psi_table(&self) -> &[Residue] {
        match &self.storage {
            Storage::Compressed { psi } | Storage::Baseline { psi, .. } => psi,
        }
    }
}

/// Stored-entry counts for both layouts and the fraction saved by
/// compression.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CompressionReport {
    pub n: usize,
    pub baseline_entries: usize,
    pub compressed_entries: usize,
    pub saving: f64,
}

pub fn compression_report(n: usize, m: Modulus) -> Result<CompressionReport> {
    let base = NttTables::new(n, m, false)?.entries();
    let comp = NttTables::new(n, m, true)?.entries();
    Ok(CompressionReport {
        n,
        baseline_entries: base,
        compressed_entries: comp,
        saving: 1.0 - comp as f64 / base as f64,
    })
}
