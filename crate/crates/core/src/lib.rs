//! Software model of a configurable Ring-LWE / Module-LWE processor.
//!
//! The crate covers Barrett arithmetic over primes below 2^24, a Keccak-based
//! PRNG with uniform and centered-binomial samplers, a constant-geometry
//! negacyclic NTT with compressed twiddle tables, a cycle model of the
//! four-bank single-port memory that runs it, a CPA-style LWE KEM and a small
//! straight-line VM over polynomial registers.

pub mod archsim;
pub mod error;
pub mod keccak;
pub mod kem;
pub mod modarith;
pub mod ntt;
pub mod reference;
pub mod sampler;
pub mod vm;

pub use archsim::{check_hazards, model_sampling_cycles, schedule_ntt, MemTrace};
pub use error::{Error, Result};
pub use keccak::{sha3_256, XofMode, XofState};
pub use kem::{Ciphertext, Kem, KemParams, KeyPair, PublicKey, SecretKey};
pub use modarith::{Modulus, Residue};
pub use ntt::{
    negacyclic_multiply, ntt_forward, ntt_inverse, pointwise, Direction, Domain, NttTables, Order,
    PointwiseOp, Polynomial,
};
pub use sampler::{Distribution, SampleStats, SamplerConfig};
pub use vm::{execute, parse_program, Program, RegisterFile};
