//! Deterministic inputs shared by the criterion benches.

use latticeproc::{Distribution, Modulus, Polynomial, SamplerConfig, XofMode, XofState};

/// A uniform polynomial drawn from SHAKE-128 of `tag`.
pub fn uniform_poly(n: usize, q: u64, tag: &[u8]) -> Polynomial {
    let m = Modulus::new(q).expect("bench modulus");
    let cfg = SamplerConfig::new(&m, 1, XofMode::Shake128).expect("bench config");
    let mut xof = XofState::shake128(tag);
    latticeproc::sampler::sample_polynomial(&mut xof, n, &m, Distribution::Uniform, &cfg)
        .expect("bench sample")
        .0
}
