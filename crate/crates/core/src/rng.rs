//! Seeded random sources.
//!
//! Every random draw in the crate goes through a ChaCha12 generator seeded
//! from a `u64`, so runs are reproducible across platforms. Independent
//! substreams (one per Monte Carlo block, one per restart) use the ChaCha
//! stream id rather than sequential draws from a shared generator.

use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, C64};

pub type DesignRng = rand_chacha::ChaCha12Rng;

pub fn seeded(seed: u64) -> DesignRng {
    DesignRng::seed_from_u64(seed)
}

/// Counter-based substream: same `seed`, distinct ChaCha stream id.
pub fn substream(seed: u64, stream: u64) -> DesignRng {
    let mut rng = DesignRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One 𝒞𝒩(0,1) draw: `(g₁ + i g₂)/√2` with standard real normals.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. 𝒞𝒩(0,1) entries, filled column by column.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}
