//! Seeded random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(root seed, domain, index)` and selected with `set_stream`, so results
//! never depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CVector, C64};

/// Random-stream domains; distinct so that e.g. block 0 channels never
/// reuse the network-geometry stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Geometry = 1,
    Shadowing = 2,
    Channels = 3,
    Synthetic = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `(seed, domain, key)` and sub-stream `stream`.
pub fn substream(seed: u64, domain: Domain, key: u64, stream: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(domain as u64)) ^ key);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(stream);
    rng
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A length-`n` vector of i.i.d. CN(0, 1) entries.
pub fn complex_normal_vector<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}
