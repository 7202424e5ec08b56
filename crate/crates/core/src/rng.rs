//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every random draw in a simulation comes from a [`ChaCha8Rng`] keyed by the
//! root seed plus a short path such as `(run, step, purpose)`. Two consumers
//! asking for the same path get the same stream no matter which thread asks
//! first, which is what keeps parallel Monte Carlo output byte-identical and
//! lets strategy arms share infection randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purposes used as the last component of a stream path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    InitialInfection = 1,
    Infection = 2,
    Recovery = 3,
    Mask = 4,
    Vaccination = 5,
    Topology = 6,
    Drift = 7,
    Community = 8,
    Synthetic = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a root seed and a path of integers into a 64-bit seed.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(root);
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    h
}

pub fn stream(root: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(root, path))
}
