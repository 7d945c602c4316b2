//! Seed plumbing. A base seed expands into per-replica seeds with SplitMix64;
//! each replica seed expands the same way into one seed per named stream, and
//! every stream is a Xoshiro256++ generator. Streams never share state, so a
//! replica's layout, reliabilities, bootstrap history and baseline draws do
//! not depend on which solvers or sweep points are run.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// Independent random streams within one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Layout = 1,
    Reliability = 2,
    Bootstrap = 3,
    Baseline = 4,
    Evolution = 5,
    Instance = 6,
}

pub fn replica_seeds(base: u64, count: usize) -> Vec<u64> {
    let mut sm = SplitMix64::seed_from_u64(base);
    (0..count).map(|_| sm.next_u64()).collect()
}

pub fn stream(replica_seed: u64, which: Stream) -> Xoshiro256PlusPlus {
    let mut sm = SplitMix64::seed_from_u64(replica_seed);
    let mut seed = 0;
    for _ in 0..which as u32 {
        seed = sm.next_u64();
    }
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
