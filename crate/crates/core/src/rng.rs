//! Splittable, platform-stable seeding.
//!
//! A [`Seed`] is a 64-bit key that can be split into independent children by
//! index (`seed.child(replica).child(vertex)`). Every child expands into a
//! ChaCha8 stream, so results depend only on the path of indices and never on
//! thread scheduling.

use std::collections::HashMap;
use std::hash::Hash;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(u64);

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub const fn new(key: u64) -> Self {
        Seed(key)
    }

    pub fn key(self) -> u64 {
        self.0
    }

    /// Derive the independent sub-stream with the given index.
    pub fn child(self, index: u64) -> Seed {
        let mut s = self.0 ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        let a = splitmix64(&mut s);
        let b = splitmix64(&mut s);
        Seed(a ^ b.rotate_left(17))
    }

    /// Child stream keyed by a short ASCII tag, for named purposes.
    pub fn named(self, tag: &str) -> Seed {
        let h = tag
            .bytes()
            .fold(0xCBF2_9CE4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01B3));
        self.child(h)
    }

    pub fn rng(self) -> SimRng {
        let mut s = self.0;
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}

impl From<u64> for Seed {
    fn from(key: u64) -> Self {
        Seed(key)
    }
}

/// Uniform on (0, 1]: never returns exactly zero.
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

const CHUNK: usize = 4096;

/// Runs `trials` independent draws in parallel. Draws are grouped in fixed
/// chunks, chunk `k` using `seed.child(k)`, so results do not depend on the
/// thread count.
pub fn par_draws<T, F>(seed: Seed, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = seed.child(k as u64).rng();
            let len = CHUNK.min(trials - k * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Empirical law of `trials` parallel draws, accumulated chunk by chunk.
pub fn par_law<K, F>(seed: Seed, trials: usize, f: F) -> HashMap<K, f64>
where
    K: Hash + Eq + Send,
    F: Fn(&mut SimRng) -> K + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let mut counts = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed.child(k as u64).rng();
            let len = CHUNK.min(trials - k * CHUNK);
            let mut c: HashMap<K, f64> = HashMap::new();
            for _ in 0..len {
                *c.entry(f(&mut rng)).or_insert(0.0) += 1.0;
            }
            c
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0.0) += v;
            }
            a
        });
    for v in counts.values_mut() {
        *v /= trials as f64;
    }
    counts
}
