//! Counter-based random streams keyed by `(master_seed, stream_id)`.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_id: 0,
        }
    }

    /// Generator positioned at draw index 0 of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.stream_id);
        r
    }

    /// Independent sub-stream, e.g. one per Monte Carlo path.
    pub fn child(&self, index: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ splitmix64(index)),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::Open01)
}

/// Draws per sub-stream in [`par_collect`].
pub const CHUNK: usize = 1024;

/// Evaluate `f(rng, i)` for `i in 0..n` in parallel. Item `i` always uses
/// sub-stream `i / CHUNK` at the same position, so the output does not depend
/// on the number of worker threads.
pub fn par_collect<T, F>(n: usize, seed: SeedSpec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let f = &f;
    (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = seed.child(c as u64).rng();
            let end = ((c + 1) * CHUNK).min(n);
            (c * CHUNK..end).map(move |i| f(&mut rng, i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_draws() {
        let s = SeedSpec { master_seed: 7, stream_id: 3 };
        let a: Vec<u64> = (0..5).map({ let mut r = s.rng(); move |_| r.random() }).collect();
        let b: Vec<u64> = (0..5).map({ let mut r = s.rng(); move |_| r.random() }).collect();
        assert_eq!(a, b);
        let mut r = s.child(1).rng();
        let c: u64 = r.random();
        assert_ne!(c, a[0]);
    }

    #[test]
    fn par_collect_independent_of_threads() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| par_collect(5000, SeedSpec::new(42), |r, i| normal(r) + i as f64))
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn children_distinct() {
        let s = SeedSpec::new(1);
        let ids: std::collections::HashSet<u64> = (0..10_000).map(|i| s.child(i).stream_id).collect();
        assert_eq!(ids.len(), 10_000);
    }
}
