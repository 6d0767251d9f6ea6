//! Reproducible Monte Carlo plumbing.
//!
//! Every trial draws from its own ChaCha stream addressed by `(seed, stream)`,
//! so results do not depend on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for trial `stream` of an experiment seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a parent seed and a label, e.g. a sweep point.
pub fn derive_seed(seed: u64, label: &[u64]) -> u64 {
    let mut x = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &v in label {
        x = splitmix(x ^ v.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Mean of `hits` Bernoulli successes out of `trials`.
    pub fn from_bernoulli(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Whether `reference` lies within `k` standard errors. A zero standard
    /// error falls back to an absolute tolerance of `1e-12`.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        let tol = (k * self.std_err).max(1e-12);
        (self.value - reference).abs() <= tol
    }
}
