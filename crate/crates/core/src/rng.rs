//! Deterministic random streams.
//!
//! Every stochastic quantity in the crate draws from a generator keyed by a
//! base seed and a path of indices (replication, draw, attempt, ...). The
//! result never depends on which worker evaluates a given index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds an index path into a base seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &ix| splitmix64(acc ^ splitmix64(ix.wrapping_add(0x632b_e59b_d9b4_e019))))
}

pub fn stream(base: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

/// Fills a column-major `rows x cols` matrix with standard normal draws.
pub fn standard_normal_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> nalgebra::DMatrix<f64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    nalgebra::DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}
