//! Keyed random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! key is derived from `(master seed, domain)` and whose stream id is an
//! index (usually the trajectory number). Streams are independent of the
//! order in which they are consumed, so ensembles can be generated by any
//! number of workers and still be bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams for different purposes disjoint.
pub mod domain {
    pub const NOISE: u64 = 0x6e6f_6973_6500_0001;
    pub const GAMMA: u64 = 0x6761_6d6d_6100_0002;
    pub const GEOMETRY: u64 = 0x6765_6f6d_0000_0003;
    pub const CERTIFY: u64 = 0x6365_7274_0000_0004;
    pub const RECIPE: u64 = 0x7265_6369_7065_0005;
    pub const PILOT: u64 = 0x7069_6c6f_7400_0006;
    pub const OPNORM: u64 = 0x6f70_6e6f_726d_0007;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a seed and a list of labels.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &label in labels {
        state ^= label.wrapping_mul(0xd6e8_feb8_6659_fd93);
        out ^= splitmix64(&mut state);
    }
    out
}

/// The random stream keyed by `(seed, domain)` with stream id `index`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A vector of `n` independent standard normal draws.
pub fn gaussian_vector<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}

/// A standard normal vector with a random subset of coordinates zeroed
/// (at least one coordinate is kept).
pub fn sparse_gaussian_vector<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v = gaussian_vector(rng, n);
    let keep = rng.random_range(0..n);
    for (j, c) in v.iter_mut().enumerate() {
        if j != keep && rng.random_bool(0.5) {
            *c = 0.0;
        }
    }
    v
}
