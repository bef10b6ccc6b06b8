use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Disjoint random streams used by one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Environment = 0,
    Clock = 1,
    Uniforms = 2,
    Initial = 3,
}

/// Stream `4 * replica + substream` of the ChaCha generator keyed by `seed`.
pub fn replica_stream(seed: u64, replica: u64, sub: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica.wrapping_mul(4).wrapping_add(sub as u64));
    rng
}
