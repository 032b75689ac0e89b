//! Reproducible random streams keyed by (seed, replication, role).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Separate roles keep, say, the arrival stream
/// of a replication unchanged when the service model changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Arrivals = 0,
    Service = 1,
    Offspring = 2,
    Aux = 3,
}

/// Independent ChaCha stream for one replication and role.
pub fn stream(seed: u64, rep: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep.wrapping_mul(4).wrapping_add(role as u64));
    rng
}
