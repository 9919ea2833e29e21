//! Seed derivation for independent, reproducible random substreams.
//!
//! Trial `i` in role `r` uses `base_seed ^ splitmix64(i * ROLE_STRIDE + tag(r))`.
//! The mixing function and role tags are part of the output format: changing
//! them changes every published number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stream in the crate.
pub type StreamRng = ChaCha8Rng;

const ROLE_STRIDE: u64 = 8;

/// What a derived stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    /// The Haar draw of the instance's orthonormal vectors.
    Instance,
    /// The optimizer's private randomness.
    Algorithm,
    /// Probe points for property checks.
    Probe,
    /// Sphere samples for cap experiments.
    Sphere,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Instance => 1,
            Role::Algorithm => 2,
            Role::Probe => 3,
            Role::Sphere => 4,
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base_seed: u64, trial: u64, role: Role) -> u64 {
    base_seed ^ splitmix64(trial.wrapping_mul(ROLE_STRIDE).wrapping_add(role.tag()))
}

pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn trial_stream(base_seed: u64, trial: u64, role: Role) -> StreamRng {
    stream(derive_seed(base_seed, trial, role))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derived_seeds_are_distinct() {
        let roles = [Role::Instance, Role::Algorithm, Role::Probe, Role::Sphere];
        let mut seen = HashSet::new();
        for trial in 0..1000 {
            for role in roles {
                assert!(seen.insert(derive_seed(42, trial, role)));
            }
        }
    }

    #[test]
    fn derivation_is_stable() {
        // Frozen values: any change here breaks reproducibility of old results.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(0, 0, Role::Instance), splitmix64(1));
        assert_eq!(derive_seed(5, 3, Role::Algorithm), 5 ^ splitmix64(26));
    }
}
