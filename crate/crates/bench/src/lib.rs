//! Fixtures shared by the criterion benchmarks in `benches/`.

use stairmps::circuit::random_layer;
use stairmps::targets::random_mps;
use stairmps::{Mps, StaircaseCircuit};

/// Seeded random target with the capped bond profile.
pub fn target(num_sites: usize, max_chi: usize) -> Mps {
    random_mps(num_sites, max_chi, 0xbe7c).expect("valid target shape")
}

/// Seeded circuit of `layers` random staircase layers.
pub fn circuit(num_sites: usize, layers: usize) -> StaircaseCircuit {
    let layers = (0..layers as u64)
        .map(|l| random_layer(num_sites, 0xc1c0 + l).expect("valid layer"))
        .collect();
    StaircaseCircuit::new(num_sites, layers).expect("consistent layers")
}
