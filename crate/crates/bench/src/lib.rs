//! Shared fixtures for the benchmarks in `benches/`.

use qreg_core::{oracle, QlpInstance};

/// Seeded random polytope instances (dimension up to 6).
pub fn random_instances(count: u64) -> Vec<QlpInstance> {
    (0..count)
        .map(|seed| oracle::random_instance(seed).expect("generator yields valid polytopes"))
        .collect()
}
