//! Shared fixtures for the criterion benchmarks.

use brwlab::{IncrementLaw, OffspringLaw};

/// Isotropic standard Gaussian jumps with binary branching.
pub fn gaussian_binary(dimension: usize) -> (IncrementLaw, OffspringLaw) {
    (
        IncrementLaw::isotropic_gaussian(dimension, 1.0).expect("valid law"),
        OffspringLaw::deterministic(2),
    )
}
