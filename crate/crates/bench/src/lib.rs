//! Shared inputs for the benchmarks.

use tridiag_core::generate::{gaussian, rng};
use tridiag_core::CMatrix;

/// A fixed batch of seeded Gaussian matrices.
pub fn batch(n: usize, count: u64) -> Vec<CMatrix> {
    (0..count).map(|s| gaussian(n, &mut rng(s))).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn batch_is_deterministic() {
        assert_eq!(super::batch(4, 3), super::batch(4, 3));
    }
}
