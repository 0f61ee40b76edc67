//! Shared fixtures for the benchmarks.

use symchain::{truncate_bdjump, BdJumpModel, GeneratorMatrix};

/// Bilateral birth-death chain with jumps to 0, `λ = μ = 1`, on `[-m, m]`.
pub fn bd_window(alpha: f64, m: i64) -> GeneratorMatrix {
    truncate_bdjump(&BdJumpModel::new(1.0, 1.0, alpha).expect("valid rates"), -m, m).expect("valid window")
}
