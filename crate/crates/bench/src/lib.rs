//! Shared inputs for the criterion benchmarks.

use mdimer::ModelParams;

/// A coupled, asymmetric parameter set with a single interior maximizer.
pub fn coupled_params() -> ModelParams {
    ModelParams::new(
        0.4,
        [0.3, -0.2, 0.5],
        [[0.6, 0.1, -0.2], [0.1, -0.4, 0.3], [-0.2, 0.3, 0.8]],
    )
    .expect("valid parameters")
}

pub const ENUMERATION_SIZES: [u64; 3] = [100, 400, 800];

pub const CRITICAL_ALPHAS: [f64; 3] = [1e-3, 1e-2, 0.1];

pub const GAUSSIAN_FIELD: [f64; 3] = [0.0, 0.0, -1.0];

pub const GAUSSIAN_SIZES: [u64; 3] = [16, 64, 200];
