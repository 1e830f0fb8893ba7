//! Shared fixtures for the benchmark targets.

use nalgebra::{DMatrix, DVector};
use vigrad::models::ExactQuadratic;
use vigrad::variational::MeanFieldGaussian;

/// A `dim`-dimensional banded Gaussian-posterior benchmark model.
pub fn benchmark_model(dim: usize) -> ExactQuadratic {
    let mean = DVector::from_fn(dim, |i, _| 1.0 - 0.3 * i as f64);
    let mut precision =
        DMatrix::from_fn(
            dim,
            dim,
            |i, j| {
                if i == j {
                    1.0 + 0.25 * i as f64
                } else {
                    0.0
                }
            },
        );
    for i in 0..dim.saturating_sub(1) {
        precision[(i, i + 1)] = 0.2;
        precision[(i + 1, i)] = 0.2;
    }
    ExactQuadratic::gaussian_posterior(mean, precision).expect("banded precision is SPD")
}

/// A matching off-optimum variational state.
pub fn benchmark_lambda(dim: usize) -> MeanFieldGaussian {
    MeanFieldGaussian::new(
        DVector::from_fn(dim, |i, _| 0.1 * i as f64),
        DVector::from_element(dim, 0.5f64.ln()),
    )
    .expect("matching dimensions")
}
