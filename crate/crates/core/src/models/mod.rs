//! Log-joint densities `h(theta) = log p(y, theta)` and their local
//! quadratic structure.
//!
//! A [`Model`] exposes the log joint, its gradient, and (when analytic) its
//! Hessian. [`quadratic_expansion_at`] extracts the second-order expansion
//! `(C, G, H)` around a point, which is what the closed-form variance
//! formulas in [`crate::variance`] consume.

mod bnn;
mod finite_diff;
mod logistic;
mod mnist;
mod quadratic;
mod softmax;

pub use bnn::{simulate_bnn_data, BayesianNeuralNet, BNN_HIDDEN};
pub use finite_diff::{finite_diff_grad, finite_diff_hessian, hessian_from_grad, FD_BASE_STEP};
pub use logistic::{simulate_logistic_data, BayesianLogisticRegression, LogisticData};
pub use mnist::{
    encode_idx_images, encode_idx_labels, load_idx_images, load_idx_labels, IdxError, MnistData,
    IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use quadratic::ExactQuadratic;
pub use softmax::MultinomialLogistic;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A log-joint density with derivatives.
///
/// `grad_log_joint` must match finite differences of `log_joint`;
/// `hessian_log_joint` returns `None` when no analytic Hessian exists (the
/// expansion then falls back to finite differences of the gradient).
pub trait Model: Sync {
    fn dim(&self) -> usize;
    fn log_joint(&self, theta: &DVector<f64>) -> f64;
    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64>;
    fn hessian_log_joint(&self, theta: &DVector<f64>) -> Option<DMatrix<f64>>;
}

/// Second-order expansion of a log joint around `mu`:
/// `h(theta) ~ c + g . (theta - mu) + 1/2 (theta - mu)' h (theta - mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticExpansion {
    pub c: f64,
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
    pub mu: DVector<f64>,
}

impl QuadraticExpansion {
    /// Builds the expansion, symmetrizing `h` as `(h + h') / 2`.
    pub fn new(c: f64, g: DVector<f64>, h: DMatrix<f64>, mu: DVector<f64>) -> Result<Self> {
        let k = mu.len();
        if g.len() != k || h.nrows() != k || h.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: g.len().max(h.nrows()).max(h.ncols()),
            });
        }
        let h = (&h + h.transpose()) * 0.5;
        Ok(QuadraticExpansion { c, g, h, mu })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Evaluate the quadratic at `theta`.
    pub fn eval(&self, theta: &DVector<f64>) -> f64 {
        let d = theta - &self.mu;
        self.c + self.g.dot(&d) + 0.5 * d.dot(&(&self.h * &d))
    }

    /// `sum_m H_im^2 sigma_m^2` for row `i`.
    pub fn hessian_row_sq_dot(&self, sigma: &DVector<f64>, i: usize) -> f64 {
        self.h
            .row(i)
            .iter()
            .zip(sigma.iter())
            .map(|(a, s)| a * a * s * s)
            .sum()
    }
}

/// Expand `model` to second order around `mu`: `C = h(mu)`, `G = grad h(mu)`,
/// `H` the Hessian at `mu` (analytic when available, otherwise central
/// differences of the gradient when `allow_finite_diff` is set).
pub fn quadratic_expansion_at(
    model: &dyn Model,
    mu: &DVector<f64>,
    allow_finite_diff: bool,
) -> Result<QuadraticExpansion> {
    if mu.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: mu.len(),
        });
    }
    let c = model.log_joint(mu);
    let g = model.grad_log_joint(mu);
    let h = match model.hessian_log_joint(mu) {
        Some(h) => h,
        None if allow_finite_diff => {
            hessian_from_grad(|t| model.grad_log_joint(t), mu, FD_BASE_STEP)
        }
        None => return Err(Error::HessianUnavailable),
    };
    QuadraticExpansion::new(c, g, h, mu.clone())
}
