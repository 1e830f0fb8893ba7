//! Log joints that are globally quadratic, so every expansion is exact.

use nalgebra::{DMatrix, DVector};

use super::{Model, QuadraticExpansion};
use crate::error::{Error, Result};
use crate::variational::LN_2PI;

/// `h(theta) = c0 + g0 . (theta - theta0) + 1/2 (theta - theta0)' h0 (theta - theta0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactQuadratic {
    c0: f64,
    g0: DVector<f64>,
    h0: DMatrix<f64>,
    theta0: DVector<f64>,
}

impl ExactQuadratic {
    /// Builds the model; `h0` is symmetrized.
    pub fn new(c0: f64, g0: DVector<f64>, h0: DMatrix<f64>, theta0: DVector<f64>) -> Result<Self> {
        let k = theta0.len();
        if k == 0 {
            return Err(Error::InvalidCount { what: "dimension" });
        }
        if g0.len() != k || h0.nrows() != k || h0.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: g0.len().max(h0.nrows()).max(h0.ncols()),
            });
        }
        let h0 = (&h0 + h0.transpose()) * 0.5;
        Ok(ExactQuadratic { c0, g0, h0, theta0 })
    }

    /// The scalar toy model `h(theta) = theta^2`.
    pub fn theta_squared() -> Self {
        Self::new(
            0.0,
            DVector::zeros(1),
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DVector::zeros(1),
        )
        .expect("fixed dimensions")
    }

    /// The exact log density of `N(mean, precision^-1)` as a quadratic model,
    /// including the normalizing constant, so the log evidence of the implied
    /// "posterior inference" problem is zero.
    pub fn gaussian_posterior(mean: DVector<f64>, precision: DMatrix<f64>) -> Result<Self> {
        let k = mean.len();
        let precision = (&precision + precision.transpose()) * 0.5;
        let chol = precision
            .clone()
            .cholesky()
            .ok_or(Error::HessianUnavailable)?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let c0 = -0.5 * k as f64 * LN_2PI + 0.5 * log_det;
        Self::new(c0, DVector::zeros(k), -precision, mean)
    }

    /// Model matching a [`QuadraticExpansion`]: the quadratic that agrees
    /// with the expanded log joint to second order at the expansion point.
    pub fn from_expansion(expansion: &QuadraticExpansion) -> Self {
        ExactQuadratic {
            c0: expansion.c,
            g0: expansion.g.clone(),
            h0: expansion.h.clone(),
            theta0: expansion.mu.clone(),
        }
    }

    pub fn curvature(&self) -> &DMatrix<f64> {
        &self.h0
    }

    pub fn expansion_point(&self) -> &DVector<f64> {
        &self.theta0
    }
}

impl Model for ExactQuadratic {
    fn dim(&self) -> usize {
        self.theta0.len()
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        let d = theta - &self.theta0;
        self.c0 + self.g0.dot(&d) + 0.5 * d.dot(&(&self.h0 * &d))
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.g0 + &self.h0 * (theta - &self.theta0)
    }

    fn hessian_log_joint(&self, _theta: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.h0.clone())
    }
}
