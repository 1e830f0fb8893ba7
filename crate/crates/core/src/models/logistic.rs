//! Bayesian logistic regression with a Gaussian prior.
//!
//! The class-1 probability is `p(x) = 1 / (1 + exp(eta))` with linear
//! predictor `eta = theta . x` — note the sign: larger `eta` means smaller
//! `p`. The simulator and all derivatives follow this convention.

use nalgebra::{DMatrix, DVector};

use super::Model;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::variational::LN_2PI;

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-x))`.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A binary-response dataset: design rows and 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    pub design: DMatrix<f64>,
    pub responses: Vec<u8>,
}

/// Draw `n` observations with scalar input `x ~ N(0, 1)`, design row
/// `(1, x)`, and `y ~ Bernoulli(p)` with `p = 1 / (1 + exp(theta . row))`.
pub fn simulate_logistic_data(
    n: usize,
    theta_true: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<LogisticData> {
    if n == 0 {
        return Err(Error::InvalidCount {
            what: "observations",
        });
    }
    if theta_true.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: theta_true.len(),
        });
    }
    let mut design = DMatrix::zeros(n, 2);
    let mut responses = Vec::with_capacity(n);
    for row in 0..n {
        let x = rng.normal();
        design[(row, 0)] = 1.0;
        design[(row, 1)] = x;
        let eta = theta_true[0] + theta_true[1] * x;
        let p = sigmoid(-eta);
        responses.push(u8::from(rng.uniform() < p));
    }
    Ok(LogisticData { design, responses })
}

/// Bernoulli likelihood over a fixed design plus an isotropic Gaussian prior
/// `N(0, prior_sd^2 I)` on the coefficients.
#[derive(Debug, Clone)]
pub struct BayesianLogisticRegression {
    design: DMatrix<f64>,
    responses: Vec<u8>,
    prior_sd: f64,
}

impl BayesianLogisticRegression {
    pub fn new(design: DMatrix<f64>, responses: Vec<u8>, prior_sd: f64) -> Result<Self> {
        if design.nrows() != responses.len() {
            return Err(Error::DimensionMismatch {
                expected: design.nrows(),
                got: responses.len(),
            });
        }
        if design.ncols() == 0 {
            return Err(Error::InvalidCount { what: "dimension" });
        }
        Ok(BayesianLogisticRegression {
            design,
            responses,
            prior_sd,
        })
    }

    pub fn from_data(data: &LogisticData, prior_sd: f64) -> Result<Self> {
        Self::new(data.design.clone(), data.responses.clone(), prior_sd)
    }

    pub fn n_obs(&self) -> usize {
        self.responses.len()
    }

    fn check_dim(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.design.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.design.ncols(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    fn log_prior(&self, theta: &DVector<f64>) -> f64 {
        let k = theta.len() as f64;
        -0.5 * k * LN_2PI
            - k * self.prior_sd.ln()
            - theta.norm_squared() / (2.0 * self.prior_sd * self.prior_sd)
    }
}

impl Model for BayesianLogisticRegression {
    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        let eta = &self.design * theta;
        let mut ll = 0.0;
        for (i, &y) in self.responses.iter().enumerate() {
            // log p = -softplus(eta), log(1 - p) = -softplus(-eta).
            ll -= if y == 1 {
                softplus(eta[i])
            } else {
                softplus(-eta[i])
            };
        }
        ll + self.log_prior(theta)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.design * theta;
        let mut grad = -theta / (self.prior_sd * self.prior_sd);
        for (i, &y) in self.responses.iter().enumerate() {
            let p = sigmoid(-eta[i]);
            let w = p - f64::from(y);
            grad += self.design.row(i).transpose() * w;
        }
        grad
    }

    fn hessian_log_joint(&self, theta: &DVector<f64>) -> Option<DMatrix<f64>> {
        if self.check_dim(theta).is_err() {
            return None;
        }
        let eta = &self.design * theta;
        let d = self.dim();
        let mut h = DMatrix::from_diagonal_element(d, d, -1.0 / (self.prior_sd * self.prior_sd));
        for i in 0..self.n_obs() {
            let p = sigmoid(-eta[i]);
            let row = self.design.row(i);
            let w = p * (1.0 - p);
            h.syger(-w, &row.transpose(), &row.transpose(), 1.0);
        }
        // syger fills the lower triangle; mirror it.
        for r in 0..d {
            for c in (r + 1)..d {
                h[(r, c)] = h[(c, r)];
            }
        }
        Some(h)
    }
}
