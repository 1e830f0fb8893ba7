//! A small Bayesian neural network regression model.
//!
//! Scalar input, two tanh hidden layers of width 20, scalar output, unit
//! observation noise, and an isotropic Gaussian prior over all weights and
//! biases. The parameter vector packs layers in order, weights before
//! biases within each layer, weight matrices row-major:
//! `[W1 (20x1), b1 (20), W2 (20x20), b2 (20), W3 (1x20), b3 (1)]`.
//!
//! The gradient is exact (backpropagation); no analytic Hessian is exposed,
//! so expansions fall back to finite differences of the gradient.

use nalgebra::{DMatrix, DVector};

use super::Model;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::variational::LN_2PI;

/// Hidden layer width of both layers.
pub const BNN_HIDDEN: usize = 20;

/// Regression data and prior scale for the network.
#[derive(Debug, Clone)]
pub struct BayesianNeuralNet {
    inputs: Vec<f64>,
    responses: Vec<f64>,
    prior_sd: f64,
}

/// `n` observations with `x ~ N(0, 1)` and `y = sin(2x) + 0.1 eps`.
pub fn simulate_bnn_data(n: usize, rng: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.normal();
        let y = (2.0 * x).sin() + 0.1 * rng.normal();
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

struct Layout;

impl Layout {
    const W1: usize = 0;
    const B1: usize = Self::W1 + BNN_HIDDEN;
    const W2: usize = Self::B1 + BNN_HIDDEN;
    const B2: usize = Self::W2 + BNN_HIDDEN * BNN_HIDDEN;
    const W3: usize = Self::B2 + BNN_HIDDEN;
    const B3: usize = Self::W3 + BNN_HIDDEN;
    const DIM: usize = Self::B3 + 1;
}

struct Forward {
    a1: [f64; BNN_HIDDEN],
    a2: [f64; BNN_HIDDEN],
    out: f64,
}

impl BayesianNeuralNet {
    pub fn new(inputs: Vec<f64>, responses: Vec<f64>, prior_sd: f64) -> Result<Self> {
        if inputs.len() != responses.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: responses.len(),
            });
        }
        if inputs.is_empty() {
            return Err(Error::InvalidCount {
                what: "observations",
            });
        }
        Ok(BayesianNeuralNet {
            inputs,
            responses,
            prior_sd,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.inputs.len()
    }

    fn forward(&self, theta: &DVector<f64>, x: f64) -> Forward {
        let mut a1 = [0.0; BNN_HIDDEN];
        for i in 0..BNN_HIDDEN {
            a1[i] = (theta[Layout::W1 + i] * x + theta[Layout::B1 + i]).tanh();
        }
        let mut a2 = [0.0; BNN_HIDDEN];
        for i in 0..BNN_HIDDEN {
            let mut pre = theta[Layout::B2 + i];
            for j in 0..BNN_HIDDEN {
                pre += theta[Layout::W2 + i * BNN_HIDDEN + j] * a1[j];
            }
            a2[i] = pre.tanh();
        }
        let mut out = theta[Layout::B3];
        for j in 0..BNN_HIDDEN {
            out += theta[Layout::W3 + j] * a2[j];
        }
        Forward { a1, a2, out }
    }

    /// Network output for one input.
    pub fn predict(&self, theta: &DVector<f64>, x: f64) -> f64 {
        self.forward(theta, x).out
    }
}

impl Model for BayesianNeuralNet {
    fn dim(&self) -> usize {
        Layout::DIM
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        let mut ll = 0.0;
        for (i, &x) in self.inputs.iter().enumerate() {
            let r = self.responses[i] - self.forward(theta, x).out;
            ll += -0.5 * LN_2PI - 0.5 * r * r;
        }
        let k = Layout::DIM as f64;
        ll - 0.5 * k * LN_2PI
            - k * self.prior_sd.ln()
            - theta.norm_squared() / (2.0 * self.prior_sd * self.prior_sd)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut grad = -theta / (self.prior_sd * self.prior_sd);
        for (i, &x) in self.inputs.iter().enumerate() {
            let f = self.forward(theta, x);
            // d log-lik / d out = residual under unit noise variance.
            let d_out = self.responses[i] - f.out;

            grad[Layout::B3] += d_out;
            let mut d_a2 = [0.0; BNN_HIDDEN];
            for j in 0..BNN_HIDDEN {
                grad[Layout::W3 + j] += d_out * f.a2[j];
                d_a2[j] = d_out * theta[Layout::W3 + j];
            }

            let mut d_a1 = [0.0; BNN_HIDDEN];
            for r in 0..BNN_HIDDEN {
                let d_pre2 = d_a2[r] * (1.0 - f.a2[r] * f.a2[r]);
                grad[Layout::B2 + r] += d_pre2;
                for j in 0..BNN_HIDDEN {
                    grad[Layout::W2 + r * BNN_HIDDEN + j] += d_pre2 * f.a1[j];
                    d_a1[j] += d_pre2 * theta[Layout::W2 + r * BNN_HIDDEN + j];
                }
            }

            for j in 0..BNN_HIDDEN {
                let d_pre1 = d_a1[j] * (1.0 - f.a1[j] * f.a1[j]);
                grad[Layout::W1 + j] += d_pre1 * x;
                grad[Layout::B1 + j] += d_pre1;
            }
        }
        grad
    }

    fn hessian_log_joint(&self, _theta: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}
