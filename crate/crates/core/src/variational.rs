//! Mean-field Gaussian variational family.
//!
//! `q(theta; lambda) = prod_i N(theta_i | mu_i, exp(2 phi_i))` with
//! `phi_i = log sigma_i`, so the scales stay positive without constraints.
//! The full parameter vector is `lambda = (mu, phi)` of length `2k`,
//! mu-block first; every gradient in the crate uses this layout.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Variational parameters of a diagonal Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldGaussian {
    mu: DVector<f64>,
    phi: DVector<f64>,
}

/// One draw from `q` together with the base noise that produced it.
#[derive(Debug, Clone)]
pub struct Draw {
    pub theta: DVector<f64>,
    pub z: DVector<f64>,
}

impl MeanFieldGaussian {
    pub fn new(mu: DVector<f64>, phi: DVector<f64>) -> Result<Self> {
        if mu.len() != phi.len() {
            return Err(Error::DimensionMismatch {
                expected: mu.len(),
                got: phi.len(),
            });
        }
        if mu.is_empty() {
            return Err(Error::InvalidCount { what: "dimension" });
        }
        Ok(MeanFieldGaussian { mu, phi })
    }

    /// `mu = 0`, `sigma` constant across coordinates.
    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(DVector::zeros(dim), DVector::from_element(dim, sigma.ln()))
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn phi(&self) -> &DVector<f64> {
        &self.phi
    }

    /// `sigma_i = exp(phi_i)`.
    pub fn sigma(&self) -> DVector<f64> {
        self.phi.map(f64::exp)
    }

    /// Flatten to the `(mu, phi)` layout.
    pub fn as_vector(&self) -> DVector<f64> {
        let k = self.dim();
        DVector::from_fn(
            2 * k,
            |j, _| {
                if j < k {
                    self.mu[j]
                } else {
                    self.phi[j - k]
                }
            },
        )
    }

    /// Rebuild from the `(mu, phi)` layout.
    pub fn from_vector(lambda: &DVector<f64>) -> Result<Self> {
        if !lambda.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: lambda.len() + 1,
                got: lambda.len(),
            });
        }
        let k = lambda.len() / 2;
        Self::new(
            DVector::from_fn(k, |i, _| lambda[i]),
            DVector::from_fn(k, |i, _| lambda[k + i]),
        )
    }

    /// The reparameterization map `T(z; lambda) = mu + exp(phi) o z`.
    pub fn transform(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(DVector::from_fn(self.dim(), |i, _| {
            self.mu[i] + self.phi[i].exp() * z[i]
        }))
    }

    /// Recover the base noise: `z = (theta - mu) / sigma`.
    pub fn inverse_transform(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        Ok(DVector::from_fn(self.dim(), |i, _| {
            (theta[i] - self.mu[i]) * (-self.phi[i]).exp()
        }))
    }

    /// One draw from `q` using the next `dim` variates of `rng`.
    pub fn draw(&self, rng: &mut RngStream) -> Result<Draw> {
        let z = DVector::from_vec(rng.standard_normal_vec(self.dim())?);
        let theta = self.transform(&z)?;
        Ok(Draw { theta, z })
    }

    /// `count` draws, each from its own substream of `rng` (sample `s` uses
    /// substream `s`), so the batch is identical however it is scheduled.
    pub fn sample(&self, count: usize, rng: &RngStream) -> Result<Vec<Draw>> {
        (0..count as u64)
            .map(|s| self.draw(&mut rng.substream(s)))
            .collect()
    }

    /// `log q(theta; lambda)`.
    pub fn log_density(&self, theta: &DVector<f64>) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        let mut total = 0.0;
        for i in 0..self.dim() {
            let d = theta[i] - self.mu[i];
            total += -self.phi[i] - 0.5 * LN_2PI - d * d / (2.0 * (2.0 * self.phi[i]).exp());
        }
        Ok(total)
    }

    /// `grad_lambda log q(theta; lambda)` in the `(mu, phi)` layout:
    /// mu-block `(theta_i - mu_i) / sigma_i^2`, phi-block
    /// `-1 + (theta_i - mu_i)^2 / sigma_i^2`.
    pub fn score_grad(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        let k = self.dim();
        let mut grad = DVector::zeros(2 * k);
        for i in 0..k {
            let inv_var = (-2.0 * self.phi[i]).exp();
            let d = theta[i] - self.mu[i];
            grad[i] = d * inv_var;
            grad[k + i] = -1.0 + d * d * inv_var;
        }
        Ok(grad)
    }

    /// Differential entropy `sum_i phi_i + (k/2) log(2 pi e)`.
    pub fn entropy(&self) -> f64 {
        self.phi.sum() + 0.5 * self.dim() as f64 * (LN_2PI + 1.0)
    }

    /// Gradient of the entropy: zero mu-block, all-ones phi-block.
    pub fn entropy_grad(&self) -> DVector<f64> {
        let k = self.dim();
        DVector::from_fn(2 * k, |j, _| if j < k { 0.0 } else { 1.0 })
    }
}
