//! Bayesian multinomial (softmax) regression.

use nalgebra::{DMatrix, DVector};

use super::Model;
use crate::error::{Error, Result};
use crate::variational::LN_2PI;

/// Softmax classifier over `n_classes` with an isotropic Gaussian prior on
/// all coefficients. The parameter vector packs class blocks contiguously:
/// `theta[c * d + j]` is the weight of feature `j` for class `c`.
#[derive(Debug, Clone)]
pub struct MultinomialLogistic {
    design: DMatrix<f64>,
    labels: Vec<u8>,
    n_classes: usize,
    prior_sd: f64,
}

impl MultinomialLogistic {
    pub fn new(
        design: DMatrix<f64>,
        labels: Vec<u8>,
        n_classes: usize,
        prior_sd: f64,
    ) -> Result<Self> {
        if design.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: design.nrows(),
                got: labels.len(),
            });
        }
        if n_classes < 2 || design.ncols() == 0 {
            return Err(Error::InvalidCount { what: "dimension" });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= n_classes) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                len: n_classes,
            });
        }
        Ok(MultinomialLogistic {
            design,
            labels,
            n_classes,
            prior_sd,
        })
    }

    pub fn n_features(&self) -> usize {
        self.design.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Class probabilities for each observation, rows summing to one.
    pub fn probabilities(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        let n = self.design.nrows();
        let d = self.n_features();
        let mut probs = DMatrix::zeros(n, self.n_classes);
        for i in 0..n {
            let row = self.design.row(i);
            let mut eta = vec![0.0; self.n_classes];
            for (c, e) in eta.iter_mut().enumerate() {
                *e = (0..d).map(|j| theta[c * d + j] * row[j]).sum();
            }
            let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = eta.iter().map(|e| (e - max).exp()).sum();
            for c in 0..self.n_classes {
                probs[(i, c)] = (eta[c] - max).exp() / denom;
            }
        }
        Ok(probs)
    }
}

impl Model for MultinomialLogistic {
    fn dim(&self) -> usize {
        self.n_classes * self.design.ncols()
    }

    fn log_joint(&self, theta: &DVector<f64>) -> f64 {
        let d = self.n_features();
        let mut ll = 0.0;
        for (i, &y) in self.labels.iter().enumerate() {
            let row = self.design.row(i);
            let eta: Vec<f64> = (0..self.n_classes)
                .map(|c| (0..d).map(|j| theta[c * d + j] * row[j]).sum())
                .collect();
            let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + eta.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
            ll += eta[y as usize] - lse;
        }
        let k = self.dim() as f64;
        ll - 0.5 * k * LN_2PI
            - k * self.prior_sd.ln()
            - theta.norm_squared() / (2.0 * self.prior_sd * self.prior_sd)
    }

    fn grad_log_joint(&self, theta: &DVector<f64>) -> DVector<f64> {
        let d = self.n_features();
        let probs = self.probabilities(theta).expect("dimension checked");
        let mut grad = -theta / (self.prior_sd * self.prior_sd);
        for (i, &y) in self.labels.iter().enumerate() {
            let row = self.design.row(i);
            for c in 0..self.n_classes {
                let w = f64::from(y as usize == c) - probs[(i, c)];
                for j in 0..d {
                    grad[c * d + j] += w * row[j];
                }
            }
        }
        grad
    }

    fn hessian_log_joint(&self, theta: &DVector<f64>) -> Option<DMatrix<f64>> {
        let probs = self.probabilities(theta).ok()?;
        let d = self.n_features();
        let dim = self.dim();
        let mut h =
            DMatrix::from_diagonal_element(dim, dim, -1.0 / (self.prior_sd * self.prior_sd));
        for i in 0..self.design.nrows() {
            let row = self.design.row(i);
            for a in 0..self.n_classes {
                for b in 0..self.n_classes {
                    let w = -probs[(i, a)] * (f64::from(a == b) - probs[(i, b)]);
                    if w == 0.0 {
                        continue;
                    }
                    for ja in 0..d {
                        let base = a * d + ja;
                        let scaled = w * row[ja];
                        for jb in 0..d {
                            h[(base, b * d + jb)] += scaled * row[jb];
                        }
                    }
                }
            }
        }
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{finite_diff_grad, FD_BASE_STEP};
    use crate::rng::make_rng;
    use approx::assert_relative_eq;

    fn toy_model(n: usize, d: usize, classes: usize, seed: u64) -> MultinomialLogistic {
        let mut rng = make_rng(seed);
        let design = DMatrix::from_fn(n, d, |_, j| if j == 0 { 1.0 } else { rng.normal() });
        let labels: Vec<u8> = (0..n)
            .map(|_| (rng.uniform() * classes as f64) as u8)
            .collect();
        MultinomialLogistic::new(design, labels, classes, 40.0).unwrap()
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = toy_model(12, 3, 4, 2);
        let mut rng = make_rng(4);
        let theta = DVector::from_vec(rng.standard_normal_vec(model.dim()).unwrap());
        let probs = model.probabilities(&theta).unwrap();
        for i in 0..12 {
            let total: f64 = (0..4).map(|c| probs[(i, c)]).sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let model = toy_model(8, 3, 3, 5);
        let mut rng = make_rng(6);
        for _ in 0..5 {
            let theta = DVector::from_vec(rng.standard_normal_vec(model.dim()).unwrap());
            let analytic = model.grad_log_joint(&theta);
            let fd = finite_diff_grad(|t| model.log_joint(t), &theta, FD_BASE_STEP);
            for j in 0..model.dim() {
                assert_relative_eq!(analytic[j], fd[j], max_relative = 1e-5, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_the_gradient() {
        let model = toy_model(6, 2, 3, 7);
        let mut rng = make_rng(8);
        let theta = DVector::from_vec(rng.standard_normal_vec(model.dim()).unwrap());
        let analytic = model.hessian_log_joint(&theta).unwrap();
        let fd = crate::models::hessian_from_grad(|t| model.grad_log_joint(t), &theta, 1e-5);
        for i in 0..model.dim() {
            for j in 0..model.dim() {
                assert_relative_eq!(
                    analytic[(i, j)],
                    fd[(i, j)],
                    max_relative = 1e-4,
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn out_of_range_labels_are_rejected() {
        assert!(matches!(
            MultinomialLogistic::new(DMatrix::zeros(2, 2), vec![0, 5], 3, 40.0),
            Err(Error::IndexOutOfRange { index: 5, len: 3 })
        ));
    }
}
