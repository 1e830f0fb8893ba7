//! Stochastic-gradient variational inference for mean-field Gaussian
//! approximations, built around three Monte Carlo gradient estimators of the
//! evidence lower bound (ELBO) and the machinery to compare their variances.
//!
//! The library provides:
//!
//! - [`rng`]: a counter-based, splittable random source so every estimate is
//!   reproducible bit-for-bit given a seed, independent of worker count.
//! - [`moments`]: exact expectations and variances of sparse polynomials under
//!   a diagonal Gaussian — the brute-force oracle behind every closed-form
//!   variance in [`variance`].
//! - [`models`]: log-joint densities (quadratic, Bayesian logistic, softmax,
//!   neural network) with gradients, Hessians and second-order expansions.
//! - [`variational`]: the mean-field Gaussian family `q(theta; mu, phi)` with
//!   `phi = log sigma`, its reparameterization map, score and entropy.
//! - [`estimators`]: score-function, reparameterization (RP) and
//!   Rao-Blackwellized (RB) delta functions and the assembled gradient
//!   estimators.
//! - [`variance`]: closed-form marginal variances, exact-moment variances and
//!   Monte Carlo variance reports, plus the trace metric.
//! - [`optimizer`]: stochastic gradient ascent on the ELBO with Robbins-Monro
//!   and Adam schedules.
//!
//! The parameter vector layout is fixed everywhere: `lambda = (mu, phi)` of
//! length `2k`, mu-block first.

pub mod error;
pub mod estimators;
pub mod models;
pub mod moments;
pub mod optimizer;
pub mod rng;
pub mod variance;
pub mod variational;

pub use error::{Error, Result};
pub use estimators::{EstimatorKind, GradientSample};
pub use models::{ExactQuadratic, Model, QuadraticExpansion};
pub use moments::SparsePolynomial;
pub use optimizer::{FitTrace, Schedule, ViConfig};
pub use rng::{make_rng, RngStream};
pub use variance::{Block, VarianceMethod, VarianceReport};
pub use variational::MeanFieldGaussian;
