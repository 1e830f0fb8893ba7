//! Model construction shared by the commands.
//!
//! Data-backed models regenerate their datasets deterministically from
//! substream 0 of the run seed, so a command is a pure function of
//! `(flags, seed, input files)`.

use std::path::Path;

use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use vigrad::estimators::EstimatorKind;
use vigrad::models::{
    simulate_bnn_data, simulate_logistic_data, BayesianLogisticRegression, BayesianNeuralNet,
    ExactQuadratic, Model, MultinomialLogistic,
};
use vigrad::rng::RngStream;

use crate::cache::DatasetCache;
use crate::error::{CliError, CliResult};

/// Substream of the run seed reserved for dataset simulation.
pub const DATA_SUBSTREAM: u64 = 0;
/// Substream reserved for Monte Carlo estimation.
pub const MC_SUBSTREAM: u64 = 1;
/// Substream reserved for optimization runs.
pub const FIT_SUBSTREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    /// Gaussian-posterior quadratic benchmark (see `--dim`), or a custom
    /// quadratic from the config file's `quadratic` block.
    Quadratic,
    /// Bayesian logistic regression on a regenerated scalar-input dataset.
    Logistic2d,
    /// Bayesian softmax regression on an ingested dataset (`--data`).
    Softmax,
    /// Bayesian neural network on a regenerated scalar-input dataset.
    Bnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Score,
    Rp,
    Rb,
}

impl EstimatorArg {
    pub fn kind(self) -> EstimatorKind {
        match self {
            EstimatorArg::Score => EstimatorKind::Score,
            EstimatorArg::Rp => EstimatorKind::Rp,
            EstimatorArg::Rb => EstimatorKind::Rb,
        }
    }
}

/// Explicit quadratic model, settable only through `--config`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticParams {
    pub c0: f64,
    pub g0: Vec<f64>,
    pub h0: Vec<Vec<f64>>,
    pub theta0: Vec<f64>,
}

/// Everything a command needs to build its model.
pub struct ModelSpec<'a> {
    pub model: ModelArg,
    pub dim: usize,
    pub n_obs: usize,
    pub data: Option<&'a Path>,
    pub quadratic: Option<&'a QuadraticParams>,
}

/// The default quadratic benchmark of dimension `k`: a Gaussian posterior
/// with mean `m_i = 1 - 0.4 i` and banded SPD precision
/// `P = diag(1 + 0.5 i) + 0.25` on the first off-diagonals.
pub fn default_quadratic(k: usize) -> ExactQuadratic {
    let mean = DVector::from_fn(k, |i, _| 1.0 - 0.4 * i as f64);
    let mut precision =
        DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 + 0.5 * i as f64 } else { 0.0 });
    for i in 0..k.saturating_sub(1) {
        precision[(i, i + 1)] = 0.25;
        precision[(i + 1, i)] = 0.25;
    }
    ExactQuadratic::gaussian_posterior(mean, precision).expect("banded precision is SPD")
}

pub fn build_model(spec: &ModelSpec, root: &RngStream) -> CliResult<Box<dyn Model>> {
    let mut data_rng = root.substream(DATA_SUBSTREAM);
    match spec.model {
        ModelArg::Quadratic => match spec.quadratic {
            Some(q) => {
                let k = q.theta0.len();
                if q.h0.len() != k || q.h0.iter().any(|row| row.len() != k) {
                    return Err(CliError::Config(
                        "quadratic h0 must be square and match theta0".into(),
                    ));
                }
                let h = DMatrix::from_fn(k, k, |i, j| q.h0[i][j]);
                let model = ExactQuadratic::new(
                    q.c0,
                    DVector::from_vec(q.g0.clone()),
                    h,
                    DVector::from_vec(q.theta0.clone()),
                )?;
                Ok(Box::new(model))
            }
            None => Ok(Box::new(default_quadratic(spec.dim))),
        },
        ModelArg::Logistic2d => {
            let theta_true = DVector::from_column_slice(&[0.5, -1.0]);
            let data = simulate_logistic_data(spec.n_obs, &theta_true, &mut data_rng)?;
            Ok(Box::new(BayesianLogisticRegression::from_data(&data, 5.0)?))
        }
        ModelArg::Softmax => {
            let path = spec.data.ok_or_else(|| {
                CliError::Config("--model softmax requires --data <cache>".into())
            })?;
            let cache = DatasetCache::load(path)?;
            if cache.images.is_empty() {
                return Err(CliError::Data("cache holds no records".into()));
            }
            let d = cache.feature_dim() + 1; // bias feature appended
            let n = cache.images.len();
            let design = DMatrix::from_fn(n, d, |i, j| {
                if j < cache.feature_dim() {
                    cache.images[i][j]
                } else {
                    1.0
                }
            });
            let classes = cache.labels.iter().copied().max().unwrap_or(0).max(1) as usize + 1;
            Ok(Box::new(MultinomialLogistic::new(
                design,
                cache.labels.clone(),
                classes,
                40.0,
            )?))
        }
        ModelArg::Bnn => {
            let (xs, ys) = simulate_bnn_data(spec.n_obs, &mut data_rng);
            Ok(Box::new(BayesianNeuralNet::new(xs, ys, 40.0)?))
        }
    }
}
