//! Delta functions and Monte Carlo gradient estimators of the ELBO.
//!
//! Each estimator writes the gradient of `E_q[h(theta)]` as an expectation of
//! a delta function and averages draws; the entropy gradient is always added
//! analytically, never estimated:
//!
//! - score function: `delta(theta) = h(theta) grad_lambda log q(theta)`,
//!   `theta ~ q`.
//! - reparameterization (RP): `delta(z) = grad_lambda T(z) grad_theta h(T(z))`
//!   with `T(z) = mu + sigma o z`, `z ~ N(0, I)`; the mu-block is
//!   `grad h(theta)` and the phi-block is `sigma o z o grad h(theta)`.
//! - Rao-Blackwellized (RB): the score delta with every term of `h` not
//!   containing `theta_i` removed, taken under the quadratic expansion of
//!   `h` at the current mean (where the Markov blanket of each coordinate is
//!   the full vector).
//!
//! Estimation assigns substream `s` of the caller's stream to sample `s` and
//! reduces partial sums in a fixed chunk order, so results are bit-identical
//! for any worker count.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{quadratic_expansion_at, Model, QuadraticExpansion};
use crate::rng::RngStream;
use crate::variational::MeanFieldGaussian;

/// One realization of a delta function in the `(mu, phi)` layout.
pub type GradientSample = DVector<f64>;

/// Samples per reduction chunk; fixed so the summation order never depends
/// on the worker count.
pub(crate) const CHUNK: usize = 1024;

/// The three gradient estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Score,
    Rp,
    Rb,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] =
        [EstimatorKind::Score, EstimatorKind::Rp, EstimatorKind::Rb];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Score => "score",
            EstimatorKind::Rp => "rp",
            EstimatorKind::Rb => "rb",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Score-function delta: `h(theta) grad_lambda log q(theta; lambda)`.
pub fn delta_score(
    theta: &DVector<f64>,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
) -> Result<GradientSample> {
    let h = model.log_joint(theta);
    Ok(lambda.score_grad(theta)? * h)
}

/// Reparameterization delta evaluated at base noise `z`.
pub fn delta_rp(
    z: &DVector<f64>,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
) -> Result<GradientSample> {
    let theta = lambda.transform(z)?;
    let grad = model.grad_log_joint(&theta);
    let k = lambda.dim();
    let sigma = lambda.sigma();
    let mut delta = DVector::zeros(2 * k);
    for i in 0..k {
        delta[i] = grad[i];
        delta[k + i] = sigma[i] * z[i] * grad[i];
    }
    Ok(delta)
}

/// The terms of the expanded log joint that contain `theta_i`, written in
/// `u = theta - mu`:
/// `G_i u_i + u_i sum_{m != i} H_im u_m + (1/2) H_ii u_i^2`.
pub fn h_minus_i(expansion: &QuadraticExpansion, theta: &DVector<f64>, i: usize) -> f64 {
    let u = theta - &expansion.mu;
    let mut cross = 0.0;
    for m in 0..expansion.dim() {
        if m != i {
            cross += expansion.h[(i, m)] * u[m];
        }
    }
    expansion.g[i] * u[i] + u[i] * cross + 0.5 * expansion.h[(i, i)] * u[i] * u[i]
}

/// Rao-Blackwellized delta for coordinate `i`: the `(mu_i, phi_i)` pair
/// `h_{-i}(theta) * ((theta_i - mu_i)/sigma_i^2, -1 + (theta_i - mu_i)^2/sigma_i^2)`.
pub fn delta_rb(
    theta: &DVector<f64>,
    lambda: &MeanFieldGaussian,
    expansion: &QuadraticExpansion,
    i: usize,
) -> (f64, f64) {
    let h = h_minus_i(expansion, theta, i);
    let inv_var = (-2.0 * lambda.phi()[i]).exp();
    let d = theta[i] - lambda.mu()[i];
    (h * d * inv_var, h * (-1.0 + d * d * inv_var))
}

/// Full 2k RB delta, coordinate pairs merged into the `(mu, phi)` layout.
fn delta_rb_full(
    theta: &DVector<f64>,
    lambda: &MeanFieldGaussian,
    expansion: &QuadraticExpansion,
) -> GradientSample {
    let k = lambda.dim();
    let mut delta = DVector::zeros(2 * k);
    for i in 0..k {
        let (dmu, dphi) = delta_rb(theta, lambda, expansion, i);
        delta[i] = dmu;
        delta[k + i] = dphi;
    }
    delta
}

/// Evaluate the delta function for sample `s` of `rng`.
pub(crate) fn delta_at_sample(
    kind: EstimatorKind,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
    expansion: Option<&QuadraticExpansion>,
    rng: &RngStream,
    s: u64,
) -> Result<GradientSample> {
    let draw = lambda.draw(&mut rng.substream(s))?;
    match kind {
        EstimatorKind::Score => delta_score(&draw.theta, lambda, model),
        EstimatorKind::Rp => delta_rp(&draw.z, lambda, model),
        EstimatorKind::Rb => {
            let expansion = expansion.expect("expansion prepared for RB");
            Ok(delta_rb_full(&draw.theta, lambda, expansion))
        }
    }
}

/// The expansion RB needs, at the current variational mean.
pub(crate) fn expansion_for(
    kind: EstimatorKind,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
) -> Result<Option<QuadraticExpansion>> {
    match kind {
        EstimatorKind::Rb => Ok(Some(quadratic_expansion_at(model, lambda.mu(), true)?)),
        _ => Ok(None),
    }
}

/// Run `compute_chunk` for every chunk of `0..samples` across `workers`
/// threads and return the per-chunk results in chunk order.
pub(crate) fn map_chunks<P, F>(samples: usize, workers: usize, compute_chunk: F) -> Vec<P>
where
    P: Send + Default + Clone,
    F: Fn(std::ops::Range<u64>) -> P + Sync,
{
    let n_chunks = samples.div_ceil(CHUNK);
    let chunk_range = |c: usize| {
        let lo = (c * CHUNK) as u64;
        lo..((c * CHUNK + CHUNK).min(samples)) as u64
    };
    let mut partials: Vec<P> = vec![P::default(); n_chunks];
    let workers = workers.max(1).min(n_chunks.max(1));
    if workers <= 1 {
        for (c, slot) in partials.iter_mut().enumerate() {
            *slot = compute_chunk(chunk_range(c));
        }
    } else {
        let per = n_chunks.div_ceil(workers);
        std::thread::scope(|scope| {
            for (block_idx, block) in partials.chunks_mut(per).enumerate() {
                let compute_chunk = &compute_chunk;
                scope.spawn(move || {
                    for (j, slot) in block.iter_mut().enumerate() {
                        *slot = compute_chunk(chunk_range(block_idx * per + j));
                    }
                });
            }
        });
    }
    partials
}

/// Monte Carlo ELBO gradient: `(1/S) sum_s delta(sample s) + entropy_grad`.
pub fn estimate_gradient(
    kind: EstimatorKind,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
    samples: usize,
    rng: &RngStream,
) -> Result<GradientSample> {
    estimate_gradient_with_workers(kind, lambda, model, samples, rng, 1)
}

/// [`estimate_gradient`] with an explicit worker count. The result is
/// bit-identical for any `workers >= 1`.
pub fn estimate_gradient_with_workers(
    kind: EstimatorKind,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
    samples: usize,
    rng: &RngStream,
    workers: usize,
) -> Result<GradientSample> {
    if samples == 0 {
        return Err(Error::InvalidCount { what: "samples" });
    }
    if lambda.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: lambda.dim(),
        });
    }
    let expansion = expansion_for(kind, lambda, model)?;

    let partials = map_chunks(samples, workers, |range| {
        let mut sum = DVector::zeros(2 * lambda.dim());
        let mut first_err = None;
        for s in range {
            match delta_at_sample(kind, lambda, model, expansion.as_ref(), rng, s) {
                Ok(delta) => sum += delta,
                Err(e) => {
                    first_err.get_or_insert(e);
                    break;
                }
            }
        }
        (sum, first_err)
    });

    let mut total = DVector::zeros(2 * lambda.dim());
    for (partial, err) in partials {
        if let Some(e) = err {
            return Err(e);
        }
        total += partial;
    }
    Ok(total / samples as f64 + lambda.entropy_grad())
}
