//! Stochastic gradient ascent on the ELBO.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_gradient_with_workers, EstimatorKind};
use crate::models::Model;
use crate::rng::RngStream;
use crate::variance::{mc_variance_with_se, VarianceReport};
use crate::variational::MeanFieldGaussian;

/// Learning-rate schedule for the ascent `lambda <- lambda + eta_t o grad`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "schedule")]
pub enum Schedule {
    /// `eta_t = a / (b + t)`; satisfies the usual divergent-sum /
    /// convergent-square-sum conditions for any `a, b > 0`.
    RobbinsMonro { a: f64, b: f64 },
    /// Adam with bias-corrected moments, applied in ascent direction.
    Adam {
        step: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Schedule {
    pub fn adam_default() -> Self {
        Schedule::Adam {
            step: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Mutable state carried across [`step`] calls.
#[derive(Debug, Clone)]
pub struct ScheduleState {
    t: usize,
    m: DVector<f64>,
    v: DVector<f64>,
}

impl ScheduleState {
    pub fn new(dim2k: usize) -> Self {
        ScheduleState {
            t: 0,
            m: DVector::zeros(dim2k),
            v: DVector::zeros(dim2k),
        }
    }

    pub fn iterations(&self) -> usize {
        self.t
    }
}

/// One ascent step; `grad` is in the `(mu, phi)` layout.
pub fn step(
    lambda: &MeanFieldGaussian,
    grad: &DVector<f64>,
    schedule: &Schedule,
    state: &mut ScheduleState,
) -> Result<MeanFieldGaussian> {
    let flat = lambda.as_vector();
    if grad.len() != flat.len() {
        return Err(Error::DimensionMismatch {
            expected: flat.len(),
            got: grad.len(),
        });
    }
    state.t += 1;
    let updated = match *schedule {
        Schedule::RobbinsMonro { a, b } => {
            let eta = a / (b + state.t as f64);
            flat + grad * eta
        }
        Schedule::Adam {
            step,
            beta1,
            beta2,
            epsilon,
        } => {
            let t = state.t as i32;
            state.m = &state.m * beta1 + grad * (1.0 - beta1);
            state.v = &state.v * beta2 + grad.component_mul(grad) * (1.0 - beta2);
            let m_hat = &state.m / (1.0 - beta1.powi(t));
            let v_hat = &state.v / (1.0 - beta2.powi(t));
            DVector::from_fn(flat.len(), |j, _| {
                flat[j] + step * m_hat[j] / (v_hat[j].sqrt() + epsilon)
            })
        }
    };
    MeanFieldGaussian::from_vector(&updated)
}

/// Monte Carlo ELBO estimate `(1/S) sum_s h(theta_s) + entropy(lambda)` with
/// `theta_s ~ q`, sample `s` on substream `s`.
pub fn estimate_elbo(
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
    samples: usize,
    rng: &RngStream,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidCount { what: "samples" });
    }
    let mut sum = 0.0;
    for s in 0..samples as u64 {
        let draw = lambda.draw(&mut rng.substream(s))?;
        sum += model.log_joint(&draw.theta);
    }
    Ok(sum / samples as f64 + lambda.entropy())
}

/// Everything recorded about one iteration.
#[derive(Debug, Clone, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub elbo: f64,
    pub grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<MeanFieldGaussian>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceReport>,
    /// Seconds since the run started; monotone across records, excluded from
    /// file outputs so reruns stay byte-identical.
    #[serde(skip)]
    pub elapsed: f64,
}

/// Trace of a variational fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitTrace {
    pub records: Vec<IterRecord>,
    pub final_lambda: MeanFieldGaussian,
    pub converged_at: Option<usize>,
}

impl FitTrace {
    /// Write `iter, elbo, grad_norm[, mu_*, phi_*]` rows.
    pub fn write_csv(
        &self,
        out: &mut impl std::io::Write,
        with_lambda: bool,
    ) -> std::io::Result<()> {
        write!(out, "iter,elbo,grad_norm")?;
        if with_lambda {
            let k = self.final_lambda.dim();
            for i in 0..k {
                write!(out, ",mu_{i}")?;
            }
            for i in 0..k {
                write!(out, ",phi_{i}")?;
            }
        }
        writeln!(out)?;
        for r in &self.records {
            write!(out, "{},{:.16e},{:.16e}", r.iter, r.elbo, r.grad_norm)?;
            if with_lambda {
                if let Some(lambda) = &r.lambda {
                    for v in lambda.as_vector().iter() {
                        write!(out, ",{v:.16e}")?;
                    }
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Knobs for [`run_vi_with`].
#[derive(Debug, Clone)]
pub struct ViConfig {
    pub samples: usize,
    pub iters: usize,
    pub schedule: Schedule,
    /// Record every n-th iteration (1 = all).
    pub record_every: usize,
    /// Keep the parameter vector in each record.
    pub record_lambda: bool,
    /// Draws for the per-record ELBO estimate.
    pub elbo_samples: usize,
    /// Also attach a Monte Carlo variance report to every n-th record.
    pub variance_every: Option<usize>,
    pub variance_samples: usize,
    pub variance_kind: Option<EstimatorKind>,
    /// Stop early when the relative change of the moving-average ELBO
    /// (window below) falls under this tolerance.
    pub convergence_tol: f64,
    pub convergence_window: usize,
    /// Abort when any |lambda_j| exceeds this bound.
    pub divergence_bound: f64,
    pub workers: usize,
}

impl ViConfig {
    pub fn new(samples: usize, iters: usize, schedule: Schedule) -> Self {
        ViConfig {
            samples,
            iters,
            schedule,
            record_every: 1,
            record_lambda: false,
            elbo_samples: samples.max(32),
            variance_every: None,
            variance_samples: 1000,
            variance_kind: None,
            convergence_tol: 1e-4,
            convergence_window: 50,
            divergence_bound: 1e6,
            workers: 1,
        }
    }
}

/// Iterate the stochastic ascent and record a trace.
///
/// Iteration `t` estimates the gradient on substream `2t` and the recorded
/// ELBO on substream `2t + 1` of `rng`, so a fit is a pure function of
/// `(model, init, config, seed)`.
pub fn run_vi(
    model: &dyn Model,
    init: &MeanFieldGaussian,
    kind: EstimatorKind,
    samples: usize,
    iters: usize,
    schedule: Schedule,
    rng: &RngStream,
) -> Result<FitTrace> {
    run_vi_with(
        model,
        init,
        kind,
        &ViConfig::new(samples, iters, schedule),
        rng,
    )
}

/// [`run_vi`] with full control of recording and convergence.
pub fn run_vi_with(
    model: &dyn Model,
    init: &MeanFieldGaussian,
    kind: EstimatorKind,
    config: &ViConfig,
    rng: &RngStream,
) -> Result<FitTrace> {
    if config.iters == 0 {
        return Err(Error::InvalidCount { what: "iterations" });
    }
    let start = Instant::now();
    let mut lambda = init.clone();
    let mut state = ScheduleState::new(2 * init.dim());
    let mut records = Vec::new();
    let mut elbo_window: Vec<f64> = Vec::new();
    let mut prev_avg: Option<f64> = None;
    let mut converged_at = None;

    for t in 0..config.iters {
        let grad = estimate_gradient_with_workers(
            kind,
            &lambda,
            model,
            config.samples,
            &rng.substream(2 * t as u64),
            config.workers,
        )?;
        lambda = step(&lambda, &grad, &config.schedule, &mut state)?;

        let max_abs = lambda.as_vector().amax();
        if !max_abs.is_finite() || max_abs > config.divergence_bound {
            return Err(Error::Diverged {
                iter: t,
                bound: config.divergence_bound,
            });
        }

        let elbo = estimate_elbo(
            &lambda,
            model,
            config.elbo_samples,
            &rng.substream(2 * t as u64 + 1),
        )?;

        if t % config.record_every == 0 || t + 1 == config.iters {
            let variance = match (config.variance_every, config.variance_kind) {
                (Some(every), kind_opt) if t % every == 0 => {
                    let vkind = kind_opt.unwrap_or(kind);
                    let (report, _) = mc_variance_with_se(
                        vkind,
                        &lambda,
                        model,
                        config.variance_samples,
                        1,
                        &rng.substream(u64::MAX - t as u64),
                        config.workers,
                    )?;
                    Some(report)
                }
                _ => None,
            };
            records.push(IterRecord {
                iter: t,
                elbo,
                grad_norm: grad.norm(),
                lambda: config.record_lambda.then(|| lambda.clone()),
                variance,
                elapsed: start.elapsed().as_secs_f64(),
            });
        }

        // Moving-average convergence check on the estimated ELBO.
        elbo_window.push(elbo);
        if elbo_window.len() > config.convergence_window {
            elbo_window.remove(0);
        }
        if elbo_window.len() == config.convergence_window {
            let avg: f64 = elbo_window.iter().sum::<f64>() / config.convergence_window as f64;
            if let Some(prev) = prev_avg {
                let rel = (avg - prev).abs() / prev.abs().max(1.0);
                if rel < config.convergence_tol && converged_at.is_none() {
                    converged_at = Some(t);
                }
            }
            prev_avg = Some(avg);
        }
    }

    Ok(FitTrace {
        records,
        final_lambda: lambda,
        converged_at,
    })
}
