//! Variance sweeps: how the marginal variances of the probed parameter move
//! along an axis — optimization iterations, one mean coordinate, or a common
//! scale applied to every coordinate. Each point reports the Monte Carlo
//! variances of the score and RP deltas plus the closed-form RP values under
//! the quadratic expansion at the current mean.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nalgebra::DVector;
use serde::Deserialize;
use vigrad::estimators::EstimatorKind;
use vigrad::models::{quadratic_expansion_at, Model};
use vigrad::optimizer::{run_vi_with, Schedule, ViConfig};
use vigrad::rng::{make_rng, RngStream};
use vigrad::variance::{analytic_var_rp_mu, analytic_var_rp_phi, mc_variance_with_se, Block};
use vigrad::variational::MeanFieldGaussian;

use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, Table};
use crate::registry::{
    build_model, EstimatorArg, ModelArg, ModelSpec, QuadraticParams, FIT_SUBSTREAM, MC_SUBSTREAM,
};

use super::{load_config, merge_opts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Re-estimate the variances at recorded iterations of a VI run.
    Iterations,
    /// Move the probed mean coordinate over the grid.
    MuI,
    /// Set every phi coordinate to the grid value.
    PhiAll,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub axis: Option<SweepAxis>,
    /// Probed parameter index (default: min(1000, dim - 1)).
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub n_obs: Option<usize>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Grid start for mu-i / phi-all.
    #[arg(long, allow_negative_numbers = true)]
    pub grid_start: Option<f64>,
    /// Grid stop (inclusive).
    #[arg(long, allow_negative_numbers = true)]
    pub grid_stop: Option<f64>,
    /// Grid length; 0 emits a header-only table.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Iteration budget for the iterations axis.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Record cadence for the iterations axis.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Estimator driving the optimization on the iterations axis.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Base mean coordinate value (also the initial mean on the iterations
    /// axis).
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    /// Base phi coordinate value for grid axes; on the iterations axis the
    /// initial phi, defaulting to log 0.1.
    #[arg(long, allow_negative_numbers = true)]
    pub phi0: Option<f64>,
    /// Monte Carlo draws per point.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(skip)]
    pub quadratic: Option<QuadraticParams>,
}

const COLUMNS: [&str; 8] = [
    "axis",
    "sweep_value",
    "param_index",
    "block",
    "estimator",
    "method",
    "variance",
    "log10_variance",
];

struct PointContext<'a> {
    model: &'a dyn Model,
    index: usize,
    samples: usize,
    reps: usize,
    rng: &'a RngStream,
}

fn variance_rows(
    table: &mut Table,
    axis: &str,
    sweep_value: f64,
    lambda: &MeanFieldGaussian,
    ctx: &PointContext,
) -> CliResult<()> {
    let expansion = quadratic_expansion_at(ctx.model, lambda.mu(), true)?;
    let sigma = lambda.sigma();
    let mut push = |block: Block, estimator: &str, method: &str, variance: f64| {
        table.push(vec![
            axis.to_string(),
            fmt_f64(sweep_value),
            ctx.index.to_string(),
            block.name().to_string(),
            estimator.to_string(),
            method.to_string(),
            fmt_f64(variance),
            fmt_f64(variance.max(f64::MIN_POSITIVE).log10()),
        ]);
    };
    for kind in [EstimatorKind::Score, EstimatorKind::Rp] {
        let (report, _) =
            mc_variance_with_se(kind, lambda, ctx.model, ctx.samples, ctx.reps, ctx.rng, 2)?;
        push(
            Block::Mu,
            kind.name(),
            "monte_carlo",
            report.element(Block::Mu, ctx.index),
        );
        push(
            Block::Phi,
            kind.name(),
            "monte_carlo",
            report.element(Block::Phi, ctx.index),
        );
    }
    push(
        Block::Mu,
        "rp",
        "closed_form",
        analytic_var_rp_mu(&expansion, &sigma, ctx.index),
    );
    push(
        Block::Phi,
        "rp",
        "closed_form",
        analytic_var_rp_phi(&expansion, &sigma, ctx.index),
    );
    Ok(())
}

pub fn run(cli: SweepArgs) -> CliResult<()> {
    let args = match &cli.config {
        Some(path) => {
            let file: SweepArgs = load_config(path)?;
            merge_opts!(cli, file; model, axis, index, dim, n_obs, data, grid_start,
                        grid_stop, grid_points, iters, record_every, estimator,
                        mu0, phi0, samples, reps, seed, out, format, quadratic)
        }
        None => cli,
    };

    let axis = args
        .axis
        .ok_or_else(|| CliError::Config("--axis is required".into()))?;
    let seed = args.seed.unwrap_or(0);
    let samples = args.samples.unwrap_or(1000);
    let reps = args.reps.unwrap_or(1);
    let root = make_rng(seed);
    let spec = ModelSpec {
        model: args.model.unwrap_or(ModelArg::Quadratic),
        dim: args.dim.unwrap_or(2),
        n_obs: args.n_obs.unwrap_or(10),
        data: args.data.as_deref(),
        quadratic: args.quadratic.as_ref(),
    };
    let model = build_model(&spec, &root)?;
    let k = model.dim();
    let index = args.index.unwrap_or_else(|| 1000.min(k - 1));
    if index >= k {
        return Err(CliError::Config(format!(
            "--index {index} out of range for dimension {k}"
        )));
    }

    let mc_rng = root.substream(MC_SUBSTREAM);
    let ctx = PointContext {
        model: model.as_ref(),
        index,
        samples,
        reps,
        rng: &mc_rng,
    };
    let mut table = Table::new(&COLUMNS);

    match axis {
        SweepAxis::Iterations => {
            let iters = args.iters.unwrap_or(100);
            if iters > 0 {
                // The driving run uses 10 draws per step, like `fit`;
                // `--samples` only controls the per-point variance estimates.
                let mut config = ViConfig::new(10, iters, Schedule::adam_default());
                config.record_every = args.record_every.unwrap_or(10);
                config.record_lambda = true;
                let kind = args.estimator.map_or(EstimatorKind::Rp, EstimatorArg::kind);
                let init = MeanFieldGaussian::new(
                    DVector::from_element(k, args.mu0.unwrap_or(0.0)),
                    DVector::from_element(k, args.phi0.unwrap_or(0.1f64.ln())),
                )?;
                let trace = run_vi_with(
                    model.as_ref(),
                    &init,
                    kind,
                    &config,
                    &root.substream(FIT_SUBSTREAM),
                )?;
                for record in &trace.records {
                    let lambda = record.lambda.as_ref().expect("lambda recording enabled");
                    variance_rows(&mut table, "iterations", record.iter as f64, lambda, &ctx)?;
                }
            }
        }
        SweepAxis::MuI | SweepAxis::PhiAll => {
            let start = args.grid_start.unwrap_or(0.0);
            let stop = args.grid_stop.unwrap_or(2.0);
            let points = args.grid_points.unwrap_or(5);
            let base_mu = DVector::from_element(k, args.mu0.unwrap_or(0.0));
            let base_phi = DVector::from_element(k, args.phi0.unwrap_or(0.0));
            for p in 0..points {
                let value = if points == 1 {
                    start
                } else {
                    start + (stop - start) * p as f64 / (points - 1) as f64
                };
                let (mu, phi, name) = match axis {
                    SweepAxis::MuI => {
                        let mut mu = base_mu.clone();
                        mu[index] = value;
                        (mu, base_phi.clone(), "mu_i")
                    }
                    SweepAxis::PhiAll => {
                        (base_mu.clone(), DVector::from_element(k, value), "phi_all")
                    }
                    SweepAxis::Iterations => unreachable!(),
                };
                let lambda = MeanFieldGaussian::new(mu, phi)?;
                variance_rows(&mut table, name, value, &lambda, &ctx)?;
            }
        }
    }

    table.write(args.out.as_deref(), args.format.as_deref().unwrap_or("csv"))
}
