//! Run variational inference and persist the trace and final parameters.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use vigrad::optimizer::{run_vi_with, Schedule, ViConfig};
use vigrad::rng::make_rng;
use vigrad::variational::MeanFieldGaussian;

use crate::error::{CliError, CliResult};
use crate::registry::{
    build_model, EstimatorArg, ModelArg, ModelSpec, QuadraticParams, FIT_SUBSTREAM,
};

use super::{load_config, merge_opts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleArg {
    Adam,
    RobbinsMonro,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub n_obs: Option<usize>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Gradient draws per iteration.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    /// Adam step size.
    #[arg(long)]
    pub step: Option<f64>,
    /// Robbins-Monro numerator.
    #[arg(long)]
    pub rm_a: Option<f64>,
    /// Robbins-Monro offset.
    #[arg(long)]
    pub rm_b: Option<f64>,
    /// Initial common sigma.
    #[arg(long)]
    pub init_sigma: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Include the parameter vector in the trace CSV.
    #[arg(long)]
    #[serde(default)]
    pub record_lambda: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output prefix: writes <out>.trace.csv and <out>.params.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub quadratic: Option<QuadraticParams>,
}

#[derive(Serialize)]
struct FitSummary {
    model: String,
    estimator: String,
    seed: u64,
    samples: usize,
    iters: usize,
    schedule: Schedule,
    converged_at: Option<usize>,
    mu: Vec<f64>,
    phi: Vec<f64>,
}

pub fn run(cli: FitArgs) -> CliResult<()> {
    let args = match &cli.config {
        Some(path) => {
            let file: FitArgs = load_config(path)?;
            let record_lambda = cli.record_lambda || file.record_lambda;
            let mut merged = merge_opts!(cli, file; model, dim, n_obs, data, estimator,
                        samples, iters, schedule, step, rm_a, rm_b, init_sigma,
                        record_every, seed, out, quadratic);
            merged.record_lambda = record_lambda;
            merged
        }
        None => cli,
    };

    let iters = args.iters.unwrap_or(1000);
    if iters == 0 {
        return Err(CliError::Config("--iters must be at least 1".into()));
    }
    let samples = args.samples.unwrap_or(10);
    if samples == 0 {
        return Err(CliError::Config("--samples must be at least 1".into()));
    }
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("--out prefix is required".into()))?;
    let seed = args.seed.unwrap_or(0);
    let schedule = match args.schedule.unwrap_or(ScheduleArg::Adam) {
        ScheduleArg::Adam => {
            let mut s = Schedule::adam_default();
            if let (Schedule::Adam { step, .. }, Some(v)) = (&mut s, args.step) {
                *step = v;
            }
            s
        }
        ScheduleArg::RobbinsMonro => Schedule::RobbinsMonro {
            a: args.rm_a.unwrap_or(1.0),
            b: args.rm_b.unwrap_or(10.0),
        },
    };

    let root = make_rng(seed);
    let model_arg = args.model.unwrap_or(ModelArg::Quadratic);
    let spec = ModelSpec {
        model: model_arg,
        dim: args.dim.unwrap_or(2),
        n_obs: args.n_obs.unwrap_or(10),
        data: args.data.as_deref(),
        quadratic: args.quadratic.as_ref(),
    };
    let model = build_model(&spec, &root)?;
    let k = model.dim();
    let init_sigma = args.init_sigma.unwrap_or(0.1);
    if init_sigma <= 0.0 {
        return Err(CliError::Config("--init-sigma must be positive".into()));
    }
    let init =
        MeanFieldGaussian::new(DVector::zeros(k), DVector::from_element(k, init_sigma.ln()))?;

    let kind = args
        .estimator
        .map_or(vigrad::EstimatorKind::Rp, EstimatorArg::kind);
    let mut config = ViConfig::new(samples, iters, schedule);
    config.record_every = args.record_every.unwrap_or(1);
    config.record_lambda = args.record_lambda;
    let trace = run_vi_with(
        model.as_ref(),
        &init,
        kind,
        &config,
        &root.substream(FIT_SUBSTREAM),
    )?;

    let mut trace_csv = Vec::new();
    trace
        .write_csv(&mut trace_csv, args.record_lambda)
        .map_err(CliError::from)?;
    crate::output::ensure_parent(out)?;
    std::fs::write(with_suffix(out, ".trace.csv"), trace_csv)?;

    let summary = FitSummary {
        model: format!("{model_arg:?}").to_lowercase(),
        estimator: kind.name().to_string(),
        seed,
        samples,
        iters,
        schedule,
        converged_at: trace.converged_at,
        mu: trace.final_lambda.mu().iter().copied().collect(),
        phi: trace.final_lambda.phi().iter().copied().collect(),
    };
    let json =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(with_suffix(out, ".params.json"), json + "\n")?;
    Ok(())
}

fn with_suffix(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
