//! Per-scale variance table: Monte Carlo variances of the score and RP
//! delta functions under the true log joint and under its quadratic
//! expansion at the variational mean, across a sigma grid.

use std::path::PathBuf;

use clap::Args;
use nalgebra::DVector;
use serde::Deserialize;
use vigrad::estimators::EstimatorKind;
use vigrad::models::{quadratic_expansion_at, ExactQuadratic, Model};
use vigrad::rng::make_rng;
use vigrad::variance::{mc_variance_with_se, Block};
use vigrad::variational::MeanFieldGaussian;

use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, Table};
use crate::registry::{build_model, ModelArg, ModelSpec, QuadraticParams, MC_SUBSTREAM};

use super::{load_config, merge_opts};

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct VarTableArgs {
    /// JSON config file with the same keys as these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Dimension of the quadratic benchmark.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Observation count for simulated datasets.
    #[arg(long)]
    pub n_obs: Option<usize>,
    /// Dataset cache for the softmax model.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Monte Carlo draws per cell.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Replications per cell (draws are pooled).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated sigma grid.
    #[arg(long, value_delimiter = ',')]
    pub sigma_grid: Option<Vec<f64>>,
    /// Fixed variational mean (comma-separated; defaults to zeros).
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(skip)]
    pub quadratic: Option<QuadraticParams>,
}

pub fn run(cli: VarTableArgs) -> CliResult<()> {
    let args = match &cli.config {
        Some(path) => {
            let file: VarTableArgs = load_config(path)?;
            merge_opts!(cli, file; model, dim, n_obs, data, samples, reps, seed,
                        sigma_grid, mu, out, format, quadratic)
        }
        None => cli,
    };

    let model_arg = args.model.unwrap_or(ModelArg::Logistic2d);
    let samples = args.samples.unwrap_or(10_000);
    let reps = args.reps.unwrap_or(1);
    let seed = args.seed.unwrap_or(0);
    let grid = args.sigma_grid.unwrap_or_else(|| vec![0.1, 0.5, 1.0, 2.0]);
    if samples * reps < 2 {
        return Err(CliError::Config("need at least 2 draws per cell".into()));
    }
    if grid.iter().any(|&s| s <= 0.0) {
        return Err(CliError::Config("sigma grid must be positive".into()));
    }

    let root = make_rng(seed);
    let spec = ModelSpec {
        model: model_arg,
        dim: args.dim.unwrap_or(2),
        n_obs: args.n_obs.unwrap_or(10),
        data: args.data.as_deref(),
        quadratic: args.quadratic.as_ref(),
    };
    let model = build_model(&spec, &root)?;
    let k = model.dim();

    let mu = match args.mu {
        Some(values) if values.len() == k => DVector::from_vec(values),
        Some(values) => {
            return Err(CliError::Config(format!(
                "--mu has {} entries, model dimension is {k}",
                values.len()
            )))
        }
        None => DVector::zeros(k),
    };

    let expansion = quadratic_expansion_at(model.as_ref(), &mu, true)?;
    let approx = ExactQuadratic::from_expansion(&expansion);
    // One substream for every cell: common random numbers across the grid
    // and across true/approx, so trends are not washed out by MC noise.
    let cell_rng = root.substream(MC_SUBSTREAM);

    let mut table = Table::new(&[
        "sigma",
        "estimator",
        "h_form",
        "mu_trace",
        "phi_trace",
        "trace",
    ]);
    for &sigma in &grid {
        let lambda = MeanFieldGaussian::new(mu.clone(), DVector::from_element(k, sigma.ln()))?;
        for kind in [EstimatorKind::Score, EstimatorKind::Rp] {
            for (h_form, target) in [("true", model.as_ref()), ("approx", &approx as &dyn Model)] {
                let (report, _) =
                    mc_variance_with_se(kind, &lambda, target, samples, reps, &cell_rng, 2)?;
                table.push(vec![
                    fmt_f64(sigma),
                    kind.name().to_string(),
                    h_form.to_string(),
                    fmt_f64(report.block_trace(Block::Mu)),
                    fmt_f64(report.block_trace(Block::Phi)),
                    fmt_f64(report.trace()),
                ]);
            }
        }
    }
    table.write(args.out.as_deref(), args.format.as_deref().unwrap_or("csv"))
}
