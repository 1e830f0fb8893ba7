//! Cross sections of the delta functions along one coordinate, with the
//! others held at the variational mean (score) or at zero noise (RP),
//! plus the 3-sigma sampling-region bounds.

use std::path::PathBuf;

use clap::Args;
use nalgebra::DVector;
use serde::Deserialize;
use vigrad::estimators::{delta_rp, delta_score};
use vigrad::rng::make_rng;
use vigrad::variational::MeanFieldGaussian;

use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, Table};
use crate::registry::{build_model, ModelArg, ModelSpec, QuadraticParams};

use super::{load_config, merge_opts};

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct CrossSectionArgs {
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
    /// Probed coordinate (default: min(5, dim - 1)).
    #[arg(long)]
    pub index: Option<usize>,
    /// Grid in base-noise units.
    #[arg(long, allow_negative_numbers = true)]
    pub z_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub z_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Mean coordinate value applied to every coordinate.
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    /// Phi coordinate value applied to every coordinate.
    #[arg(long, allow_negative_numbers = true)]
    pub phi0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(skip)]
    pub quadratic: Option<QuadraticParams>,
}

pub fn run(cli: CrossSectionArgs) -> CliResult<()> {
    let args = match &cli.config {
        Some(path) => {
            let file: CrossSectionArgs = load_config(path)?;
            merge_opts!(cli, file; model, dim, n_obs, data, index, z_min, z_max,
                        points, mu0, phi0, seed, out, format, quadratic)
        }
        None => cli,
    };

    let root = make_rng(args.seed.unwrap_or(0));
    let spec = ModelSpec {
        model: args.model.unwrap_or(ModelArg::Quadratic),
        dim: args.dim.unwrap_or(1),
        n_obs: args.n_obs.unwrap_or(40),
        data: args.data.as_deref(),
        quadratic: args.quadratic.as_ref(),
    };
    let model = build_model(&spec, &root)?;
    let k = model.dim();
    let index = args.index.unwrap_or_else(|| 5.min(k - 1));
    if index >= k {
        return Err(CliError::Config(format!(
            "--index {index} out of range for dimension {k}"
        )));
    }
    let z_min = args.z_min.unwrap_or(-3.0);
    let z_max = args.z_max.unwrap_or(3.0);
    let points = args.points.unwrap_or(121);
    if points < 2 || z_max <= z_min {
        return Err(CliError::Config(
            "need points >= 2 and z-max > z-min".into(),
        ));
    }

    let lambda = MeanFieldGaussian::new(
        DVector::from_element(k, args.mu0.unwrap_or(0.0)),
        DVector::from_element(k, args.phi0.unwrap_or(0.0)),
    )?;
    let sigma_i = lambda.sigma()[index];
    let mu_i = lambda.mu()[index];

    let mut table = Table::new(&[
        "z",
        "theta",
        "delta_score_mu",
        "delta_score_phi",
        "delta_rp_mu",
        "delta_rp_phi",
        "region_z_lo",
        "region_z_hi",
        "region_theta_lo",
        "region_theta_hi",
    ]);
    for p in 0..points {
        let z_val = z_min + (z_max - z_min) * p as f64 / (points - 1) as f64;
        let mut z = DVector::zeros(k);
        z[index] = z_val;
        let theta = lambda.transform(&z)?;
        let score = delta_score(&theta, &lambda, model.as_ref())?;
        let rp = delta_rp(&z, &lambda, model.as_ref())?;
        table.push(vec![
            fmt_f64(z_val),
            fmt_f64(theta[index]),
            fmt_f64(score[index]),
            fmt_f64(score[k + index]),
            fmt_f64(rp[index]),
            fmt_f64(rp[k + index]),
            fmt_f64(-3.0),
            fmt_f64(3.0),
            fmt_f64(mu_i - 3.0 * sigma_i),
            fmt_f64(mu_i + 3.0 * sigma_i),
        ]);
    }
    table.write(args.out.as_deref(), args.format.as_deref().unwrap_or("csv"))
}
