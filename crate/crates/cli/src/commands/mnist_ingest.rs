//! Validate IDX image/label files and persist them in the tool's binary
//! cache format, optionally subsampled for desk-scale runs.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use vigrad::models::MnistData;

use crate::cache::DatasetCache;
use crate::error::{CliError, CliResult};

use super::{load_config, merge_opts};

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct MnistIngestArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// IDX image file (magic 0x00000803).
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// IDX label file (magic 0x00000801).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Cache file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep only the first N records.
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Keep every k-th pixel in each direction.
    #[arg(long)]
    pub stride: Option<usize>,
}

pub fn run(cli: MnistIngestArgs) -> CliResult<()> {
    let args = match &cli.config {
        Some(path) => {
            let file: MnistIngestArgs = load_config(path)?;
            merge_opts!(cli, file; images, labels, out, subsample, stride)
        }
        None => cli,
    };

    let images = args
        .images
        .ok_or_else(|| CliError::Config("--images is required".into()))?;
    let labels = args
        .labels
        .ok_or_else(|| CliError::Config("--labels is required".into()))?;
    let out = args
        .out
        .ok_or_else(|| CliError::Config("--out is required".into()))?;

    let mut image_reader = BufReader::new(File::open(&images)?);
    let mut label_reader = BufReader::new(File::open(&labels)?);
    let mut data = MnistData::from_idx(&mut image_reader, &mut label_reader)
        .map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(n) = args.subsample {
        data = data.subsample(n);
    }
    if let Some(stride) = args.stride {
        data = data.pixel_stride(stride);
    }

    let cache = DatasetCache {
        rows: data.shape.0,
        cols: data.shape.1,
        images: data.images,
        labels: data.labels,
    };
    cache.save(&out)?;
    println!(
        "ingested {} records of {}x{} pixels into {}",
        cache.images.len(),
        cache.rows,
        cache.cols,
        out.display()
    );
    Ok(())
}
