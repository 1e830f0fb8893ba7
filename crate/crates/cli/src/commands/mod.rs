//! Subcommand implementations.
//!
//! Every command accepts `--config FILE` (JSON, same keys as the flags;
//! unknown keys are rejected). Explicit flags override file values, which
//! override built-in defaults.

pub mod cross_section;
pub mod fit;
pub mod mnist_ingest;
pub mod sweep;
pub mod var_table;

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

/// Parse a JSON config file into the command's own argument struct.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
}

/// Fill `None` fields of the CLI arguments from the config file.
macro_rules! merge_opts {
    ($cli:ident, $file:ident; $($f:ident),* $(,)?) => {{
        let mut merged = $cli;
        $( if merged.$f.is_none() { merged.$f = $file.$f; } )*
        merged
    }};
}
pub(crate) use merge_opts;
