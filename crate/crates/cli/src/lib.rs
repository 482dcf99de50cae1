//! Command-line front end: argument schema, constellation files, CSV sinks
//! and the `design`, `simulate`, `gradcheck` and `info` commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod args;
pub mod commands;
pub mod file;
pub mod info;
pub mod sinks;

pub use args::Cli;
pub use file::ConstellationFile;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "NCMAC_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("load error: {0}")]
    Load(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn from_load(e: ncmac_core::Error) -> Self {
        CliError::Load(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Load(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ncmac_core::Error> for CliError {
    fn from(e: ncmac_core::Error) -> Self {
        use ncmac_core::Error as E;
        match e {
            E::InvalidConfig(_) | E::InvalidDimensions { .. } | E::ShapeMismatch(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io {
                path: PathBuf::from("<csv>"),
                source: io,
            },
            other => CliError::Numerical(format!("csv: {other:?}")),
        }
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV}: expected a thread count, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))
}
