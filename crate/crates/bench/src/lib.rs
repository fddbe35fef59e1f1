//! Benchmark assembly, synthetic similarity tasks, statistics and output
//! files for the multitasking solvers in `mtea-core`.

use std::path::{Path, PathBuf};

pub mod benchmark;
pub mod experiment;
pub mod output;
pub mod stats;
pub mod synthetic;

pub use benchmark::{assemble_benchmark, load_instance, resolve_instances};
pub use experiment::{run_experiment, run_on, run_synthetic, Algorithm, ExperimentConfig, RunSet};
pub use output::write_outputs;
pub use stats::{summarize, wilcoxon_rank_sum, StatsSummary};
pub use synthetic::{make_synthetic_pair, SyntheticPair};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] mtea_core::Error),

    #[error("{}: {source}", path.display())]
    Instance {
        path: PathBuf,
        source: mtea_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error("unknown benchmark {0:?}")]
    UnknownBenchmark(String),

    #[error("missing instance files in {}: {}", dir.display(), names.join(", "))]
    MissingInstances { dir: PathBuf, names: Vec<String> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("malformed output file: {0}")]
    Format(String),
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        BenchError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
