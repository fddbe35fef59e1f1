//! Evolutionary multitasking with explicit, similarity-driven knowledge transfer
//! for permutation-coded combinatorial problems.

pub mod error;
pub mod evolution;
pub mod orchestrator;
pub mod problems;
pub mod transfer;
pub mod unification;

pub use error::{Error, Result};
pub use evolution::{run_sto, Budget, EvoParams, Individual, Population};
pub use orchestrator::{run_mfea_baseline, run_mtea_ast, task_rng, MultitaskConfig, MultitaskRun};
pub use problems::{Matrix, Permutation, ProblemData, ProblemInstance, ProblemKind, RouteSet};
pub use unification::{SimilarityMatrix, TransferPlan};
