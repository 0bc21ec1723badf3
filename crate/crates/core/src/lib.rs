//! Per-run algorithm selection with warm-started continuations: run
//! collection, trajectory features, regression models, selection and
//! reporting.

pub mod archive;
pub mod collect;
pub mod config;
mod csvio;
pub mod error;
pub mod pipeline;
pub mod plan;
pub mod report;
pub mod select;
pub mod tables;
pub mod train;

pub use config::{ProtocolConfig, Subset, KEYS};
pub use error::{PipelineError, Result};
pub use pipeline::{run_all, run_stage, Stage};
pub use plan::{capped_log10, ModelKey, RunKey, TargetType, Triple, PRECISION_FLOOR};
