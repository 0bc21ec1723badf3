use std::fmt;
use std::str::FromStr;

use crate::error::{io_err, PipelineError, Result};
use crate::select::{self, SubsetResult};
use crate::tables::{self, CONVERGENCE_FILE, FEATURES_FILE, PERFORMANCE_FILE};
use crate::train::{self, MODELS_DIR, PREDICTIONS_FILE};
use crate::{archive, collect, report, ProtocolConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Collect,
    Features,
    Train,
    Select,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Collect, Stage::Features, Stage::Train, Stage::Select, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Collect => "collect",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Select => "select",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Invalid(format!("unknown stage '{s}'")))
    }
}

/// Runs `f` on a pool of `jobs` threads (0 = all cores).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn features_stage(cfg: &ProtocolConfig) -> Result<()> {
    let d = tables::derive(cfg, &archive::archive_path(&cfg.out))?;
    tables::write_features(&cfg.out.join(FEATURES_FILE), &d.features)?;
    tables::write_performance(&cfg.out.join(PERFORMANCE_FILE), &d.performance)?;
    tables::write_convergence(&cfg.out.join(CONVERGENCE_FILE), &d.convergence)
}

pub fn train_stage(cfg: &ProtocolConfig) -> Result<()> {
    let features = tables::read_features(&cfg.out.join(FEATURES_FILE))?;
    let perf = tables::read_performance(&cfg.out.join(PERFORMANCE_FILE))?;
    let outcomes = train::train_all(cfg, &features, &perf, Some(&cfg.out.join(MODELS_DIR)))?;
    train::write_outputs(cfg, &features, &outcomes)
}

pub fn select_stage(cfg: &ProtocolConfig) -> Result<Vec<SubsetResult>> {
    let preds = train::read_predictions(&cfg.out.join(PREDICTIONS_FILE))?;
    let perf = tables::read_performance(&cfg.out.join(PERFORMANCE_FILE))?;
    let results = select::evaluate(cfg, &preds, &perf)?;
    select::write_outputs(&cfg.out, &cfg.a2_budgets, &results)?;
    Ok(results)
}

pub fn run_stage(cfg: &ProtocolConfig, stage: Stage) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    with_pool(cfg.jobs, || match stage {
        Stage::Collect => collect::collect(cfg).map(|_| ()),
        Stage::Features => features_stage(cfg),
        Stage::Train => train_stage(cfg),
        Stage::Select => select_stage(cfg).map(|_| ()),
        Stage::Report => report::report(cfg).map(|_| ()),
    })?
}

pub fn run_all(cfg: &ProtocolConfig) -> Result<()> {
    for s in Stage::ALL {
        run_stage(cfg, s)?;
    }
    Ok(())
}
