use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("bad value for '{key}': {msg}")]
    BadValue { key: String, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("missing input {path} (run the '{stage}' stage first)")]
    MissingInput { path: PathBuf, stage: &'static str },
    #[error("{} runs missing, e.g. {}", .0.len(), .0.iter().take(5).cloned().collect::<Vec<_>>().join(", "))]
    MissingRuns(Vec<String>),
    #[error("budget {budget} exceeds the {available} evaluations recorded after the switch")]
    BudgetBeyondTrace { budget: usize, available: usize },
    #[error("A2 traces of {0} do not share the first-phase prefix")]
    PrefixMismatch(String),
    #[error("no prediction for {algorithm} on run {run}")]
    MissingPrediction { run: String, algorithm: String },
    #[error(transparent)]
    Portfolio(#[from] trajsel_portfolio::PortfolioError),
    #[error(transparent)]
    Problem(#[from] trajsel_bbob::BbobError),
    #[error(transparent)]
    Features(#[from] trajsel_ela::ElaError),
    #[error(transparent)]
    Forest(#[from] trajsel_forest::ForestError),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> PipelineError {
    let path = path.into();
    move |source| PipelineError::Io { path, source }
}
