use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trajsel_forest::{fit_forest, grid_search, CvReport, Dataset, GridPoint, RandomForest, R2};
use trajsel_portfolio::OptimizerKind;

use crate::csvio;
use crate::error::{io_err, PipelineError, Result};
use crate::plan::{model_seed, ModelKey, TargetType, Triple};
use crate::tables::{FeatureRow, PerfTable, Performance};
use crate::ProtocolConfig;

pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const FOLDS_FILE: &str = "cv_folds.csv";
pub const MODELS_DIR: &str = "models";

pub fn r2_file(target: TargetType) -> String {
    format!("r2_{}.csv", target.name())
}

/// Rows in feature-table order with targets for `key`.
pub fn build_dataset(features: &[FeatureRow], perf: &Performance, key: ModelKey) -> Result<Dataset> {
    let table = perf.get(&key.budget).ok_or_else(|| PipelineError::MissingRuns(vec![format!("budget {}", key.budget)]))?;
    let mut y = Vec::with_capacity(features.len());
    for r in features {
        let p = table
            .get(&r.triple)
            .and_then(|m| m.get(&key.algorithm))
            .ok_or_else(|| PipelineError::MissingRuns(vec![format!("{}_{}", r.triple, key.algorithm)]))?;
        y.push(key.target.transform(*p));
    }
    Ok(Dataset::new(
        features.iter().map(|r| r.values.clone()).collect(),
        y,
        features.iter().map(|r| r.triple.instance).collect(),
        features.iter().map(|r| r.triple.rep).collect(),
    )?)
}

/// Lists every planned run with no feature row or no performance value.
pub fn gaps(cfg: &ProtocolConfig, features: &[FeatureRow], perf: &Performance) -> Vec<String> {
    let have: BTreeMap<Triple, ()> = features.iter().map(|r| (r.triple, ())).collect();
    let mut out = Vec::new();
    for t in cfg.triples() {
        if !have.contains_key(&t) {
            out.push(format!("{t} (features)"));
        }
        for a in cfg.sorted_portfolio() {
            for b in &cfg.a2_budgets {
                if perf.get(b).and_then(|tb| tb.get(&t)).and_then(|m| m.get(&a)).is_none() {
                    out.push(format!("{t}_{a} (budget {b})"));
                }
            }
        }
    }
    out
}

pub struct ModelOutcome {
    pub key: ModelKey,
    pub report: CvReport,
    /// Kept only when no model store was given.
    pub model: Option<RandomForest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub algorithm: String,
    pub budget: usize,
    pub target: TargetType,
    pub hyper: GridPoint,
    pub seed: u64,
    pub schema_version: String,
    pub features: Vec<String>,
    pub mean_r2: f64,
    pub fold_r2: Vec<R2>,
    pub pruned_poisson: bool,
}

/// One grid search and one final refit per (algorithm, budget, target).
/// With `store`, models are written there as they finish and dropped.
pub fn train_all(
    cfg: &ProtocolConfig,
    features: &[FeatureRow],
    perf: &Performance,
    store: Option<&Path>,
) -> Result<Vec<ModelOutcome>> {
    let missing = gaps(cfg, features, perf);
    if !missing.is_empty() {
        return Err(PipelineError::MissingRuns(missing));
    }
    if let Some(dir) = store {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    cfg.model_keys()
        .par_iter()
        .map(|&key| {
            let data = build_dataset(features, perf, key)?;
            let seed = model_seed(cfg.seed, key);
            let report = grid_search(&data, &cfg.instances, &cfg.grid, seed)?;
            let model = fit_forest(&data.x, &data.y, &report.best.params(), seed)?;
            let model = match store {
                Some(dir) => {
                    save_model(dir, key, &model, &report)?;
                    None
                }
                None => Some(model),
            };
            Ok(ModelOutcome { key, report, model })
        })
        .collect()
}

fn save_model(dir: &Path, key: ModelKey, model: &RandomForest, report: &CvReport) -> Result<()> {
    let path = dir.join(format!("{key}.model"));
    let bytes = bincode::serialize(model).map_err(|e| PipelineError::Parse { path: path.clone(), line: 0, msg: e.to_string() })?;
    std::fs::write(&path, bytes).map_err(io_err(&path))?;
    let sidecar = ModelSidecar {
        algorithm: key.algorithm.name().into(),
        budget: key.budget,
        target: key.target,
        hyper: report.best,
        seed: model.seed,
        schema_version: trajsel_ela::SCHEMA_VERSION.into(),
        features: trajsel_ela::feature_schema().into_iter().map(String::from).collect(),
        mean_r2: report.mean_r2,
        fold_r2: report.fold_r2.clone(),
        pruned_poisson: report.pruned_poisson,
    };
    let path = dir.join(format!("{key}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&sidecar).expect("serializable")).map_err(io_err(&path))
}

pub fn load_model(dir: &Path, key: ModelKey) -> Result<RandomForest> {
    let path = dir.join(format!("{key}.model"));
    let bytes = std::fs::read(&path).map_err(io_err(&path))?;
    bincode::deserialize(&bytes).map_err(|e| PipelineError::Parse { path, line: 0, msg: e.to_string() })
}

/// Mean LOGO R² per (algorithm, budget) for one target type.
pub fn r2_table(outcomes: &[ModelOutcome], target: TargetType) -> BTreeMap<OptimizerKind, BTreeMap<usize, f64>> {
    let mut t: BTreeMap<OptimizerKind, BTreeMap<usize, f64>> = BTreeMap::new();
    for o in outcomes.iter().filter(|o| o.key.target == target) {
        t.entry(o.key.algorithm).or_default().insert(o.key.budget, o.report.mean_r2);
    }
    t
}

/// Out-of-fold predictions of the log-target models, keyed by budget.
pub fn oof_predictions(features: &[FeatureRow], outcomes: &[ModelOutcome]) -> BTreeMap<usize, PerfTable> {
    let mut out: BTreeMap<usize, PerfTable> = BTreeMap::new();
    for o in outcomes.iter().filter(|o| o.key.target == TargetType::Log10) {
        let table = out.entry(o.key.budget).or_default();
        for (r, p) in features.iter().zip(&o.report.oof) {
            table.entry(r.triple).or_default().insert(o.key.algorithm, *p);
        }
    }
    out
}

pub fn write_outputs(cfg: &ProtocolConfig, features: &[FeatureRow], outcomes: &[ModelOutcome]) -> Result<()> {
    let out = &cfg.out;
    for target in [TargetType::Raw, TargetType::Log10] {
        let table = r2_table(outcomes, target);
        let mut header = vec!["algorithm".to_string()];
        header.extend(cfg.a2_budgets.iter().map(|b| b.to_string()));
        let rows = table.iter().map(|(a, row)| {
            let mut v = vec![a.name().to_string()];
            v.extend(cfg.a2_budgets.iter().map(|b| row[b].to_string()));
            v
        });
        csvio::write(&out.join(r2_file(target)), &header, rows)?;
    }
    let header = ["algorithm", "budget", "target", "instance", "r2", "constant_truth", "chosen", "pruned_poisson"]
        .map(String::from);
    let mut rows = Vec::new();
    for o in outcomes {
        for ((g, s), c) in o.report.fold_groups.iter().zip(&o.report.fold_r2).zip(&o.report.chosen) {
            rows.push(vec![
                o.key.algorithm.name().to_string(),
                o.key.budget.to_string(),
                o.key.target.name().to_string(),
                g.to_string(),
                s.value.to_string(),
                s.constant_truth.to_string(),
                c.to_string(),
                o.report.pruned_poisson.to_string(),
            ]);
        }
    }
    csvio::write(&out.join(FOLDS_FILE), &header, rows)?;
    write_predictions(&out.join(PREDICTIONS_FILE), &oof_predictions(features, outcomes))
}

pub fn write_predictions(path: &Path, preds: &BTreeMap<usize, PerfTable>) -> Result<()> {
    let header = ["function", "instance", "rep", "budget", "algorithm", "prediction"].map(String::from);
    let mut rows = Vec::new();
    for (b, table) in preds {
        for (t, m) in table {
            for (a, p) in m {
                rows.push(vec![
                    t.function.to_string(),
                    t.instance.to_string(),
                    t.rep.to_string(),
                    b.to_string(),
                    a.name().to_string(),
                    p.to_string(),
                ]);
            }
        }
    }
    csvio::write(path, &header, rows)
}

pub fn read_predictions(path: &Path) -> Result<BTreeMap<usize, PerfTable>> {
    let (_, rows) = csvio::read(path, "train")?;
    let mut out: BTreeMap<usize, PerfTable> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let line = i + 2;
        let t = Triple {
            function: csvio::num(path, line, &r[0])?,
            instance: csvio::num(path, line, &r[1])?,
            rep: csvio::num(path, line, &r[2])?,
        };
        let b: usize = csvio::num(path, line, &r[3])?;
        let a: OptimizerKind = r[4].parse().map_err(|e: trajsel_portfolio::PortfolioError| PipelineError::Parse {
            path: path.into(),
            line,
            msg: e.to_string(),
        })?;
        out.entry(b).or_default().entry(t).or_default().insert(a, csvio::num(path, line, &r[5])?);
    }
    Ok(out)
}
