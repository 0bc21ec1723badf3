//! Derived per-run tables: fixed-budget performance, trajectory features and
//! convergence curves, all read from the archive in one pass.

use std::collections::BTreeMap;
use std::path::Path;

use trajsel_bbob::target_precision;
use trajsel_ela::{compute_features, feature_schema, FeatureVector, SampleSet};
use trajsel_portfolio::OptimizerKind;

use crate::archive::{self, ArchiveLine};
use crate::csvio;
use crate::error::{PipelineError, Result};
use crate::plan::{capped_log10, RunKey, Triple};
use crate::ProtocolConfig;

pub const FEATURES_FILE: &str = "features.csv";
pub const PERFORMANCE_FILE: &str = "performance.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

/// Target precision of the best-so-far value `budget` evaluations after the
/// switch.
pub fn fixed_budget_performance(line: &ArchiveLine, budget: usize) -> Result<f64> {
    let boundary = line.trace.meta.phase_boundary;
    let available = line.trace.best_so_far.len().saturating_sub(boundary);
    if budget > available || boundary + budget == 0 {
        return Err(PipelineError::BudgetBeyondTrace { budget, available });
    }
    Ok(target_precision(line.trace.best_so_far[boundary + budget - 1], line.f_opt))
}

/// Precision per run and algorithm for one A2 budget.
pub type PerfTable = BTreeMap<Triple, BTreeMap<OptimizerKind, f64>>;
/// Keyed by A2 budget.
pub type Performance = BTreeMap<usize, PerfTable>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub triple: Triple,
    pub values: Vec<f64>,
    pub imputed: Vec<String>,
}

/// Mean curves per (function, algorithm) over evaluations of the
/// concatenated run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Convergence {
    sums: BTreeMap<(usize, OptimizerKind), (Vec<f64>, Vec<f64>, usize)>,
}

impl Convergence {
    fn add(&mut self, line: &ArchiveLine) {
        let n = line.trace.best_so_far.len();
        let e = self
            .sums
            .entry((line.trace.meta.function, line.trace.meta.algorithm))
            .or_insert_with(|| (vec![0.0; n], vec![0.0; n], 0));
        for (i, b) in line.trace.best_so_far.iter().enumerate().take(e.0.len()) {
            let p = target_precision(*b, line.f_opt);
            e.0[i] += p;
            e.1[i] += capped_log10(p);
        }
        e.2 += 1;
    }

    /// Rows of (function, algorithm, evaluation, mean precision, mean log10
    /// precision).
    pub fn rows(&self) -> Vec<(usize, OptimizerKind, usize, f64, f64)> {
        let mut out = Vec::new();
        for ((f, a), (p, l, n)) in &self.sums {
            for i in 0..p.len() {
                out.push((*f, *a, i + 1, p[i] / *n as f64, l[i] / *n as f64));
            }
        }
        out
    }
}

pub struct Derived {
    pub features: Vec<FeatureRow>,
    pub performance: Performance,
    pub convergence: Convergence,
}

/// Features come from the first `feature_budget` samples of each triple's
/// shared first phase; all A2 lines of a triple must carry the identical
/// prefix.
pub fn derive(cfg: &ProtocolConfig, archive_path: &Path) -> Result<Derived> {
    let mut prefixes: BTreeMap<Triple, Vec<trajsel_bbob::Sample>> = BTreeMap::new();
    let mut performance: Performance = cfg.a2_budgets.iter().map(|b| (*b, PerfTable::new())).collect();
    let mut convergence = Convergence::default();
    let mut seen: BTreeMap<RunKey, ()> = BTreeMap::new();
    archive::for_each_line(archive_path, |line| {
        let t = line.triple();
        let boundary = line.trace.meta.phase_boundary;
        let prefix = &line.trace.samples[..boundary.min(line.trace.len())];
        match prefixes.get(&t) {
            Some(p) if p.as_slice() != prefix => return Err(PipelineError::PrefixMismatch(t.to_string())),
            Some(_) => {}
            None => {
                prefixes.insert(t, prefix.to_vec());
            }
        }
        for &b in &cfg.a2_budgets {
            let p = fixed_budget_performance(&line, b)?;
            performance.get_mut(&b).unwrap().entry(t).or_default().insert(line.trace.meta.algorithm, p);
        }
        convergence.add(&line);
        seen.insert(line.key(), ());
        Ok(())
    })?;
    let missing: Vec<String> =
        cfg.run_keys().into_iter().filter(|k| !seen.contains_key(k)).map(|k| k.to_string()).collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingRuns(missing));
    }
    use rayon::prelude::*;
    let triples: Vec<(Triple, Vec<trajsel_bbob::Sample>)> = prefixes.into_iter().collect();
    let features = triples
        .par_iter()
        .map(|(t, samples)| {
            let take = &samples[..cfg.feature_budget.min(samples.len())];
            let set = SampleSet::new(take.iter().map(|s| s.x.clone()).collect(), take.iter().map(|s| s.y).collect())?;
            let fv: FeatureVector = compute_features(&set);
            let imputed = fv.imputed_names().into_iter().map(String::from).collect();
            Ok(FeatureRow { triple: *t, values: fv.values, imputed })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Derived { features, performance, convergence })
}

pub fn write_features(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let mut header = vec!["function".to_string(), "instance".into(), "rep".into()];
    header.extend(feature_schema().into_iter().map(String::from));
    header.push("imputed".into());
    let body = rows.iter().map(|r| {
        let mut v = vec![r.triple.function.to_string(), r.triple.instance.to_string(), r.triple.rep.to_string()];
        v.extend(r.values.iter().map(|x| x.to_string()));
        v.push(r.imputed.join(";"));
        v
    });
    csvio::write(path, &header, body)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>> {
    let names = feature_schema();
    let (header, rows) = csvio::read(path, "features")?;
    if header.len() != names.len() + 4 || header[3..3 + names.len()] != names[..] {
        return Err(PipelineError::Parse { path: path.into(), line: 1, msg: "feature schema mismatch".into() });
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let num = |j: usize| csvio::num::<f64>(path, i + 2, &r[j]);
            let triple = Triple {
                function: csvio::num(path, i + 2, &r[0])?,
                instance: csvio::num(path, i + 2, &r[1])?,
                rep: csvio::num(path, i + 2, &r[2])?,
            };
            let values = (3..3 + names.len()).map(num).collect::<Result<_>>()?;
            let last = &r[3 + names.len()];
            let imputed = if last.is_empty() { Vec::new() } else { last.split(';').map(String::from).collect() };
            Ok(FeatureRow { triple, values, imputed })
        })
        .collect()
}

pub fn write_performance(path: &Path, perf: &Performance) -> Result<()> {
    let header = ["function", "instance", "rep", "algorithm", "budget", "precision"].map(String::from);
    let mut body = Vec::new();
    for (b, table) in perf {
        for (t, row) in table {
            for (a, p) in row {
                body.push(vec![
                    t.function.to_string(),
                    t.instance.to_string(),
                    t.rep.to_string(),
                    a.name().to_string(),
                    b.to_string(),
                    format!("{p:e}"),
                ]);
            }
        }
    }
    csvio::write(path, &header, body)
}

pub fn read_performance(path: &Path) -> Result<Performance> {
    let (_, rows) = csvio::read(path, "features")?;
    let mut perf = Performance::new();
    for (i, r) in rows.iter().enumerate() {
        let line = i + 2;
        let t = Triple {
            function: csvio::num(path, line, &r[0])?,
            instance: csvio::num(path, line, &r[1])?,
            rep: csvio::num(path, line, &r[2])?,
        };
        let a: OptimizerKind = r[3]
            .parse()
            .map_err(|e: trajsel_portfolio::PortfolioError| PipelineError::Parse { path: path.into(), line, msg: e.to_string() })?;
        let b: usize = csvio::num(path, line, &r[4])?;
        let p: f64 = csvio::num(path, line, &r[5])?;
        perf.entry(b).or_default().entry(t).or_default().insert(a, p);
    }
    Ok(perf)
}

pub fn write_convergence(path: &Path, c: &Convergence) -> Result<()> {
    let header = ["function", "algorithm", "evaluation", "mean_precision", "mean_log10_precision"].map(String::from);
    let body = c.rows().into_iter().map(|(f, a, e, p, l)| {
        vec![f.to_string(), a.name().to_string(), e.to_string(), format!("{p:e}"), l.to_string()]
    });
    csvio::write(path, &header, body)
}
