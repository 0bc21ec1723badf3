//! Per-run selection, losses, baselines, confusion matrices and counts.

use std::collections::BTreeMap;
use std::path::Path;

use trajsel_portfolio::OptimizerKind;

use crate::config::Subset;
use crate::csvio;
use crate::error::{PipelineError, Result};
use crate::plan::{capped_log10, Triple};
use crate::tables::{PerfTable, Performance};
use crate::ProtocolConfig;

pub const SELECT_DIR: &str = "select";
pub const BASELINES_FILE: &str = "baselines.csv";

/// Member with the lowest prediction; ties go to the earlier member in the
/// fixed order.
pub fn select(preds: &BTreeMap<OptimizerKind, f64>, members: &[OptimizerKind], run: &str) -> Result<OptimizerKind> {
    let mut best: Option<(OptimizerKind, f64)> = None;
    let mut sorted = members.to_vec();
    sorted.sort();
    for a in sorted {
        let p = match preds.get(&a) {
            Some(p) if !p.is_nan() => *p,
            _ => return Err(PipelineError::MissingPrediction { run: run.into(), algorithm: a.name().into() }),
        };
        if best.is_none_or(|(_, b)| p < b) {
            best = Some((a, p));
        }
    }
    best.map(|(a, _)| a).ok_or_else(|| PipelineError::Invalid("empty portfolio".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub triple: Triple,
    pub selected: OptimizerKind,
    /// Every member tied for the lowest capped precision.
    pub best: Vec<OptimizerKind>,
    pub f_a: f64,
    pub f_star: f64,
    pub loss: f64,
    /// Achieved precision of every member on this run.
    pub precisions: BTreeMap<OptimizerKind, f64>,
}

impl LossRecord {
    /// Loss had `a` been selected.
    pub fn loss_of(&self, a: OptimizerKind) -> f64 {
        capped_log10(self.precisions[&a]) - capped_log10(self.f_star)
    }
}

pub fn best_set(perf: &BTreeMap<OptimizerKind, f64>, members: &[OptimizerKind]) -> Vec<OptimizerKind> {
    let min = members.iter().map(|a| capped_log10(perf[a])).fold(f64::INFINITY, f64::min);
    let mut b: Vec<OptimizerKind> = members.iter().copied().filter(|a| capped_log10(perf[a]) == min).collect();
    b.sort();
    b
}

/// `log10(F_A) - log10(F_A*)` with both precisions floored at 1e-8.
pub fn loss(triple: Triple, perf: &BTreeMap<OptimizerKind, f64>, members: &[OptimizerKind], selected: OptimizerKind) -> LossRecord {
    let best = best_set(perf, members);
    let f_star = perf[&best[0]];
    let f_a = perf[&selected];
    let precisions = members.iter().map(|a| (*a, perf[a])).collect();
    LossRecord { triple, selected, best, f_a, f_star, loss: capped_log10(f_a) - capped_log10(f_star), precisions }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Mean loss of always running each member.
pub fn algorithm_losses(table: &PerfTable, members: &[OptimizerKind]) -> BTreeMap<OptimizerKind, f64> {
    members
        .iter()
        .map(|&a| (a, mean(table.iter().map(|(t, row)| loss(*t, row, members, a).loss))))
        .collect()
}

/// Single best member by mean loss (first in order on ties) and its loss.
pub fn single_best(table: &PerfTable, members: &[OptimizerKind]) -> (OptimizerKind, f64) {
    let per = algorithm_losses(table, members);
    let mut best: Option<(OptimizerKind, f64)> = None;
    for (a, l) in per {
        if best.is_none_or(|(_, b)| l < b) {
            best = Some((a, l));
        }
    }
    best.expect("non-empty portfolio")
}

/// Fraction of the single-best to virtual-best gap closed. When the single
/// best already has zero loss the gap is empty: a zero-loss selector scores
/// 1 and any other selector negative infinity.
pub fn gap_closed(sbs_loss: f64, selector_loss: f64) -> f64 {
    if sbs_loss == 0.0 {
        return if selector_loss == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    ((sbs_loss - selector_loss) / sbs_loss).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub labels: Vec<OptimizerKind>,
    /// Rows are the true best, columns the selected member.
    pub cells: Vec<Vec<usize>>,
    pub excluded: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.cells.iter().flatten().sum()
    }
}

/// A run is left out when more than one member other than the selected
/// one shares the best value. Otherwise its row is the selected member if
/// that is among the best, else the unique best.
pub fn confusion(records: &[LossRecord], members: &[OptimizerKind]) -> ConfusionMatrix {
    let mut labels = members.to_vec();
    labels.sort();
    let idx = |a: OptimizerKind| labels.iter().position(|l| *l == a).unwrap();
    let mut cells = vec![vec![0; labels.len()]; labels.len()];
    let mut excluded = 0;
    for r in records {
        let others: Vec<OptimizerKind> = r.best.iter().copied().filter(|a| *a != r.selected).collect();
        if others.len() > 1 {
            excluded += 1;
            continue;
        }
        let truth = if r.best.contains(&r.selected) { r.selected } else { others[0] };
        cells[idx(truth)][idx(r.selected)] += 1;
    }
    ConfusionMatrix { labels, cells, excluded }
}

/// Per member and budget: runs where it is (tied) best, and where it is
/// selected.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Counts {
    pub best: BTreeMap<OptimizerKind, BTreeMap<usize, usize>>,
    pub selected: BTreeMap<OptimizerKind, BTreeMap<usize, usize>>,
}

pub fn counts(by_budget: &BTreeMap<usize, Vec<LossRecord>>, members: &[OptimizerKind]) -> Counts {
    let mut c = Counts::default();
    for a in members {
        for b in by_budget.keys() {
            c.best.entry(*a).or_default().insert(*b, 0);
            c.selected.entry(*a).or_default().insert(*b, 0);
        }
    }
    for (b, recs) in by_budget {
        for r in recs {
            for a in &r.best {
                *c.best.get_mut(a).unwrap().get_mut(b).unwrap() += 1;
            }
            *c.selected.get_mut(&r.selected).unwrap().get_mut(b).unwrap() += 1;
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub subset: String,
    pub budget: usize,
    pub sbs: OptimizerKind,
    pub sbs_loss: f64,
    pub selector_loss: f64,
    pub vbs_loss: f64,
    pub gap_closed: f64,
    pub algorithm_losses: BTreeMap<OptimizerKind, f64>,
}

pub struct SubsetResult {
    pub subset: Subset,
    pub records: BTreeMap<usize, Vec<LossRecord>>,
    pub baselines: Vec<Baseline>,
    pub confusion: BTreeMap<usize, ConfusionMatrix>,
    pub counts: Counts,
}

/// Selection and evaluation for one portfolio subset. Predictions of
/// excluded members are simply ignored.
pub fn evaluate_subset(
    subset: &Subset,
    preds: &BTreeMap<usize, PerfTable>,
    perf: &Performance,
    budgets: &[usize],
) -> Result<SubsetResult> {
    let members = &subset.members;
    let mut records = BTreeMap::new();
    let mut baselines = Vec::new();
    let mut confusions = BTreeMap::new();
    for &b in budgets {
        let table = perf.get(&b).ok_or_else(|| PipelineError::MissingRuns(vec![format!("budget {b}")]))?;
        let ptable = preds.get(&b).ok_or_else(|| PipelineError::MissingPrediction {
            run: format!("budget {b}"),
            algorithm: "any".into(),
        })?;
        let empty = BTreeMap::new();
        let recs: Vec<LossRecord> = table
            .iter()
            .map(|(t, row)| {
                let sel = select(ptable.get(t).unwrap_or(&empty), members, &t.to_string())?;
                Ok(loss(*t, row, members, sel))
            })
            .collect::<Result<_>>()?;
        let (sbs, sbs_loss) = single_best(table, members);
        let selector_loss = mean(recs.iter().map(|r| r.loss));
        let vbs_loss = mean(table.iter().map(|(t, row)| loss(*t, row, members, best_set(row, members)[0]).loss));
        baselines.push(Baseline {
            subset: subset.name.clone(),
            budget: b,
            sbs,
            sbs_loss,
            selector_loss,
            vbs_loss,
            gap_closed: gap_closed(sbs_loss, selector_loss),
            algorithm_losses: algorithm_losses(table, members),
        });
        confusions.insert(b, confusion(&recs, members));
        records.insert(b, recs);
    }
    let counts = counts(&records, members);
    Ok(SubsetResult { subset: subset.clone(), records, baselines, confusion: confusions, counts })
}

pub fn evaluate(cfg: &ProtocolConfig, preds: &BTreeMap<usize, PerfTable>, perf: &Performance) -> Result<Vec<SubsetResult>> {
    cfg.subsets().iter().map(|s| evaluate_subset(s, preds, perf, &cfg.a2_budgets)).collect()
}

fn names(v: &[OptimizerKind]) -> String {
    v.iter().map(|a| a.name()).collect::<Vec<_>>().join("|")
}

pub fn write_outputs(out: &Path, budgets: &[usize], results: &[SubsetResult]) -> Result<()> {
    let root = out.join(SELECT_DIR);
    let mut base_rows = Vec::new();
    for r in results {
        let dir = root.join(&r.subset.name);
        let members = &r.subset.members;
        for (b, recs) in &r.records {
            let mut header: Vec<String> =
                ["function", "instance", "rep", "selected", "best", "F_A", "F_Astar", "loss"].map(String::from).to_vec();
            header.extend(members.iter().map(|a| format!("loss_{a}")));
            let rows = recs.iter().map(|rec| {
                let mut v = vec![
                    rec.triple.function.to_string(),
                    rec.triple.instance.to_string(),
                    rec.triple.rep.to_string(),
                    rec.selected.name().to_string(),
                    names(&rec.best),
                    format!("{:e}", rec.f_a),
                    format!("{:e}", rec.f_star),
                    rec.loss.to_string(),
                ];
                v.extend(members.iter().map(|a| rec.loss_of(*a).to_string()));
                v
            });
            csvio::write(&dir.join(format!("losses_{b}.csv")), &header, rows)?;

            let cm = &r.confusion[b];
            let mut header = vec!["best\\selected".to_string()];
            header.extend(cm.labels.iter().map(|a| a.name().to_string()));
            header.push("total".into());
            let mut rows: Vec<Vec<String>> = cm
                .labels
                .iter()
                .zip(&cm.cells)
                .map(|(a, row)| {
                    let mut v = vec![a.name().to_string()];
                    v.extend(row.iter().map(|c| c.to_string()));
                    v.push(row.iter().sum::<usize>().to_string());
                    v
                })
                .collect();
            let mut totals = vec!["total".to_string()];
            totals.extend((0..cm.labels.len()).map(|j| cm.cells.iter().map(|row| row[j]).sum::<usize>().to_string()));
            totals.push(cm.total().to_string());
            rows.push(totals);
            let mut ex = vec!["excluded".to_string()];
            ex.extend(std::iter::repeat_n(String::new(), cm.labels.len()));
            ex.push(cm.excluded.to_string());
            rows.push(ex);
            csvio::write(&dir.join(format!("confusion_{b}.csv")), &header, rows)?;
        }
        for (name, table) in [("counts_best.csv", &r.counts.best), ("counts_selected.csv", &r.counts.selected)] {
            let mut header = vec!["algorithm".to_string()];
            header.extend(budgets.iter().map(|b| b.to_string()));
            let rows = table.iter().map(|(a, m)| {
                let mut v = vec![a.name().to_string()];
                v.extend(budgets.iter().map(|b| m[b].to_string()));
                v
            });
            csvio::write(&dir.join(name), &header, rows)?;
        }
        for bl in &r.baselines {
            base_rows.push(vec![
                bl.subset.clone(),
                bl.budget.to_string(),
                bl.sbs.name().to_string(),
                bl.sbs_loss.to_string(),
                bl.selector_loss.to_string(),
                bl.vbs_loss.to_string(),
                bl.gap_closed.to_string(),
                (bl.selector_loss / bl.sbs_loss).to_string(),
            ]);
        }
    }
    let header = ["subset", "budget", "sbs", "sbs_loss", "selector_loss", "vbs_loss", "gap_closed", "selector_to_sbs"]
        .map(String::from);
    csvio::write(&root.join(BASELINES_FILE), &header, base_rows)
}
