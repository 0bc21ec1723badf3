use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{fit_forest, mix_seed, Criterion, ForestError, ForestParams, MaxFeatures, TreeParams};

/// Rows with their instance labels (`groups`) and repetition labels
/// (`subgroups`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub groups: Vec<usize>,
    pub subgroups: Vec<usize>,
}

impl Dataset {
    pub fn new(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        groups: Vec<usize>,
        subgroups: Vec<usize>,
    ) -> Result<Self, ForestError> {
        for len in [y.len(), groups.len(), subgroups.len()] {
            if len != x.len() {
                return Err(ForestError::LengthMismatch { rows: x.len(), targets: len });
            }
        }
        if x.is_empty() {
            return Err(ForestError::TooFewRows { need: 1, got: 0 });
        }
        Ok(Self { x, y, groups, subgroups })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn take(&self, rows: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        (rows.iter().map(|&i| self.x[i].clone()).collect(), rows.iter().map(|&i| self.y[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Held-out label (instance id for outer folds, fold index for inner ones).
    pub group: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per label in `expected`; the labels present must be exactly
/// those.
pub fn logo_folds(groups: &[usize], expected: &[usize]) -> Result<Vec<Fold>, ForestError> {
    let found: BTreeSet<usize> = groups.iter().copied().collect();
    let want: BTreeSet<usize> = expected.iter().copied().collect();
    if found != want || want.len() != expected.len() {
        return Err(ForestError::GroupMismatch {
            found: found.into_iter().collect(),
            expected: expected.to_vec(),
        });
    }
    Ok(expected
        .iter()
        .map(|&g| {
            let (test, train) = (0..groups.len()).partition(|&i| groups[i] == g);
            Fold { group: g, train, test }
        })
        .collect())
}

pub const INNER_FOLDS: usize = 4;

/// Group-aware folds over `rows` for model selection. Uses instance labels
/// when at least two are present, else repetition labels, else row position.
/// Labels are dealt round-robin into `min(k, labels)` folds.
pub fn inner_folds(data: &Dataset, rows: &[usize], k: usize) -> Vec<Fold> {
    let distinct = |labels: &[usize]| rows.iter().map(|&i| labels[i]).collect::<BTreeSet<_>>();
    let position: Vec<usize> = {
        let mut p = vec![0; data.len()];
        for (j, &i) in rows.iter().enumerate() {
            p[i] = j;
        }
        p
    };
    let labels: &[usize] = if distinct(&data.groups).len() >= 2 {
        &data.groups
    } else if distinct(&data.subgroups).len() >= 2 {
        &data.subgroups
    } else {
        &position
    };
    let values: Vec<usize> = distinct(labels).into_iter().collect();
    let k = k.min(values.len()).max(1);
    let slot = |label: usize| values.iter().position(|&v| v == label).unwrap() % k;
    (0..k)
        .map(|f| {
            let (test, train) = rows.iter().partition(|&&i| slot(labels[i]) == f);
            Fold { group: f, train, test }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R2 {
    pub value: f64,
    /// Truths were constant, so the score is undefined and reported as 0.
    pub constant_truth: bool,
}

pub fn r2(predictions: &[f64], truths: &[f64]) -> R2 {
    assert_eq!(predictions.len(), truths.len(), "r2 needs equal lengths");
    assert!(!truths.is_empty(), "r2 needs at least one value");
    let mean = truths.iter().sum::<f64>() / truths.len() as f64;
    let ss_tot: f64 = truths.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return R2 { value: 0.0, constant_truth: true };
    }
    let ss_res: f64 = predictions.iter().zip(truths).map(|(p, t)| (t - p) * (t - p)).sum();
    R2 { value: 1.0 - ss_res / ss_tot, constant_truth: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub criterion: Criterion,
}

impl GridPoint {
    pub fn params(&self) -> ForestParams {
        ForestParams {
            n_estimators: self.n_estimators,
            tree: TreeParams {
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
                criterion: self.criterion,
                max_features: self.max_features,
            },
            bootstrap: true,
        }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depth = self.max_depth.map_or("none".to_string(), |d| d.to_string());
        write!(
            f,
            "n_estimators={} max_features={} max_depth={} min_samples_split={} criterion={}",
            self.n_estimators, self.max_features, depth, self.min_samples_split, self.criterion
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub n_estimators: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_split: Vec<usize>,
    pub criterion: Vec<Criterion>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            n_estimators: vec![100, 500, 1000],
            max_features: vec![MaxFeatures::All, MaxFeatures::Sqrt, MaxFeatures::Log2],
            max_depth: vec![Some(4), Some(8), Some(15), None],
            min_samples_split: vec![2, 5, 10],
            criterion: vec![Criterion::SquaredError, Criterion::AbsoluteError, Criterion::Poisson],
        }
    }
}

impl HyperGrid {
    /// Small grid for desk-scale runs.
    pub fn reduced() -> Self {
        Self {
            n_estimators: vec![100],
            max_depth: vec![Some(8), None],
            min_samples_split: vec![2],
            criterion: vec![Criterion::SquaredError],
            ..Self::default()
        }
    }

    pub fn single(point: GridPoint) -> Self {
        Self {
            n_estimators: vec![point.n_estimators],
            max_features: vec![point.max_features],
            max_depth: vec![point.max_depth],
            min_samples_split: vec![point.min_samples_split],
            criterion: vec![point.criterion],
        }
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n_estimators in &self.n_estimators {
            for &max_features in &self.max_features {
                for &max_depth in &self.max_depth {
                    for &min_samples_split in &self.min_samples_split {
                        for &criterion in &self.criterion {
                            out.push(GridPoint {
                                n_estimators,
                                max_features,
                                max_depth,
                                min_samples_split,
                                criterion,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Held-out instance per outer fold.
    pub fold_groups: Vec<usize>,
    pub fold_r2: Vec<R2>,
    pub mean_r2: f64,
    /// Point chosen by inner CV inside each outer fold.
    pub chosen: Vec<GridPoint>,
    /// Point with the best inner score averaged over outer folds; used for
    /// the model refit on all rows.
    pub best: GridPoint,
    pub pruned_poisson: bool,
    /// Out-of-fold prediction for every row.
    pub oof: Vec<f64>,
}

/// Nested evaluation: inner group-aware CV picks a grid point per outer
/// leave-one-group-out fold, which is refit on that fold's training rows
/// and scored on the held-out instance.
pub fn grid_search(
    data: &Dataset,
    expected_groups: &[usize],
    grid: &HyperGrid,
    seed: u64,
) -> Result<CvReport, ForestError> {
    let mut points = grid.points();
    let before = points.len();
    if data.y.iter().any(|v| *v < 0.0) {
        points.retain(|p| p.criterion != Criterion::Poisson);
    }
    let pruned_poisson = points.len() < before;
    if points.is_empty() {
        return Err(ForestError::EmptyGrid);
    }
    for p in &points {
        p.params().tree.validate()?;
    }
    let outer = logo_folds(&data.groups, expected_groups)?;

    let jobs: Vec<(usize, usize)> =
        (0..outer.len()).flat_map(|o| (0..points.len()).map(move |p| (o, p))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(o, p)| {
            let inner = inner_folds(data, &outer[o].train, INNER_FOLDS);
            let base = mix_seed(mix_seed(seed, o as u64), p as u64);
            let mut total = 0.0;
            for (j, fold) in inner.iter().enumerate() {
                if fold.train.is_empty() || fold.test.is_empty() {
                    continue;
                }
                let (x, y) = data.take(&fold.train);
                let (tx, ty) = data.take(&fold.test);
                let model = fit_forest(&x, &y, &points[p].params(), mix_seed(base, j as u64))?;
                total += r2(&model.predict_many(&tx), &ty).value;
            }
            Ok(total / inner.len() as f64)
        })
        .collect::<Result<_, ForestError>>()?;
    let score = |o: usize, p: usize| scores[o * points.len() + p];

    let argmax = |f: &dyn Fn(usize) -> f64| {
        let mut best = 0;
        for p in 1..points.len() {
            if f(p) > f(best) {
                best = p;
            }
        }
        best
    };
    let chosen_idx: Vec<usize> = (0..outer.len()).map(|o| argmax(&|p| score(o, p))).collect();
    let best = points[argmax(&|p| (0..outer.len()).map(|o| score(o, p)).sum::<f64>())];

    let refits: Vec<(Vec<f64>, R2)> = outer
        .par_iter()
        .enumerate()
        .map(|(o, fold)| {
            let (x, y) = data.take(&fold.train);
            let (tx, ty) = data.take(&fold.test);
            let model = fit_forest(&x, &y, &points[chosen_idx[o]].params(), mix_seed(seed, 1 << 32 | o as u64))?;
            let pred = model.predict_many(&tx);
            let score = r2(&pred, &ty);
            Ok((pred, score))
        })
        .collect::<Result<_, ForestError>>()?;

    let mut oof = vec![f64::NAN; data.len()];
    for (fold, (pred, _)) in outer.iter().zip(&refits) {
        for (&i, v) in fold.test.iter().zip(pred) {
            oof[i] = *v;
        }
    }
    let fold_r2: Vec<R2> = refits.iter().map(|(_, s)| *s).collect();
    let mean_r2 = fold_r2.iter().map(|s| s.value).sum::<f64>() / fold_r2.len() as f64;
    Ok(CvReport {
        fold_groups: outer.iter().map(|f| f.group).collect(),
        fold_r2,
        mean_r2,
        chosen: chosen_idx.iter().map(|&i| points[i]).collect(),
        best,
        pruned_poisson,
        oof,
    })
}
