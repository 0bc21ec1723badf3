use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tree::{check_inputs, grow};
use crate::{mix_seed, ForestError, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    /// Resample rows with replacement per tree. Off only in tests.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_estimators: 100, tree: TreeParams::default(), bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
    trees: Vec<Tree>,
}

impl RandomForest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Seed used for tree `i`, both for its bootstrap and feature draws.
    pub fn tree_seed(&self, i: usize) -> u64 {
        mix_seed(self.seed, i as u64)
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest, ForestError> {
    if params.n_estimators == 0 {
        return Err(ForestError::NoTrees);
    }
    check_inputs(x, y, &params.tree)?;
    let n = y.len();
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
            let samples: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, y, samples, &params.tree, &mut rng)
        })
        .collect();
    Ok(RandomForest { params: *params, seed, n_features: x[0].len(), trees })
}
