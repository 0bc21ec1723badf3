//! Regression trees and random forests with leave-one-group-out evaluation
//! and grid search.

mod cv;
mod forest;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cv::{
    grid_search, inner_folds, logo_folds, r2, CvReport, Dataset, Fold, GridPoint, HyperGrid, R2,
};
pub use forest::{fit_forest, ForestParams, RandomForest};
pub use tree::{fit_tree, Node, Tree, TreeParams};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ForestError {
    #[error("max_depth must be at least 1")]
    ZeroDepth,
    #[error("min_samples_split must be at least 2")]
    BadMinSamplesSplit,
    #[error("n_estimators must be positive")]
    NoTrees,
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("poisson criterion needs non-negative targets")]
    NegativePoissonTarget,
    #[error("rows and targets differ in length ({rows} vs {targets})")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("group labels {found:?} do not match the expected {expected:?}")]
    GroupMismatch { found: Vec<usize>, expected: Vec<usize> },
    #[error("no usable grid point")]
    EmptyGrid,
    #[error("unknown {what} '{value}'")]
    Parse { what: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    SquaredError,
    AbsoluteError,
    Poisson,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::SquaredError => "squared_error",
            Criterion::AbsoluteError => "absolute_error",
            Criterion::Poisson => "poisson",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = ForestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "squared_error" | "se" | "mse" => Ok(Criterion::SquaredError),
            "absolute_error" | "ae" | "mae" => Ok(Criterion::AbsoluteError),
            "poisson" => Ok(Criterion::Poisson),
            _ => Err(ForestError::Parse { what: "criterion", value: s.into() }),
        }
    }
}

/// Features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    pub fn count(self, p: usize) -> usize {
        let n = match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => (p as f64).sqrt().ceil() as usize,
            MaxFeatures::Log2 => (p as f64).log2().ceil() as usize,
        };
        n.clamp(1, p.max(1))
    }

    pub fn name(self) -> &'static str {
        match self {
            MaxFeatures::All => "all",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaxFeatures {
    type Err = ForestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" | "auto" | "none" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            _ => Err(ForestError::Parse { what: "max_features", value: s.into() }),
        }
    }
}

/// SplitMix64 finalizer; used to derive independent seeds from a base seed
/// and a salt.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_features_counts() {
        assert_eq!(MaxFeatures::All.count(46), 46);
        assert_eq!(MaxFeatures::Sqrt.count(46), 7);
        assert_eq!(MaxFeatures::Log2.count(46), 6);
        assert_eq!(MaxFeatures::Sqrt.count(1), 1);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
    }

    #[test]
    fn parse_names() {
        for c in [Criterion::SquaredError, Criterion::AbsoluteError, Criterion::Poisson] {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
        }
        for m in [MaxFeatures::All, MaxFeatures::Sqrt, MaxFeatures::Log2] {
            assert_eq!(m.name().parse::<MaxFeatures>().unwrap(), m);
        }
        assert!("gini".parse::<Criterion>().is_err());
    }

    #[test]
    fn mixed_seeds_differ() {
        assert_ne!(mix_seed(1, 0), mix_seed(1, 1));
        assert_ne!(mix_seed(0, 1), mix_seed(1, 0));
        assert_eq!(mix_seed(7, 3), mix_seed(7, 3));
    }
}
