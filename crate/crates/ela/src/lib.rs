//! Exploratory landscape analysis features computed from an existing sample
//! set, without further function evaluations.
//!
//! Six groups are provided: `ela_distr`, `ela_meta`, `disp`, `ic`, `nbc` and
//! `pca`. Feature names and definitions follow the widely used `flacco`
//! conventions so that values can be compared with that family of tools.

pub mod groups;
mod stats;

pub use stats::{mean, median, pearson, quantile, sd};

/// Bumped whenever a name, the order, or a definition changes.
pub const SCHEMA_VERSION: &str = "ela46-v1";

/// Samples used per trajectory by default.
pub const DEFAULT_SAMPLE_BUDGET: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fallback {
    Zero,
    One,
}

use Fallback::{One, Zero};

const SCHEMA: [(&str, Fallback); 46] = [
    ("ela_distr.skewness", Zero),
    ("ela_distr.kurtosis", Zero),
    ("ela_distr.number_of_peaks", One),
    ("ela_meta.lin_simple.adj_r2", Zero),
    ("ela_meta.lin_simple.intercept", Zero),
    ("ela_meta.lin_simple.coef.min", Zero),
    ("ela_meta.lin_simple.coef.max", Zero),
    ("ela_meta.lin_simple.coef.max_by_min", One),
    ("ela_meta.lin_w_interact.adj_r2", Zero),
    ("ela_meta.quad_simple.adj_r2", Zero),
    ("ela_meta.quad_simple.cond", One),
    ("ela_meta.quad_w_interact.adj_r2", Zero),
    ("disp.ratio_mean_02", One),
    ("disp.ratio_mean_05", One),
    ("disp.ratio_mean_10", One),
    ("disp.ratio_mean_25", One),
    ("disp.ratio_median_02", One),
    ("disp.ratio_median_05", One),
    ("disp.ratio_median_10", One),
    ("disp.ratio_median_25", One),
    ("disp.diff_mean_02", Zero),
    ("disp.diff_mean_05", Zero),
    ("disp.diff_mean_10", Zero),
    ("disp.diff_mean_25", Zero),
    ("disp.diff_median_02", Zero),
    ("disp.diff_median_05", Zero),
    ("disp.diff_median_10", Zero),
    ("disp.diff_median_25", Zero),
    ("ic.h_max", Zero),
    ("ic.eps_s", Zero),
    ("ic.eps_max", Zero),
    ("ic.eps_ratio", Zero),
    ("ic.m0", Zero),
    ("nbc.nn_nb.sd_ratio", One),
    ("nbc.nn_nb.mean_ratio", One),
    ("nbc.nn_nb.cor", Zero),
    ("nbc.dist_ratio.coeff_var", Zero),
    ("nbc.nb_fitness.cor", Zero),
    ("pca.expl_var.cov_x", One),
    ("pca.expl_var.cor_x", One),
    ("pca.expl_var.cov_init", One),
    ("pca.expl_var.cor_init", One),
    ("pca.expl_var_PC1.cov_x", One),
    ("pca.expl_var_PC1.cor_x", One),
    ("pca.expl_var_PC1.cov_init", One),
    ("pca.expl_var_PC1.cor_init", One),
];

/// Ordered feature names.
pub fn feature_schema() -> Vec<&'static str> {
    SCHEMA.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ElaError {
    #[error("{n} samples in dimension {dim}; need at least {}", dim + 2)]
    TooFewSamples { n: usize, dim: usize },
    #[error("row {row} has {got} coordinates, expected {want}")]
    RaggedRow { row: usize, got: usize, want: usize },
    #[error("x and y lengths differ ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
}

/// Evaluated points `X` (rows) with values `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl SampleSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, ElaError> {
        if x.len() != y.len() {
            return Err(ElaError::LengthMismatch { x: x.len(), y: y.len() });
        }
        let dim = x.first().map_or(0, Vec::len);
        if x.len() < dim + 2 || dim == 0 {
            return Err(ElaError::TooFewSamples { n: x.len(), dim });
        }
        for (row, (r, v)) in x.iter().zip(&y).enumerate() {
            if r.len() != dim {
                return Err(ElaError::RaggedRow { row, got: r.len(), want: dim });
            }
            if !v.is_finite() || r.iter().any(|c| !c.is_finite()) {
                return Err(ElaError::NonFinite(row));
            }
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }
}

/// Feature values in schema order; `imputed[i]` marks values that were
/// undefined and replaced by the fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub imputed: Vec<bool>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        SCHEMA.iter().position(|(n, _)| *n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Names of imputed features.
    pub fn imputed_names(&self) -> Vec<&'static str> {
        SCHEMA
            .iter()
            .zip(&self.imputed)
            .filter(|(_, f)| **f)
            .map(|((n, _), _)| *n)
            .collect()
    }
}

/// All features before imputation.
pub fn raw_features(s: &SampleSet) -> Vec<f64> {
    let mut v = groups::distribution(s);
    v.extend(groups::meta(s));
    v.extend(groups::dispersion(s));
    v.extend(groups::information_content(s));
    v.extend(groups::nearest_better(s));
    v.extend(groups::pca(s));
    debug_assert_eq!(v.len(), SCHEMA.len());
    v
}

pub fn compute_features(s: &SampleSet) -> FeatureVector {
    let raw = raw_features(s);
    let mut values = Vec::with_capacity(raw.len());
    let mut imputed = Vec::with_capacity(raw.len());
    for (v, (_, fallback)) in raw.into_iter().zip(SCHEMA.iter()) {
        if v.is_finite() {
            values.push(v);
            imputed.push(false);
        } else {
            values.push(match fallback {
                Zero => 0.0,
                One => 1.0,
            });
            imputed.push(true);
        }
    }
    FeatureVector { values, imputed }
}
