//! Flat `key = value` protocol configuration.
//!
//! Lists accept comma-separated items and inclusive ranges (`1-24`). Lines
//! starting with `#` are comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use trajsel_forest::{Criterion, HyperGrid, MaxFeatures};
use trajsel_portfolio::{first_phase_budget, OptimizerKind};

use crate::error::{io_err, PipelineError, Result};
use crate::plan::{ModelKey, RunKey, TargetType, Triple};

pub const KEYS: [&str; 17] = [
    "dimension",
    "functions",
    "instances",
    "repetitions",
    "portfolio",
    "a1_multiplier",
    "feature_budget",
    "a2_budgets",
    "seed",
    "jobs",
    "out",
    "exclude",
    "n_estimators",
    "max_features",
    "max_depth",
    "min_samples_split",
    "criterion",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub dimension: usize,
    pub functions: Vec<usize>,
    pub instances: Vec<usize>,
    pub repetitions: usize,
    pub portfolio: Vec<OptimizerKind>,
    /// First-phase budget is this times the dimension, rounded up to whole
    /// CMA-ES generations.
    pub a1_multiplier: usize,
    pub feature_budget: usize,
    pub a2_budgets: Vec<usize>,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub out: PathBuf,
    /// Portfolio members dropped in the reduced-portfolio evaluation.
    pub exclude: Vec<OptimizerKind>,
    pub grid: HyperGrid,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            dimension: 5,
            functions: (1..=24).collect(),
            instances: (1..=5).collect(),
            repetitions: 10,
            portfolio: OptimizerKind::ALL.to_vec(),
            a1_multiplier: 30,
            feature_budget: 150,
            a2_budgets: vec![100, 200, 300, 500, 700, 900],
            seed: 1,
            jobs: 0,
            out: PathBuf::from("results"),
            exclude: Vec::new(),
            grid: HyperGrid::default(),
        }
    }
}

impl ProtocolConfig {
    /// Six functions, two instances, three repetitions, reduced grid, and a
    /// BFGS-excluded evaluation.
    pub fn desk() -> Self {
        Self {
            functions: vec![1, 2, 3, 8, 15, 21],
            instances: vec![1, 2],
            repetitions: 3,
            exclude: vec![OptimizerKind::Bfgs],
            grid: HyperGrid::reduced(),
            ..Self::default()
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| PipelineError::ConfigSyntax {
                line: n + 1,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_text(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |msg: String| PipelineError::BadValue { key: key.to_string(), msg };
        match key {
            "dimension" => self.dimension = parse_one(value).map_err(bad)?,
            "functions" => self.functions = parse_ints(value).map_err(bad)?,
            "instances" => self.instances = parse_ints(value).map_err(bad)?,
            "repetitions" => self.repetitions = parse_one(value).map_err(bad)?,
            "portfolio" => self.portfolio = parse_kinds(value).map_err(bad)?,
            "a1_multiplier" => self.a1_multiplier = parse_one(value).map_err(bad)?,
            "feature_budget" => self.feature_budget = parse_one(value).map_err(bad)?,
            "a2_budgets" => self.a2_budgets = parse_ints(value).map_err(bad)?,
            "seed" => self.seed = parse_one(value).map_err(bad)?,
            "jobs" => self.jobs = parse_one(value).map_err(bad)?,
            "out" => self.out = PathBuf::from(value),
            "exclude" => self.exclude = parse_kinds(value).map_err(bad)?,
            "n_estimators" => self.grid.n_estimators = parse_ints(value).map_err(bad)?,
            "max_features" => self.grid.max_features = parse_list::<MaxFeatures>(value).map_err(bad)?,
            "max_depth" => {
                self.grid.max_depth = split_items(value)
                    .map(|s| match s.to_ascii_lowercase().as_str() {
                        "none" | "unbounded" => Ok(None),
                        _ => s.parse::<usize>().map(Some).map_err(|e| format!("'{s}': {e}")),
                    })
                    .collect::<std::result::Result<_, _>>()
                    .map_err(bad)?
            }
            "min_samples_split" => self.grid.min_samples_split = parse_ints(value).map_err(bad)?,
            "criterion" => self.grid.criterion = parse_list::<Criterion>(value).map_err(bad)?,
            _ => return Err(PipelineError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("dimension", self.dimension.to_string());
        put("functions", join(self.functions.iter().map(|v| v.to_string()).collect()));
        put("instances", join(self.instances.iter().map(|v| v.to_string()).collect()));
        put("repetitions", self.repetitions.to_string());
        put("portfolio", join(self.portfolio.iter().map(|k| k.name().to_string()).collect()));
        put("a1_multiplier", self.a1_multiplier.to_string());
        put("feature_budget", self.feature_budget.to_string());
        put("a2_budgets", join(self.a2_budgets.iter().map(|v| v.to_string()).collect()));
        put("seed", self.seed.to_string());
        put("jobs", self.jobs.to_string());
        put("out", self.out.display().to_string());
        put("exclude", join(self.exclude.iter().map(|k| k.name().to_string()).collect()));
        put("n_estimators", join(self.grid.n_estimators.iter().map(|v| v.to_string()).collect()));
        put("max_features", join(self.grid.max_features.iter().map(|v| v.to_string()).collect()));
        put(
            "max_depth",
            join(self.grid.max_depth.iter().map(|d| d.map_or("none".into(), |d| d.to_string())).collect()),
        );
        put("min_samples_split", join(self.grid.min_samples_split.iter().map(|v| v.to_string()).collect()));
        put("criterion", join(self.grid.criterion.iter().map(|v| v.to_string()).collect()));
        s
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Invalid(m));
        if self.dimension == 0 {
            return fail("dimension must be positive".into());
        }
        if self.functions.is_empty() || self.functions.iter().any(|f| !(1..=24).contains(f)) {
            return fail("functions must be non-empty and within 1-24".into());
        }
        if self.instances.is_empty() || has_duplicates(&self.instances) || has_duplicates(&self.functions) {
            return fail("functions and instances must be non-empty and distinct".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be positive".into());
        }
        if self.portfolio.is_empty() || has_duplicates(&self.portfolio) {
            return fail("portfolio must be non-empty and distinct".into());
        }
        if self.a2_budgets.is_empty()
            || self.a2_budgets[0] == 0
            || self.a2_budgets.windows(2).any(|w| w[0] >= w[1])
        {
            return fail("a2_budgets must be positive and strictly increasing".into());
        }
        if self.feature_budget > self.a1_budget() {
            return fail(format!(
                "feature_budget {} exceeds the first-phase budget {}",
                self.feature_budget,
                self.a1_budget()
            ));
        }
        if self.feature_budget < self.dimension + 2 {
            return fail(format!("feature_budget must be at least dimension + 2 = {}", self.dimension + 2));
        }
        if self.exclude.iter().any(|k| !self.portfolio.contains(k)) {
            return fail("exclude lists an algorithm outside the portfolio".into());
        }
        if self.exclude.len() >= self.portfolio.len() {
            return fail("exclude would leave an empty portfolio".into());
        }
        if self.grid.points().is_empty() {
            return fail("hyperparameter grid is empty".into());
        }
        Ok(())
    }

    pub fn a1_budget(&self) -> usize {
        first_phase_budget(self.a1_multiplier, self.dimension)
    }

    pub fn max_a2_budget(&self) -> usize {
        *self.a2_budgets.last().unwrap_or(&0)
    }

    /// Portfolio in tie-break order.
    pub fn sorted_portfolio(&self) -> Vec<OptimizerKind> {
        let mut p = self.portfolio.clone();
        p.sort();
        p
    }

    pub fn triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for &function in &self.functions {
            for &instance in &self.instances {
                for rep in 1..=self.repetitions {
                    out.push(Triple { function, instance, rep });
                }
            }
        }
        out.sort();
        out
    }

    pub fn run_keys(&self) -> Vec<RunKey> {
        let portfolio = self.sorted_portfolio();
        self.triples()
            .into_iter()
            .flat_map(|t| portfolio.iter().map(move |&a| RunKey::new(t, a)))
            .collect()
    }

    pub fn model_keys(&self) -> Vec<ModelKey> {
        let mut out = Vec::new();
        for algorithm in self.sorted_portfolio() {
            for &budget in &self.a2_budgets {
                for target in [TargetType::Raw, TargetType::Log10] {
                    out.push(ModelKey { algorithm, budget, target });
                }
            }
        }
        out
    }

    /// Portfolio subsets evaluated by the selector: the full portfolio, plus
    /// the reduced one when `exclude` is set.
    pub fn subsets(&self) -> Vec<Subset> {
        let mut out = vec![Subset { name: "full".into(), members: self.sorted_portfolio() }];
        if !self.exclude.is_empty() {
            let mut ex = self.exclude.clone();
            ex.sort();
            let name = format!("no_{}", ex.iter().map(|k| k.name()).collect::<Vec<_>>().join("_"));
            let members = self.sorted_portfolio().into_iter().filter(|k| !ex.contains(k)).collect();
            out.push(Subset { name, members });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subset {
    pub name: String,
    pub members: Vec<OptimizerKind>,
}

fn has_duplicates<T: Ord + Clone>(v: &[T]) -> bool {
    let mut s = v.to_vec();
    s.sort();
    s.windows(2).any(|w| w[0] == w[1])
}

fn split_items(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_one<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| format!("'{value}': {e}"))
}

fn parse_ints(value: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in split_items(value) {
        match item.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse_one(a)?, parse_one(b)?);
                if a > b {
                    return Err(format!("empty range '{item}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_one(item)?),
        }
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    split_items(value).map(parse_one).collect()
}

fn parse_kinds(value: &str) -> std::result::Result<Vec<OptimizerKind>, String> {
    parse_list(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for cfg in [ProtocolConfig::default(), ProtocolConfig::desk()] {
            assert_eq!(ProtocolConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = ProtocolConfig::desk();
        let text = cfg.to_text();
        for k in KEYS {
            assert!(text.contains(&format!("{k} = ")), "{k}");
        }
        let mut c = ProtocolConfig::default();
        assert!(matches!(c.set("nope", "1"), Err(PipelineError::UnknownKey(_))));
        c.set("functions", "1-3, 7").unwrap();
        assert_eq!(c.functions, vec![1, 2, 3, 7]);
        c.set("max_depth", "4,none").unwrap();
        assert_eq!(c.grid.max_depth, vec![Some(4), None]);
    }

    #[test]
    fn validation() {
        ProtocolConfig::default().validate().unwrap();
        ProtocolConfig::desk().validate().unwrap();
        let mut c = ProtocolConfig::default();
        c.feature_budget = 500;
        assert!(c.validate().is_err());
        let mut c = ProtocolConfig::default();
        c.a2_budgets = vec![200, 100];
        assert!(c.validate().is_err());
        let mut c = ProtocolConfig::default();
        c.exclude = OptimizerKind::ALL.to_vec();
        assert!(c.validate().is_err());
    }

    #[test]
    fn subsets() {
        let s = ProtocolConfig::desk().subsets();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].name, "no_BFGS");
        assert!(!s[1].members.contains(&OptimizerKind::Bfgs));
    }
}
