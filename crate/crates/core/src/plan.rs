//! Run and model identities and the seeds derived from them.

use std::fmt;

use serde::{Deserialize, Serialize};
use trajsel_forest::mix_seed;
use trajsel_portfolio::OptimizerKind;

/// One first-phase run: every A2 algorithm of a triple continues from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub function: usize,
    pub instance: usize,
    pub rep: usize,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}_i{}_r{}", self.function, self.instance, self.rep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    pub triple: Triple,
    pub algorithm: OptimizerKind,
}

impl RunKey {
    pub fn new(triple: Triple, algorithm: OptimizerKind) -> Self {
        Self { triple, algorithm }
    }
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.triple, self.algorithm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetType {
    Raw,
    Log10,
}

impl TargetType {
    pub fn name(self) -> &'static str {
        match self {
            TargetType::Raw => "raw",
            TargetType::Log10 => "log10",
        }
    }

    pub fn transform(self, precision: f64) -> f64 {
        match self {
            TargetType::Raw => precision,
            TargetType::Log10 => capped_log10(precision),
        }
    }
}

/// Precision floor shared by log targets and losses.
pub const PRECISION_FLOOR: f64 = 1e-8;

pub fn capped_log10(precision: f64) -> f64 {
    precision.max(PRECISION_FLOOR).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelKey {
    pub algorithm: OptimizerKind,
    pub budget: usize,
    pub target: TargetType,
}

impl fmt::Display for ModelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{}", self.algorithm, self.budget, self.target.name())
    }
}

fn alg_index(a: OptimizerKind) -> u64 {
    OptimizerKind::ALL.iter().position(|k| *k == a).unwrap() as u64
}

fn chain(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(master, |s, p| mix_seed(s, *p))
}

pub fn a1_seed(master: u64, t: Triple) -> u64 {
    chain(master, &[1, t.function as u64, t.instance as u64, t.rep as u64])
}

pub fn a2_seed(master: u64, k: RunKey) -> u64 {
    let t = k.triple;
    chain(master, &[2, t.function as u64, t.instance as u64, t.rep as u64, alg_index(k.algorithm)])
}

/// Seed for drawing the warm-start population of an A2 run.
pub fn warm_seed(master: u64, k: RunKey) -> u64 {
    mix_seed(a2_seed(master, k), 0x5717C4)
}

pub fn model_seed(master: u64, k: ModelKey) -> u64 {
    let target = match k.target {
        TargetType::Raw => 0,
        TargetType::Log10 => 1,
    };
    chain(master, &[3, alg_index(k.algorithm), k.budget as u64, target])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ProtocolConfig;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_distinct_over_the_protocol() {
        let cfg = ProtocolConfig::default();
        let mut seen = HashSet::new();
        for t in cfg.triples() {
            assert!(seen.insert(a1_seed(cfg.seed, t)));
        }
        for k in cfg.run_keys() {
            assert!(seen.insert(a2_seed(cfg.seed, k)));
            assert!(seen.insert(warm_seed(cfg.seed, k)));
        }
        for k in cfg.model_keys() {
            assert!(seen.insert(model_seed(cfg.seed, k)));
        }
        let k = cfg.run_keys()[17];
        assert_eq!(a2_seed(cfg.seed, k), a2_seed(cfg.seed, k));
        assert_ne!(a2_seed(cfg.seed, k), a2_seed(cfg.seed + 1, k));
    }

    #[test]
    fn log_target_floor() {
        assert_eq!(capped_log10(1e-12), -8.0);
        assert_eq!(capped_log10(1e-3), -3.0);
        assert_eq!(TargetType::Raw.transform(0.5), 0.5);
    }
}
