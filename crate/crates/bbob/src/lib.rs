//! Noiseless BBOB benchmark suite.
//!
//! All 24 functions are available for any dimension >= 2. Instances are
//! generated from `(function_id, instance_id)` exactly like the COCO reference
//! code, so optimum locations and values agree with published data.

mod functions;
pub mod legacy;

use functions::Landscape;
use std::fmt;
use std::sync::Arc;

/// Lower bound of the search box in every coordinate.
pub const LOWER_BOUND: f64 = -5.0;
/// Upper bound of the search box in every coordinate.
pub const UPPER_BOUND: f64 = 5.0;

pub const NUM_FUNCTIONS: usize = 24;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BbobError {
    #[error("function id {0} outside 1..=24")]
    InvalidFunction(usize),
    #[error("instance id must be >= 1")]
    InvalidInstance,
    #[error("dimension {0} not supported (need >= 2)")]
    InvalidDimension(usize),
    #[error("point has {got} coordinates, problem has {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProblemId {
    pub function_id: usize,
    pub instance_id: usize,
    pub dimension: usize,
}

impl ProblemId {
    pub fn new(function_id: usize, instance_id: usize, dimension: usize) -> Self {
        Self {
            function_id,
            instance_id,
            dimension,
        }
    }

    fn validate(&self) -> Result<(), BbobError> {
        if !(1..=NUM_FUNCTIONS).contains(&self.function_id) {
            return Err(BbobError::InvalidFunction(self.function_id));
        }
        if self.instance_id < 1 {
            return Err(BbobError::InvalidInstance);
        }
        // the legacy rotation buffer holds fewer than 2000 entries
        if self.dimension < 2 || self.dimension * self.dimension >= 2000 {
            return Err(BbobError::InvalidDimension(self.dimension));
        }
        Ok(())
    }

    /// Seed used by the reference code for the instance transformations.
    pub fn transform_seed(&self) -> i64 {
        let base = match self.function_id {
            4 => 3,
            18 => 17,
            f => f as i64,
        };
        base + 10_000 * self.instance_id as i64
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "f{}_i{}_d{}",
            self.function_id, self.instance_id, self.dimension
        )
    }
}

/// An instantiated, immutable benchmark problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    id: ProblemId,
    x_opt: Vec<f64>,
    f_opt: f64,
    landscape: Arc<Landscape>,
}

impl ProblemInstance {
    pub fn new(id: ProblemId) -> Result<Self, BbobError> {
        id.validate()?;
        let built = Landscape::build(id.function_id, id.dimension, id.transform_seed());
        Ok(Self {
            id,
            x_opt: built.x_opt,
            f_opt: legacy::fopt(id.function_id, id.instance_id),
            landscape: Arc::new(built.landscape),
        })
    }

    pub fn id(&self) -> ProblemId {
        self.id
    }

    pub fn dimension(&self) -> usize {
        self.id.dimension
    }

    pub fn x_opt(&self) -> &[f64] {
        &self.x_opt
    }

    pub fn f_opt(&self) -> f64 {
        self.f_opt
    }

    pub fn transform_seed(&self) -> i64 {
        self.id.transform_seed()
    }

    /// Objective value without any budget accounting.
    pub fn value(&self, x: &[f64]) -> Result<f64, BbobError> {
        if x.len() != self.id.dimension {
            return Err(BbobError::DimensionMismatch {
                got: x.len(),
                want: self.id.dimension,
            });
        }
        Ok(self.landscape.value(x, &self.x_opt) + self.f_opt)
    }

    /// Non-negative distance of `f_value` to the optimum value.
    pub fn target_precision(&self, f_value: f64) -> f64 {
        target_precision(f_value, self.f_opt)
    }
}

/// `max(f_value - f_opt, 0)`; round-off below the optimum clamps to zero.
pub fn target_precision(f_value: f64, f_opt: f64) -> f64 {
    (f_value - f_opt).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationBudget {
    used: usize,
    limit: usize,
}

impl EvaluationBudget {
    pub fn new(limit: usize) -> Self {
        Self { used: 0, limit }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.limit
    }

    fn consume(&mut self) -> Result<(), BbobError> {
        if self.used >= self.limit {
            return Err(BbobError::BudgetExhausted(self.limit));
        }
        self.used += 1;
        Ok(())
    }
}

/// One evaluated point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Budget-counted evaluation with a full log of every evaluated point.
///
/// The evaluator is confined to one run; the problem it refers to may be
/// shared between threads.
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: &'a ProblemInstance,
    budget: EvaluationBudget,
    trace: Vec<Sample>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a ProblemInstance, limit: usize) -> Self {
        Self {
            problem,
            budget: EvaluationBudget::new(limit),
            trace: Vec::with_capacity(limit),
        }
    }

    pub fn problem(&self) -> &ProblemInstance {
        self.problem
    }

    pub fn budget(&self) -> EvaluationBudget {
        self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget.remaining()
    }

    pub fn is_exhausted(&self) -> bool {
        self.budget.is_exhausted()
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, BbobError> {
        if x.len() != self.problem.dimension() {
            return Err(BbobError::DimensionMismatch {
                got: x.len(),
                want: self.problem.dimension(),
            });
        }
        self.budget.consume()?;
        let y = self.problem.value(x)?;
        self.trace.push(Sample { x: x.to_vec(), y });
        Ok(y)
    }

    pub fn trace(&self) -> &[Sample] {
        &self.trace
    }

    /// Lowest value seen so far, if any.
    pub fn best(&self) -> Option<&Sample> {
        self.trace.iter().min_by(|a, b| a.y.total_cmp(&b.y))
    }

    pub fn into_trace(self) -> Vec<Sample> {
        self.trace
    }
}
