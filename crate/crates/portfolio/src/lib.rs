//! Optimizer portfolio behind one budget-counted, seeded interface.
//!
//! Every optimizer runs until its evaluation budget is spent, so each
//! [`RunTrace`] holds exactly `budget` samples. Budget exhaustion surfaces as
//! [`trajsel_bbob::BbobError::BudgetExhausted`] from the evaluator and simply
//! ends the run.

pub mod bfgs;
pub mod cmaes;
pub mod de;
pub mod linalg;
pub mod mlsl;
pub mod pso;
mod trace;
pub mod warmstart;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trajsel_bbob::{BbobError, Evaluator, ProblemInstance};

pub use trace::{RunMeta, RunTrace};
pub use warmstart::{capture, warm_start, SwitchState, WarmStartSpec};

/// Seeded generator used by every optimizer.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PortfolioError {
    #[error("unknown optimizer '{0}'")]
    UnknownOptimizer(String),
    #[error("budget must be positive")]
    EmptyBudget,
    #[error("warm start for {spec} cannot initialize {kind}")]
    WarmStartMismatch { spec: OptimizerKind, kind: OptimizerKind },
    #[error("cannot capture a switch state from an empty trace")]
    EmptyTrace,
    #[error("warm-start dimension {got} does not match problem dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error(transparent)]
    Problem(#[from] BbobError),
}

/// The five portfolio members, declared in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerKind {
    Bfgs,
    Cmaes,
    De,
    Mlsl,
    Pso,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Bfgs,
        OptimizerKind::Cmaes,
        OptimizerKind::De,
        OptimizerKind::Mlsl,
        OptimizerKind::Pso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Bfgs => "BFGS",
            OptimizerKind::Cmaes => "CMAES",
            OptimizerKind::De => "DE",
            OptimizerKind::Mlsl => "MLSL",
            OptimizerKind::Pso => "PSO",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = PortfolioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "").as_str() {
            "BFGS" => Ok(OptimizerKind::Bfgs),
            "CMAES" => Ok(OptimizerKind::Cmaes),
            "DE" => Ok(OptimizerKind::De),
            "MLSL" => Ok(OptimizerKind::Mlsl),
            "PSO" => Ok(OptimizerKind::Pso),
            _ => Err(PortfolioError::UnknownOptimizer(s.to_string())),
        }
    }
}

/// Outcome of an optimizer loop: `Err` only ever carries budget exhaustion
/// or a dimension error from the evaluator.
pub(crate) type Step<T> = Result<T, BbobError>;

/// Clamps every coordinate to the search box.
pub fn saturate(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(trajsel_bbob::LOWER_BOUND, trajsel_bbob::UPPER_BOUND);
    }
}

pub(crate) fn finish(result: Step<()>) -> Result<(), PortfolioError> {
    match result {
        Ok(()) | Err(BbobError::BudgetExhausted(_)) => Ok(()),
        Err(e) => Err(e.into()),
    }
}

/// Runs `kind` on `problem` for exactly `budget` evaluations.
///
/// The run is deterministic for fixed `(kind, problem, seed, init)`.
pub fn run(
    kind: OptimizerKind,
    problem: &ProblemInstance,
    budget: usize,
    seed: u64,
    init: Option<&WarmStartSpec>,
) -> Result<RunTrace, PortfolioError> {
    if budget == 0 {
        return Err(PortfolioError::EmptyBudget);
    }
    if let Some(spec) = init {
        if spec.kind != kind {
            return Err(PortfolioError::WarmStartMismatch {
                spec: spec.kind,
                kind,
            });
        }
        if spec.initial_center.len() != problem.dimension() {
            return Err(PortfolioError::DimensionMismatch {
                got: spec.initial_center.len(),
                want: problem.dimension(),
            });
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut ev = Evaluator::new(problem, budget);
    let outcome = match kind {
        OptimizerKind::Cmaes => {
            let mut es = match init {
                Some(spec) => cmaes::Cmaes::warm(&spec.initial_center, cmaes::DEFAULT_SIGMA),
                None => cmaes::Cmaes::cold(problem.dimension(), &mut rng),
            };
            es.run(&mut ev, &mut rng)
        }
        OptimizerKind::De => de::DifferentialEvolution::default().run(&mut ev, &mut rng, init),
        OptimizerKind::Pso => pso::ParticleSwarm::default().run(&mut ev, &mut rng, init),
        OptimizerKind::Mlsl => mlsl::Mlsl::default().run(&mut ev, &mut rng, init),
        OptimizerKind::Bfgs => {
            let dim = problem.dimension();
            let (x0, h0) = match init {
                Some(spec) => (
                    spec.initial_center.clone(),
                    spec.inverse_hessian
                        .clone()
                        .unwrap_or_else(|| nalgebra::DMatrix::identity(dim, dim)),
                ),
                None => (vec![0.0; dim], nalgebra::DMatrix::identity(dim, dim)),
            };
            bfgs::Bfgs::default().run_to_budget(&mut ev, &x0, h0)
        }
    };
    finish(outcome)?;
    let meta = RunMeta {
        function: problem.id().function_id,
        instance: problem.id().instance_id,
        dim: problem.dimension(),
        algorithm: kind,
        seed,
        phase_boundary: 0,
    };
    Ok(RunTrace::new(meta, ev.into_trace()))
}

/// Runs the first-phase CMA-ES and returns its trace together with the final
/// strategy state, as needed to warm-start a second algorithm.
pub fn run_first_phase(
    problem: &ProblemInstance,
    budget: usize,
    seed: u64,
) -> Result<(RunTrace, cmaes::CmaState), PortfolioError> {
    if budget == 0 {
        return Err(PortfolioError::EmptyBudget);
    }
    let mut rng = rng_from_seed(seed);
    let mut ev = Evaluator::new(problem, budget);
    let mut es = cmaes::Cmaes::cold(problem.dimension(), &mut rng);
    finish(es.run(&mut ev, &mut rng))?;
    let meta = RunMeta {
        function: problem.id().function_id,
        instance: problem.id().instance_id,
        dim: problem.dimension(),
        algorithm: OptimizerKind::Cmaes,
        seed,
        phase_boundary: budget,
    };
    Ok((RunTrace::new(meta, ev.into_trace()), es.into_state()))
}

/// First-phase budget: `multiplier * dim` rounded up to a whole number of
/// CMA-ES generations.
pub fn first_phase_budget(multiplier: usize, dim: usize) -> usize {
    let lambda = cmaes::default_population_size(dim);
    (multiplier * dim).div_ceil(lambda) * lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in OptimizerKind::ALL {
            assert_eq!(k.name().parse::<OptimizerKind>().unwrap(), k);
        }
        assert_eq!("cma-es".parse::<OptimizerKind>().unwrap(), OptimizerKind::Cmaes);
        assert!("NM".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn first_phase_budget_rounds_to_generations() {
        assert_eq!(first_phase_budget(30, 5), 152);
        assert_eq!(first_phase_budget(30, 2), 60);
    }
}
