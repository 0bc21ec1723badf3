//! Multi-level single linkage: uniform sampling phases, a reduced set of the
//! best samples, and BFGS local searches started only from reduced points with
//! no better sample inside the critical distance.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng as _;
use trajsel_bbob::{BbobError, Evaluator, LOWER_BOUND, UPPER_BOUND};

use crate::bfgs::Bfgs;
use crate::linalg::squared_distance;
use crate::warmstart::WarmStartSpec;
use crate::{Rng, Step};

#[derive(Debug, Clone)]
pub struct Mlsl {
    /// Uniform samples per phase, as a multiple of the dimension.
    pub batch_per_dim: usize,
    /// Fraction of the archive forming the reduced set.
    pub gamma: f64,
    /// Critical distance constant.
    pub sigma: f64,
    /// Evaluation cap for one local search, as a multiple of the dimension.
    pub local_budget_per_dim: usize,
}

impl Default for Mlsl {
    fn default() -> Self {
        Self {
            batch_per_dim: 10,
            gamma: 0.1,
            sigma: 4.0,
            local_budget_per_dim: 50,
        }
    }
}

/// Γ(1 + dim/2), exact for integer and half-integer arguments.
fn gamma_half(dim: usize) -> f64 {
    let mut v = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut a = if dim % 2 == 0 { 1.0 } else { 0.5 };
    let target = 1.0 + dim as f64 / 2.0;
    while a < target - 1e-9 {
        v *= a;
        a += 1.0;
    }
    v
}

impl Mlsl {
    /// Critical distance after `total` uniform samples in `dim` dimensions.
    pub fn critical_radius(&self, dim: usize, total: usize) -> f64 {
        let d = dim as f64;
        let kn = total as f64;
        let volume = (UPPER_BOUND - LOWER_BOUND).powf(d);
        PI.powf(-0.5) * (gamma_half(dim) * volume * self.sigma * kn.ln() / kn).powf(1.0 / d)
    }

    pub fn run(&self, ev: &mut Evaluator<'_>, rng: &mut Rng, init: Option<&WarmStartSpec>) -> Step<()> {
        self.run_logged(ev, rng, init, &mut Vec::new())
    }

    /// As [`Mlsl::run`], additionally recording every local-search start
    /// together with the critical radius in force at that time.
    pub fn run_logged(
        &self,
        ev: &mut Evaluator<'_>,
        rng: &mut Rng,
        init: Option<&WarmStartSpec>,
        starts: &mut Vec<(Vec<f64>, f64)>,
    ) -> Step<()> {
        let dim = ev.problem().dimension();
        let batch = self.batch_per_dim * dim;
        let cap = self.local_budget_per_dim * dim;
        let bfgs = Bfgs::default();
        let mut archive: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut started: Vec<bool> = Vec::new();
        let mut seed = init.map(|s| s.initial_center.clone());
        loop {
            for k in 0..batch {
                let x: Vec<f64> = match (k, seed.take()) {
                    (0, Some(x)) => x,
                    _ => (0..dim).map(|_| rng.random_range(LOWER_BOUND..UPPER_BOUND)).collect(),
                };
                let f = ev.evaluate(&x)?;
                archive.push((x, f));
                started.push(false);
            }
            let radius = self.critical_radius(dim, archive.len());
            let r2 = radius * radius;
            let mut order: Vec<usize> = (0..archive.len()).collect();
            order.sort_by(|&a, &b| archive[a].1.total_cmp(&archive[b].1));
            let keep = ((self.gamma * archive.len() as f64).ceil() as usize).max(1);
            let reduced = &order[..keep];
            for (rank, &i) in reduced.iter().enumerate() {
                if started[i] {
                    continue;
                }
                // reduced is sorted, so better points precede i
                let clustered = reduced[..rank]
                    .iter()
                    .any(|&j| archive[j].1 < archive[i].1 && squared_distance(&archive[i].0, &archive[j].0) <= r2);
                if clustered {
                    continue;
                }
                started[i] = true;
                starts.push((archive[i].0.clone(), radius));
                let mut used = 0;
                let mut f = |x: &[f64]| {
                    if used >= cap {
                        return Err(BbobError::BudgetExhausted(cap));
                    }
                    used += 1;
                    ev.evaluate(x)
                };
                let x0 = archive[i].0.clone();
                let out = bfgs.local_search(&mut f, &x0, DMatrix::identity(dim, dim));
                if let Err(e) = out {
                    if ev.is_exhausted() || !matches!(e, BbobError::BudgetExhausted(_)) {
                        return Err(e);
                    }
                }
            }
        }
    }
}
