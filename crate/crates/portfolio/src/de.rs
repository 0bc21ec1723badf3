//! Differential evolution, best/1/bin with immediate replacement.

use rand::seq::index::sample;
use rand::Rng as _;
use trajsel_bbob::{Evaluator, LOWER_BOUND, UPPER_BOUND};

use crate::warmstart::WarmStartSpec;
use crate::{Rng, Step};

/// Population members per dimension.
pub const POPULATION_PER_DIM: usize = 15;

pub fn population_size(dim: usize) -> usize {
    (POPULATION_PER_DIM * dim).max(5)
}

#[derive(Debug, Clone)]
pub struct DifferentialEvolution {
    /// Differential weight F.
    pub weight: f64,
    /// Crossover rate CR.
    pub crossover: f64,
}

impl Default for DifferentialEvolution {
    fn default() -> Self {
        Self {
            weight: 0.8,
            crossover: 0.9,
        }
    }
}

/// Latin hypercube over the box, one stratum per member in each coordinate.
fn latin_hypercube(n: usize, dim: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let width = UPPER_BOUND - LOWER_BOUND;
    let mut pop = vec![vec![0.0; dim]; n];
    for j in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            strata.swap(i, rng.random_range(0..=i));
        }
        for (row, s) in pop.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            row[j] = LOWER_BOUND + width * (s as f64 + u) / n as f64;
        }
    }
    pop
}

impl DifferentialEvolution {
    pub fn run(&self, ev: &mut Evaluator<'_>, rng: &mut Rng, init: Option<&WarmStartSpec>) -> Step<()> {
        let dim = ev.problem().dimension();
        let mut pop = match init.and_then(|s| s.initial_population.clone()) {
            Some(p) => p,
            None => latin_hypercube(population_size(dim), dim, rng),
        };
        let n = pop.len();
        let mut fit = Vec::with_capacity(n);
        let mut best = 0;
        for (i, x) in pop.iter().enumerate() {
            let f = ev.evaluate(x)?;
            if f < fit.get(best).copied().unwrap_or(f64::INFINITY) {
                best = i;
            }
            fit.push(f);
        }
        loop {
            for i in 0..n {
                let trial = self.trial(&pop, best, i, rng);
                let f = ev.evaluate(&trial)?;
                if f <= fit[i] {
                    pop[i] = trial;
                    fit[i] = f;
                    if f < fit[best] {
                        best = i;
                    }
                }
            }
        }
    }

    fn trial(&self, pop: &[Vec<f64>], best: usize, i: usize, rng: &mut Rng) -> Vec<f64> {
        let dim = pop[i].len();
        // two distinct donors different from the target
        let picks = sample(rng, pop.len() - 1, 2);
        let donor = |k: usize| if k >= i { k + 1 } else { k };
        let (r0, r1) = (donor(picks.index(0)), donor(picks.index(1)));
        let fill = rng.random_range(0..dim);
        let mut trial = pop[i].clone();
        for j in 0..dim {
            if j == fill || rng.random::<f64>() < self.crossover {
                trial[j] = pop[best][j] + self.weight * (pop[r0][j] - pop[r1][j]);
            }
        }
        for v in trial.iter_mut() {
            if !(LOWER_BOUND..=UPPER_BOUND).contains(v) {
                *v = rng.random_range(LOWER_BOUND..=UPPER_BOUND);
            }
        }
        trial
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use trajsel_bbob::{ProblemId, ProblemInstance};

    #[test]
    fn population_is_fifteen_per_dimension() {
        assert_eq!(population_size(5), 75);
        assert_eq!(population_size(2), 30);
    }

    #[test]
    fn latin_hypercube_fills_every_stratum() {
        let mut rng = rng_from_seed(4);
        let pop = latin_hypercube(10, 3, &mut rng);
        for j in 0..3 {
            let mut cells: Vec<usize> = pop.iter().map(|r| ((r[j] + 5.0) as usize).min(9)).collect();
            cells.sort();
            assert_eq!(cells, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn improves_on_sphere() {
        let p = ProblemInstance::new(ProblemId::new(1, 3, 5)).unwrap();
        let mut rng = rng_from_seed(5);
        let mut ev = Evaluator::new(&p, 3000);
        let _ = DifferentialEvolution::default().run(&mut ev, &mut rng, None);
        let first = ev.trace()[..75].iter().map(|s| s.y).fold(f64::INFINITY, f64::min);
        let best = ev.best().unwrap().y;
        assert!(p.target_precision(best) < 1e-3 * p.target_precision(first));
    }
}
