//! Global-best particle swarm with clipped velocities.

use rand::Rng as _;
use trajsel_bbob::{Evaluator, LOWER_BOUND, UPPER_BOUND};

use crate::warmstart::WarmStartSpec;
use crate::{saturate, Rng, Step};

pub const DEFAULT_SWARM_SIZE: usize = 40;

#[derive(Debug, Clone)]
pub struct ParticleSwarm {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-coordinate velocity bound.
    pub v_max: f64,
}

impl Default for ParticleSwarm {
    fn default() -> Self {
        Self {
            swarm_size: DEFAULT_SWARM_SIZE,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            v_max: 0.2 * (UPPER_BOUND - LOWER_BOUND),
        }
    }
}

/// Largest velocity component seen during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsoStats {
    pub max_speed: f64,
}

impl ParticleSwarm {
    pub fn run(&self, ev: &mut Evaluator<'_>, rng: &mut Rng, init: Option<&WarmStartSpec>) -> Step<()> {
        self.run_with_stats(ev, rng, init, &mut PsoStats::default())
    }

    pub fn run_with_stats(
        &self,
        ev: &mut Evaluator<'_>,
        rng: &mut Rng,
        init: Option<&WarmStartSpec>,
        stats: &mut PsoStats,
    ) -> Step<()> {
        let dim = ev.problem().dimension();
        let warm = init.and_then(|s| s.initial_population.clone());
        let (mut pos, mut vel) = match warm {
            Some(p) => {
                let v = vec![vec![0.0; dim]; p.len()];
                (p, v)
            }
            None => {
                let n = self.swarm_size;
                let p = (0..n)
                    .map(|_| (0..dim).map(|_| rng.random_range(LOWER_BOUND..UPPER_BOUND)).collect())
                    .collect();
                let v = (0..n)
                    .map(|_| (0..dim).map(|_| rng.random_range(-self.v_max..self.v_max)).collect())
                    .collect();
                (p, v)
            }
        };
        for v in vel.iter().flatten() {
            stats.max_speed = stats.max_speed.max(v.abs());
        }
        let n = pos.len();
        let mut best_pos = pos.clone();
        let mut best_val = Vec::with_capacity(n);
        for x in &pos {
            best_val.push(ev.evaluate(x)?);
        }
        let mut g = argmin(&best_val);
        loop {
            let g_pos = best_pos[g].clone();
            for i in 0..n {
                for j in 0..dim {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let v = self.inertia * vel[i][j]
                        + self.cognitive * r1 * (best_pos[i][j] - pos[i][j])
                        + self.social * r2 * (g_pos[j] - pos[i][j]);
                    vel[i][j] = v.clamp(-self.v_max, self.v_max);
                    stats.max_speed = stats.max_speed.max(vel[i][j].abs());
                    pos[i][j] += vel[i][j];
                }
                saturate(&mut pos[i]);
                let f = ev.evaluate(&pos[i])?;
                if f < best_val[i] {
                    best_val[i] = f;
                    best_pos[i] = pos[i].clone();
                }
            }
            g = argmin(&best_val);
        }
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}
