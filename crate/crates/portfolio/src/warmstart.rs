//! Switch-point capture and second-phase initialization.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::cmaes::CmaState;
use crate::linalg::{nearest_spd, SPD_FLOOR};
use crate::{de, pso, rng_from_seed, saturate, OptimizerKind, PortfolioError, RunTrace};

/// Everything taken from the first phase at the switch point.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchState {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub cma_mean: Vec<f64>,
    pub cma_sigma: f64,
    pub cma_cov: DMatrix<f64>,
    /// Length of the first-phase trace.
    pub phase_boundary: usize,
    /// Identifier of the producing trace.
    pub a1_trace_ref: String,
}

impl SwitchState {
    pub fn cov_row_major(&self) -> Vec<f64> {
        let n = self.cma_cov.nrows();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.cma_cov[(i, j)])
            .collect()
    }
}

pub fn capture(trace: &RunTrace, state: &CmaState) -> Result<SwitchState, PortfolioError> {
    let k = trace.argmin().ok_or(PortfolioError::EmptyTrace)?;
    let m = &trace.meta;
    Ok(SwitchState {
        best_x: trace.samples[k].x.clone(),
        best_f: trace.samples[k].y,
        cma_mean: state.mean.clone(),
        cma_sigma: state.sigma,
        cma_cov: state.cov.clone(),
        phase_boundary: trace.len(),
        a1_trace_ref: format!("f{}_i{}_d{}_s{}", m.function, m.instance, m.dim, m.seed),
    })
}

/// Initialization handed to a second-phase optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStartSpec {
    pub kind: OptimizerKind,
    pub initial_center: Vec<f64>,
    /// Rows are population members; present for DE and PSO.
    pub initial_population: Option<Vec<Vec<f64>>>,
    /// Present for BFGS only.
    pub inverse_hessian: Option<DMatrix<f64>>,
}

/// Builds the warm start for `kind`. Population members other than the first
/// are drawn around `best_x` with spread `cma_sigma`.
pub fn warm_start(kind: OptimizerKind, s: &SwitchState, seed: u64) -> WarmStartSpec {
    let dim = s.best_x.len();
    let population = |n: usize| {
        let mut rng = rng_from_seed(seed);
        let mut rows = vec![s.best_x.clone()];
        for _ in 1..n {
            let mut x: Vec<f64> = s
                .best_x
                .iter()
                .map(|b| b + s.cma_sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            saturate(&mut x);
            rows.push(x);
        }
        for row in rows.iter_mut() {
            saturate(row);
        }
        rows
    };
    let (initial_population, inverse_hessian) = match kind {
        OptimizerKind::De => (Some(population(de::population_size(dim))), None),
        OptimizerKind::Pso => (Some(population(pso::DEFAULT_SWARM_SIZE)), None),
        OptimizerKind::Bfgs => {
            let h = &s.cma_cov * (s.cma_sigma * s.cma_sigma);
            (None, Some(nearest_spd(&h, SPD_FLOOR)))
        }
        OptimizerKind::Cmaes | OptimizerKind::Mlsl => (None, None),
    };
    WarmStartSpec {
        kind,
        initial_center: s.best_x.clone(),
        initial_population,
        inverse_hessian,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RunMeta;
    use trajsel_bbob::Sample;

    fn state(n: usize, sigma: f64) -> SwitchState {
        SwitchState {
            best_x: vec![4.9; n],
            best_f: 0.0,
            cma_mean: vec![0.0; n],
            cma_sigma: sigma,
            cma_cov: DMatrix::identity(n, n),
            phase_boundary: 152,
            a1_trace_ref: String::new(),
        }
    }

    #[test]
    fn bfgs_gets_scaled_covariance() {
        let spec = warm_start(OptimizerKind::Bfgs, &state(5, 2.0), 0);
        assert_eq!(spec.inverse_hessian.unwrap(), DMatrix::identity(5, 5) * 4.0);
        assert!(spec.initial_population.is_none());
    }

    #[test]
    fn cmaes_gets_center_only() {
        let s = state(5, 2.0);
        let spec = warm_start(OptimizerKind::Cmaes, &s, 0);
        assert_eq!(spec.initial_center, s.best_x);
        assert!(spec.inverse_hessian.is_none());
        assert!(spec.initial_population.is_none());
    }

    #[test]
    fn populations_are_seeded_and_in_bounds() {
        let s = state(5, 3.0);
        let a = warm_start(OptimizerKind::De, &s, 11);
        let b = warm_start(OptimizerKind::De, &s, 11);
        assert_eq!(a, b);
        let pop = a.initial_population.unwrap();
        assert_eq!(pop.len(), 75);
        assert_eq!(pop[0], s.best_x);
        assert!(pop.iter().flatten().all(|v| v.abs() <= 5.0));
        let p = warm_start(OptimizerKind::Pso, &s, 11).initial_population.unwrap();
        assert_eq!(p.len(), 40);
    }

    #[test]
    fn capture_takes_argmin() {
        let meta = RunMeta {
            function: 1,
            instance: 1,
            dim: 2,
            algorithm: OptimizerKind::Cmaes,
            seed: 0,
            phase_boundary: 3,
        };
        let samples = vec![
            Sample { x: vec![1.0, 1.0], y: 3.0 },
            Sample { x: vec![0.5, 0.0], y: 1.0 },
            Sample { x: vec![2.0, 0.0], y: 2.0 },
        ];
        let t = RunTrace::new(meta, samples);
        let cma = CmaState {
            mean: vec![0.0, 0.0],
            sigma: 0.5,
            cov: DMatrix::identity(2, 2),
            p_sigma: vec![0.0; 2],
            p_c: vec![0.0; 2],
            lambda: 6,
            generation: 1,
        };
        let s = capture(&t, &cma).unwrap();
        assert_eq!(s.best_x, vec![0.5, 0.0]);
        assert_eq!(s.best_f, 1.0);
        assert_eq!(s.phase_boundary, 3);
        assert_eq!(capture(&t, &cma).unwrap(), s);
        let empty = RunTrace::new(t.meta.clone(), vec![]);
        assert_eq!(capture(&empty, &cma), Err(PortfolioError::EmptyTrace));
    }
}
