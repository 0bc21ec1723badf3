//! (μ/μ_w, λ) CMA-ES with default strategy parameters and saturation as the
//! only boundary handling.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use trajsel_bbob::{Evaluator, LOWER_BOUND, UPPER_BOUND};

use crate::linalg::{self, SPD_FLOOR};
use crate::{saturate, Rng, Step};

/// Initial step size: a fifth of the box width.
pub const DEFAULT_SIGMA: f64 = 2.0;

pub fn default_population_size(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

/// Strategy state after the last completed generation.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaState {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub p_sigma: Vec<f64>,
    pub p_c: Vec<f64>,
    pub lambda: usize,
    pub generation: usize,
}

#[derive(Debug, Clone)]
struct Params {
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
}

impl Params {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        let lambda = default_population_size(n);
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let cs = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let cmu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let damps = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            lambda,
            mu,
            weights,
            mu_eff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cmaes {
    params: Params,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DVector<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: usize,
}

impl Cmaes {
    /// Starts at `center` (saturated into the box) with identity covariance.
    pub fn warm(center: &[f64], sigma: f64) -> Self {
        let n = center.len();
        let mut m = center.to_vec();
        saturate(&mut m);
        Self {
            params: Params::new(n),
            mean: DVector::from_vec(m),
            sigma,
            cov: DMatrix::identity(n, n),
            b: DMatrix::identity(n, n),
            d: DVector::from_element(n, 1.0),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
        }
    }

    /// Starts at a uniformly drawn point of the box.
    pub fn cold(dim: usize, rng: &mut Rng) -> Self {
        let center: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(LOWER_BOUND..UPPER_BOUND))
            .collect();
        Self::warm(&center, DEFAULT_SIGMA)
    }

    pub fn population_size(&self) -> usize {
        self.params.lambda
    }

    pub fn state(&self) -> CmaState {
        CmaState {
            mean: self.mean.as_slice().to_vec(),
            sigma: self.sigma,
            cov: self.cov.clone(),
            p_sigma: self.p_sigma.as_slice().to_vec(),
            p_c: self.p_c.as_slice().to_vec(),
            lambda: self.params.lambda,
            generation: self.generation,
        }
    }

    pub fn into_state(self) -> CmaState {
        self.state()
    }

    /// Generations until the evaluator runs dry.
    pub fn run(&mut self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Step<()> {
        loop {
            self.step(ev, rng)?;
        }
    }

    /// Samples, evaluates and updates one generation. A generation cut short
    /// by the budget leaves the state untouched.
    pub fn step(&mut self, ev: &mut Evaluator<'_>, rng: &mut Rng) -> Step<()> {
        let n = self.mean.len();
        let p = &self.params;
        let mut ys = Vec::with_capacity(p.lambda);
        let mut fs = Vec::with_capacity(p.lambda);
        let bd = &self.b * DMatrix::from_diagonal(&self.d);
        for _ in 0..p.lambda {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = &bd * z;
            let mut x: Vec<f64> = (&self.mean + self.sigma * &y).as_slice().to_vec();
            saturate(&mut x);
            let f = ev.evaluate(&x)?;
            // the step actually taken after saturation
            let y = (DVector::from_vec(x) - &self.mean) / self.sigma;
            ys.push(y);
            fs.push(f);
        }
        self.update(&ys, &fs);
        Ok(())
    }

    fn update(&mut self, ys: &[DVector<f64>], fs: &[f64]) {
        let n = self.mean.len();
        let p = &self.params;
        let mut order: Vec<usize> = (0..ys.len()).collect();
        order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));

        let mut y_w = DVector::zeros(n);
        for (w, &i) in p.weights.iter().zip(&order[..p.mu]) {
            y_w += *w * &ys[i];
        }
        self.mean += self.sigma * &y_w;
        saturate(self.mean.as_mut_slice());

        let inv_sqrt = &self.b
            * DMatrix::from_diagonal(&self.d.map(|v| 1.0 / v))
            * self.b.transpose();
        self.p_sigma = (1.0 - p.cs) * &self.p_sigma
            + (p.cs * (2.0 - p.cs) * p.mu_eff).sqrt() * (inv_sqrt * &y_w);
        let gen = (self.generation + 1) as f64;
        let ps_norm = self.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - p.cs).powf(2.0 * gen)).sqrt()
            < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.p_c = (1.0 - p.cc) * &self.p_c + h * (p.cc * (2.0 - p.cc) * p.mu_eff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, &i) in p.weights.iter().zip(&order[..p.mu]) {
            rank_mu += *w * &ys[i] * ys[i].transpose();
        }
        let rank_one = &self.p_c * self.p_c.transpose()
            + (1.0 - h) * p.cc * (2.0 - p.cc) * &self.cov;
        self.cov = (1.0 - p.c1 - p.cmu) * &self.cov + p.c1 * rank_one + p.cmu * rank_mu;

        self.sigma *= ((p.cs / p.damps) * (ps_norm / p.chi_n - 1.0)).exp();
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            self.sigma = f64::MIN_POSITIVE.sqrt();
        }
        self.sigma = self.sigma.min(1e3);

        self.repair();
        self.generation += 1;
    }

    fn repair(&mut self) {
        let n = self.mean.len();
        let sym = linalg::symmetrize(&self.cov);
        let scale = sym.diagonal().amax().max(SPD_FLOOR);
        let (b, d) = linalg::sqrt_decomposition(&sym, scale * 1e-14);
        if d.iter().all(|v| v.is_finite() && *v > 0.0) {
            self.cov = &b * DMatrix::from_diagonal(&d.map(|v| v * v)) * b.transpose();
            self.cov = linalg::symmetrize(&self.cov);
            self.b = b;
            self.d = d;
        } else {
            self.cov = DMatrix::identity(n, n);
            self.b = DMatrix::identity(n, n);
            self.d = DVector::from_element(n, 1.0);
            self.p_c.fill(0.0);
            self.p_sigma.fill(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use trajsel_bbob::{ProblemId, ProblemInstance};

    #[test]
    fn population_sizes() {
        assert_eq!(default_population_size(5), 8);
        assert_eq!(default_population_size(2), 6);
        assert_eq!(default_population_size(20), 12);
    }

    #[test]
    fn weights_sum_to_one() {
        let p = Params::new(5);
        assert_eq!(p.mu, 4);
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.weights.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn converges_on_sphere() {
        let p = ProblemInstance::new(ProblemId::new(1, 1, 5)).unwrap();
        let mut rng = rng_from_seed(1);
        let mut ev = Evaluator::new(&p, 2000);
        let mut es = Cmaes::cold(5, &mut rng);
        assert!(es.run(&mut ev, &mut rng).is_err());
        let best = ev.best().unwrap().y;
        assert!(p.target_precision(best) < 1e-8, "{}", best - p.f_opt());
    }

    #[test]
    fn covariance_stays_positive_definite() {
        let p = ProblemInstance::new(ProblemId::new(10, 2, 5)).unwrap();
        let mut rng = rng_from_seed(9);
        let mut ev = Evaluator::new(&p, 1600);
        let mut es = Cmaes::cold(5, &mut rng);
        while es.step(&mut ev, &mut rng).is_ok() {
            let eig = nalgebra::SymmetricEigen::new(es.state().cov);
            assert!(eig.eigenvalues.min() > 0.0);
            assert!(es.state().sigma > 0.0);
        }
        assert_eq!(ev.trace().len(), 1600);
    }

    #[test]
    fn candidates_are_saturated() {
        let p = ProblemInstance::new(ProblemId::new(1, 1, 5)).unwrap();
        let mut rng = rng_from_seed(2);
        let mut ev = Evaluator::new(&p, 80);
        let mut es = Cmaes::warm(&[4.9; 5], 10.0);
        let _ = es.run(&mut ev, &mut rng);
        let on_bound = ev
            .trace()
            .iter()
            .flat_map(|s| s.x.iter())
            .filter(|v| v.abs() == 5.0)
            .count();
        assert!(on_bound > 0);
        assert!(ev.trace().iter().all(|s| s.x.iter().all(|v| v.abs() <= 5.0)));
    }
}
