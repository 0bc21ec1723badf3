//! Black-box BFGS: forward-difference gradients and a backtracking Armijo
//! line search, every evaluation counted against the caller's budget.

use nalgebra::{DMatrix, DVector};
use trajsel_bbob::{Evaluator, UPPER_BOUND};

use crate::linalg::{dot, norm};
use crate::{saturate, Step};

/// Finite-difference step for coordinate value `xi`.
pub fn fd_step(xi: f64) -> f64 {
    f64::EPSILON.sqrt() * xi.abs().max(1.0)
}

/// Forward-difference gradient at `x` with known value `fx`, spending one
/// evaluation per coordinate. Coordinates whose forward probe would leave the
/// box use a backward difference instead.
pub fn forward_gradient<F>(f: &mut F, x: &[f64], fx: f64) -> Step<Vec<f64>>
where
    F: FnMut(&[f64]) -> Step<f64>,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        if x[i] + h <= UPPER_BOUND {
            probe[i] = x[i] + h;
            g[i] = (f(&probe)? - fx) / h;
        } else {
            probe[i] = x[i] - h;
            g[i] = (fx - f(&probe)?) / h;
        }
        probe[i] = x[i];
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct Bfgs {
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Curvature guard: update only when `sᵀy > curvature·|s|·|y|`.
    pub curvature: f64,
    /// Local searches stop once `|g|∞` falls below this.
    pub gradient_tol: f64,
}

impl Default for Bfgs {
    fn default() -> Self {
        Self {
            armijo: 1e-4,
            max_backtracks: 30,
            curvature: 1e-10,
            gradient_tol: 1e-5,
        }
    }
}

/// Outcome of one line search from the current iterate.
enum LineSearch {
    Accepted { x: Vec<f64>, f: f64 },
    Failed,
}

/// Why a local search ended without running out of budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Converged,
    Stalled,
}

struct Iterate {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    h: DMatrix<f64>,
}

impl Bfgs {
    /// Iterates from `x0` until the evaluator's budget is spent. Stalls reset
    /// the inverse Hessian to the identity and continue.
    pub fn run_to_budget(&self, ev: &mut Evaluator<'_>, x0: &[f64], h0: DMatrix<f64>) -> Step<()> {
        let mut f = |x: &[f64]| ev.evaluate(x);
        let mut it = self.start(&mut f, x0, h0)?;
        loop {
            if let Err(Stop::Stalled) = self.iterate(&mut f, &mut it, false)? {
                let n = it.x.len();
                if it.h == DMatrix::identity(n, n) {
                    // steepest descent failed as well: refresh the gradient
                    it.g = forward_gradient(&mut f, &it.x, it.f)?;
                }
                it.h = DMatrix::identity(it.x.len(), it.x.len());
            }
        }
    }

    /// Runs until convergence, a stall or budget exhaustion and returns the
    /// final point and value.
    pub fn local_search<F>(&self, f: &mut F, x0: &[f64], h0: DMatrix<f64>) -> Step<(Vec<f64>, f64, Stop)>
    where
        F: FnMut(&[f64]) -> Step<f64>,
    {
        let mut it = self.start(f, x0, h0)?;
        loop {
            if let Err(stop) = self.iterate(f, &mut it, true)? {
                return Ok((it.x, it.f, stop));
            }
        }
    }

    fn start<F>(&self, f: &mut F, x0: &[f64], h0: DMatrix<f64>) -> Step<Iterate>
    where
        F: FnMut(&[f64]) -> Step<f64>,
    {
        let mut x = x0.to_vec();
        saturate(&mut x);
        let fx = f(&x)?;
        let g = forward_gradient(f, &x, fx)?;
        Ok(Iterate { x, f: fx, g, h: h0 })
    }

    /// One quasi-Newton step. The inner `Err` reports a regular stop.
    fn iterate<F>(&self, f: &mut F, it: &mut Iterate, may_converge: bool) -> Step<Result<(), Stop>>
    where
        F: FnMut(&[f64]) -> Step<f64>,
    {
        let n = it.x.len();
        if may_converge && it.g.iter().all(|v| v.abs() < self.gradient_tol) {
            return Ok(Err(Stop::Converged));
        }
        let g = DVector::from_column_slice(&it.g);
        let mut d = -(&it.h * &g);
        if !d.iter().all(|v| v.is_finite()) || d.dot(&g) >= 0.0 {
            it.h = DMatrix::identity(n, n);
            d = -g.clone();
        }
        let (x_new, f_new) = match self.line_search(f, it, d.as_slice())? {
            LineSearch::Accepted { x, f } => (x, f),
            LineSearch::Failed => return Ok(Err(Stop::Stalled)),
        };
        let g_new = forward_gradient(f, &x_new, f_new)?;
        let s: Vec<f64> = x_new.iter().zip(&it.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&it.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy.is_finite() && sy > self.curvature * norm(&s) * norm(&y) {
            let rho = 1.0 / sy;
            let s = DVector::from_vec(s);
            let y = DVector::from_vec(y);
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            let h = left * &it.h * right + rho * &s * s.transpose();
            if h.iter().all(|v| v.is_finite()) {
                it.h = (&h + h.transpose()) * 0.5;
            }
        }
        it.x = x_new;
        it.f = f_new;
        it.g = g_new;
        Ok(Ok(()))
    }

    fn line_search<F>(&self, f: &mut F, it: &Iterate, d: &[f64]) -> Step<LineSearch>
    where
        F: FnMut(&[f64]) -> Step<f64>,
    {
        let mut alpha = 1.0;
        for _ in 0..self.max_backtracks {
            let mut x: Vec<f64> = it.x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
            saturate(&mut x);
            if x == it.x {
                return Ok(LineSearch::Failed);
            }
            let slope: f64 = it.g.iter().zip(x.iter().zip(&it.x)).map(|(g, (a, b))| g * (a - b)).sum();
            let fx = f(&x)?;
            if fx.is_finite() && fx < it.f && fx <= it.f + self.armijo * slope {
                return Ok(LineSearch::Accepted { x, f: fx });
            }
            alpha *= 0.5;
        }
        Ok(LineSearch::Failed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use trajsel_bbob::BbobError;

    fn sphere(x: &[f64]) -> Step<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn quadratic_forward_difference() {
        let x = [1.0, 0.0, 0.0, 0.0, 0.0];
        let g = forward_gradient(&mut sphere, &x, 1.0).unwrap();
        let h = fd_step(1.0);
        assert!((g[0] - (2.0 + h)).abs() < 1e-6);
        for v in &g[1..] {
            assert!(v.abs() < 1e-7);
        }
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let g = forward_gradient(&mut |_: &[f64]| Ok(3.5), &[0.3, -2.0], 3.5).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn backward_difference_at_upper_bound() {
        let mut probes = Vec::new();
        let mut f = |x: &[f64]| {
            probes.push(x.to_vec());
            sphere(x)
        };
        let g = forward_gradient(&mut f, &[5.0, 0.0], 25.0).unwrap();
        assert!(probes[0][0] < 5.0);
        assert!((g[0] - 10.0).abs() < 1e-5);
    }

    #[test]
    fn gradient_stops_when_budget_runs_out() {
        let mut left = 2;
        let mut calls = 0;
        let mut f = |x: &[f64]| {
            if left == 0 {
                return Err(BbobError::BudgetExhausted(2));
            }
            left -= 1;
            calls += 1;
            sphere(x)
        };
        let r = forward_gradient(&mut f, &[0.0; 5], 0.0);
        assert_eq!(r, Err(BbobError::BudgetExhausted(2)));
        assert_eq!(calls, 2);
    }

    #[test]
    fn local_search_converges_on_quadratic() {
        let (x, fx, stop) = Bfgs::default()
            .local_search(&mut sphere, &[3.0, -2.0, 1.0], DMatrix::identity(3, 3))
            .unwrap();
        assert!(fx < 1e-10, "{x:?}");
        assert_ne!(stop, Stop::Stalled);
    }
}
