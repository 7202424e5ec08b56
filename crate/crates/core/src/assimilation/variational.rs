//! 3D-VAR cost and a limited-memory quasi-Newton minimizer.

use std::collections::VecDeque;

use super::linalg::SpdSolver;
use super::{AssimilationProblem, AssimilationResult};
use crate::error::{Error, Result};

const MEMORY: usize = 8;

struct Cost<'a> {
    p: &'a AssimilationProblem,
    b_inv: SpdSolver,
    o_inv: SpdSolver,
}

impl<'a> Cost<'a> {
    fn new(p: &'a AssimilationProblem) -> Result<Self> {
        p.validate()?;
        Ok(Cost {
            p,
            b_inv: p.cov_background.solver("B")?,
            o_inv: p.cov_observation.solver("O")?,
        })
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let dx: Vec<f64> = x.iter().zip(&self.p.background).map(|(a, b)| a - b).collect();
        let r = self.p.residual(x);
        let bdx = self.b_inv.solve(&dx);
        let or = self.o_inv.solve(&r);
        let j = 0.5 * (dot(&dx, &bdx) + dot(&r, &or));
        let ht = self.p.operator.apply_transpose(&or);
        let grad = bdx.iter().zip(&ht).map(|(a, b)| a - b).collect();
        (j, grad)
    }
}

/// `J(x) = ½‖x−x^b‖²_{B⁻¹} + ½‖y−Hx‖²_{O⁻¹}` and its gradient.
pub fn cost_3dvar(x: &[f64], p: &AssimilationProblem) -> Result<(f64, Vec<f64>)> {
    if x.len() != p.state_dim() {
        return Err(Error::Shape(format!("x has length {}, state has {}", x.len(), p.state_dim())));
    }
    Ok(Cost::new(p)?.eval(x))
}

/// L-BFGS from `x^b` until the gradient's ∞-norm drops below `tol`.
///
/// Each line search takes a secant step along the search direction (exact
/// for quadratic costs) and falls back to Armijo backtracking. Running out
/// of iterations yields [`Error::Convergence`] carrying the best iterate.
pub fn minimize_3dvar(p: &AssimilationProblem, tol: f64, max_iter: usize) -> Result<AssimilationResult> {
    let cost = Cost::new(p)?;
    let mut x = p.background.clone();
    let (mut f, mut g) = cost.eval(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut iterations = 0;
    while !(inf_norm(&g) < tol) {
        if iterations == max_iter {
            return Err(Error::Convergence {
                iterations,
                gradient_norm: inf_norm(&g),
                best: x,
            });
        }
        iterations += 1;
        let mut d = two_loop(&g, &history);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let (x_new, f_new, g_new) = line_search(&cost, &x, f, &d, slope)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    let innovation = p.residual(&p.background);
    Ok(AssimilationResult {
        analysis: x,
        analysis_cov: None,
        innovation_norm: dot(&innovation, &innovation).sqrt(),
    })
}

fn line_search(
    cost: &Cost,
    x: &[f64],
    f: f64,
    d: &[f64],
    slope: f64,
) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let at = |alpha: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + alpha * b).collect() };
    let (_, g1) = cost.eval(&at(1.0));
    let curvature = dot(&g1, d) - slope;
    let mut alpha = if curvature > 0.0 { -slope / curvature } else { 1.0 };
    // Rounding slack keeps the acceptance test meaningful once J has converged
    // to within machine precision of its minimum.
    let slack = 1e-13 * (1.0 + f.abs());
    for _ in 0..60 {
        let xa = at(alpha);
        let (fa, ga) = cost.eval(&xa);
        if fa.is_finite() && fa <= f + 1e-4 * alpha * slope + slack {
            return Ok((xa, fa, ga));
        }
        alpha *= 0.5;
    }
    Err(Error::Numeric("line search failed to decrease the 3D-VAR cost".into()))
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(-a, y, &mut q);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        axpy(a - b, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assimilation::{blue_update, Covariance, ObservationOperator};

    fn problem() -> AssimilationProblem {
        AssimilationProblem::new(
            vec![1.0, 4.0, -1.0],
            vec![3.0, 0.0, 2.0],
            ObservationOperator::identity(3),
            Covariance::scaled_identity(3, 1.0),
            Covariance::scaled_identity(3, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_cost_at_consistent_background() {
        let mut p = problem();
        p.observation = p.background.clone();
        let (j, g) = cost_3dvar(&p.background, &p).unwrap();
        assert_eq!(j, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_problem_converges_to_average() {
        let r = minimize_3dvar(&problem(), 1e-12, 100).unwrap();
        for (a, e) in r.analysis.iter().zip([2.0, 2.0, 0.5]) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_tolerance_returns_background() {
        let p = problem();
        assert_eq!(minimize_3dvar(&p, f64::INFINITY, 0).unwrap().analysis, p.background);
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let p = AssimilationProblem::new(
            vec![0.0; 4],
            vec![1.0, 2.0, 3.0, 4.0],
            ObservationOperator::identity(4),
            Covariance::Diagonal(vec![1.0, 10.0, 100.0, 1000.0]),
            Covariance::scaled_identity(4, 1.0),
        )
        .unwrap();
        match minimize_3dvar(&p, 1e-14, 1) {
            Err(Error::Convergence { iterations, best, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.len(), 4);
                assert!(cost_3dvar(&best, &p).unwrap().0 < cost_3dvar(&p.background, &p).unwrap().0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn blue_never_increases_cost() {
        let p = problem();
        let xa = blue_update(&p, false).unwrap().analysis;
        assert!(cost_3dvar(&xa, &p).unwrap().0 <= cost_3dvar(&p.background, &p).unwrap().0);
    }
}
