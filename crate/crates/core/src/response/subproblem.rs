//! Exact maximization of the concave CCP surrogate
//!
//! ```text
//! ψ(x′) = g·x′ + σ∩(w·x′ + b) − c(x, x′)
//! ```
//!
//! Stationarity gives `Q(x′ − x) = g + s·w − q·u` for scalars `s`, `q`, where
//! `Q` is the (diagonal) Hessian of the cost's quadratic part and `u` the
//! direction of its linear part. The maximizer therefore lies in
//! `x + span(Q⁻¹g, Q⁻¹w, Q⁻¹u)`, usually one or two dimensions, and damped
//! Newton runs in those coordinates. Under a tangent constraint the
//! coordinates are those of the tangent basis instead.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::TangentSpec;
use crate::cost::{CostMode, CostSpec};
use crate::error::{check_dim, Error, Result};
use crate::math::{self, dot, orthonormal_basis};
use crate::model::LinearScorer;
use crate::smooth::SmoothSign;

const NEWTON_MAX_ITER: usize = 60;
const FALLBACK_MAX_ITER: usize = 2_000;
const ARMIJO: f64 = 1e-4;

/// The concave surrogate `ψ` for one CCP step.
pub struct ConcaveSurrogate<'a> {
    x: &'a [f64],
    g: &'a [f64],
    model: &'a LinearScorer,
    cost: &'a CostSpec,
    sign: &'a SmoothSign,
}

impl<'a> ConcaveSurrogate<'a> {
    pub fn new(x: &'a [f64], g: &'a [f64], model: &'a LinearScorer, cost: &'a CostSpec, sign: &'a SmoothSign) -> Self {
        Self {
            x,
            g,
            model,
            cost,
            sign,
        }
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        dot(self.g, p) + self.sign.concave_part(self.model.head_score(p))
            - self.cost.value_unchecked(self.x, p, CostMode::Smoothed)
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let s = self.sign.concave_derivative(self.model.head_score(p));
        let mut grad = self.cost.gradient_unchecked(self.x, p);
        for ((gi, wi), ci) in grad.iter_mut().zip(self.model.weights()).zip(self.g) {
            *gi = ci + s * wi - *gi;
        }
        grad
    }

    pub fn hessian(&self, p: &[f64]) -> DMatrix<f64> {
        let s2 = self.sign.concave_second_derivative(self.model.head_score(p));
        let w = self.model.weights();
        let mut h = -self.cost.hessian_unchecked(self.x, p);
        for i in 0..w.len() {
            for j in 0..w.len() {
                h[(i, j)] += s2 * w[i] * w[j];
            }
        }
        h
    }
}

/// Reduced coordinates `p = origin + Σ α_j basis_j`.
struct Reduced<'a> {
    origin: &'a [f64],
    basis: Vec<Vec<f64>>,
}

impl Reduced<'_> {
    fn point(&self, alpha: &[f64]) -> Vec<f64> {
        let mut p = self.origin.to_vec();
        for (a, q) in alpha.iter().zip(&self.basis) {
            p.iter_mut().zip(q).for_each(|(pi, qi)| *pi += a * qi);
        }
        p
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|q| dot(q, v)).collect()
    }

    fn project_hessian(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.basis.len();
        let d = self.origin.len();
        let b = DMatrix::from_fn(d, k, |i, j| self.basis[j][i]);
        b.transpose() * h * b
    }
}

/// Unique maximizer of the concave surrogate, optionally restricted to a
/// tangent subspace. The returned point has surrogate gradient norm (projected
/// onto the subspace when constrained) at most `tol`.
pub fn solve_concave_subproblem(
    x: &[f64],
    g: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    sign: &SmoothSign,
    constraint: Option<&TangentSpec>,
    tol: f64,
) -> Result<Vec<f64>> {
    super::check_problem(x, model, cost)?;
    check_dim("linearization", x.len(), g.len())?;
    cost.require_strictly_convex()?;
    let surrogate = ConcaveSurrogate::new(x, g, model, cost, sign);

    let (reduced, start) = match constraint {
        Some(t) => {
            check_dim("tangent base", x.len(), t.dim())?;
            let r = Reduced {
                origin: &t.base,
                basis: t.orthonormal_basis(),
            };
            let start = r.project(&math::sub(x, &t.base));
            (r, start)
        }
        None => {
            let q = cost.quadratic_hessian_diagonal(x.len());
            let scaled = |v: &[f64]| -> Vec<f64> { v.iter().zip(&q).map(|(a, b)| a / b).collect() };
            let mut spans = alloc::vec![scaled(g), scaled(model.weights())];
            if let Some((u, _, _)) = cost.linear_component() {
                spans.push(scaled(u));
            }
            let r = Reduced {
                origin: x,
                basis: orthonormal_basis(&spans, 1e-12),
            };
            let k = r.basis.len();
            (r, alloc::vec![0.0; k])
        }
    };
    if reduced.basis.is_empty() {
        return Ok(reduced.point(&start));
    }
    let constrained = constraint.is_some();
    let grad_norm = |full: &[f64]| -> f64 {
        if constrained {
            math::norm(&reduced.project(full))
        } else {
            math::norm(full)
        }
    };

    let mut alpha = start;
    let mut point = reduced.point(&alpha);
    let mut value = surrogate.value(&point);
    for _ in 0..NEWTON_MAX_ITER {
        let full = surrogate.gradient(&point);
        if grad_norm(&full) <= tol {
            return Ok(point);
        }
        let rg = DVector::from_vec(reduced.project(&full));
        let neg_h = -reduced.project_hessian(&surrogate.hessian(&point));
        let Some(chol) = neg_h.cholesky() else { break };
        let step = chol.solve(&rg);
        let slope = rg.dot(&step);
        if slope.is_nan() || slope <= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = alpha.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let trial_point = reduced.point(&trial);
            let trial_value = surrogate.value(&trial_point);
            if trial_value >= value + ARMIJO * t * slope {
                alpha = trial;
                point = trial_point;
                value = trial_value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Newton direction stalled at rounding level; accept if stationary
            let full = surrogate.gradient(&point);
            if grad_norm(&full) <= tol || slope < 1e-28 {
                return Ok(point);
            }
            break;
        }
        let step_norm = t * step.norm();
        if step_norm <= 1e-15 * (1.0 + math::norm(&alpha)) {
            let full = surrogate.gradient(&point);
            if grad_norm(&full) <= tol.max(1e3 * f64::EPSILON * (1.0 + math::norm(&full))) {
                return Ok(point);
            }
        }
    }

    bisection_fallback(&surrogate, &reduced, alpha, tol, constrained)
}

/// Steepest ascent in reduced coordinates with an exact line search by
/// bisection on the directional derivative.
fn bisection_fallback(
    surrogate: &ConcaveSurrogate<'_>,
    reduced: &Reduced<'_>,
    mut alpha: Vec<f64>,
    tol: f64,
    constrained: bool,
) -> Result<Vec<f64>> {
    let slope_along = |alpha: &[f64], dir: &[f64], t: f64| -> f64 {
        let a: Vec<f64> = alpha.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        let grad = surrogate.gradient(&reduced.point(&a));
        dot(&reduced.project(&grad), dir)
    };
    for _ in 0..FALLBACK_MAX_ITER {
        let point = reduced.point(&alpha);
        let full = surrogate.gradient(&point);
        let norm = if constrained {
            math::norm(&reduced.project(&full))
        } else {
            math::norm(&full)
        };
        if norm <= tol {
            return Ok(point);
        }
        let dir = reduced.project(&full);
        let mut hi = 1.0;
        let mut expansions = 0;
        while slope_along(&alpha, &dir, hi) > 0.0 {
            hi *= 2.0;
            expansions += 1;
            if expansions > 200 {
                return Err(solver_failure("line search did not bracket"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope_along(&alpha, &dir, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        alpha.iter_mut().zip(&dir).for_each(|(a, d)| *a += t * d);
    }
    Err(solver_failure("subproblem did not reach tolerance"))
}

fn solver_failure(reason: &str) -> Error {
    Error::SolverFailure {
        iteration: 0,
        reason: reason.into(),
        trace: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sign() -> SmoothSign {
        SmoothSign::new(1.0).unwrap()
    }

    #[test]
    fn no_influence_returns_origin() {
        let m = LinearScorer::new(vec![0.0, 0.0], 0.0).unwrap();
        let c = CostSpec::quadratic(1.0).unwrap();
        let x = [0.4, -1.3];
        let p = solve_concave_subproblem(&x, &[0.0, 0.0], &m, &c, &sign(), None, 1e-10).unwrap();
        assert_eq!(p, x.to_vec());
    }

    #[test]
    fn linear_gain_against_quadratic_cost() {
        // maximize 2·x′₁ − ‖x′‖²  →  x′ = (1, 0)
        let m = LinearScorer::new(vec![0.0, 0.0], 0.0).unwrap();
        let c = CostSpec::quadratic(1.0).unwrap();
        let p = solve_concave_subproblem(&[0.0, 0.0], &[2.0, 0.0], &m, &c, &sign(), None, 1e-10).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-10 && p[1].abs() < 1e-12);
    }

    #[test]
    fn tangent_restricts_movement() {
        let m = LinearScorer::new(vec![0.0, 0.0], 0.0).unwrap();
        let c = CostSpec::quadratic(1.0).unwrap();
        let t = TangentSpec::new(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).unwrap();
        let p = solve_concave_subproblem(&[0.0, 0.0], &[2.0, 2.0], &m, &c, &sign(), Some(&t), 1e-10).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-10 && p[1] == 0.0);
    }

    #[test]
    fn stationary_for_anisotropic_mixture() {
        let m = LinearScorer::new(vec![1.5, -0.4, 0.3], -0.2).unwrap();
        let c = CostSpec::mixture(0.05, vec![0.5, 0.5, -1.0], 1.3).unwrap();
        let s = SmoothSign::new(0.2).unwrap();
        let x = [-0.3, 0.2, 0.1];
        let g = [0.9, -0.1, 0.4];
        let p = solve_concave_subproblem(&x, &g, &m, &c, &s, None, 1e-9).unwrap();
        let sur = ConcaveSurrogate::new(&x, &g, &m, &c, &s);
        assert!(math::norm(&sur.gradient(&p)) <= 1e-9);
    }

    #[test]
    fn weighted_cost_optimum_off_weight_direction() {
        let m = LinearScorer::new(vec![1.0, 1.0], 0.0).unwrap();
        let c = CostSpec::weighted_quadratic(vec![0.3, 3.0], 1.0).unwrap();
        let s = SmoothSign::new(0.5).unwrap();
        let x = [-0.5, -0.5];
        let g = [0.2, 0.2];
        let p = solve_concave_subproblem(&x, &g, &m, &c, &s, None, 1e-10).unwrap();
        let sur = ConcaveSurrogate::new(&x, &g, &m, &c, &s);
        assert!(math::norm(&sur.gradient(&p)) <= 1e-10);
        // cheap first coordinate moves further
        assert!(p[0] - x[0] > p[1] - x[1]);
    }
}
