//! Brute-force and closed-form responses used as independent test oracles,
//! plus the on-curve response used to simulate users restricted to a
//! one-dimensional manifold.

use alloc::vec::Vec;

use super::{check_problem, smoothed_payoff};
use crate::cost::{CostKind, CostSpec};
use crate::error::{Error, Result};
use crate::math::{self, orthonormal_basis};
use crate::model::LinearScorer;
use crate::smooth::SmoothSign;

/// Cheapest point on `{f ≥ 0}` under a (weighted) quadratic cost, and its cost.
///
/// For `c = t·Σ a_i δ_i²` and `f(x) < 0` the minimizer is
/// `x − f(x)·A⁻¹w / (wᵀA⁻¹w)` with cost `t·f(x)² / (wᵀA⁻¹w)`.
pub fn boundary_projection(x: &[f64], model: &LinearScorer, cost: &CostSpec) -> Result<(f64, Vec<f64>)> {
    check_problem(x, model, cost)?;
    if model.is_zero() {
        return Err(Error::DegenerateModel);
    }
    let inv_metric: Vec<f64> = match cost.kind() {
        CostKind::Quadratic => alloc::vec![1.0; x.len()],
        CostKind::WeightedQuadratic { weights } => weights.iter().map(|v| 1.0 / v).collect(),
        _ => return Err(Error::UnsupportedCost("closed-form boundary projection")),
    };
    let f = model.head_score(x);
    if f >= 0.0 {
        return Ok((0.0, x.to_vec()));
    }
    let w = model.weights();
    let dir: Vec<f64> = w.iter().zip(&inv_metric).map(|(wi, ai)| wi * ai).collect();
    let norm2 = math::dot(w, &dir);
    let mut point: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi - f * di / norm2).collect();
    // rounding can leave f a few ulps below zero
    for _ in 0..4 {
        let s = model.head_score(&point);
        if s >= 0.0 {
            break;
        }
        let nudge = (-s).max(f64::EPSILON * (1.0 + f.abs())) / norm2;
        point.iter_mut().zip(&dir).for_each(|(p, di)| *p += nudge * di);
    }
    Ok((cost.scale() * f * f / norm2, point))
}

/// Hard-sign best response `argmax h(x′) − c(x, x′)` for (weighted) quadratic
/// costs. Moves to the boundary only when that costs strictly less than 2.
pub fn exact_best_response(x: &[f64], model: &LinearScorer, cost: &CostSpec) -> Result<Vec<f64>> {
    let (c, point) = boundary_projection(x, model, cost)?;
    if c > 0.0 && c < 2.0 {
        Ok(point)
    } else {
        Ok(x.to_vec())
    }
}

/// Exhaustive grid maximization of the smoothed payoff over the subspace that
/// contains the optimum, `x + span(Q⁻¹w, Q⁻¹u)`, with spacing `resolution`.
pub fn grid_response_oracle(
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    tau: f64,
    resolution: f64,
) -> Result<Vec<f64>> {
    check_problem(x, model, cost)?;
    cost.require_strictly_convex()?;
    let sign = SmoothSign::new(tau)?;
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(Error::InvalidConfig("grid resolution must be positive".into()));
    }
    let q = cost.quadratic_hessian_diagonal(x.len());
    let scaled = |v: &[f64]| -> Vec<f64> { v.iter().zip(&q).map(|(a, b)| a / b).collect() };
    let mut spans = alloc::vec![scaled(model.weights())];
    let mut offset = 0.0;
    if let Some((u, coef, beta)) = cost.linear_component() {
        spans.push(scaled(u));
        offset = coef * core::f64::consts::LN_2 / beta;
    }
    let basis = orthonormal_basis(&spans, 1e-12);
    if basis.is_empty() {
        return Ok(x.to_vec());
    }
    // payoff gain is below 2, so the optimum has ½·δᵀQδ ≤ 2 + c(x, x)
    let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
    let radius = 1.01 * math::sqrt(2.0 * (2.0 + offset) / q_min);
    let n = libm::ceil(radius / resolution) as i64;

    let at = |coords: &[f64]| -> Vec<f64> {
        let mut p = x.to_vec();
        for (c, b) in coords.iter().zip(&basis) {
            p.iter_mut().zip(b).for_each(|(pi, bi)| *pi += c * bi);
        }
        p
    };
    let mut best = (smoothed_payoff(x, x, model, cost, &sign), x.to_vec());
    let mut consider = |coords: &[f64]| {
        let p = at(coords);
        let v = smoothed_payoff(x, &p, model, cost, &sign);
        if v > best.0 {
            best = (v, p);
        }
    };
    match basis.len() {
        1 => {
            for i in -n..=n {
                consider(&[i as f64 * resolution]);
            }
        }
        _ => {
            for i in -n..=n {
                for j in -n..=n {
                    consider(&[i as f64 * resolution, j as f64 * resolution]);
                }
            }
        }
    }
    Ok(best.1)
}

/// Best smoothed response among points `curve(s)`, `s ∈ [lo, hi]`: a grid of
/// spacing `resolution` followed by golden-section refinement around the best
/// grid point.
#[allow(clippy::too_many_arguments)]
pub fn curve_best_response<C>(
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    tau: f64,
    curve: C,
    lo: f64,
    hi: f64,
    resolution: f64,
) -> Result<Vec<f64>>
where
    C: Fn(f64) -> Vec<f64>,
{
    check_problem(x, model, cost)?;
    let sign = SmoothSign::new(tau)?;
    if !(resolution > 0.0 && hi > lo) {
        return Err(Error::InvalidConfig("invalid curve search range".into()));
    }
    let payoff = |s: f64| smoothed_payoff(x, &curve(s), model, cost, &sign);
    let steps = libm::ceil((hi - lo) / resolution) as usize;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=steps {
        let s = (lo + i as f64 * resolution).min(hi);
        let v = payoff(s);
        if v > best.0 {
            best = (v, s);
        }
    }
    let s = golden_max(&payoff, (best.1 - resolution).max(lo), (best.1 + resolution).min(hi));
    Ok(if payoff(s) >= best.0 { curve(s) } else { curve(best.1) })
}

/// Local smoothed response along a curve: starting from the user's own
/// parameter `s0`, climbs the payoff in steps of `resolution` to the first
/// local maximum within `[lo, hi]`, then refines by golden-section search.
/// This mirrors the CCP response, which also ascends from `x⁰ = x`.
#[allow(clippy::too_many_arguments)]
pub fn curve_local_response<C>(
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    tau: f64,
    curve: C,
    s0: f64,
    lo: f64,
    hi: f64,
    resolution: f64,
) -> Result<Vec<f64>>
where
    C: Fn(f64) -> Vec<f64>,
{
    check_problem(x, model, cost)?;
    let sign = SmoothSign::new(tau)?;
    if !(resolution > 0.0 && hi > lo && (lo..=hi).contains(&s0)) {
        return Err(Error::InvalidConfig("invalid curve search range".into()));
    }
    let payoff = |s: f64| smoothed_payoff(x, &curve(s), model, cost, &sign);
    let here = payoff(s0);
    let up = payoff((s0 + resolution).min(hi));
    let down = payoff((s0 - resolution).max(lo));
    if here >= up && here >= down {
        return Ok(curve(s0));
    }
    let dir = if up >= down { 1.0 } else { -1.0 };
    let (mut s, mut v) = (s0, here);
    loop {
        let next = (s + dir * resolution).clamp(lo, hi);
        let nv = payoff(next);
        if nv <= v || next == s {
            break;
        }
        s = next;
        v = nv;
    }
    let (a, b) = ((s - resolution).max(lo), (s + resolution).min(hi));
    let r = golden_max(&payoff, a, b);
    Ok(if payoff(r) >= v { curve(r) } else { curve(s) })
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (math::sqrt(5.0) - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
