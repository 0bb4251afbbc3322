//! Metrics of a published model under strategic user responses.

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cost::{CostKind, CostMode, CostSpec};
use crate::data::Dataset;
use crate::error::Result;
use crate::math::hard_sign;
use crate::model::LinearScorer;
use crate::par::map_indexed;
use crate::response::{
    boundary_projection, curve_best_response, curve_local_response, exact_best_response, respond, ResponseConfig,
    TangentSpec,
};

/// How simulated users move in response to a published model.
pub trait Responder: Sync {
    fn respond(
        &self,
        x: &[f64],
        tangent: Option<&TangentSpec>,
        model: &LinearScorer,
        cost: &CostSpec,
    ) -> Result<Vec<f64>>;
}

/// Smoothed CCP responses, tangent-constrained where the dataset has tangents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcpResponder {
    pub config: ResponseConfig,
}

impl Responder for CcpResponder {
    fn respond(
        &self,
        x: &[f64],
        tangent: Option<&TangentSpec>,
        model: &LinearScorer,
        cost: &CostSpec,
    ) -> Result<Vec<f64>> {
        Ok(respond(x, model, cost, tangent, &self.config)?.x_star)
    }
}

/// Closed-form hard-sign best responses (quadratic costs only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExactResponder;

impl Responder for ExactResponder {
    fn respond(
        &self,
        x: &[f64],
        _tangent: Option<&TangentSpec>,
        model: &LinearScorer,
        cost: &CostSpec,
    ) -> Result<Vec<f64>> {
        exact_best_response(x, model, cost)
    }
}

/// Nobody moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StaticResponder;

impl Responder for StaticResponder {
    fn respond(
        &self,
        x: &[f64],
        _tangent: Option<&TangentSpec>,
        _model: &LinearScorer,
        _cost: &CostSpec,
    ) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
}

pub type CurveMap = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
pub type CurveLocator = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Users restricted to a one-dimensional curve `s ↦ curve(s)`, `s ∈ [lo, hi]`,
/// responding with the smoothed payoff at temperature `tau`.
///
/// With `locate` (the curve parameter of a user's own point) users ascend
/// from where they stand to the first local maximum, as CCP responses do;
/// without it they jump to the global maximum over the curve.
pub struct CurveResponder {
    pub curve: CurveMap,
    pub locate: Option<CurveLocator>,
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
    pub tau: f64,
}

impl Responder for CurveResponder {
    fn respond(
        &self,
        x: &[f64],
        _tangent: Option<&TangentSpec>,
        model: &LinearScorer,
        cost: &CostSpec,
    ) -> Result<Vec<f64>> {
        match &self.locate {
            Some(locate) => {
                let s0 = locate(x).clamp(self.lo, self.hi);
                curve_local_response(
                    x,
                    model,
                    cost,
                    self.tau,
                    &self.curve,
                    s0,
                    self.lo,
                    self.hi,
                    self.resolution,
                )
            }
            None => curve_best_response(x, model, cost, self.tau, &self.curve, self.lo, self.hi, self.resolution),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub strategic_accuracy: f64,
    pub clean_accuracy: f64,
    /// Mean of `h(Δ(x)) − c(x, Δ(x))` with the hard sign and exact cost.
    pub mean_utility: f64,
    /// Mean minimal cost for positive rows to be accepted; absent when the
    /// cost has no closed-form projection, the model is zero or there are
    /// no positive rows.
    pub mean_burden: Option<f64>,
    /// Share of initially denied users accepted after responding (1 if none denied).
    pub recourse_rate: f64,
    pub n_evaluated: usize,
    pub n_failed: usize,
}

/// Moved points for every row (`Err` where the response failed), in
/// representation space when the model has a feature map.
pub fn responses(
    model: &LinearScorer,
    data: &Dataset,
    cost: &CostSpec,
    responder: &dyn Responder,
) -> Result<(Dataset, Vec<Result<Vec<f64>>>)> {
    let (data, head) = to_representation(model, data)?;
    let moved = map_indexed(data.len(), |i| {
        responder.respond(data.row(i), data.tangent(i), &head, cost)
    });
    Ok((data, moved))
}

fn to_representation(model: &LinearScorer, data: &Dataset) -> Result<(Dataset, LinearScorer)> {
    match model.feature_map() {
        Some(map) => Ok((data.map_features(map)?, model.head())),
        None => Ok((data.clone(), model.clone())),
    }
}

/// Accuracy on unmoved points.
pub fn clean_accuracy(model: &LinearScorer, data: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..data.len() {
        if model.predict(data.row(i))? == data.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Accuracy after responses, over rows whose response succeeded, and the
/// number of failed rows.
pub fn strategic_accuracy(
    model: &LinearScorer,
    data: &Dataset,
    cost: &CostSpec,
    responder: &dyn Responder,
) -> Result<(f64, usize)> {
    let (data, moved) = responses(model, data, cost, responder)?;
    let head = model.head();
    let mut correct = 0usize;
    let mut failed = 0usize;
    for (i, r) in moved.iter().enumerate() {
        match r {
            Ok(xs) => correct += (hard_sign(head.head_score(xs)) == data.label(i)) as usize,
            Err(_) => failed += 1,
        }
    }
    let n = data.len() - failed;
    let acc = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
    Ok((acc, failed))
}

/// All metrics with CCP responses at `eval_response`.
pub fn evaluate(
    model: &LinearScorer,
    data: &Dataset,
    cost: &CostSpec,
    eval_response: &ResponseConfig,
) -> Result<Metrics> {
    evaluate_with(model, data, cost, &CcpResponder { config: *eval_response })
}

pub fn evaluate_with(
    model: &LinearScorer,
    data: &Dataset,
    cost: &CostSpec,
    responder: &dyn Responder,
) -> Result<Metrics> {
    let (rep, moved) = responses(model, data, cost, responder)?;
    let head = model.head();
    let mut correct = 0usize;
    let mut clean_correct = 0usize;
    let mut utility = 0.0;
    let mut denied = 0usize;
    let mut granted = 0usize;
    let mut failed = 0usize;
    for (i, r) in moved.iter().enumerate() {
        let x = rep.row(i);
        let y = rep.label(i);
        let before = hard_sign(head.head_score(x));
        clean_correct += (before == y) as usize;
        let Ok(xs) = r else {
            failed += 1;
            continue;
        };
        let after = hard_sign(head.head_score(xs));
        correct += (after == y) as usize;
        utility += after - cost.value(x, xs, CostMode::Exact)?;
        if before < 0.0 {
            denied += 1;
            granted += (after > 0.0) as usize;
        }
    }
    let n = rep.len() - failed;
    let per = |v: f64| if n == 0 { 0.0 } else { v / n as f64 };
    Ok(Metrics {
        strategic_accuracy: per(correct as f64),
        clean_accuracy: clean_correct as f64 / rep.len() as f64,
        mean_utility: per(utility),
        mean_burden: mean_burden(&head, &rep, cost)?,
        recourse_rate: if denied == 0 {
            1.0
        } else {
            granted as f64 / denied as f64
        },
        n_evaluated: n,
        n_failed: failed,
    })
}

fn mean_burden(head: &LinearScorer, data: &Dataset, cost: &CostSpec) -> Result<Option<f64>> {
    let closed_form = matches!(cost.kind(), CostKind::Quadratic | CostKind::WeightedQuadratic { .. });
    if !closed_form || head.is_zero() {
        return Ok(None);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..data.len() {
        if data.label(i) > 0.0 {
            total += boundary_projection(data.row(i), head, cost)?.0;
            count += 1;
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}
