//! Training loops: blind ERM, strategic ERM, flexible-cost, robust minmax,
//! and the intercept-search baseline.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::cost::{CostKind, CostSpec};
use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::eval::{clean_accuracy, strategic_accuracy, CcpResponder};
use crate::math::dot;
use crate::model::LinearScorer;
use crate::objectives::{
    assemble_objective, clean_loss, select_worst, solve_responses, BatchObjective, Objective, ObjectiveConfig, Term,
};
use crate::response::ResponseConfig;

/// Smallest weight a learned weighted-quadratic cost may take.
pub const MIN_COST_WEIGHT: f64 = 1e-3;
/// Largest box dimension whose corners are enumerated automatically.
pub const MAX_CORNER_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub objective: ObjectiveConfig,
    pub response: ResponseConfig,
    pub eval_response: ResponseConfig,
    pub seed: u64,
    /// Abort once more than this share of an epoch's response solves fail.
    pub max_failure_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 64,
            max_epochs: 10,
            patience: 2,
            objective: ObjectiveConfig::default(),
            response: ResponseConfig::training(),
            eval_response: ResponseConfig::evaluation(),
            seed: 0,
            max_failure_rate: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.adam.learning_rate = lr;
        self
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_batch_size(self, batch_size: usize) -> Self {
        Self { batch_size, ..self }
    }

    pub fn validate(&self, train_len: usize) -> Result<()> {
        self.adam.validate()?;
        self.objective.validate()?;
        self.response.validate()?;
        self.eval_response.validate()?;
        if self.batch_size == 0 || self.batch_size > train_len {
            return Err(Error::InvalidConfig(alloc::format!(
                "batch_size must lie in 1..={train_len}, got {}",
                self.batch_size
            )));
        }
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return Err(Error::InvalidConfig(
                "need max_epochs ≥ 1 and patience < max_epochs".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return Err(Error::InvalidConfig("max_failure_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// ℓ∞ ball of cost parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBox {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl CostBox {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(
                "cost box needs finite center and radius ≥ 0".into(),
            ));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.center.len()
            && v.iter()
                .zip(&self.center)
                .all(|(a, c)| (a - c).abs() <= self.radius * (1.0 + 1e-12))
    }

    pub fn project(&self, v: &mut [f64]) {
        for (a, c) in v.iter_mut().zip(&self.center) {
            *a = a.clamp(c - self.radius, c + self.radius);
        }
    }

    /// All `2^p` corners, first coordinate varying slowest.
    pub fn corners(&self) -> Result<Vec<Vec<f64>>> {
        let p = self.center.len();
        if p > MAX_CORNER_DIM {
            return Err(Error::InvalidConfig(alloc::format!(
                "cost box of dimension {p} needs an explicit candidate list"
            )));
        }
        Ok((0..1usize << p)
            .map(|mask| {
                (0..p)
                    .map(|j| {
                        let up = mask >> (p - 1 - j) & 1 == 1;
                        self.center[j] + if up { self.radius } else { -self.radius }
                    })
                    .collect()
            })
            .collect())
    }

    /// Candidate costs at the box corners, built on `base`.
    pub fn corner_costs(&self, base: &CostSpec) -> Result<Vec<CostSpec>> {
        check_dim("cost box", base.num_params(), self.center.len())?;
        self.corners()?.iter().map(|v| base.with_params(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: LinearScorer,
    /// Learned cost for flexible training.
    pub cost: Option<CostSpec>,
    pub history: Vec<EpochRecord>,
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub skipped: usize,
    pub learning_rate: f64,
}

impl TrainReport {
    /// Training loss recorded in the best epoch.
    pub fn best_train_loss(&self) -> f64 {
        self.history[self.best_epoch - 1].train_loss
    }
}

/// Hooks called from the training loop, used for progress and profiling.
pub trait TrainObserver {
    fn responses_started(&mut self) {}
    fn responses_finished(&mut self) {}
    fn epoch_finished(&mut self, _record: &EpochRecord) {}
}

/// Observer that ignores every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl TrainObserver for NoObserver {}

enum Method<'a> {
    Blind,
    Serm(&'a CostSpec),
    Flexible(&'a CostSpec, &'a CostBox),
    Robust(&'a [CostSpec]),
}

/// Standard ERM on unmoved points; validation on clean accuracy.
pub fn train_blind(train: &Dataset, val: &Dataset, init: &LinearScorer, config: &TrainConfig) -> Result<TrainReport> {
    train_loop(train, val, init, Method::Blind, config, &mut NoObserver)
}

/// Strategic ERM: the loss is taken at the users' smoothed responses.
pub fn train_serm(
    train: &Dataset,
    val: &Dataset,
    init: &LinearScorer,
    cost: &CostSpec,
    config: &TrainConfig,
) -> Result<TrainReport> {
    train_serm_observed(train, val, init, cost, config, &mut NoObserver)
}

pub fn train_serm_observed(
    train: &Dataset,
    val: &Dataset,
    init: &LinearScorer,
    cost: &CostSpec,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    train_loop(train, val, init, Method::Serm(cost), config, observer)
}

/// Joint training of the model and the cost parameters of `base`, kept
/// inside `cost_box` by projection after each step.
pub fn train_flexible(
    train: &Dataset,
    val: &Dataset,
    init: &LinearScorer,
    cost_box: &CostBox,
    base: &CostSpec,
    config: &TrainConfig,
) -> Result<TrainReport> {
    if base.num_params() == 0 {
        return Err(Error::UnsupportedCost("flexible training"));
    }
    check_dim("cost box", base.num_params(), cost_box.center.len())?;
    train_loop(
        train,
        val,
        init,
        Method::Flexible(base, cost_box),
        config,
        &mut NoObserver,
    )
}

/// Minmax training against every candidate cost. Validation accuracy is the
/// worst strategic accuracy across candidates.
pub fn train_robust(
    train: &Dataset,
    val: &Dataset,
    init: &LinearScorer,
    candidates: &[CostSpec],
    config: &TrainConfig,
) -> Result<TrainReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("robust training needs candidate costs".into()));
    }
    train_loop(train, val, init, Method::Robust(candidates), config, &mut NoObserver)
}

/// Trains once per learning rate and keeps the best validation accuracy.
/// Ties go to the lower training loss at the best epoch, then to the earlier rate.
pub fn select_learning_rate<F>(grid: &[f64], mut run: F) -> Result<TrainReport>
where
    F: FnMut(f64) -> Result<TrainReport>,
{
    let mut best: Option<TrainReport> = None;
    for &lr in grid {
        let report = run(lr)?;
        let better = best.as_ref().is_none_or(|b| {
            report.best_val_accuracy > b.best_val_accuracy
                || (report.best_val_accuracy == b.best_val_accuracy && report.best_train_loss() < b.best_train_loss())
        });
        if better {
            best = Some(report);
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty learning-rate grid".into()))
}

fn check_model(data: &Dataset, model: &LinearScorer) -> Result<()> {
    check_dim("dataset vs model", model.input_dim(), data.dim())
}

fn representation(data: &Dataset, model: &LinearScorer) -> Result<Dataset> {
    match model.feature_map() {
        Some(map) => data.map_features(map),
        None => Ok(data.clone()),
    }
}

fn train_loop(
    train: &Dataset,
    val: &Dataset,
    init: &LinearScorer,
    method: Method<'_>,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    config.validate(train.len())?;
    check_model(train, init)?;
    check_model(val, init)?;
    let train_rep = representation(train, init)?;
    let k = init.dim();

    let mut cost = match method {
        Method::Serm(c) => Some(c.clone()),
        Method::Flexible(c, b) => {
            let mut v = c.params().to_vec();
            project_params(c, b, &mut v);
            Some(c.with_params(&v)?)
        }
        _ => None,
    };
    if let Some(c) = &cost {
        c.check_dim(k)?;
    }
    if let Method::Robust(cands) = method {
        for c in cands {
            c.check_dim(k)?;
        }
    }
    let n_cost = match method {
        Method::Flexible(c, _) => c.num_params(),
        _ => 0,
    };

    let mut params: Vec<f64> = init.weights().to_vec();
    params.push(init.intercept());
    if let Some(c) = &cost {
        params.extend_from_slice(&c.params()[..n_cost]);
    }
    let mut state = AdamState::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let terms = config.objective.terms();

    let mut model = init.clone();
    let mut best: Option<(f64, usize, LinearScorer, Option<CostSpec>)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut skipped_total = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        let mut skipped = 0usize;
        for batch in order.chunks(config.batch_size) {
            let head = model.head();
            let step = match method {
                Method::Blind => {
                    let o = clean_loss(&train_rep, batch, &head)?;
                    BatchObjective {
                        value: o.value,
                        gradient: o.gradient,
                        evaluated: batch.len(),
                        failed: Vec::new(),
                    }
                }
                Method::Serm(_) | Method::Flexible(..) => {
                    let c = cost.as_ref().expect("cost set");
                    // burden has no boundary to project on while w = 0
                    let step_terms: Vec<(Term, f64)> = if head.is_zero() {
                        terms.iter().copied().filter(|(t, _)| *t != Term::Burden).collect()
                    } else {
                        terms.clone()
                    };
                    observed_objective(&train_rep, batch, &head, c, config, &step_terms, observer)?
                }
                Method::Robust(cands) => {
                    let mut outs = Vec::with_capacity(cands.len());
                    for c in cands {
                        outs.push(observed_objective(
                            &train_rep,
                            batch,
                            &head,
                            c,
                            config,
                            &[(Term::StrategicLoss, 1.0)],
                            observer,
                        )?);
                    }
                    let worst = select_worst(
                        outs.iter()
                            .map(|o| Objective {
                                value: o.value,
                                gradient: o.gradient.clone(),
                            })
                            .collect(),
                    )?;
                    outs.swap_remove(worst.index)
                }
            };
            skipped += step.failed.len();
            if step.evaluated == 0 {
                continue;
            }
            loss_sum += step.value * step.evaluated as f64;
            loss_count += step.evaluated;
            let grad = &step.gradient[..params.len()];
            adam_step(&mut params, grad, &mut state, &config.adam)?;
            if let Method::Flexible(base, cost_box) = method {
                project_params(base, cost_box, &mut params[k + 1..]);
                debug_assert!(
                    cost_box.contains(&params[k + 1..]) || matches!(base.kind(), CostKind::WeightedQuadratic { .. })
                );
                cost = Some(base.with_params(&params[k + 1..])?);
            }
            model.set_params(&params[..k], params[k]);
        }
        if skipped as f64 > config.max_failure_rate * train.len() as f64 {
            return Err(Error::TooManyFailures {
                epoch,
                failed: skipped,
                total: train.len(),
            });
        }
        skipped_total += skipped;

        let val_accuracy = validation_accuracy(&model, val, &method, cost.as_ref(), config)?;
        let record = EpochRecord {
            epoch,
            train_loss: if loss_count > 0 {
                loss_sum / loss_count as f64
            } else {
                f64::NAN
            },
            val_accuracy,
            skipped,
        };
        observer.epoch_finished(&record);
        history.push(record);
        if best.as_ref().is_none_or(|b| val_accuracy > b.0) {
            best = Some((val_accuracy, epoch, model.clone(), cost.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    let (best_val_accuracy, best_epoch, best_model, best_cost) = best.expect("at least one epoch");
    Ok(TrainReport {
        model: best_model,
        cost: match method {
            Method::Flexible(..) => best_cost,
            _ => None,
        },
        epochs_run: history.len(),
        history,
        best_epoch,
        best_val_accuracy,
        skipped: skipped_total,
        learning_rate: config.adam.learning_rate,
    })
}

fn observed_objective(
    data: &Dataset,
    rows: &[usize],
    head: &LinearScorer,
    cost: &CostSpec,
    config: &TrainConfig,
    terms: &[(Term, f64)],
    observer: &mut dyn TrainObserver,
) -> Result<BatchObjective> {
    observer.responses_started();
    let outcomes = solve_responses(data, rows, head, cost, &config.response);
    observer.responses_finished();
    assemble_objective(data, rows, head, cost, &config.response, terms, &outcomes)
}

/// Box projection, plus a positivity floor for weighted-quadratic weights.
fn project_params(base: &CostSpec, cost_box: &CostBox, v: &mut [f64]) {
    cost_box.project(v);
    if let CostKind::WeightedQuadratic { .. } = base.kind() {
        v.iter_mut().for_each(|a| *a = a.max(MIN_COST_WEIGHT));
    }
}

fn validation_accuracy(
    model: &LinearScorer,
    val: &Dataset,
    method: &Method<'_>,
    cost: Option<&CostSpec>,
    config: &TrainConfig,
) -> Result<f64> {
    let responder = CcpResponder {
        config: config.eval_response,
    };
    match method {
        Method::Blind => clean_accuracy(model, val),
        Method::Serm(_) | Method::Flexible(..) => {
            Ok(strategic_accuracy(model, val, cost.expect("cost set"), &responder)?.0)
        }
        Method::Robust(cands) => {
            let mut worst = f64::INFINITY;
            for c in cands.iter() {
                worst = worst.min(strategic_accuracy(model, val, c, &responder)?.0);
            }
            Ok(worst)
        }
    }
}

/// Baseline for linear-separable costs: fixes `w = v` and picks the intercept
/// maximizing training accuracy when users move as under the pure linear
/// cost `coef·max(0, v·(x′ − x))`.
///
/// Under that cost raising the score by `Δ` costs `coef·Δ`, so a user is
/// accepted iff `v·x + b > −2/coef`. Candidate thresholds are midpoints
/// between consecutive distinct projected scores plus one point beyond each end.
pub fn intercept_baseline(train: &Dataset, v: &[f64], coef: f64) -> Result<LinearScorer> {
    check_dim("baseline direction", train.dim(), v.len())?;
    if !(coef > 0.0 && coef.is_finite()) {
        return Err(Error::InvalidConfig("linear cost coefficient must be positive".into()));
    }
    let mut scored: Vec<(f64, f64)> = (0..train.len())
        .map(|i| (dot(v, train.row(i)), train.label(i)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut candidates = vec![scored[0].0 - 1.0];
    for pair in scored.windows(2) {
        if pair[1].0 > pair[0].0 {
            candidates.push(0.5 * (pair[0].0 + pair[1].0));
        }
    }
    candidates.push(scored[scored.len() - 1].0 + 1.0);

    // accuracy with everything accepted, then sweep the threshold upward
    let mut correct = scored.iter().filter(|s| s.1 > 0.0).count() as i64;
    let mut best = (correct, candidates[0]);
    let mut next = 0;
    for &theta in &candidates[1..] {
        while next < scored.len() && scored[next].0 < theta {
            correct += if scored[next].1 > 0.0 { -1 } else { 1 };
            next += 1;
        }
        if correct > best.0 {
            best = (correct, theta);
        }
    }
    LinearScorer::new(v.to_vec(), -best.1 - 2.0 / coef)
}
