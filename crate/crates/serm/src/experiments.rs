//! The synthetic experiments: flexible costs, unknown costs, manifold
//! movement, the blind-vs-strategic gap and the regularization tradeoff.
//!
//! All run in raw coordinates with a 60/20/20 split per seed, zero
//! initialization and learning rates picked on validation.

use serde::Serialize;
use serm_core::cost::CostSpec;
use serm_core::data::{gen_synthetic, split, Dataset, SyntheticSpec};
use serm_core::eval::{clean_accuracy, evaluate, evaluate_with, Metrics};
use serm_core::model::LinearScorer;
use serm_core::objectives::{ObjectiveConfig, Regularizer};
use serm_core::response::ResponseConfig;
use serm_core::trainer::{
    select_learning_rate, train_blind, train_flexible, train_robust, train_serm, CostBox, TrainConfig, TrainReport,
};

use crate::error::Result;
use crate::pipeline::{mean_sd, parabola_responder};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub n: usize,
    pub seeds: Vec<u64>,
    pub learning_rates: Vec<f64>,
    pub train: TrainConfig,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            n: 1000,
            seeds: (0..5).collect(),
            learning_rates: vec![1e-3, 1e-2, 1e-1],
            train: TrainConfig::default(),
        }
    }
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, sd) = mean_sd(xs);
        Self { mean, sd }
    }
}

struct Splits {
    train: Dataset,
    val: Dataset,
    test: Dataset,
}

fn splits(spec: SyntheticSpec) -> Result<Splits> {
    let seed = spec.seed;
    let s = split(&gen_synthetic(&spec)?, seed)?;
    Ok(Splits {
        train: s.train,
        val: s.val,
        test: s.test,
    })
}

fn tuned<F>(opts: &ExperimentOptions, seed: u64, mut run: F) -> Result<TrainReport>
where
    F: FnMut(&TrainConfig) -> serm_core::error::Result<TrainReport>,
{
    Ok(select_learning_rate(&opts.learning_rates, |lr| {
        run(&opts.train.with_seed(seed).with_learning_rate(lr))
    })?)
}

fn strategic(model: &LinearScorer, test: &Dataset, cost: &CostSpec, eval: &ResponseConfig) -> Result<f64> {
    Ok(evaluate(model, test, cost, eval)?.strategic_accuracy)
}

// ---------------------------------------------------------------- flexible

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlexibleSeed {
    pub seed: u64,
    pub naive: f64,
    pub flexible: f64,
    pub oracle: f64,
    pub learned_cost: Vec<f64>,
    pub oracle_cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlexibleResult {
    pub seeds: Vec<FlexibleSeed>,
    pub naive: Summary,
    pub flexible: Summary,
    pub oracle: Summary,
}

pub fn flexible_data(n: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec::gaussian_mixture(
        vec![-0.5, 0.0],
        vec![0.5, 0.0],
        vec![0.01, 1.0],
        vec![0.01, 1.0],
        n,
        seed,
    )
}

/// Learned cost direction vs the fixed initial `v₀ = [0.5, 0.5]` and an
/// oracle whose `v*` is found by a unit-step grid search over the box
/// `‖v − v₀‖∞ ≤ 2`. Users pay the cost the learner publishes.
pub fn flexible_experiment(opts: &ExperimentOptions) -> Result<FlexibleResult> {
    let v0 = vec![0.5, 0.5];
    let radius = 2.0;
    let base = CostSpec::mixture(0.005, v0.clone(), 1.0)?;
    let cost_box = CostBox::new(v0.clone(), radius)?;
    let eval = opts.train.eval_response;
    let mut seeds = Vec::new();
    for &seed in &opts.seeds {
        let s = splits(flexible_data(opts.n, seed))?;
        let init = LinearScorer::zeros(2)?;
        let naive = tuned(opts, seed, |c| train_serm(&s.train, &s.val, &init, &base, c))?;
        let flex = tuned(opts, seed, |c| {
            train_flexible(&s.train, &s.val, &init, &cost_box, &base, c)
        })?;
        let learned = flex.cost.clone().expect("flexible training returns its cost");
        let oracle_cost = grid_oracle_cost(opts, seed, &s, &base, &v0, radius)?;
        let oracle = tuned(opts, seed, |c| train_serm(&s.train, &s.val, &init, &oracle_cost, c))?;
        seeds.push(FlexibleSeed {
            seed,
            naive: strategic(&naive.model, &s.test, &base, &eval)?,
            flexible: strategic(&flex.model, &s.test, &learned, &eval)?,
            oracle: strategic(&oracle.model, &s.test, &oracle_cost, &eval)?,
            learned_cost: learned.params().to_vec(),
            oracle_cost: oracle_cost.params().to_vec(),
        });
    }
    let pick = |f: fn(&FlexibleSeed) -> f64| Summary::of(&seeds.iter().map(f).collect::<Vec<_>>());
    Ok(FlexibleResult {
        naive: pick(|s| s.naive),
        flexible: pick(|s| s.flexible),
        oracle: pick(|s| s.oracle),
        seeds,
    })
}

/// Grid point of the box whose SERM model scores best on validation
/// (learning rate 0.1; ties keep the first point in row-major order).
fn grid_oracle_cost(
    opts: &ExperimentOptions,
    seed: u64,
    s: &Splits,
    base: &CostSpec,
    center: &[f64],
    radius: f64,
) -> Result<CostSpec> {
    let steps = radius.floor() as i64;
    let init = LinearScorer::zeros(2)?;
    let cfg = opts.train.with_seed(seed).with_learning_rate(0.1);
    let mut best: Option<(f64, CostSpec)> = None;
    for i in -steps..=steps {
        for j in -steps..=steps {
            let v = [center[0] + i as f64, center[1] + j as f64];
            let c = base.with_params(&v)?;
            let r = train_serm(&s.train, &s.val, &init, &c, &cfg)?;
            if best.as_ref().is_none_or(|b| r.best_val_accuracy > b.0) {
                best = Some((r.best_val_accuracy, c));
            }
        }
    }
    Ok(best.expect("nonempty grid").1)
}

// ------------------------------------------------------------------ robust

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustSeed {
    pub seed: u64,
    pub benchmark: f64,
    pub blind: f64,
    pub naive: f64,
    pub robust: f64,
    pub oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustResult {
    pub seeds: Vec<RobustSeed>,
    pub benchmark: Summary,
    pub blind: Summary,
    pub naive: Summary,
    pub robust: Summary,
    pub oracle: Summary,
}

pub fn robust_data(n: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec::gaussian_mixture(
        vec![-0.6, 0.0],
        vec![0.6, 0.0],
        vec![0.01, 0.01],
        vec![0.01, 0.01],
        n,
        seed,
    )
}

/// Users pay the weighted quadratic cost `v* = [0.5, 0.5]`. Naive trains
/// with `v₀ = [2, 2]`, robust is minmax over `{[0.3, 0.3], [3.7, 3.7]}`.
pub fn robust_experiment(opts: &ExperimentOptions) -> Result<RobustResult> {
    let truth = CostSpec::weighted_quadratic(vec![0.5, 0.5], 1.0)?;
    let v0 = CostSpec::weighted_quadratic(vec![2.0, 2.0], 1.0)?;
    let candidates = vec![
        CostSpec::weighted_quadratic(vec![0.3, 0.3], 1.0)?,
        CostSpec::weighted_quadratic(vec![3.7, 3.7], 1.0)?,
    ];
    let eval = opts.train.eval_response;
    let mut seeds = Vec::new();
    for &seed in &opts.seeds {
        let s = splits(robust_data(opts.n, seed))?;
        let init = LinearScorer::zeros(2)?;
        let blind = tuned(opts, seed, |c| train_blind(&s.train, &s.val, &init, c))?;
        let naive = tuned(opts, seed, |c| train_serm(&s.train, &s.val, &init, &v0, c))?;
        let robust = tuned(opts, seed, |c| train_robust(&s.train, &s.val, &init, &candidates, c))?;
        let oracle = tuned(opts, seed, |c| train_serm(&s.train, &s.val, &init, &truth, c))?;
        seeds.push(RobustSeed {
            seed,
            benchmark: clean_accuracy(&blind.model, &s.test)?,
            blind: strategic(&blind.model, &s.test, &truth, &eval)?,
            naive: strategic(&naive.model, &s.test, &truth, &eval)?,
            robust: strategic(&robust.model, &s.test, &truth, &eval)?,
            oracle: strategic(&oracle.model, &s.test, &truth, &eval)?,
        });
    }
    let pick = |f: fn(&RobustSeed) -> f64| Summary::of(&seeds.iter().map(f).collect::<Vec<_>>());
    Ok(RobustResult {
        benchmark: pick(|s| s.benchmark),
        blind: pick(|s| s.blind),
        naive: pick(|s| s.naive),
        robust: pick(|s| s.robust),
        oracle: pick(|s| s.oracle),
        seeds,
    })
}

// ---------------------------------------------------------------- manifold

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldSeed {
    pub seed: u64,
    pub blind: f64,
    pub naive: f64,
    pub serm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldResult {
    pub seeds: Vec<ManifoldSeed>,
    pub blind: Summary,
    pub naive: Summary,
    pub serm: Summary,
}

/// Points on `x₂ = −x₁²` with quadratic cost. Test users move along the
/// parabola; naive trains with free movement, SERM with the tangents.
pub fn manifold_experiment(opts: &ExperimentOptions) -> Result<ManifoldResult> {
    let cost = CostSpec::quadratic(1.0)?;
    let responder = parabola_responder(None, opts.train.eval_response.tau);
    let mut seeds = Vec::new();
    for &seed in &opts.seeds {
        let s = splits(SyntheticSpec::parabola(opts.n, seed))?;
        let (train_free, val_free) = (s.train.clone().without_tangents(), s.val.clone().without_tangents());
        let init = LinearScorer::zeros(2)?;
        let blind = tuned(opts, seed, |c| train_blind(&train_free, &val_free, &init, c))?;
        let naive = tuned(opts, seed, |c| train_serm(&train_free, &val_free, &init, &cost, c))?;
        let serm = tuned(opts, seed, |c| train_serm(&s.train, &s.val, &init, &cost, c))?;
        let acc =
            |m: &LinearScorer| -> Result<f64> { Ok(evaluate_with(m, &s.test, &cost, &responder)?.strategic_accuracy) };
        seeds.push(ManifoldSeed {
            seed,
            blind: acc(&blind.model)?,
            naive: acc(&naive.model)?,
            serm: acc(&serm.model)?,
        });
    }
    let pick = |f: fn(&ManifoldSeed) -> f64| Summary::of(&seeds.iter().map(f).collect::<Vec<_>>());
    Ok(ManifoldResult {
        blind: pick(|s| s.blind),
        naive: pick(|s| s.naive),
        serm: pick(|s| s.serm),
        seeds,
    })
}

// ---------------------------------------------------------------- core gap

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub t: f64,
    pub benchmark: Summary,
    pub blind: Summary,
    pub serm: Summary,
}

/// Overlapping Gaussian classes used for the gap and tradeoff experiments.
pub fn overlap_data(n: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec::gaussian_mixture(vec![-0.6, 0.0], vec![0.6, 0.0], vec![0.1, 0.1], vec![0.1, 0.1], n, seed)
}

/// Blind and SERM under the quadratic cost `t·‖x′ − x‖²` for each `t`; the
/// benchmark is the blind model's accuracy on unmoved test points.
pub fn core_gap_experiment(opts: &ExperimentOptions, scales: &[f64]) -> Result<Vec<GapRow>> {
    let eval = opts.train.eval_response;
    let mut rows = Vec::new();
    for &t in scales {
        let cost = CostSpec::quadratic(t)?;
        let (mut bench, mut blind_acc, mut serm_acc) = (vec![], vec![], vec![]);
        for &seed in &opts.seeds {
            let s = splits(overlap_data(opts.n, seed))?;
            let init = LinearScorer::zeros(2)?;
            let blind = tuned(opts, seed, |c| train_blind(&s.train, &s.val, &init, c))?;
            let serm = tuned(opts, seed, |c| train_serm(&s.train, &s.val, &init, &cost, c))?;
            bench.push(clean_accuracy(&blind.model, &s.test)?);
            blind_acc.push(strategic(&blind.model, &s.test, &cost, &eval)?);
            serm_acc.push(strategic(&serm.model, &s.test, &cost, &eval)?);
        }
        rows.push(GapRow {
            t,
            benchmark: Summary::of(&bench),
            blind: Summary::of(&blind_acc),
            serm: Summary::of(&serm_acc),
        });
    }
    Ok(rows)
}

// --------------------------------------------------------------- tradeoff

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub regularizer: Regularizer,
    pub lambda: f64,
    pub strategic_accuracy: Summary,
    /// Utility, burden or recourse rate, matching the regularizer.
    pub social: Summary,
}

impl TradeoffRow {
    /// Whether a larger social value is better for this regularizer.
    pub fn higher_is_better(&self) -> bool {
        !matches!(self.regularizer, Regularizer::Burden)
    }
}

pub fn social_metric(regularizer: Regularizer, m: &Metrics) -> f64 {
    match regularizer {
        Regularizer::Burden => m.mean_burden.unwrap_or(f64::NAN),
        Regularizer::Recourse => m.recourse_rate,
        Regularizer::Utility | Regularizer::None => m.mean_utility,
    }
}

/// SERM with each regularizer over the `lambdas` grid at quadratic cost `t`.
/// The learning rate is tuned once per seed at `λ = 0` and reused.
pub fn tradeoff_experiment(
    opts: &ExperimentOptions,
    data: fn(usize, u64) -> SyntheticSpec,
    t: f64,
    lambdas: &[f64],
) -> Result<Vec<TradeoffRow>> {
    let cost = CostSpec::quadratic(t)?;
    let eval = opts.train.eval_response;
    let regs = [Regularizer::Utility, Regularizer::Burden, Regularizer::Recourse];
    let mut acc = vec![vec![Vec::new(); lambdas.len()]; regs.len()];
    let mut social = acc.clone();
    for &seed in &opts.seeds {
        let s = splits(data(opts.n, seed))?;
        let init = LinearScorer::zeros(2)?;
        let lr = tuned(opts, seed, |c| train_serm(&s.train, &s.val, &init, &cost, c))?.learning_rate;
        for (r, &reg) in regs.iter().enumerate() {
            for (l, &lambda) in lambdas.iter().enumerate() {
                let mut cfg = opts.train.with_seed(seed).with_learning_rate(lr);
                cfg.objective = ObjectiveConfig::new(reg, lambda)?;
                let report = train_serm(&s.train, &s.val, &init, &cost, &cfg)?;
                let m = evaluate(&report.model, &s.test, &cost, &eval)?;
                acc[r][l].push(m.strategic_accuracy);
                social[r][l].push(social_metric(reg, &m));
            }
        }
    }
    let mut rows = Vec::new();
    for (r, &reg) in regs.iter().enumerate() {
        for (l, &lambda) in lambdas.iter().enumerate() {
            rows.push(TradeoffRow {
                regularizer: reg,
                lambda,
                strategic_accuracy: Summary::of(&acc[r][l]),
                social: Summary::of(&social[r][l]),
            });
        }
    }
    Ok(rows)
}
