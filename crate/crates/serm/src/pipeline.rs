//! Data preparation, per-method training and evaluation shared by the CLI,
//! the sweeps and the experiments.

use serm_core::cost::{CostKind, CostSpec};
use serm_core::data::{gen_synthetic, split, standardize_fit_transform, Dataset, Standardizer};
use serm_core::eval::{
    clean_accuracy, evaluate_with, strategic_accuracy, CcpResponder, CurveResponder, ExactResponder, Metrics, Responder,
};
use serm_core::model::LinearScorer;
use serm_core::response::ResponseConfig;
use serm_core::trainer::{
    intercept_baseline, select_learning_rate, train_blind, train_flexible, train_robust, train_serm, CostBox,
    EpochRecord, TrainConfig, TrainReport,
};

use crate::config::{DataSource, EvalResponder, Method, RunConfig};
use crate::csv_io::{load_csv, Reject};
use crate::error::Result;

/// Train/validation/test splits of one seed, standardized when requested.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub standardizer: Option<Standardizer>,
    pub rejects: Vec<Reject>,
}

pub fn load_source(source: &DataSource, seed: u64) -> Result<(Dataset, Vec<Reject>)> {
    match source {
        DataSource::Csv {
            path,
            label_column,
            positive_label,
        } => {
            let loaded = load_csv(path, label_column, positive_label)?;
            Ok((loaded.data, loaded.rejects))
        }
        DataSource::Synthetic(spec) => {
            let mut spec = spec.clone();
            spec.seed = seed;
            Ok((gen_synthetic(&spec)?, Vec::new()))
        }
    }
}

pub fn prepare(cfg: &RunConfig, seed: u64) -> Result<Prepared> {
    let (mut data, rejects) = load_source(&cfg.data, seed)?;
    if cfg.balance {
        data = data.balance_classes(seed)?;
    }
    if !cfg.use_tangents {
        data = data.without_tangents();
    }
    prepare_dataset(&data, seed, cfg.standardize, rejects)
}

pub fn prepare_dataset(data: &Dataset, seed: u64, standardize: bool, rejects: Vec<Reject>) -> Result<Prepared> {
    let s = split(data, seed)?;
    if standardize {
        let (st, train, mut others) = standardize_fit_transform(&s.train, &[&s.val, &s.test])?;
        let test = others.pop().expect("two others");
        let val = others.pop().expect("two others");
        Ok(Prepared {
            train,
            val,
            test,
            standardizer: Some(st),
            rejects,
        })
    } else {
        Ok(Prepared {
            train: s.train,
            val: s.val,
            test: s.test,
            standardizer: None,
            rejects,
        })
    }
}

/// Corners of the ℓ∞ box of radius `radius` around the cost parameters,
/// as costs of the same kind.
pub fn box_candidates(cost: &CostSpec, radius: f64) -> Result<Vec<CostSpec>> {
    Ok(CostBox::new(cost.params().to_vec(), radius)?.corner_costs(cost)?)
}

/// Cost of the same kind with the sweep-style replacement of `γ`.
pub fn with_gamma(cost: &CostSpec, gamma: f64) -> Result<CostSpec> {
    match cost.kind() {
        CostKind::Mixture {
            direction, softness, ..
        } => Ok(CostSpec::new(
            CostKind::Mixture {
                gamma,
                direction: direction.clone(),
                softness: *softness,
            },
            cost.scale(),
        )?),
        _ => Err(serm_core::error::Error::UnsupportedCost("a gamma sweep (needs the mixture cost)").into()),
    }
}

/// The pieces of a run needed to train one method.
#[derive(Debug, Clone)]
pub struct MethodSetup<'a> {
    pub method: Method,
    pub cost: &'a CostSpec,
    pub cost_radius: f64,
    pub train: &'a TrainConfig,
}

/// Trains `method` once per learning rate and keeps the best on validation.
pub fn train_tuned(setup: &MethodSetup<'_>, data: &Prepared, seed: u64, learning_rates: &[f64]) -> Result<TrainReport> {
    let init = LinearScorer::zeros(data.train.dim())?;
    if setup.method == Method::InterceptBaseline {
        return intercept_report(setup, data);
    }
    let candidates = match setup.method {
        Method::Robust => box_candidates(setup.cost, setup.cost_radius)?,
        _ => Vec::new(),
    };
    let cost_box = CostBox::new(setup.cost.params().to_vec(), setup.cost_radius)?;
    let report = select_learning_rate(learning_rates, |lr| {
        let cfg = setup.train.with_seed(seed).with_learning_rate(lr);
        let (train, val) = (&data.train, &data.val);
        match setup.method {
            Method::Blind => train_blind(train, val, &init, &cfg),
            Method::Serm => train_serm(train, val, &init, setup.cost, &cfg),
            Method::Flexible => train_flexible(train, val, &init, &cost_box, setup.cost, &cfg),
            Method::Robust => train_robust(train, val, &init, &candidates, &cfg),
            Method::InterceptBaseline => unreachable!("handled above"),
        }
    })?;
    Ok(report)
}

fn intercept_report(setup: &MethodSetup<'_>, data: &Prepared) -> Result<TrainReport> {
    let (v, coef, _) = setup
        .cost
        .linear_component()
        .ok_or(serm_core::error::Error::UnsupportedCost("the intercept baseline"))?;
    let model = intercept_baseline(&data.train, v, coef)?;
    let val_accuracy = validation_accuracy(setup, &model, None, &data.val)?;
    Ok(TrainReport {
        model,
        cost: None,
        history: vec![EpochRecord {
            epoch: 1,
            train_loss: f64::NAN,
            val_accuracy,
            skipped: 0,
        }],
        epochs_run: 1,
        best_epoch: 1,
        best_val_accuracy: val_accuracy,
        skipped: 0,
        learning_rate: 0.0,
    })
}

/// The score the trainer maximized on validation data for `method`.
pub fn validation_accuracy(
    setup: &MethodSetup<'_>,
    model: &LinearScorer,
    learned_cost: Option<&CostSpec>,
    val: &Dataset,
) -> Result<f64> {
    let responder = CcpResponder {
        config: setup.train.eval_response,
    };
    Ok(match setup.method {
        Method::Blind => clean_accuracy(model, val)?,
        Method::Serm | Method::InterceptBaseline => strategic_accuracy(model, val, setup.cost, &responder)?.0,
        Method::Flexible => strategic_accuracy(model, val, learned_cost.unwrap_or(setup.cost), &responder)?.0,
        Method::Robust => {
            let mut worst = f64::INFINITY;
            for c in box_candidates(setup.cost, setup.cost_radius)? {
                worst = worst.min(strategic_accuracy(model, val, &c, &responder)?.0);
            }
            worst
        }
    })
}

/// Users on the parabola `x₂ = −x₁²` (in raw coordinates) who ascend their
/// smoothed payoff along the curve from where they stand.
pub fn parabola_responder(standardizer: Option<&Standardizer>, tau: f64) -> CurveResponder {
    let (st_fwd, st_inv) = (standardizer.cloned(), standardizer.cloned());
    CurveResponder {
        curve: Box::new(move |u: f64| {
            let p = vec![u, -u * u];
            match &st_fwd {
                Some(s) => s.transform_row(&p),
                None => p,
            }
        }),
        locate: Some(Box::new(move |x: &[f64]| match &st_inv {
            Some(s) => s.inverse_row(x)[0],
            None => x[0],
        })),
        lo: -6.0,
        hi: 6.0,
        resolution: 1e-3,
        tau,
    }
}

pub fn make_responder(
    kind: EvalResponder,
    eval_response: ResponseConfig,
    standardizer: Option<&Standardizer>,
) -> Box<dyn Responder> {
    match kind {
        EvalResponder::Ccp => Box::new(CcpResponder { config: eval_response }),
        EvalResponder::Exact => Box::new(ExactResponder),
        EvalResponder::Parabola => Box::new(parabola_responder(standardizer, eval_response.tau)),
    }
}

pub fn evaluate_on(
    model: &LinearScorer,
    data: &Dataset,
    cost: &CostSpec,
    cfg: &RunConfig,
    standardizer: Option<&Standardizer>,
) -> Result<Metrics> {
    let responder = make_responder(cfg.eval_responder, cfg.train.eval_response, standardizer);
    Ok(evaluate_with(model, data, cost, responder.as_ref())?)
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}
