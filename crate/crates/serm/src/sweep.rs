//! One-variable sweeps over `γ`, the cost scale `t` or `λ`.

use serde::Serialize;
use serm_core::eval::Metrics;

use crate::config::{Method, RunConfig, SweepVariable};
use crate::error::Result;
use crate::pipeline::{evaluate_on, mean_sd, prepare, train_tuned, with_gamma, MethodSetup, Prepared};

/// Split-averaged test metrics of one method at one swept value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub method: Method,
    pub splits: usize,
    pub failed: usize,
    pub status: &'static str,
    pub strategic_accuracy_mean: f64,
    pub strategic_accuracy_sd: f64,
    pub clean_accuracy_mean: f64,
    pub clean_accuracy_sd: f64,
    pub mean_utility_mean: f64,
    pub mean_utility_sd: f64,
    pub mean_burden_mean: Option<f64>,
    pub mean_burden_sd: Option<f64>,
    pub recourse_rate_mean: f64,
    pub recourse_rate_sd: f64,
    pub error: String,
}

fn row(cfg: &RunConfig, value: f64, method: Method, runs: &[Result<Metrics>]) -> SweepRow {
    let ok: Vec<&Metrics> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let error = runs
        .iter()
        .find_map(|r| r.as_ref().err())
        .map_or(String::new(), |e| e.to_string());
    let stat = |f: fn(&Metrics) -> f64| mean_sd(&ok.iter().map(|m| f(m)).collect::<Vec<_>>());
    let (sa, sa_sd) = stat(|m| m.strategic_accuracy);
    let (ca, ca_sd) = stat(|m| m.clean_accuracy);
    let (u, u_sd) = stat(|m| m.mean_utility);
    let (r, r_sd) = stat(|m| m.recourse_rate);
    let burdens: Option<Vec<f64>> = ok.iter().map(|m| m.mean_burden).collect();
    let burden = burdens.filter(|b| !b.is_empty()).map(|b| mean_sd(&b));
    let failed = runs.len() - ok.len();
    SweepRow {
        variable: cfg.sweep.variable,
        value,
        method,
        splits: runs.len(),
        failed,
        status: if failed == 0 { "ok" } else { "failed" },
        strategic_accuracy_mean: sa,
        strategic_accuracy_sd: sa_sd,
        clean_accuracy_mean: ca,
        clean_accuracy_sd: ca_sd,
        mean_utility_mean: u,
        mean_utility_sd: u_sd,
        mean_burden_mean: burden.map(|b| b.0),
        mean_burden_sd: burden.map(|b| b.1),
        recourse_rate_mean: r,
        recourse_rate_sd: r_sd,
        error,
    }
}

fn cell(cfg: &RunConfig, value: f64, method: Method, data: &Prepared, seed: u64) -> Result<Metrics> {
    let (mut cost, mut eval_cost, mut train) = (cfg.cost.clone(), cfg.eval_cost.clone(), cfg.train);
    match cfg.sweep.variable {
        SweepVariable::T => {
            cost = cost.with_scale(value)?;
            eval_cost = eval_cost.with_scale(value)?;
        }
        SweepVariable::Gamma => {
            cost = with_gamma(&cost, value)?;
            eval_cost = with_gamma(&eval_cost, value)?;
        }
        SweepVariable::Lambda => {
            train.objective.lambda = value;
            train.objective.validate()?;
        }
    }
    let setup = MethodSetup {
        method,
        cost: &cost,
        cost_radius: cfg.cost_radius,
        train: &train,
    };
    let report = train_tuned(&setup, data, seed, &cfg.learning_rates)?;
    let users_cost = match (&report.cost, method) {
        (Some(learned), Method::Flexible) => learned.clone(),
        _ => eval_cost,
    };
    evaluate_on(&report.model, &data.test, &users_cost, cfg, data.standardizer.as_ref())
}

/// Rows ordered by value, then by method as listed in the config. A cell
/// whose training fails marks its row failed without stopping the sweep.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let prepared = cfg.seeds.iter().map(|&s| prepare(cfg, s)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &value in &cfg.sweep.values {
        for &method in &cfg.sweep.methods {
            let runs: Vec<Result<Metrics>> = cfg
                .seeds
                .iter()
                .zip(&prepared)
                .map(|(&seed, data)| cell(cfg, value, method, data, seed))
                .collect();
            rows.push(row(cfg, value, method, &runs));
        }
    }
    Ok(rows)
}
