//! Training-time benchmark across batch sizes.

use std::time::{Duration, Instant};

use serde::Serialize;
use serm_core::cost::CostSpec;
use serm_core::data::{gen_synthetic, SyntheticSpec};
use serm_core::model::LinearScorer;
use serm_core::trainer::{train_serm_observed, TrainConfig, TrainObserver};

use crate::config::BenchSpec;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub batch_size: usize,
    /// Fastest of the repeats.
    pub total_seconds: f64,
    pub ccp_seconds: f64,
    pub ccp_share: f64,
    pub epochs_run: usize,
    pub batches: usize,
    pub best_val_accuracy: f64,
}

#[derive(Default)]
struct Stopwatch {
    started: Option<Instant>,
    ccp: Duration,
    batches: usize,
}

impl TrainObserver for Stopwatch {
    fn responses_started(&mut self) {
        self.started = Some(Instant::now());
    }

    fn responses_finished(&mut self) {
        if let Some(t) = self.started.take() {
            self.ccp += t.elapsed();
            self.batches += 1;
        }
    }
}

/// Mixture in `dim` dimensions with class means `∓0.3·1` and variance 0.1.
pub fn bench_data(n: usize, dim: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec::gaussian_mixture(vec![-0.3; dim], vec![0.3; dim], vec![0.1; dim], vec![0.1; dim], n, seed)
}

/// SERM with quadratic cost at a fixed learning rate, timed per batch size.
pub fn runtime_bench(spec: &BenchSpec, base: &TrainConfig, seed: u64) -> Result<Vec<BenchRow>> {
    let train = gen_synthetic(&bench_data(spec.n_train, spec.dim, seed))?;
    let val = gen_synthetic(&bench_data(spec.n_val, spec.dim, seed.wrapping_add(1)))?;
    let cost = CostSpec::quadratic(1.0)?;
    let init = LinearScorer::zeros(spec.dim)?;
    let mut rows = Vec::new();
    for &batch_size in &spec.batch_sizes {
        let mut cfg = base
            .with_seed(seed)
            .with_batch_size(batch_size)
            .with_learning_rate(1e-2);
        cfg.max_epochs = spec.epochs;
        cfg.patience = spec.epochs - 1;
        let mut best: Option<BenchRow> = None;
        for _ in 0..spec.repeats {
            let mut watch = Stopwatch::default();
            let start = Instant::now();
            let report = train_serm_observed(&train, &val, &init, &cost, &cfg, &mut watch)?;
            let total = start.elapsed().as_secs_f64();
            let ccp = watch.ccp.as_secs_f64();
            let row = BenchRow {
                batch_size,
                total_seconds: total,
                ccp_seconds: ccp,
                ccp_share: if total > 0.0 {
                    (ccp / total).clamp(0.0, 1.0)
                } else {
                    0.0
                },
                epochs_run: report.epochs_run,
                batches: watch.batches,
                best_val_accuracy: report.best_val_accuracy,
            };
            if best.as_ref().is_none_or(|b| row.total_seconds < b.total_seconds) {
                best = Some(row);
            }
        }
        rows.push(best.expect("repeats ≥ 1"));
    }
    Ok(rows)
}
