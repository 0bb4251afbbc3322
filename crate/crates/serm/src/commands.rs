//! The `serm` subcommands. Each writes its outputs, the resolved
//! `config.txt` and a `manifest.json` under the configured output directory.
//! Per-seed outputs live in `seed-<s>/`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serm_core::data::Dataset;
use serm_core::eval::{responses, Metrics};
use serm_core::response::hard_payoff;
use serm_core::trainer::TrainReport;

use crate::bench::runtime_bench;
use crate::config::{DataSource, Method, RunConfig};
use crate::csv_io::{write_dataset_csv, write_rows, Reject};
use crate::error::{Error, Result};
use crate::model_file::ModelFile;
use crate::pipeline::{
    evaluate_on, load_source, prepare, prepare_dataset, train_tuned, validation_accuracy, MethodSetup,
};
use crate::sweep::run_sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Train,
    Evaluate,
    Respond,
    Sweep,
    Synth,
    Bench,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub status: &'static str,
    pub config: &'static str,
    pub seeds: Vec<u64>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

/// Machine-readable failure record, written as `error.json` when possible.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub details: Vec<String>,
}

impl ErrorRecord {
    pub fn from_error(e: &Error) -> Self {
        Self {
            status: "error",
            kind: e.kind(),
            message: e.to_string(),
            details: match e {
                Error::Config(all) => all.clone(),
                _ => Vec::new(),
            },
        }
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Registers `rel` and returns its full path, creating parent directories.
    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(Error::io(parent))?;
        }
        self.files.push(rel.to_string());
        Ok(p)
    }

    fn json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let p = self.path(rel)?;
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&p, text + "\n").map_err(Error::io(p))
    }

    fn finish(mut self, command: Command, cfg: &RunConfig) -> Result<Manifest> {
        let p = self.dir.join("config.txt");
        fs::write(&p, cfg.raw.to_text()).map_err(Error::io(p))?;
        let manifest = Manifest {
            tool: "serm",
            version: env!("CARGO_PKG_VERSION"),
            command,
            status: "ok",
            config: "config.txt",
            seeds: cfg.seeds.clone(),
            outputs: std::mem::take(&mut self.files),
        };
        let p = self.dir.join("manifest.json");
        fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n").map_err(Error::io(p))?;
        Ok(manifest)
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Manifest> {
    let mut out = Outputs::new(&cfg.out)?;
    match command {
        Command::Train => cmd_train(cfg, &mut out)?,
        Command::Evaluate => cmd_evaluate(cfg, &mut out)?,
        Command::Respond => cmd_respond(cfg, &mut out)?,
        Command::Sweep => cmd_sweep(cfg, &mut out)?,
        Command::Synth => cmd_synth(cfg, &mut out)?,
        Command::Bench => cmd_bench(cfg, &mut out)?,
    }
    out.finish(command, cfg)
}

/// Writes the failure record next to where the manifest would go.
pub fn write_error_record(dir: &Path, record: &ErrorRecord) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let p = dir.join("error.json");
    fs::write(&p, serde_json::to_string_pretty(record)? + "\n").map_err(Error::io(p))
}

#[derive(Debug, Clone, Serialize)]
struct TrainRecord<'a> {
    seed: u64,
    method: Method,
    validation_accuracy: f64,
    rejects: &'a [Reject],
    report: &'a TrainReport,
}

fn setup(cfg: &RunConfig, method: Method) -> MethodSetup<'_> {
    MethodSetup {
        method,
        cost: &cfg.cost,
        cost_radius: cfg.cost_radius,
        train: &cfg.train,
    }
}

fn cmd_train(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    for &seed in &cfg.seeds {
        let data = prepare(cfg, seed)?;
        let report = train_tuned(&setup(cfg, cfg.method), &data, seed, &cfg.learning_rates)?;
        let cost = match cfg.method {
            Method::Blind => None,
            Method::Flexible => report.cost.clone(),
            _ => Some(cfg.cost.clone()),
        };
        let file = ModelFile {
            method: cfg.method.name().to_string(),
            model: report.model.clone(),
            standardizer: data.standardizer.clone(),
            cost,
        };
        file.save(&out.path(&format!("seed-{seed}/model.txt"))?)?;
        out.json(
            &format!("seed-{seed}/train_report.json"),
            &TrainRecord {
                seed,
                method: cfg.method,
                validation_accuracy: report.best_val_accuracy,
                rejects: &data.rejects,
                report: &report,
            },
        )?;
    }
    Ok(())
}

fn load_model(cfg: &RunConfig) -> Result<ModelFile> {
    let path = cfg
        .model
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["model: required for this command".into()]))?;
    ModelFile::load(path)
}

/// Splits for `seed` transformed with the model's own standardizer.
fn splits_for_model(cfg: &RunConfig, file: &ModelFile, seed: u64) -> Result<(Dataset, Dataset, Vec<Reject>)> {
    let (mut data, rejects) = load_source(&cfg.data, seed)?;
    if cfg.balance {
        data = data.balance_classes(seed)?;
    }
    if !cfg.use_tangents {
        data = data.without_tangents();
    }
    let p = prepare_dataset(&data, seed, false, rejects)?;
    match &file.standardizer {
        Some(st) => Ok((st.transform(&p.val)?, st.transform(&p.test)?, p.rejects)),
        None => Ok((p.val, p.test, p.rejects)),
    }
}

#[derive(Debug, Clone, Serialize)]
struct EvalRecord {
    seed: u64,
    method: String,
    /// The quantity training maximized on validation data.
    validation_accuracy: f64,
    validation: Metrics,
    test: Metrics,
}

#[derive(Debug, Clone, Serialize)]
struct MetricsRow {
    seed: u64,
    split: &'static str,
    strategic_accuracy: f64,
    clean_accuracy: f64,
    mean_utility: f64,
    mean_burden: Option<f64>,
    recourse_rate: f64,
    n_evaluated: usize,
    n_failed: usize,
}

impl MetricsRow {
    fn new(seed: u64, split: &'static str, m: &Metrics) -> Self {
        Self {
            seed,
            split,
            strategic_accuracy: m.strategic_accuracy,
            clean_accuracy: m.clean_accuracy,
            mean_utility: m.mean_utility,
            mean_burden: m.mean_burden,
            recourse_rate: m.recourse_rate,
            n_evaluated: m.n_evaluated,
            n_failed: m.n_failed,
        }
    }
}

fn cmd_evaluate(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let file = load_model(cfg)?;
    let method: Method = file.method.parse().map_err(|e: String| Error::Parse {
        context: "model file",
        line: 2,
        message: e,
    })?;
    let users_cost = match (method, &file.cost) {
        (Method::Flexible, Some(learned)) => learned.clone(),
        _ => cfg.eval_cost.clone(),
    };
    let (mut records, mut rows) = (Vec::new(), Vec::new());
    for &seed in &cfg.seeds {
        let (val, test, _) = splits_for_model(cfg, &file, seed)?;
        let st = file.standardizer.as_ref();
        let validation = evaluate_on(&file.model, &val, &users_cost, cfg, st)?;
        let test_metrics = evaluate_on(&file.model, &test, &users_cost, cfg, st)?;
        let validation_accuracy = validation_accuracy(&setup(cfg, method), &file.model, file.cost.as_ref(), &val)?;
        rows.push(MetricsRow::new(seed, "validation", &validation));
        rows.push(MetricsRow::new(seed, "test", &test_metrics));
        records.push(EvalRecord {
            seed,
            method: file.method.clone(),
            validation_accuracy,
            validation,
            test: test_metrics,
        });
    }
    out.json("metrics.json", &records)?;
    write_rows(&out.path("metrics.csv")?, &rows)
}

fn cmd_respond(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let file = load_model(cfg)?;
    let cost = match &file.cost {
        Some(c) if file.method == Method::Flexible.name() => c.clone(),
        _ => cfg.eval_cost.clone(),
    };
    for &seed in &cfg.seeds {
        let (raw, _) = load_source(&cfg.data, seed)?;
        let raw = if cfg.use_tangents { raw } else { raw.without_tangents() };
        let data = match &file.standardizer {
            Some(st) => st.transform(&raw)?,
            None => raw,
        };
        let responder =
            crate::pipeline::make_responder(cfg.eval_responder, cfg.train.eval_response, file.standardizer.as_ref());
        let (rep, moved) = responses(&file.model, &data, &cost, responder.as_ref())?;
        // raw units when the model scores standardized features directly
        let to_raw = |z: &[f64]| match (&file.standardizer, file.model.feature_map()) {
            (Some(st), None) => st.inverse_row(z),
            _ => z.to_vec(),
        };
        let head = file.model.head();
        let d = rep.dim();
        let mut w = csv::Writer::from_path(out.path(&format!("seed-{seed}/responses.csv"))?)?;
        let mut header = vec!["index".to_string(), "label".to_string()];
        header.extend((1..=d).map(|j| format!("x{j}")));
        header.extend((1..=d).map(|j| format!("x_star{j}")));
        header.extend([
            "score".into(),
            "score_star".into(),
            "payoff".into(),
            "moved".into(),
            "error".into(),
        ]);
        w.write_record(&header)?;
        for (i, r) in moved.iter().enumerate() {
            let x = rep.row(i);
            let mut rec = vec![i.to_string(), rep.label(i).to_string()];
            rec.extend(to_raw(x).iter().map(f64::to_string));
            match r {
                Ok(xs) => {
                    rec.extend(to_raw(xs).iter().map(f64::to_string));
                    rec.push(head.head_score(x).to_string());
                    rec.push(head.head_score(xs).to_string());
                    rec.push(hard_payoff(x, xs, &head, &cost).to_string());
                    rec.push((xs != x).to_string());
                    rec.push(String::new());
                }
                Err(e) => {
                    rec.extend(std::iter::repeat_n(String::new(), d));
                    rec.push(head.head_score(x).to_string());
                    rec.extend([String::new(), String::new(), String::new(), e.to_string()]);
                }
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(Error::io(&cfg.out))?;
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let rows = run_sweep(cfg)?;
    out.json("sweep.json", &rows)?;
    write_rows(&out.path("sweep.csv")?, &rows)
}

fn cmd_synth(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    if !matches!(cfg.data, DataSource::Synthetic(_)) {
        return Err(Error::Config(vec!["data: synth needs `data = synthetic`".into()]));
    }
    for &seed in &cfg.seeds {
        let (data, _) = load_source(&cfg.data, seed)?;
        write_dataset_csv(&out.path(&format!("seed-{seed}/dataset.csv"))?, &data)?;
    }
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let rows = runtime_bench(&cfg.bench, &cfg.train, cfg.seeds[0])?;
    out.json("bench.json", &rows)?;
    write_rows(&out.path("bench.csv")?, &rows)
}
