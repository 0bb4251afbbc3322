//! Flat `key = value` run configuration.
//!
//! Resolution order is built-in defaults, then the config file, then
//! `--set key=value` overrides. The merged map is what a run records, so
//! feeding a recorded `config.txt` back in replays the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serm_core::cost::{CostKind, CostSpec};
use serm_core::data::SyntheticSpec;
use serm_core::objectives::{ObjectiveConfig, Regularizer};
use serm_core::response::JacobianMode;
use serm_core::trainer::TrainConfig;

use crate::error::{Error, Result};

const DEFAULTS: &[(&str, &str)] = &[
    ("data", "synthetic"),
    ("data.label_column", "label"),
    ("data.positive_label", "1"),
    ("data.balance", "false"),
    ("data.standardize", "true"),
    ("data.tangents", "true"),
    ("synthetic.kind", "gaussian_mixture"),
    ("synthetic.n", "1000"),
    ("synthetic.negative_mean", "-0.6,0"),
    ("synthetic.positive_mean", "0.6,0"),
    ("synthetic.negative_variance", "0.01,0.01"),
    ("synthetic.positive_variance", "0.01,0.01"),
    ("synthetic.label_noise", "0"),
    ("method", "serm"),
    ("cost.kind", "quadratic"),
    ("cost.scale", "1"),
    ("cost.weights", ""),
    ("cost.direction", ""),
    ("cost.gamma", ""),
    ("cost.softness", "50"),
    ("cost.radius", "1"),
    ("eval.cost_params", ""),
    ("eval.cost_scale", ""),
    ("eval.responder", "ccp"),
    ("eval.tau", "0.2"),
    ("objective.regularizer", "none"),
    ("objective.lambda", "0"),
    ("objective.masked_recourse", "false"),
    ("train.learning_rates", "0.001,0.01,0.1"),
    ("train.batch_size", "64"),
    ("train.max_epochs", "10"),
    ("train.patience", "2"),
    ("train.tau", "1"),
    ("train.tol", "0.001"),
    ("train.max_iter", "100"),
    ("train.max_failure_rate", "0.01"),
    ("train.jacobian", "fixed_point"),
    ("seeds", "0"),
    ("out", "runs/latest"),
    ("model", ""),
    ("sweep.variable", "t"),
    ("sweep.values", "0.5,1,2"),
    ("sweep.methods", "blind,serm"),
    ("bench.batch_sizes", "8,32,128"),
    ("bench.epochs", "2"),
    ("bench.n_train", "750"),
    ("bench.n_val", "250"),
    ("bench.dim", "5"),
    ("bench.repeats", "3"),
];

/// Merged, untyped configuration. Keys are restricted to the known set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            entries: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RawConfig {
    /// Defaults overlaid with `text`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = raw.set(k.trim(), v.trim()) {
                        errors.push(format!("line {}: {e}", i + 1));
                    }
                }
                None => errors.push(format!("line {}: expected `key = value`, got `{line}`", i + 1)),
            }
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match self.entries.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(format!("unknown key `{key}`")),
        }
    }

    /// Applies `key=value` overrides, reporting every bad one.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        let mut errors = Vec::new();
        for o in overrides {
            let o = o.as_ref();
            match o.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k.trim(), v.trim()) {
                        errors.push(format!("override `{o}`: {e}"));
                    }
                }
                None => errors.push(format!("override `{o}`: expected key=value")),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Blind,
    Serm,
    Flexible,
    Robust,
    InterceptBaseline,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "blind" => Method::Blind,
            "serm" => Method::Serm,
            "flexible" => Method::Flexible,
            "robust" => Method::Robust,
            "intercept_baseline" | "intercept-baseline" => Method::InterceptBaseline,
            _ => return Err(format!("unknown method `{s}`")),
        })
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Blind => "blind",
            Method::Serm => "serm",
            Method::Flexible => "flexible",
            Method::Robust => "robust",
            Method::InterceptBaseline => "intercept_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        label_column: String,
        positive_label: String,
    },
    Synthetic(SyntheticSpec),
}

/// How users respond at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalResponder {
    /// Smoothed CCP responses at `eval.tau`, tangent-constrained when the data has tangents.
    Ccp,
    /// Closed-form hard best responses.
    Exact,
    /// Movement along the parabola `x₂ = −x₁²` in raw coordinates.
    Parabola,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Gamma,
    T,
    Lambda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub batch_sizes: Vec<usize>,
    pub epochs: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub dim: usize,
    pub repeats: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub data: DataSource,
    pub balance: bool,
    pub standardize: bool,
    pub use_tangents: bool,
    pub method: Method,
    pub cost: CostSpec,
    /// ℓ∞ radius of the flexible box or the robust belief set around the cost parameters.
    pub cost_radius: f64,
    /// Cost users actually pay at evaluation.
    pub eval_cost: CostSpec,
    pub eval_responder: EvalResponder,
    pub train: TrainConfig,
    pub learning_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub sweep: SweepSpec,
    pub bench: BenchSpec,
}

struct Fields<'a> {
    raw: &'a RawConfig,
    errors: Vec<String>,
}

impl<'a> Fields<'a> {
    fn str(&self, key: &str) -> &'a str {
        self.raw.get(key).unwrap_or("")
    }

    fn parsed<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let v = self.str(key);
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors.push(format!("{key}: expected {what}, got `{v}`"));
                None
            }
        }
    }

    fn optional<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        if self.str(key).is_empty() {
            None
        } else {
            self.parsed(key, what)
        }
    }

    fn list<T: FromStr>(&mut self, key: &str, what: &str) -> Option<Vec<T>> {
        let v = self.str(key);
        if v.is_empty() {
            return Some(Vec::new());
        }
        let parsed: std::result::Result<Vec<T>, _> = v.split(',').map(|s| s.trim().parse()).collect();
        match parsed {
            Ok(xs) => Some(xs),
            Err(_) => {
                self.errors
                    .push(format!("{key}: expected a comma-separated list of {what}, got `{v}`"));
                None
            }
        }
    }

    fn nonempty<T: FromStr>(&mut self, key: &str, what: &str) -> Option<Vec<T>> {
        let xs = self.list(key, what)?;
        if xs.is_empty() {
            self.errors.push(format!("{key}: must not be empty"));
            return None;
        }
        Some(xs)
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(message());
        }
    }

    fn core<T>(&mut self, key: &str, r: serm_core::error::Result<T>) -> Option<T> {
        r.map_err(|e| self.errors.push(format!("{key}: {e}"))).ok()
    }
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let mut f = Fields {
            raw: &raw,
            errors: Vec::new(),
        };

        let data = match f.str("data") {
            "synthetic" => {
                let n = f.parsed::<usize>("synthetic.n", "a count");
                let noise = f.parsed::<f64>("synthetic.label_noise", "a number");
                let spec = match f.str("synthetic.kind") {
                    "gaussian_mixture" => {
                        let nm = f.nonempty::<f64>("synthetic.negative_mean", "numbers");
                        let pm = f.nonempty::<f64>("synthetic.positive_mean", "numbers");
                        let nv = f.nonempty::<f64>("synthetic.negative_variance", "numbers");
                        let pv = f.nonempty::<f64>("synthetic.positive_variance", "numbers");
                        match (nm, pm, nv, pv, n) {
                            (Some(nm), Some(pm), Some(nv), Some(pv), Some(n)) => {
                                Some(SyntheticSpec::gaussian_mixture(nm, pm, nv, pv, n, 0))
                            }
                            _ => None,
                        }
                    }
                    "parabola" => n.map(|n| SyntheticSpec::parabola(n, 0)),
                    other => {
                        f.errors.push(format!("synthetic.kind: unknown kind `{other}`"));
                        None
                    }
                };
                let spec = spec.zip(noise).map(|(s, p)| s.with_label_noise(p));
                let spec = spec.and_then(|s| {
                    let checked = s.validate().map(|_| s);
                    f.core("synthetic", checked)
                });
                spec.map(DataSource::Synthetic)
            }
            "" => {
                f.errors.push("data: must be `synthetic` or a CSV path".into());
                None
            }
            path => Some(DataSource::Csv {
                path: PathBuf::from(path),
                label_column: f.str("data.label_column").to_string(),
                positive_label: f.str("data.positive_label").to_string(),
            }),
        };
        if let Some(DataSource::Csv { label_column, .. }) = &data {
            f.check(!label_column.is_empty(), || {
                "data.label_column: must not be empty".into()
            });
        }
        let balance = f.parsed::<bool>("data.balance", "true or false");
        let standardize = f.parsed::<bool>("data.standardize", "true or false");
        let use_tangents = f.parsed::<bool>("data.tangents", "true or false");

        let method = f
            .str("method")
            .parse::<Method>()
            .map_err(|e| f.errors.push(format!("method: {e}")))
            .ok();
        let cost = parse_cost(&mut f);
        let cost_radius = f.parsed::<f64>("cost.radius", "a number");
        if let Some(r) = cost_radius {
            f.check(r > 0.0 && r.is_finite(), || {
                format!("cost.radius: must be positive, got {r}")
            });
        }
        if let (Some(m), Some(c)) = (method, &cost) {
            if matches!(m, Method::Flexible | Method::Robust) && c.num_params() == 0 {
                f.errors.push(format!(
                    "method: `{}` needs a cost with parameters (weighted_quadratic, linear_separable or mixture)",
                    m.name()
                ));
            }
            if m == Method::InterceptBaseline && c.linear_component().is_none() {
                f.errors
                    .push("method: `intercept_baseline` needs a cost with a linear direction".into());
            }
        }

        let eval_params = f.list::<f64>("eval.cost_params", "numbers");
        let eval_scale = f.optional::<f64>("eval.cost_scale", "a number");
        let eval_cost = cost.clone().and_then(|c| {
            let mut out = c;
            if let Some(p) = eval_params.filter(|p| !p.is_empty()) {
                let r = out.with_params(&p);
                out = f.core("eval.cost_params", r)?;
            }
            if let Some(s) = eval_scale {
                let r = out.with_scale(s);
                out = f.core("eval.cost_scale", r)?;
            }
            Some(out)
        });
        let eval_responder = match f.str("eval.responder") {
            "ccp" => Some(EvalResponder::Ccp),
            "exact" => Some(EvalResponder::Exact),
            "parabola" => Some(EvalResponder::Parabola),
            other => {
                f.errors.push(format!(
                    "eval.responder: expected ccp, exact or parabola, got `{other}`"
                ));
                None
            }
        };

        let train = parse_train(&mut f);
        let learning_rates = f.nonempty::<f64>("train.learning_rates", "numbers");
        if let Some(lrs) = &learning_rates {
            f.check(lrs.iter().all(|l| *l > 0.0 && l.is_finite()), || {
                "train.learning_rates: rates must be positive".into()
            });
        }
        let seeds = f.nonempty::<u64>("seeds", "non-negative integers");
        let out = PathBuf::from(f.str("out"));
        f.check(!out.as_os_str().is_empty(), || "out: must not be empty".into());
        let model = Some(f.str("model")).filter(|m| !m.is_empty()).map(PathBuf::from);

        let sweep = parse_sweep(&mut f);
        let bench = parse_bench(&mut f);

        if !f.errors.is_empty() {
            return Err(Error::Config(f.errors));
        }
        Ok(RunConfig {
            data: data.expect("validated"),
            balance: balance.expect("validated"),
            standardize: standardize.expect("validated"),
            use_tangents: use_tangents.expect("validated"),
            method: method.expect("validated"),
            cost: cost.expect("validated"),
            cost_radius: cost_radius.expect("validated"),
            eval_cost: eval_cost.expect("validated"),
            eval_responder: eval_responder.expect("validated"),
            train: train.expect("validated"),
            learning_rates: learning_rates.expect("validated"),
            seeds: seeds.expect("validated"),
            out,
            model,
            sweep: sweep.expect("validated"),
            bench: bench.expect("validated"),
            raw,
        })
    }

    /// Loads `path` (or defaults when absent), applies overrides and validates.
    pub fn resolve<S: AsRef<str>>(path: Option<&Path>, overrides: &[S]) -> Result<Self> {
        let mut raw = match path {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        raw.apply_overrides(overrides)?;
        Self::from_raw(raw)
    }

    pub fn train_config(&self, seed: u64, learning_rate: f64) -> TrainConfig {
        self.train.with_seed(seed).with_learning_rate(learning_rate)
    }
}

fn parse_cost(f: &mut Fields<'_>) -> Option<CostSpec> {
    let scale = f.parsed::<f64>("cost.scale", "a number")?;
    if !(scale > 0.0 && scale.is_finite()) {
        f.errors.push(format!("cost.scale: must be positive, got {scale}"));
        return None;
    }
    let softness = f.parsed::<f64>("cost.softness", "a number")?;
    let kind = match f.str("cost.kind") {
        "quadratic" => CostKind::Quadratic,
        "weighted_quadratic" => CostKind::WeightedQuadratic {
            weights: f.nonempty("cost.weights", "numbers")?,
        },
        "linear_separable" => CostKind::LinearSeparable {
            direction: f.nonempty("cost.direction", "numbers")?,
            softness,
        },
        "mixture" => {
            let gamma = f.optional::<f64>("cost.gamma", "a number");
            if gamma.is_none() {
                f.errors.push("cost.gamma: required for the mixture cost".into());
            }
            CostKind::Mixture {
                gamma: gamma?,
                direction: f.nonempty("cost.direction", "numbers")?,
                softness,
            }
        }
        other => {
            f.errors.push(format!(
                "cost.kind: expected quadratic, weighted_quadratic, linear_separable or mixture, got `{other}`"
            ));
            return None;
        }
    };
    f.core("cost", CostSpec::new(kind, scale))
}

fn parse_train(f: &mut Fields<'_>) -> Option<TrainConfig> {
    let mut t = TrainConfig::default();
    let batch = f.parsed::<usize>("train.batch_size", "a count");
    let epochs = f.parsed::<usize>("train.max_epochs", "a count");
    let patience = f.parsed::<usize>("train.patience", "a count");
    let tau = f.parsed::<f64>("train.tau", "a number");
    let tol = f.parsed::<f64>("train.tol", "a number");
    let max_iter = f.parsed::<usize>("train.max_iter", "a count");
    let fail = f.parsed::<f64>("train.max_failure_rate", "a number");
    let eval_tau = f.parsed::<f64>("eval.tau", "a number");
    let jacobian = match f.str("train.jacobian") {
        "fixed_point" => Some(JacobianMode::FixedPoint),
        "frozen_iterate" => Some(JacobianMode::FrozenIterate),
        other => {
            f.errors.push(format!(
                "train.jacobian: expected fixed_point or frozen_iterate, got `{other}`"
            ));
            None
        }
    };
    let regularizer = match f.str("objective.regularizer") {
        "none" => Some(Regularizer::None),
        "utility" => Some(Regularizer::Utility),
        "burden" => Some(Regularizer::Burden),
        "recourse" => Some(Regularizer::Recourse),
        other => {
            f.errors.push(format!(
                "objective.regularizer: expected none, utility, burden or recourse, got `{other}`"
            ));
            None
        }
    };
    let lambda = f.parsed::<f64>("objective.lambda", "a number");
    let masked = f.parsed::<bool>("objective.masked_recourse", "true or false");

    t.batch_size = batch?;
    t.max_epochs = epochs?;
    t.patience = patience?;
    t.response = t.response.with_tau(tau?).with_tol(tol?).with_max_iter(max_iter?);
    t.response.jacobian = jacobian?;
    t.eval_response = t.response.with_tau(eval_tau?);
    t.max_failure_rate = fail?;
    let objective = f.core("objective", ObjectiveConfig::new(regularizer?, lambda?))?;
    t.objective = ObjectiveConfig {
        masked_recourse: masked?,
        ..objective
    };

    let mut ok = true;
    for (key, r) in [
        ("train.tau", t.response.validate().map(|_| ())),
        ("eval.tau", t.eval_response.validate().map(|_| ())),
    ] {
        ok &= f.core(key, r).is_some();
    }
    if t.batch_size == 0 {
        f.errors.push("train.batch_size: must be positive".into());
        ok = false;
    }
    if t.max_epochs == 0 || t.patience >= t.max_epochs {
        f.errors
            .push("train.patience: need max_epochs ≥ 1 and patience < max_epochs".into());
        ok = false;
    }
    if !(0.0..=1.0).contains(&t.max_failure_rate) {
        f.errors.push("train.max_failure_rate: must lie in [0, 1]".into());
        ok = false;
    }
    ok.then_some(t)
}

fn parse_sweep(f: &mut Fields<'_>) -> Option<SweepSpec> {
    let variable = match f.str("sweep.variable") {
        "gamma" => Some(SweepVariable::Gamma),
        "t" => Some(SweepVariable::T),
        "lambda" => Some(SweepVariable::Lambda),
        other => {
            f.errors
                .push(format!("sweep.variable: expected gamma, t or lambda, got `{other}`"));
            None
        }
    };
    let values = f.nonempty::<f64>("sweep.values", "numbers");
    let methods = f.str("sweep.methods");
    let methods: std::result::Result<Vec<Method>, String> = methods.split(',').map(|m| m.trim().parse()).collect();
    let methods = methods.map_err(|e| f.errors.push(format!("sweep.methods: {e}"))).ok();
    Some(SweepSpec {
        variable: variable?,
        values: values?,
        methods: methods?,
    })
}

fn parse_bench(f: &mut Fields<'_>) -> Option<BenchSpec> {
    let batch_sizes = f.nonempty::<usize>("bench.batch_sizes", "counts");
    let epochs = f.parsed::<usize>("bench.epochs", "a count");
    let n_train = f.parsed::<usize>("bench.n_train", "a count");
    let n_val = f.parsed::<usize>("bench.n_val", "a count");
    let dim = f.parsed::<usize>("bench.dim", "a count");
    let repeats = f.parsed::<usize>("bench.repeats", "a count");
    let spec = BenchSpec {
        batch_sizes: batch_sizes?,
        epochs: epochs?,
        n_train: n_train?,
        n_val: n_val?,
        dim: dim?,
        repeats: repeats?,
    };
    let mut ok = true;
    for (key, v) in [
        ("bench.epochs", spec.epochs),
        ("bench.n_train", spec.n_train),
        ("bench.n_val", spec.n_val),
        ("bench.dim", spec.dim),
        ("bench.repeats", spec.repeats),
    ] {
        if v == 0 {
            f.errors.push(format!("{key}: must be positive"));
            ok = false;
        }
    }
    if spec.batch_sizes.iter().any(|&b| b == 0 || b > spec.n_train) {
        f.errors
            .push("bench.batch_sizes: sizes must lie in 1..=bench.n_train".into());
        ok = false;
    }
    ok.then_some(spec)
}
