//! Versioned plain-text model files.
//!
//! ```text
//! serm-model 1
//! method = serm
//! k = 2
//! weights = 1.25 -0.5
//! intercept = 0.1
//! feature_map = none
//! standardizer.mean = 0.02 -0.01
//! standardizer.sd = 0.3 0.31
//! standardizer.scale = 0.7071067811865475
//! standardizer.constant =
//! cost = {"kind":"quadratic","scale":1.0}
//! ```
//!
//! Standardizer and cost lines are optional. Numbers use the shortest
//! representation that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serm_core::cost::CostSpec;
use serm_core::data::Standardizer;
use serm_core::model::{FeatureMap, LinearScorer};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "serm-model";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub method: String,
    pub model: LinearScorer,
    /// Applied to raw features before scoring.
    pub standardizer: Option<Standardizer>,
    /// Cost used in training (the learned one for flexible training).
    pub cost: Option<CostSpec>,
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

impl ModelFile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "k = {}", m.dim());
        let _ = writeln!(s, "weights = {}", join(m.weights()));
        let _ = writeln!(s, "intercept = {}", m.intercept());
        let map = m.feature_map().map_or("none".to_string(), FeatureMap::identifier);
        let _ = writeln!(s, "feature_map = {map}");
        if let Some(st) = &self.standardizer {
            let _ = writeln!(s, "standardizer.mean = {}", join(&st.mean));
            let _ = writeln!(s, "standardizer.sd = {}", join(&st.sd));
            let _ = writeln!(s, "standardizer.scale = {}", st.scale);
            let constant: Vec<String> = st.constant_features.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "standardizer.constant = {}", constant.join(" "));
        }
        if let Some(c) = &self.cost {
            let json = serde_json::to_string(c).expect("cost specs serialize");
            let _ = writeln!(s, "cost = {json}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            context: "model file",
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        match first.trim().split_once(' ') {
            Some((MAGIC, v)) if v.trim() == FORMAT_VERSION.to_string() => {}
            Some((MAGIC, v)) => return Err(err(1, format!("unsupported version `{v}`"))),
            _ => return Err(err(1, format!("expected `{MAGIC} {FORMAT_VERSION}` header"))),
        }
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, format!("expected `key = value`, got `{line}`")))?;
            if fields.insert(k.trim(), (i + 1, v.trim())).is_some() {
                return Err(err(i + 1, format!("duplicate key `{}`", k.trim())));
            }
        }
        let get = |key: &str| -> Result<(usize, &str)> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| err(0, format!("missing key `{key}`")))
        };
        let numbers = |key: &str| -> Result<Vec<f64>> {
            let (line, v) = get(key)?;
            v.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| err(line, format!("bad number `{t}` in `{key}`")))
                })
                .collect()
        };
        let number = |key: &str| -> Result<f64> {
            let (line, v) = get(key)?;
            v.parse().map_err(|_| err(line, format!("bad number `{v}` in `{key}`")))
        };

        let method = get("method")?.1.to_string();
        let (k_line, k) = get("k")?;
        let k: usize = k.parse().map_err(|_| err(k_line, format!("bad dimension `{k}`")))?;
        let weights = numbers("weights")?;
        if weights.len() != k {
            return Err(err(k_line, format!("k = {k} but {} weights", weights.len())));
        }
        let mut model = LinearScorer::new(weights, number("intercept")?)?;
        let (map_line, map) = get("feature_map")?;
        if map != "none" {
            let map = FeatureMap::from_identifier(map).map_err(|e| err(map_line, e.to_string()))?;
            model = model.with_feature_map(map)?;
        }
        let standardizer = if fields.contains_key("standardizer.mean") {
            let (line, constant) = get("standardizer.constant")?;
            let constant_features = constant
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(line, format!("bad index `{t}`"))))
                .collect::<Result<Vec<usize>>>()?;
            let st = Standardizer {
                mean: numbers("standardizer.mean")?,
                sd: numbers("standardizer.sd")?,
                scale: number("standardizer.scale")?,
                constant_features,
            };
            if st.sd.len() != st.mean.len() || st.mean.len() != model.input_dim() {
                return Err(err(line, "standardizer dimensions do not match the model".into()));
            }
            Some(st)
        } else {
            None
        };
        let cost = match fields.get("cost") {
            Some(&(line, json)) => {
                let c: CostSpec = serde_json::from_str(json).map_err(|e| err(line, e.to_string()))?;
                Some(CostSpec::new(c.kind().clone(), c.scale()).map_err(|e| err(line, e.to_string()))?)
            }
            None => None,
        };
        Ok(Self {
            method,
            model,
            standardizer,
            cost,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelFile {
        ModelFile {
            method: "flexible".into(),
            model: LinearScorer::new(vec![0.1 + 0.2, -1.0 / 3.0], 1e-17).unwrap(),
            standardizer: Some(Standardizer {
                mean: vec![0.5, -2.25],
                sd: vec![1.0 / 7.0, 1.0],
                scale: 1.0 / 2f64.sqrt(),
                constant_features: vec![1],
            }),
            cost: Some(CostSpec::mixture(0.005, vec![2.3, 0.6], 1.0).unwrap()),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        assert_eq!(ModelFile::parse(&m.to_text()).unwrap(), m);
        let plain = ModelFile {
            standardizer: None,
            cost: None,
            ..m
        };
        assert_eq!(ModelFile::parse(&plain.to_text()).unwrap(), plain);
    }

    #[test]
    fn feature_maps_survive() {
        let map = FeatureMap::random_fourier(2, 8, 0.5, 9).unwrap();
        let model = LinearScorer::new((0..8).map(|i| i as f64 / 8.0).collect(), 0.3)
            .unwrap()
            .with_feature_map(map)
            .unwrap();
        let m = ModelFile {
            method: "serm".into(),
            model,
            standardizer: None,
            cost: None,
        };
        let back = ModelFile::parse(&m.to_text()).unwrap();
        let probe = [0.3, -1.2];
        assert_eq!(back.model.score(&probe).unwrap(), m.model.score(&probe).unwrap());
    }

    #[test]
    fn malformed_files_report_lines() {
        let text: Vec<String> = sample()
            .to_text()
            .lines()
            .map(|l| {
                if l.starts_with("intercept") {
                    "intercept = abc".into()
                } else {
                    l.to_string()
                }
            })
            .collect();
        let text = text.join("\n");
        assert!(matches!(ModelFile::parse(&text), Err(Error::Parse { .. })));
        assert!(ModelFile::parse("serm-model 2\n").is_err());
        assert!(ModelFile::parse("weights = 1\n").is_err());
    }
}
