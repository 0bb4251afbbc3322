//! Datasets, preprocessing, splitting and synthetic generators.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::{self, hard_sign};
use crate::model::FeatureMap;
use crate::response::TangentSpec;

/// Labeled feature rows with labels in `{−1, +1}`, optionally carrying a
/// tangent subspace per row for manifold-constrained responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    feature_names: Option<Vec<String>>,
    tangents: Option<Vec<TangentSpec>>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidInput("dataset must have at least one row".into()));
        }
        check_dim("labels vs rows", features.len(), labels.len())?;
        let d = features[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("dataset must have at least one feature".into()));
        }
        for row in &features {
            check_dim("dataset row", d, row.len())?;
            if !math::all_finite(row) {
                return Err(Error::InvalidInput("dataset features must be finite".into()));
            }
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidInput("labels must be -1 or +1".into()));
        }
        Ok(Self {
            features,
            labels,
            feature_names: None,
            tangents: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        check_dim("feature names", self.dim(), names.len())?;
        self.feature_names = Some(names);
        Ok(self)
    }

    /// Attaches one tangent subspace per row; each is re-anchored at its row.
    pub fn with_tangents(mut self, tangents: Vec<TangentSpec>) -> Result<Self> {
        check_dim("tangents vs rows", self.len(), tangents.len())?;
        let anchored = tangents
            .into_iter()
            .zip(&self.features)
            .map(|(t, x)| {
                check_dim("tangent dimension", x.len(), t.dim())?;
                TangentSpec::new(x.clone(), t.directions)
            })
            .collect::<Result<Vec<_>>>()?;
        self.tangents = Some(anchored);
        Ok(self)
    }

    pub fn without_tangents(mut self) -> Self {
        self.tangents = None;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn tangents(&self) -> Option<&[TangentSpec]> {
        self.tangents.as_deref()
    }

    pub fn tangent(&self, i: usize) -> Option<&TangentSpec> {
        self.tangents.as_ref().map(|t| &t[i])
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            tangents: self
                .tangents
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i].clone()).collect()),
        }
    }

    /// `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y > 0.0).count();
        (self.len() - pos, pos)
    }

    /// Applies a fixed feature map to every row. Tangents cannot follow a
    /// nonlinear map and are rejected.
    pub fn map_features(&self, map: &FeatureMap) -> Result<Dataset> {
        if self.tangents.is_some() {
            return Err(Error::InvalidInput(
                "tangent constraints cannot be carried through a feature map".into(),
            ));
        }
        let features = self.features.iter().map(|x| map.map(x)).collect::<Result<Vec<_>>>()?;
        Dataset::new(features, self.labels.clone())
    }

    /// Downsamples the majority class to the minority class size, keeping the
    /// original row order.
    pub fn balance_classes(&self, seed: u64) -> Result<Dataset> {
        let (neg, pos) = self.class_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::InvalidInput("cannot balance a single-class dataset".into()));
        }
        let majority = if pos > neg { 1.0 } else { -1.0 };
        let mut major: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == majority).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        major.shuffle(&mut rng);
        major.truncate(neg.min(pos));
        let mut keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.labels[i] != majority)
            .chain(major)
            .collect();
        keep.sort_unstable();
        Ok(self.subset(&keep))
    }
}

/// Per-feature standardization with training-set statistics followed by a
/// global `1/√d` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviations; constant features get 1.
    pub sd: Vec<f64>,
    pub scale: f64,
    #[serde(default)]
    pub constant_features: Vec<usize>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Self {
        let m = train.len() as f64;
        let d = train.dim();
        let mut mean = alloc::vec![0.0; d];
        for row in train.features() {
            mean.iter_mut().zip(row).for_each(|(a, x)| *a += x);
        }
        mean.iter_mut().for_each(|a| *a /= m);
        let mut var = alloc::vec![0.0; d];
        for row in train.features() {
            var.iter_mut()
                .zip(row.iter().zip(&mean))
                .for_each(|(v, (x, mu))| *v += (x - mu) * (x - mu));
        }
        let mut constant_features = Vec::new();
        let sd = var
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let s = math::sqrt(v / m);
                if s > 0.0 {
                    s
                } else {
                    constant_features.push(j);
                    1.0
                }
            })
            .collect();
        Self {
            mean,
            sd,
            scale: 1.0 / math::sqrt(d as f64),
            constant_features,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (mu, s))| (v - mu) / s * self.scale)
            .collect()
    }

    pub fn inverse_row(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (mu, s))| v / self.scale * s + mu)
            .collect()
    }

    /// Linear part of the transform applied to a direction.
    pub fn transform_direction(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.sd).map(|(v, s)| v / s * self.scale).collect()
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        check_dim("standardizer input", self.dim(), data.dim())?;
        let features = data.features().iter().map(|x| self.transform_row(x)).collect();
        let mut out = Dataset::new(features, data.labels().to_vec())?;
        out.feature_names = data.feature_names.clone();
        if let Some(tangents) = data.tangents() {
            let mapped = tangents
                .iter()
                .map(|t| {
                    let dirs = t.directions.iter().map(|u| self.transform_direction(u)).collect();
                    TangentSpec::new(self.transform_row(&t.base), dirs)
                })
                .collect::<Result<Vec<_>>>()?;
            out = out.with_tangents(mapped)?;
        }
        Ok(out)
    }
}

/// Fits on `train` and applies the same transform to `others`.
pub fn standardize_fit_transform(
    train: &Dataset,
    others: &[&Dataset],
) -> Result<(Standardizer, Dataset, Vec<Dataset>)> {
    let st = Standardizer::fit(train);
    let train_t = st.transform(train)?;
    let others_t = others.iter().map(|d| st.transform(d)).collect::<Result<Vec<_>>>()?;
    Ok((st, train_t, others_t))
}

/// Train / validation / test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Seeded 60/20/20 permutation split with sizes `⌊0.6m⌋ / ⌊0.2m⌋ / rest`.
pub fn split(data: &Dataset, seed: u64) -> Result<Split> {
    let m = data.len();
    if m < 5 {
        return Err(Error::InvalidInput("splitting needs at least 5 rows".into()));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = m * 6 / 10;
    let n_val = m * 2 / 10;
    Ok(Split {
        train: data.subset(&idx[..n_train]),
        val: data.subset(&idx[n_train..n_train + n_val]),
        test: data.subset(&idx[n_train + n_val..]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Two axis-aligned normals; class `−1` uses the negative mean and variances.
    GaussianMixture {
        negative_mean: Vec<f64>,
        positive_mean: Vec<f64>,
        negative_variance: Vec<f64>,
        positive_variance: Vec<f64>,
    },
    /// `x₁ ~ U[−5, 5]`, `x₂ = −x₁²`, `y = sign(x₁)`, with the unit tangent
    /// `(1, −2x₁)/√(1 + 4x₁²)` attached to every row.
    ParabolaManifold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub kind: SyntheticKind,
    pub n: usize,
    pub seed: u64,
    /// Fraction of labels flipped after generation.
    #[serde(default)]
    pub label_noise: f64,
}

impl SyntheticSpec {
    pub fn gaussian_mixture(
        negative_mean: Vec<f64>,
        positive_mean: Vec<f64>,
        negative_variance: Vec<f64>,
        positive_variance: Vec<f64>,
        n: usize,
        seed: u64,
    ) -> Self {
        Self {
            kind: SyntheticKind::GaussianMixture {
                negative_mean,
                positive_mean,
                negative_variance,
                positive_variance,
            },
            n,
            seed,
            label_noise: 0.0,
        }
    }

    pub fn parabola(n: usize, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::ParabolaManifold,
            n,
            seed,
            label_noise: 0.0,
        }
    }

    pub fn with_label_noise(self, label_noise: f64) -> Self {
        Self { label_noise, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("synthetic sample count must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::InvalidConfig("label_noise must lie in [0, 1]".into()));
        }
        if let SyntheticKind::GaussianMixture {
            negative_mean,
            positive_mean,
            negative_variance,
            positive_variance,
        } = &self.kind
        {
            let d = negative_mean.len();
            if d == 0 {
                return Err(Error::InvalidConfig("mixture means must be nonempty".into()));
            }
            check_dim("positive mean", d, positive_mean.len())?;
            check_dim("negative variance", d, negative_variance.len())?;
            check_dim("positive variance", d, positive_variance.len())?;
            let ok = |v: &[f64]| v.iter().all(|s| *s > 0.0 && s.is_finite());
            if !ok(negative_variance) || !ok(positive_variance) {
                return Err(Error::InvalidConfig("mixture variances must be positive".into()));
            }
            if !math::all_finite(negative_mean) || !math::all_finite(positive_mean) {
                return Err(Error::InvalidConfig("mixture means must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Unit tangent of `x₂ = −x₁²` at abscissa `x1`.
pub fn parabola_tangent(x1: f64) -> [f64; 2] {
    let n = math::sqrt(1.0 + 4.0 * x1 * x1);
    [1.0 / n, -2.0 * x1 / n]
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = match &spec.kind {
        SyntheticKind::GaussianMixture {
            negative_mean,
            positive_mean,
            negative_variance,
            positive_variance,
        } => {
            let n_neg = spec.n / 2;
            let n_pos = spec.n - n_neg;
            let mut features = Vec::with_capacity(spec.n);
            let mut labels = Vec::with_capacity(spec.n);
            for (count, mean, var, y) in [
                (n_neg, negative_mean, negative_variance, -1.0),
                (n_pos, positive_mean, positive_variance, 1.0),
            ] {
                let normals = mean
                    .iter()
                    .zip(var)
                    .map(|(mu, v)| Normal::new(*mu, math::sqrt(*v)))
                    .collect::<core::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidConfig(alloc::format!("{e}")))?;
                for _ in 0..count {
                    features.push(normals.iter().map(|n| n.sample(&mut rng)).collect());
                    labels.push(y);
                }
            }
            Dataset::new(features, labels)?
        }
        SyntheticKind::ParabolaManifold => {
            let unif = Uniform::new_inclusive(-5.0, 5.0).map_err(|e| Error::InvalidConfig(alloc::format!("{e}")))?;
            let mut features = Vec::with_capacity(spec.n);
            let mut labels = Vec::with_capacity(spec.n);
            let mut tangents = Vec::with_capacity(spec.n);
            for _ in 0..spec.n {
                let x1: f64 = unif.sample(&mut rng);
                let x = alloc::vec![x1, -x1 * x1];
                tangents.push(TangentSpec::new(x.clone(), alloc::vec![parabola_tangent(x1).to_vec()])?);
                features.push(x);
                labels.push(hard_sign(x1));
            }
            Dataset::new(features, labels)?.with_tangents(tangents)?
        }
    };
    if spec.label_noise > 0.0 {
        for y in data.labels.iter_mut() {
            if rng.random::<f64>() < spec.label_noise {
                *y = -*y;
            }
        }
    }
    Ok(data)
}
