//! Linear scorers `f(x) = w·φ(x) + b` and fixed feature maps `φ`.

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::{self, dot, hard_sign};

/// A fixed (never trained) representation `z = φ(x)`.
///
/// Strategic responses for a scorer with a feature map happen in
/// representation space: users move `z`, and costs are measured there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FeatureMap {
    /// `[x_1..x_d, x_i·x_j for i ≤ j]`.
    Quadratic { dim_in: usize },
    /// Random Fourier features `√(2/D)·cos(ω_k·x + c_k)` with Gaussian `ω`
    /// of scale `1/bandwidth`, drawn from `seed`.
    RandomFourier {
        dim_in: usize,
        dim_out: usize,
        bandwidth: f64,
        seed: u64,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    },
}

impl FeatureMap {
    pub fn quadratic(dim_in: usize) -> Result<Self> {
        if dim_in == 0 {
            return Err(Error::InvalidConfig(
                "feature map input dimension must be positive".into(),
            ));
        }
        Ok(FeatureMap::Quadratic { dim_in })
    }

    pub fn random_fourier(dim_in: usize, dim_out: usize, bandwidth: f64, seed: u64) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidConfig("feature map dimensions must be positive".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frequencies = (0..dim_in * dim_out)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g / bandwidth
            })
            .collect();
        let phases = (0..dim_out)
            .map(|_| rng.random_range(0.0..core::f64::consts::TAU))
            .collect();
        Ok(FeatureMap::RandomFourier {
            dim_in,
            dim_out,
            bandwidth,
            seed,
            frequencies,
            phases,
        })
    }

    pub fn dim_in(&self) -> usize {
        match self {
            FeatureMap::Quadratic { dim_in } | FeatureMap::RandomFourier { dim_in, .. } => *dim_in,
        }
    }

    pub fn dim_out(&self) -> usize {
        match self {
            FeatureMap::Quadratic { dim_in } => dim_in + dim_in * (dim_in + 1) / 2,
            FeatureMap::RandomFourier { dim_out, .. } => *dim_out,
        }
    }

    pub fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("feature map input", self.dim_in(), x.len())?;
        Ok(match self {
            FeatureMap::Quadratic { dim_in } => {
                let mut z = Vec::with_capacity(self.dim_out());
                z.extend_from_slice(x);
                for i in 0..*dim_in {
                    for j in i..*dim_in {
                        z.push(x[i] * x[j]);
                    }
                }
                z
            }
            FeatureMap::RandomFourier {
                dim_in,
                dim_out,
                frequencies,
                phases,
                ..
            } => {
                let scale = math::sqrt(2.0 / *dim_out as f64);
                (0..*dim_out)
                    .map(|k| {
                        let row = &frequencies[k * dim_in..(k + 1) * dim_in];
                        scale * libm::cos(dot(row, x) + phases[k])
                    })
                    .collect()
            }
        })
    }

    /// Compact textual identifier, e.g. `quadratic(2)` or `fourier(2,64,0.5,7)`.
    pub fn identifier(&self) -> String {
        match self {
            FeatureMap::Quadratic { dim_in } => format!("quadratic({dim_in})"),
            FeatureMap::RandomFourier {
                dim_in,
                dim_out,
                bandwidth,
                seed,
                ..
            } => format!("fourier({dim_in},{dim_out},{bandwidth:?},{seed})"),
        }
    }

    pub fn from_identifier(id: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unrecognized feature map identifier `{id}`"));
        let id = id.trim();
        let open = id.find('(').ok_or_else(bad)?;
        let args = id[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        match (&id[..open], args.as_slice()) {
            ("quadratic", [d]) => FeatureMap::quadratic(d.parse().map_err(|_| bad())?),
            ("fourier", [d_in, d_out, bw, seed]) => FeatureMap::random_fourier(
                d_in.parse().map_err(|_| bad())?,
                d_out.parse().map_err(|_| bad())?,
                bw.parse().map_err(|_| bad())?,
                seed.parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for FeatureMap {
    type Error = Error;

    fn try_from(id: String) -> Result<Self> {
        FeatureMap::from_identifier(&id)
    }
}

impl From<FeatureMap> for String {
    fn from(map: FeatureMap) -> String {
        map.identifier()
    }
}

/// `f(x) = w·φ(x) + b`, classified by `sign(f)` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    weights: Vec<f64>,
    intercept: f64,
    feature_map: Option<FeatureMap>,
}

impl LinearScorer {
    pub fn new(weights: Vec<f64>, intercept: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("weight vector must be nonempty".into()));
        }
        if !math::all_finite(&weights) || !intercept.is_finite() {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        Ok(Self {
            weights,
            intercept,
            feature_map: None,
        })
    }

    /// All-zero weights and intercept.
    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(alloc::vec![0.0; dim], 0.0)
    }

    pub fn with_feature_map(mut self, map: FeatureMap) -> Result<Self> {
        check_dim("feature map output vs weights", self.weights.len(), map.dim_out())?;
        self.feature_map = Some(map);
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn feature_map(&self) -> Option<&FeatureMap> {
        self.feature_map.as_ref()
    }

    /// Dimension of the raw input `x`.
    pub fn input_dim(&self) -> usize {
        self.feature_map.as_ref().map_or(self.weights.len(), FeatureMap::dim_in)
    }

    /// Dimension of the representation the linear head acts on.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn represent<'a>(&self, x: &'a [f64]) -> Result<Cow<'a, [f64]>> {
        match &self.feature_map {
            Some(map) => Ok(Cow::Owned(map.map(x)?)),
            None => {
                check_dim("scorer input", self.weights.len(), x.len())?;
                Ok(Cow::Borrowed(x))
            }
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let z = self.represent(x)?;
        Ok(self.head_score(&z))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(hard_sign(self.score(x)?))
    }

    /// Linear head applied to an already-represented point.
    #[inline]
    pub fn head_score(&self, z: &[f64]) -> f64 {
        dot(&self.weights, z) + self.intercept
    }

    pub(crate) fn set_params(&mut self, weights: &[f64], intercept: f64) {
        self.weights.copy_from_slice(weights);
        self.intercept = intercept;
    }

    /// The same head without a feature map, for computations in representation space.
    pub fn head(&self) -> LinearScorer {
        LinearScorer {
            weights: self.weights.clone(),
            intercept: self.intercept,
            feature_map: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| *w == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn scores_match_hand_values() {
        let m = LinearScorer::new(vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(m.score(&[-2.0, 0.0]).unwrap(), -2.0);
        let m = LinearScorer::new(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(m.score(&[0.0, 0.0]).unwrap(), 1.0);
        let m = LinearScorer::new(vec![0.5, 0.5], 1.0).unwrap();
        assert_eq!(m.score(&[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = LinearScorer::new(vec![1.0, 0.0], 0.0).unwrap();
        assert!(matches!(m.score(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(LinearScorer::new(vec![], 0.0).is_err());
        assert!(LinearScorer::new(vec![f64::NAN], 0.0).is_err());
        assert!(LinearScorer::new(vec![1.0], f64::INFINITY).is_err());
    }

    #[test]
    fn quadratic_map_shape_and_values() {
        let map = FeatureMap::quadratic(2).unwrap();
        assert_eq!(map.dim_out(), 5);
        assert_eq!(map.map(&[2.0, 3.0]).unwrap(), vec![2.0, 3.0, 4.0, 6.0, 9.0]);
        let m = LinearScorer::new(vec![0.0, 0.0, 1.0, 0.0, 1.0], -1.0)
            .unwrap()
            .with_feature_map(map)
            .unwrap();
        assert_eq!(m.input_dim(), 2);
        assert_eq!(m.score(&[1.0, 1.0]).unwrap(), 1.0);
        assert!(LinearScorer::new(vec![1.0; 3], 0.0)
            .unwrap()
            .with_feature_map(FeatureMap::quadratic(2).unwrap())
            .is_err());
    }

    #[test]
    fn fourier_map_is_deterministic_and_roundtrips_identifier() {
        let a = FeatureMap::random_fourier(3, 16, 0.5, 11).unwrap();
        let b = FeatureMap::from_identifier(&a.identifier()).unwrap();
        let x = [0.3, -1.2, 0.8];
        let za = a.map(&x).unwrap();
        let zb = b.map(&x).unwrap();
        assert_eq!(za.len(), 16);
        assert!(za.iter().zip(&zb).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert_eq!(
            FeatureMap::from_identifier("quadratic(4)").unwrap(),
            FeatureMap::quadratic(4).unwrap()
        );
        assert!(FeatureMap::from_identifier("cubic(2)").is_err());
    }
}
