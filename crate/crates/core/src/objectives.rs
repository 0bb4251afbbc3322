//! The strategic loss, the social-good regularizers and the worst-case loss.
//!
//! Every gradient is laid out as `[w₁..w_k, b, v₁..v_p]` where `v` are the
//! cost's learnable parameters (empty for the plain quadratic cost).
//! Batch values are means over the evaluated rows.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cost::{CostKind, CostMode, CostSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::{self, log1p_exp, logistic};
use crate::model::LinearScorer;
use crate::par::map_indexed;
use crate::response::{respond, response_jacobians, tangent_response_jacobians, ResponseConfig, ResponseOutcome};
use crate::smooth::SmoothSign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    #[default]
    None,
    Utility,
    Burden,
    Recourse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub regularizer: Regularizer,
    pub lambda: f64,
    /// Restrict the recourse term to users currently denied (`f(x) < 0`).
    #[serde(default)]
    pub masked_recourse: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            regularizer: Regularizer::None,
            lambda: 0.0,
            masked_recourse: false,
        }
    }
}

impl ObjectiveConfig {
    pub fn new(regularizer: Regularizer, lambda: f64) -> Result<Self> {
        let cfg = Self {
            regularizer,
            lambda,
            masked_recourse: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be a nonnegative number".into()));
        }
        Ok(())
    }

    /// Weighted terms making up `L + λR`; the regularizer is dropped when
    /// it is absent or `λ = 0`.
    pub fn terms(&self) -> Vec<(Term, f64)> {
        let mut terms = vec![(Term::StrategicLoss, 1.0)];
        let reg = match self.regularizer {
            Regularizer::None => None,
            Regularizer::Utility => Some(Term::Utility),
            Regularizer::Burden => Some(Term::Burden),
            Regularizer::Recourse => Some(Term::Recourse {
                masked: self.masked_recourse,
            }),
        };
        if let Some(r) = reg {
            if self.lambda > 0.0 {
                terms.push((r, self.lambda));
            }
        }
        terms
    }
}

/// Per-example building blocks of the training objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    /// `log(1 + exp(−y·f(Δ̃(x))))`.
    StrategicLoss,
    /// `−[σ_τ(f(Δ̃(x))) − c(x, Δ̃(x))]`.
    Utility,
    /// `min_{f(x′) ≥ 0} c(x, x′)` for positive rows, 0 otherwise.
    Burden,
    /// `σ_τ(−f(x))·σ_τ(−f(Δ̃(x)))`.
    Recourse { masked: bool },
}

impl Term {
    fn needs_response(self) -> bool {
        !matches!(self, Term::Burden)
    }
}

/// Value and gradient of a batch objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// A batch objective computed over the rows whose responses succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchObjective {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub evaluated: usize,
    /// `(row, error)` for every skipped row.
    pub failed: Vec<(usize, Error)>,
}

impl BatchObjective {
    /// Fails on the first skipped row.
    pub fn into_strict(self) -> Result<Objective> {
        match self.failed.into_iter().next() {
            Some((row, err)) => Err(err.at_example(row)),
            None => Ok(Objective {
                value: self.value,
                gradient: self.gradient,
            }),
        }
    }
}

fn check_terms(model: &LinearScorer, cost: &CostSpec, terms: &[(Term, f64)]) -> Result<()> {
    if terms.iter().any(|(t, _)| *t == Term::Burden) {
        if !matches!(cost.kind(), CostKind::Quadratic | CostKind::WeightedQuadratic { .. }) {
            return Err(Error::UnsupportedCost("the burden regularizer"));
        }
        if model.is_zero() {
            return Err(Error::DegenerateModel);
        }
    }
    Ok(())
}

/// CCP responses for `rows` (tangent-constrained where the dataset carries tangents).
pub fn solve_responses(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
) -> Vec<Result<ResponseOutcome>> {
    map_indexed(rows.len(), |j| {
        let i = rows[j];
        respond(data.row(i), model, cost, data.tangent(i), response)
    })
}

/// Assembles `Σ weight·term` averaged over rows, given responses from
/// [`solve_responses`] (ignored when no term needs them).
pub fn assemble_objective(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
    terms: &[(Term, f64)],
    outcomes: &[Result<ResponseOutcome>],
) -> Result<BatchObjective> {
    check_terms(model, cost, terms)?;
    let sign = response.validate()?;
    let needs_response = terms.iter().any(|(t, _)| t.needs_response());
    if needs_response && outcomes.len() != rows.len() {
        return Err(Error::InvalidInput("one response per row is required".into()));
    }
    let n_params = model.dim() + 1 + cost.num_params();
    let per_row = map_indexed(rows.len(), |j| {
        let i = rows[j];
        let outcome = if needs_response {
            match &outcomes[j] {
                Ok(o) => Some(o),
                Err(e) => return Err(e.clone()),
            }
        } else {
            None
        };
        example_terms(data, i, model, cost, response, &sign, terms, outcome, n_params)
    });

    let mut value = 0.0;
    let mut gradient = vec![0.0; n_params];
    let mut failed = Vec::new();
    for (j, r) in per_row.into_iter().enumerate() {
        match r {
            Ok((v, g)) => {
                value += v;
                gradient.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            Err(e) => failed.push((rows[j], e)),
        }
    }
    let evaluated = rows.len() - failed.len();
    if evaluated > 0 {
        let m = evaluated as f64;
        value /= m;
        gradient.iter_mut().for_each(|g| *g /= m);
    }
    Ok(BatchObjective {
        value,
        gradient,
        evaluated,
        failed,
    })
}

/// Solves responses and assembles the weighted objective, skipping failed rows.
pub fn batch_objective(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
    terms: &[(Term, f64)],
) -> Result<BatchObjective> {
    check_terms(model, cost, terms)?;
    let outcomes = if terms.iter().any(|(t, _)| t.needs_response()) {
        solve_responses(data, rows, model, cost, response)
    } else {
        Vec::new()
    };
    assemble_objective(data, rows, model, cost, response, terms, &outcomes)
}

#[allow(clippy::too_many_arguments)]
fn example_terms(
    data: &Dataset,
    i: usize,
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
    sign: &SmoothSign,
    terms: &[(Term, f64)],
    outcome: Option<&ResponseOutcome>,
    n_params: usize,
) -> Result<(f64, Vec<f64>)> {
    let x = data.row(i);
    let y = data.label(i);
    let k = model.dim();
    let w = model.weights();

    // f(x*) and its total derivative through the response
    let moved = match outcome {
        Some(o) => {
            let jac = match data.tangent(i) {
                Some(t) => tangent_response_jacobians(o, x, model, cost, t, response)?,
                None => response_jacobians(o, x, model, cost, response)?,
            };
            let mut df = jac.vector_product(w);
            df.iter_mut().zip(&o.x_star).for_each(|(g, xs)| *g += xs);
            df[k] += 1.0;
            Some((o, jac, model.head_score(&o.x_star), df))
        }
        None => None,
    };

    let mut value = 0.0;
    let mut grad = vec![0.0; n_params];
    for &(term, weight) in terms {
        match term {
            Term::StrategicLoss => {
                let (_, _, fs, df) = moved.as_ref().expect("response available");
                value += weight * log1p_exp(-y * fs);
                add(weight * -y * logistic(-y * fs), df, &mut grad);
            }
            Term::Utility => {
                let (o, jac, fs, df) = moved.as_ref().expect("response available");
                let c = cost.value_unchecked(x, &o.x_star, CostMode::Smoothed);
                value -= weight * (sign.value(*fs) - c);
                add(-weight * sign.derivative(*fs), df, &mut grad);
                let dc = jac.vector_product(&cost.gradient_unchecked(x, &o.x_star));
                add(weight, &dc, &mut grad);
                let dv = cost.param_gradient(x, &o.x_star);
                grad[k + 1..].iter_mut().zip(&dv).for_each(|(a, b)| *a += weight * b);
            }
            Term::Recourse { masked } => {
                let (_, _, fs, df) = moved.as_ref().expect("response available");
                let f0 = model.head_score(x);
                if masked && f0 >= 0.0 {
                    continue;
                }
                let (a, b) = (sign.value(-f0), sign.value(-fs));
                value += weight * a * b;
                // d/dθ σ(−f(x)) = −σ′(f(x))·[x, 1, 0]
                let da = -weight * sign.derivative(f0) * b;
                grad[..k].iter_mut().zip(x).for_each(|(g, xi)| *g += da * xi);
                grad[k] += da;
                add(-weight * a * sign.derivative(*fs), df, &mut grad);
            }
            Term::Burden => {
                if y > 0.0 {
                    let (v, g) = burden_term(x, model, cost);
                    value += weight * v;
                    add(weight, &g, &mut grad);
                }
            }
        }
    }
    if !math::all_finite(&grad) || !value.is_finite() {
        return Err(Error::NonFiniteGradient {
            index: grad.iter().position(|g| !g.is_finite()).unwrap_or(0),
        });
    }
    Ok((value, grad))
}

fn add(scale: f64, g: &[f64], grad: &mut [f64]) {
    grad.iter_mut().zip(g).for_each(|(a, b)| *a += scale * b);
}

/// `t·max(0, −f(x))² / (wᵀA⁻¹w)` and its gradient, for `c = t·Σ a_j δ_j²`.
fn burden_term(x: &[f64], model: &LinearScorer, cost: &CostSpec) -> (f64, Vec<f64>) {
    let k = model.dim();
    let w = model.weights();
    let t = cost.scale();
    let a: Vec<f64> = match cost.kind() {
        CostKind::WeightedQuadratic { weights } => weights.clone(),
        _ => vec![1.0; k],
    };
    let mut grad = vec![0.0; k + 1 + cost.num_params()];
    let s = -model.head_score(x);
    if s <= 0.0 {
        return (0.0, grad);
    }
    let n: f64 = w.iter().zip(&a).map(|(wi, ai)| wi * wi / ai).sum();
    for j in 0..k {
        grad[j] = t * (-2.0 * s * x[j] / n - 2.0 * s * s * w[j] / (a[j] * n * n));
    }
    grad[k] = -2.0 * t * s / n;
    if let CostKind::WeightedQuadratic { .. } = cost.kind() {
        for j in 0..k {
            grad[k + 1 + j] = t * s * s * w[j] * w[j] / (a[j] * a[j] * n * n);
        }
    }
    (t * s * s / n, grad)
}

/// Mean strategic logistic loss `log(1 + exp(−y·f(Δ̃(x))))`.
pub fn strategic_loss(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
) -> Result<Objective> {
    batch_objective(data, rows, model, cost, response, &[(Term::StrategicLoss, 1.0)])?.into_strict()
}

/// Mean negated smoothed user utility.
pub fn reg_utility(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
) -> Result<Objective> {
    batch_objective(data, rows, model, cost, response, &[(Term::Utility, 1.0)])?.into_strict()
}

/// Mean over rows of the minimal cost a positive user pays to be accepted.
pub fn reg_burden(data: &Dataset, rows: &[usize], model: &LinearScorer, cost: &CostSpec) -> Result<Objective> {
    let response = ResponseConfig::training();
    batch_objective(data, rows, model, cost, &response, &[(Term::Burden, 1.0)])?.into_strict()
}

/// Mean of `σ_τ(−f(x))·σ_τ(−f(Δ̃(x)))`, optionally only over denied users.
pub fn reg_recourse(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
    masked: bool,
) -> Result<Objective> {
    batch_objective(data, rows, model, cost, response, &[(Term::Recourse { masked }, 1.0)])?.into_strict()
}

/// `strategic_loss + λ·R`.
pub fn regularized_objective(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    cost: &CostSpec,
    response: &ResponseConfig,
    objective: &ObjectiveConfig,
) -> Result<Objective> {
    objective.validate()?;
    batch_objective(data, rows, model, cost, response, &objective.terms())?.into_strict()
}

/// Mean logistic loss on unmoved points; gradient over `[w, b]`.
pub fn clean_loss(data: &Dataset, rows: &[usize], model: &LinearScorer) -> Result<Objective> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let k = model.dim();
    let mut value = 0.0;
    let mut gradient = vec![0.0; k + 1];
    for &i in rows {
        let x = data.row(i);
        crate::error::check_dim("clean loss input", k, x.len())?;
        let y = data.label(i);
        let f = model.head_score(x);
        value += log1p_exp(-y * f);
        let s = -y * logistic(-y * f);
        gradient[..k].iter_mut().zip(x).for_each(|(g, xi)| *g += s * xi);
        gradient[k] += s;
    }
    let m = rows.len() as f64;
    gradient.iter_mut().for_each(|g| *g /= m);
    Ok(Objective {
        value: value / m,
        gradient,
    })
}

/// Result of [`worst_case_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    /// Lowest index attaining the maximum.
    pub index: usize,
    /// Gradient of the attaining candidate's loss.
    pub gradient: Vec<f64>,
    /// Loss under each candidate.
    pub values: Vec<f64>,
}

/// `max_c strategic_loss(c)` over `candidates`.
pub fn worst_case_loss(
    data: &Dataset,
    rows: &[usize],
    model: &LinearScorer,
    candidates: &[CostSpec],
    response: &ResponseConfig,
) -> Result<WorstCase> {
    let objectives = candidates
        .iter()
        .map(|c| strategic_loss(data, rows, model, c, response))
        .collect::<Result<Vec<_>>>()?;
    select_worst(objectives)
}

/// Picks the largest objective (lowest index on ties).
pub fn select_worst(objectives: Vec<Objective>) -> Result<WorstCase> {
    if objectives.is_empty() {
        return Err(Error::InvalidConfig("at least one candidate cost is required".into()));
    }
    let values: Vec<f64> = objectives.iter().map(|o| o.value).collect();
    let mut index = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[index] {
            index = j;
        }
    }
    let best = objectives.into_iter().nth(index).expect("index in range");
    Ok(WorstCase {
        value: best.value,
        index,
        gradient: best.gradient,
        values,
    })
}

/// Gradient entries for `[w, b]` from a full layout gradient.
pub fn model_part(gradient: &[f64], model: &LinearScorer) -> Vec<f64> {
    gradient[..model.dim() + 1].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tight() -> ResponseConfig {
        ResponseConfig::training().with_tol(1e-11).with_max_iter(2000)
    }

    fn random_batch(rng: &mut ChaCha8Rng, m: usize) -> Dataset {
        let rows = (0..m)
            .map(|_| vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)])
            .collect();
        let labels = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Dataset::new(rows, labels).unwrap()
    }

    fn all_rows(d: &Dataset) -> Vec<usize> {
        (0..d.len()).collect()
    }

    fn perturbed(model: &LinearScorer, cost: &CostSpec, j: usize, h: f64) -> (LinearScorer, CostSpec) {
        let k = model.dim();
        let mut w = model.weights().to_vec();
        let mut b = model.intercept();
        let mut v = cost.params().to_vec();
        if j < k {
            w[j] += h;
        } else if j == k {
            b += h;
        } else {
            v[j - k - 1] += h;
        }
        (LinearScorer::new(w, b).unwrap(), cost.with_params(&v).unwrap())
    }

    fn check_fd(terms: &[(Term, f64)], cost: &CostSpec, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_batch(&mut rng, 6);
        let rows = all_rows(&data);
        let model = LinearScorer::new(vec![rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5)], 0.2).unwrap();
        let cfg = tight();
        let obj = batch_objective(&data, &rows, &model, cost, &cfg, terms)
            .unwrap()
            .into_strict()
            .unwrap();
        let h = 1e-5;
        for j in 0..obj.gradient.len() {
            let (mp, cp) = perturbed(&model, cost, j, h);
            let (mm, cm) = perturbed(&model, cost, j, -h);
            let fp = batch_objective(&data, &rows, &mp, &cp, &cfg, terms).unwrap().value;
            let fm = batch_objective(&data, &rows, &mm, &cm, &cfg, terms).unwrap().value;
            let fd = (fp - fm) / (2.0 * h);
            let err = (fd - obj.gradient[j]).abs() / fd.abs().max(obj.gradient[j].abs()).max(1e-3);
            assert!(err <= 1e-3, "{terms:?} param {j}: fd {fd} analytic {}", obj.gradient[j]);
        }
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        check_fd(&[(Term::StrategicLoss, 1.0)], &CostSpec::quadratic(1.0).unwrap(), 1);
        check_fd(
            &[(Term::StrategicLoss, 1.0)],
            &CostSpec::weighted_quadratic(vec![0.7, 1.6], 1.0).unwrap(),
            2,
        );
        check_fd(
            &[(Term::StrategicLoss, 1.0)],
            &CostSpec::mixture(0.3, vec![0.8, -0.4], 1.0).unwrap(),
            3,
        );
    }

    #[test]
    fn regularizer_gradients_match_finite_differences() {
        let wq = CostSpec::weighted_quadratic(vec![0.7, 1.6], 1.5).unwrap();
        check_fd(&[(Term::Utility, 1.0)], &wq, 4);
        check_fd(&[(Term::Burden, 1.0)], &wq, 5);
        check_fd(&[(Term::Recourse { masked: false }, 1.0)], &wq, 6);
        check_fd(&[(Term::Recourse { masked: true }, 1.0)], &wq, 7);
        let mix = CostSpec::mixture(0.5, vec![0.3, 0.9], 1.0).unwrap();
        check_fd(&[(Term::Utility, 1.0)], &mix, 8);
    }

    #[test]
    fn pinned_responses_reduce_to_logistic_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = random_batch(&mut rng, 20);
        let rows = all_rows(&data);
        let model = LinearScorer::new(vec![1.0, -0.5], 0.1).unwrap();
        let cost = CostSpec::quadratic(1e6).unwrap();
        let s = strategic_loss(&data, &rows, &model, &cost, &ResponseConfig::training()).unwrap();
        let c = clean_loss(&data, &rows, &model).unwrap();
        assert!((s.value - c.value).abs() < 1e-3);
    }

    #[test]
    fn saturated_loss_is_negligible() {
        let data = Dataset::new(vec![vec![50.0, 0.0]], vec![1.0]).unwrap();
        let model = LinearScorer::new(vec![1.0, 0.0], 0.0).unwrap();
        let cost = CostSpec::quadratic(1.0).unwrap();
        let s = strategic_loss(&data, &[0], &model, &cost, &ResponseConfig::training()).unwrap();
        assert!(s.value <= 1e-20);
    }

    #[test]
    fn burden_examples() {
        let cost = CostSpec::quadratic(1.0).unwrap();
        let data = Dataset::new(
            vec![vec![-2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let m1 = LinearScorer::new(vec![1.0, 0.0], 0.0).unwrap();
        assert!((reg_burden(&data, &[0], &m1, &cost).unwrap().value - 4.0).abs() < 1e-15);
        assert_eq!(reg_burden(&data, &[1], &m1, &cost).unwrap().value, 0.0);
        let m2 = LinearScorer::new(vec![2.0, 0.0], 0.0).unwrap();
        assert!((reg_burden(&data, &[2], &m2, &cost).unwrap().value - 1.0).abs() < 1e-15);
        let zero = LinearScorer::new(vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(reg_burden(&data, &[0], &zero, &cost), Err(Error::DegenerateModel));
        let lin = CostSpec::mixture(0.5, vec![1.0, 0.0], 1.0).unwrap();
        assert!(reg_burden(&data, &[0], &m1, &lin).is_err());
    }

    #[test]
    fn burden_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let data = random_batch(&mut rng, 30);
        let rows = all_rows(&data);
        let cost = CostSpec::weighted_quadratic(vec![0.4, 2.0], 1.3).unwrap();
        let m = LinearScorer::new(vec![0.8, -0.3], 0.4).unwrap();
        let base = reg_burden(&data, &rows, &m, &cost).unwrap().value;
        for k in [0.01, 0.5, 3.0, 100.0] {
            let mk = LinearScorer::new(vec![0.8 * k, -0.3 * k], 0.4 * k).unwrap();
            let v = reg_burden(&data, &rows, &mk, &cost).unwrap().value;
            assert!((v - base).abs() <= 1e-9 * base.max(1.0));
        }
    }

    #[test]
    fn recourse_signs() {
        let cost = CostSpec::quadratic(1.0).unwrap();
        let cfg = ResponseConfig::training();
        let model = LinearScorer::new(vec![1.0, 0.0], 0.0).unwrap();
        // approved and approved
        let data = Dataset::new(vec![vec![50.0, 0.0]], vec![1.0]).unwrap();
        let v = reg_recourse(&data, &[0], &model, &cost, &cfg, false).unwrap().value;
        assert!((v - 1.0).abs() < 0.05);
        assert_eq!(reg_recourse(&data, &[0], &model, &cost, &cfg, true).unwrap().value, 0.0);
        // denied and stuck
        let data = Dataset::new(vec![vec![-50.0, 0.0]], vec![1.0]).unwrap();
        let v = reg_recourse(&data, &[0], &model, &cost, &cfg, false).unwrap().value;
        assert!((v - 1.0).abs() < 0.05);
        // denied but able to cross
        let cheap = CostSpec::quadratic(0.01).unwrap();
        let sharp = LinearScorer::new(vec![20.0, 0.0], 0.0).unwrap();
        let data = Dataset::new(vec![vec![-1.0, 0.0]], vec![1.0]).unwrap();
        let v = reg_recourse(&data, &[0], &sharp, &cheap, &cfg, false).unwrap().value;
        assert!(v < -0.9);
    }

    #[test]
    fn lambda_zero_equals_strategic_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = random_batch(&mut rng, 10);
        let rows = all_rows(&data);
        let model = LinearScorer::new(vec![0.9, 0.2], -0.1).unwrap();
        let cost = CostSpec::quadratic(1.0).unwrap();
        let cfg = ResponseConfig::training();
        let plain = strategic_loss(&data, &rows, &model, &cost, &cfg).unwrap();
        for reg in [Regularizer::Utility, Regularizer::Burden, Regularizer::Recourse] {
            let obj = ObjectiveConfig::new(reg, 0.0).unwrap();
            let r = regularized_objective(&data, &rows, &model, &cost, &cfg, &obj).unwrap();
            assert_eq!(r, plain);
        }
    }

    #[test]
    fn worst_case_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data = random_batch(&mut rng, 10);
        let rows = all_rows(&data);
        let model = LinearScorer::new(vec![0.9, 0.2], -0.1).unwrap();
        let cfg = ResponseConfig::training();
        let c1 = CostSpec::quadratic(1.0).unwrap();
        let c2 = CostSpec::quadratic(0.5).unwrap();
        let single = worst_case_loss(&data, &rows, &model, core::slice::from_ref(&c1), &cfg).unwrap();
        assert_eq!(
            single.value,
            strategic_loss(&data, &rows, &model, &c1, &cfg).unwrap().value
        );
        let dup = worst_case_loss(&data, &rows, &model, &[c1.clone(), c1.clone()], &cfg).unwrap();
        assert_eq!(dup.index, 0);
        let both = worst_case_loss(&data, &rows, &model, &[c1, c2], &cfg).unwrap();
        assert!(both.values.iter().all(|v| *v <= both.value));
        assert!(worst_case_loss(&data, &rows, &model, &[], &cfg).is_err());
    }
}
