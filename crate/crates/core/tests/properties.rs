use proptest::prelude::*;

use serm_core::cost::{CostMode, CostSpec};
use serm_core::data::{
    gen_synthetic, parabola_tangent, split, standardize_fit_transform, Dataset, Standardizer, SyntheticSpec,
};
use serm_core::model::LinearScorer;
use serm_core::objectives::reg_burden;
use serm_core::response::{
    boundary_projection, ccp_respond, grid_response_oracle, smoothed_payoff, tangent_constrained_respond,
    ResponseConfig, TangentSpec,
};
use serm_core::smooth::SmoothSign;

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(coord(), 2)
}

fn model() -> impl Strategy<Value = LinearScorer> {
    (prop::collection::vec(-2.0..2.0f64, 2), -1.5..1.5f64)
        .prop_filter("nonzero weights", |(w, _)| w.iter().map(|a| a * a).sum::<f64>() > 1e-2)
        .prop_map(|(w, b)| LinearScorer::new(w, b).unwrap())
}

fn cost() -> impl Strategy<Value = CostSpec> {
    prop_oneof![
        (0.3..3.0f64).prop_map(|t| CostSpec::quadratic(t).unwrap()),
        (prop::collection::vec(0.2..4.0f64, 2), 0.3..3.0f64)
            .prop_map(|(v, t)| CostSpec::weighted_quadratic(v, t).unwrap()),
        (0.05..1.0f64, prop::collection::vec(-1.5..1.5f64, 2), 0.3..3.0f64)
            .prop_map(|(g, v, t)| CostSpec::mixture(g, v, t).unwrap()),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn smooth_sign_identities(z in -50.0..50.0f64, tau in 0.05..5.0f64) {
        let s = SmoothSign::new(tau).unwrap();
        let v = s.value(z);
        prop_assert!((v - (s.convex_part(z) + s.concave_part(z))).abs() <= 1e-9 * (1.0 + (z / tau).abs()));
        prop_assert!((v + s.value(-z)).abs() <= 1e-12);
        prop_assert!(v.abs() < 1.0);
        prop_assert!(s.convex_second_derivative(z) >= 0.0);
        prop_assert!(s.concave_second_derivative(z) <= 0.0);
        let h = 1e-6 * tau;
        let fd = (s.value(z + h) - s.value(z - h)) / (2.0 * h);
        prop_assert!((fd - s.derivative(z)).abs() <= 1e-6 * fd.abs().max(1e-3));
    }

    #[test]
    fn smooth_sign_approaches_sign(z in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64]) {
        let s = SmoothSign::new(1e-6).unwrap();
        prop_assert!((s.value(z) - z.signum()).abs() < 1e-4);
    }

    #[test]
    fn cost_derivatives_match_differences(x in point(), x_new in point(), c in cost()) {
        let h = 1e-5;
        let g = c.gradient(&x, &x_new).unwrap();
        let hess = c.hessian(&x, &x_new).unwrap();
        for j in 0..2 {
            let (mut p, mut m) = (x_new.clone(), x_new.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (c.value(&x, &p, CostMode::Smoothed).unwrap() - c.value(&x, &m, CostMode::Smoothed).unwrap()) / (2.0 * h);
            prop_assert!(rel(g[j], fd) <= 1e-6, "grad {j}: {} vs {fd}", g[j]);
            let (gp, gm) = (c.gradient(&x, &p).unwrap(), c.gradient(&x, &m).unwrap());
            for i in 0..2 {
                let fd2 = (gp[i] - gm[i]) / (2.0 * h);
                prop_assert!(rel(hess[(i, j)], fd2) <= 1e-5, "hess {i}{j}: {} vs {fd2}", hess[(i, j)]);
            }
        }
    }

    #[test]
    fn ccp_payoff_never_decreases(x in point(), m in model(), c in cost(), tau in 0.2..2.0f64) {
        let cfg = ResponseConfig::training().with_tau(tau);
        let out = ccp_respond(&x, &m, &c, &cfg).unwrap();
        for pair in out.payoff_trace.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-9, "{:?}", out.payoff_trace);
        }
        let sign = SmoothSign::new(tau).unwrap();
        let stay = smoothed_payoff(&x, &x, &m, &c, &sign);
        prop_assert!(smoothed_payoff(&x, &out.x_star, &m, &c, &sign) >= stay - 1e-9);
    }

    #[test]
    fn ccp_response_is_scale_invariant(x in point(), m in model(), c in cost(), k in 0.25..4.0f64) {
        let cfg = ResponseConfig::training().with_tol(1e-12).with_max_iter(1000);
        let base = ccp_respond(&x, &m, &c, &cfg).unwrap();
        let scaled_model = LinearScorer::new(m.weights().iter().map(|w| k * w).collect(), k * m.intercept()).unwrap();
        let scaled = ccp_respond(&x, &scaled_model, &c, &cfg.with_tau(k * cfg.tau)).unwrap();
        for (a, b) in base.x_star.iter().zip(&scaled.x_star) {
            prop_assert!((a - b).abs() <= 1e-6, "{:?} vs {:?}", base.x_star, scaled.x_star);
        }
    }

    #[test]
    fn ccp_never_beats_the_grid(x in point(), m in model(), c in cost()) {
        let cfg = ResponseConfig::training();
        let sign = SmoothSign::new(cfg.tau).unwrap();
        let out = ccp_respond(&x, &m, &c, &cfg).unwrap();
        let grid = grid_response_oracle(&x, &m, &c, cfg.tau, 0.01).unwrap();
        let ccp_value = smoothed_payoff(&x, &out.x_star, &m, &c, &sign);
        let grid_value = smoothed_payoff(&x, &grid, &m, &c, &sign);
        // the grid maximum is within second-order distance of the true one
        prop_assert!(ccp_value <= grid_value + 1e-3, "{ccp_value} vs {grid_value}");
    }

    #[test]
    fn tangent_responses_stay_on_the_line(x1 in -3.0..3.0f64, m in model(), t in 0.3..3.0f64) {
        let x = vec![x1, -x1 * x1];
        let tangent = TangentSpec::new(x.clone(), vec![parabola_tangent(x1).to_vec()]).unwrap();
        let c = CostSpec::quadratic(t).unwrap();
        let out = tangent_constrained_respond(&x, &m, &c, &tangent, &ResponseConfig::training()).unwrap();
        prop_assert!(tangent.residual(&out.x_star) <= 1e-9);
    }

    #[test]
    fn burden_matches_numeric_projection(x in point(), m in model(), v in prop::collection::vec(0.2..4.0f64, 2), t in 0.3..3.0f64) {
        let c = CostSpec::weighted_quadratic(v.clone(), t).unwrap();
        let data = Dataset::new(vec![x.clone()], vec![1.0]).unwrap();
        let closed = reg_burden(&data, &[0], &m, &c).unwrap().value;
        // bisection on the multiplier of the constraint f(x') ≥ 0
        let w = m.weights();
        let f = |mu: f64| -> f64 {
            let p: Vec<f64> = x.iter().zip(w).zip(&v).map(|((xi, wi), vi)| xi + mu * wi / vi).collect();
            m.score(&p).unwrap()
        };
        let numeric = if f(0.0) >= 0.0 {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            while f(hi) < 0.0 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 { lo = mid } else { hi = mid }
            }
            let p: Vec<f64> = x.iter().zip(w).zip(&v).map(|((xi, wi), vi)| xi + hi * wi / vi).collect();
            c.value(&x, &p, CostMode::Exact).unwrap()
        };
        prop_assert!((closed - numeric).abs() <= 1e-6 * numeric.max(1.0), "{closed} vs {numeric}");
        let (proj_cost, _) = boundary_projection(&x, &m, &c).unwrap();
        prop_assert!((proj_cost - closed).abs() <= 1e-9 * closed.max(1.0));
    }

    #[test]
    fn burden_is_invariant_to_model_scale(x in point(), m in model(), k in 0.1..10.0f64) {
        let c = CostSpec::quadratic(1.0).unwrap();
        let data = Dataset::new(vec![x], vec![1.0]).unwrap();
        let scaled = LinearScorer::new(m.weights().iter().map(|w| k * w).collect(), k * m.intercept()).unwrap();
        let a = reg_burden(&data, &[0], &m, &c).unwrap().value;
        let b = reg_burden(&data, &[0], &scaled, &c).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn standardizer_round_trips(rows in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 3), 2..40)) {
        let labels = vec![1.0; rows.len()];
        let data = Dataset::new(rows.clone(), labels).unwrap();
        let st = Standardizer::fit(&data);
        for r in &rows {
            let back = st.inverse_row(&st.transform_row(r));
            for (a, b) in back.iter().zip(r) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn splits_partition_rows(m in 5usize..200, seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64]).collect();
        let data = Dataset::new(rows, vec![1.0; m]).unwrap();
        let s = split(&data, seed).unwrap();
        prop_assert_eq!(s.train.len(), m * 6 / 10);
        prop_assert_eq!(s.val.len(), m * 2 / 10);
        let mut seen: Vec<f64> = [&s.train, &s.val, &s.test]
            .iter()
            .flat_map(|d| d.features().iter().map(|r| r[0]))
            .collect();
        seen.sort_by(f64::total_cmp);
        prop_assert_eq!(seen, (0..m).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn parabola_tangents_are_unit_and_tangent(x1 in -5.0..5.0f64) {
        let t = parabola_tangent(x1);
        let n = (1.0 + 4.0 * x1 * x1).sqrt();
        let normal = [2.0 * x1 / n, 1.0 / n];
        prop_assert!((t[0] * t[0] + t[1] * t[1] - 1.0).abs() <= 1e-10);
        prop_assert!((t[0] * normal[0] + t[1] * normal[1]).abs() <= 1e-10);
    }
}

#[test]
fn mixture_classes_are_balanced_and_centered() {
    let data = gen_synthetic(&SyntheticSpec::gaussian_mixture(
        vec![-0.6, 0.0],
        vec![0.6, 0.0],
        vec![0.1, 0.1],
        vec![0.1, 0.1],
        10_000,
        5,
    ))
    .unwrap();
    assert_eq!(data.class_counts(), (5000, 5000));
    for (y, mu) in [(-1.0, -0.6), (1.0, 0.6)] {
        let rows: Vec<&Vec<f64>> = (0..data.len())
            .filter(|&i| data.label(i) == y)
            .map(|i| &data.features()[i])
            .collect();
        let mean0 = rows.iter().map(|r| r[0]).sum::<f64>() / rows.len() as f64;
        let mean1 = rows.iter().map(|r| r[1]).sum::<f64>() / rows.len() as f64;
        assert!((mean0 - mu).abs() < 0.02 && mean1.abs() < 0.02, "{mean0} {mean1}");
    }
}

#[test]
fn standardized_train_has_unit_scaled_moments() {
    let data = gen_synthetic(&SyntheticSpec::gaussian_mixture(
        vec![1.0, -3.0, 0.0, 5.0],
        vec![2.0, 0.0, 1.0, 5.5],
        vec![4.0, 1.0, 0.5, 2.0],
        vec![4.0, 1.0, 0.5, 2.0],
        400,
        2,
    ))
    .unwrap();
    let (_, train, _) = standardize_fit_transform(&data, &[]).unwrap();
    for j in 0..4 {
        let col: Vec<f64> = train.features().iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64).sqrt();
        assert!(mean.abs() < 1e-10);
        assert!((sd - 0.5).abs() < 1e-10);
    }
}
