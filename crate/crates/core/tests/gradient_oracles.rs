use std::f64::consts::{PI, TAU};

use hqnn::circuit::{random_circuit, AngleExpr, GateOp, ParamCircuit};
use hqnn::gradients::{finite_diff_grad, shift_rule_grad, Observable, DEFAULT_FD_STEP};
use hqnn::model::{loss_bce, HybridModel, ModelKind, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBSERVABLES: [Observable; 3] = [Observable::Parity, Observable::PerQubitZ, Observable::ZString];

#[test]
fn shift_rule_agrees_with_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let n = rng.random_range(1..=4);
        let c = random_circuit(n, 3, 4, rng.random_range(1..=20), 1000 + case);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..PI)).collect();
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..TAU)).collect();
        let obs = OBSERVABLES[case as usize % 3];
        let exact = shift_rule_grad(&c, &x, &theta, obs).unwrap();
        let approx = finite_diff_grad(&c, &x, &theta, obs, DEFAULT_FD_STEP).unwrap();
        for (e, a) in exact.iter().zip(approx.iter()) {
            worst = worst.max((e - a).abs() / (1.0 + e.abs()));
        }
    }
    assert!(worst <= 1e-6, "worst relative disagreement {worst:e}");
}

fn loss_at(model: &HybridModel, params: &ModelParams, x: &[f64], y: u8) -> f64 {
    loss_bce(model.predict(params, x).unwrap(), y).unwrap()
}

/// Worst `|analytic - central| / (1 + |analytic|)` over all parameters.
fn end_to_end_error(model: &HybridModel, params: &ModelParams, x: &[f64], y: u8) -> f64 {
    let h = 1e-5;
    let analytic = model.grad_all(params, x, y).unwrap().to_flat();
    let flat = params.to_flat();
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for (j, g) in analytic.iter().enumerate() {
        let mut t = flat.clone();
        t[j] = flat[j] + h;
        probe.set_flat(&t).unwrap();
        let plus = loss_at(model, &probe, x, y);
        t[j] = flat[j] - h;
        probe.set_flat(&t).unwrap();
        let minus = loss_at(model, &probe, x, y);
        let central = (plus - minus) / (2.0 * h);
        worst = worst.max((g - central).abs() / (1.0 + g.abs()));
    }
    worst
}

#[test]
fn full_model_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for kind in ModelKind::ALL {
        let model = HybridModel::new(kind, 3).unwrap();
        let mut worst = 0.0f64;
        for case in 0..20u64 {
            let params = model.init_params(case);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..PI - 0.05)).collect();
            let y = (case % 2) as u8;
            worst = worst.max(end_to_end_error(&model, &params, &x, y));
        }
        assert!(worst <= 1e-5, "{kind}: worst relative error {worst:e}");
    }
}

#[test]
fn single_parameter_parity_toy_matches_finite_differences() {
    let mut c = ParamCircuit::new(2, 2, 1);
    c.push(GateOp::ry(0, AngleExpr::feature(0)))
        .push(GateOp::ry(1, AngleExpr::param(0)))
        .push(GateOp::cnot(1, 0))
        .push(GateOp::rx(1, AngleExpr::feature(1)));
    let model = HybridModel::with_circuit(ModelKind::FeatureVar, c).unwrap();
    for (theta, x, y) in [(0.3, [0.5, 1.0], 1u8), (2.0, [2.5, 0.1], 0), (4.4, [1.5, 3.0], 1)] {
        let params = ModelParams {
            net: None,
            theta: vec![theta],
        };
        let g = model.grad_all(&params, &x, y).unwrap();
        assert!(g.classical.is_empty());
        let h = 1e-5;
        let at = |t: f64| {
            let p = ModelParams {
                net: None,
                theta: vec![t],
            };
            loss_at(&model, &p, &x, y)
        };
        let central = (at(theta + h) - at(theta - h)) / (2.0 * h);
        assert!((g.quantum[0] - central).abs() <= 1e-6, "{} vs {central}", g.quantum[0]);
    }
}

#[test]
fn zero_head_blocks_quantum_gradient() {
    let model = HybridModel::new(ModelKind::CombinedQnnCnn, 3).unwrap();
    let mut params = model.init_params(3);
    let head = params.net.as_mut().unwrap();
    let zeros = vec![0.0; head.param_count()];
    head.set_params_flat(&zeros).unwrap();
    let g = model.grad_all(&params, &[0.5, 1.5, 2.5], 1).unwrap();
    assert_eq!(g.p, 0.5);
    assert!(g.quantum.iter().all(|v| *v == 0.0));
    assert!(g.classical.iter().any(|v| *v != 0.0));
}

#[test]
fn shift_rule_is_exact_for_product_angles() {
    // <Z> after RY(t * x) is cos(t x), so d/dt = -x sin(t x)
    let mut c = ParamCircuit::new(1, 1, 1);
    c.push(GateOp::ry(0, AngleExpr::param(0).times_feature(0)));
    for (t, x) in [(0.4, 2.0), (1.9, 0.7), (5.0, 3.1)] {
        let j = shift_rule_grad(&c, &[x], &[t], Observable::PerQubitZ).unwrap();
        assert!((j.get(0, 0) + x * (t * x).sin()).abs() < 1e-14);
    }
}
