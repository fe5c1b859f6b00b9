use std::f64::consts::{PI, TAU};

use hqnn::circuit::{build_combined, build_feature_var, random_circuit, AngleExpr, GateOp, ParamCircuit};
use hqnn::gradients::Observable;
use hqnn::qsim::{dense_matrix_oracle, oracle_state, run_circuit, Statevector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_inputs(rng: &mut ChaCha8Rng, c: &ParamCircuit) -> (Vec<f64>, Vec<f64>) {
    let x = (0..c.n_features).map(|_| rng.random_range(0.0..PI)).collect();
    let theta = (0..c.n_params).map(|_| rng.random_range(0.0..TAU)).collect();
    (x, theta)
}

#[test]
fn statevector_matches_dense_oracle_on_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for case in 0..200u64 {
        let n = rng.random_range(1..=4);
        let depth = rng.random_range(0..=20);
        let c = random_circuit(n, 3, 4, depth, case);
        let (x, theta) = random_inputs(&mut rng, &c);
        let fast = run_circuit(&c, &x, &theta).unwrap();
        let slow = oracle_state(&c, &x, &theta).unwrap();
        for (a, b) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            worst = worst.max((a - b).norm());
        }
    }
    assert!(worst <= 1e-12, "max amplitude deviation {worst:e}");
}

#[test]
fn oracle_matrix_is_unitary_for_presets() {
    let x = [0.4, 2.2, 1.3];
    for c in [build_feature_var(3).unwrap(), build_combined(3).unwrap()] {
        let theta: Vec<f64> = (0..c.n_params).map(|j| 0.3 * j as f64 + 0.1).collect();
        let u = dense_matrix_oracle(&c, &x, &theta).unwrap();
        let eye = u.adjoint() * &u;
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye[(i, j)].re - want).abs() < 1e-12 && eye[(i, j)].im.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn parity_readout_matches_basis_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=5 {
        let c = build_feature_var(n).unwrap();
        for _ in 0..10 {
            let (x, theta) = random_inputs(&mut rng, &c);
            let s = run_circuit(&c, &x, &theta).unwrap();
            let odd: f64 = s
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(i, _)| i.count_ones() % 2 == 1)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            assert!((s.probability_odd_parity() - odd).abs() < 1e-14);
            assert!((s.expectation_parity() - (1.0 - 2.0 * odd)).abs() < 1e-14);
            let (even, odd2) = s.parity_probabilities();
            assert!((even + odd2 - 1.0).abs() < 1e-12);
            assert!((Observable::ZString.evaluate(&s)[0] - s.expectation_parity()).abs() < 1e-14);
            assert!((Observable::Parity.evaluate(&s)[0] - odd).abs() < 1e-14);
        }
    }
}

#[test]
fn per_qubit_expectations_match_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = build_combined(4).unwrap();
    let (x, theta) = random_inputs(&mut rng, &c);
    let s = run_circuit(&c, &x, &theta).unwrap();
    let p = s.probabilities();
    for q in 0..4 {
        let marginal: f64 = p
            .iter()
            .enumerate()
            .map(|(i, v)| if i >> q & 1 == 0 { *v } else { -*v })
            .sum();
        assert!((s.expectation_z(q).unwrap() - marginal).abs() < 1e-14);
    }
}

#[test]
fn feature_var_returns_to_zero_state_at_pi() {
    // phases are 2 pi and pair angles 0, so the two Hadamard layers cancel
    let c = build_feature_var(2).unwrap();
    let s = run_circuit(&c, &[PI, PI], &[0.0; 4]).unwrap();
    assert!((s.amplitudes()[0].norm_sqr() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_invariant(n in 1usize..=10, depth in 0usize..60, seed in any::<u64>()) {
        let c = random_circuit(n, 2, 3, depth, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let (x, theta) = random_inputs(&mut rng, &c);
        let s = run_circuit(&c, &x, &theta).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn gate_then_inverse_is_identity(q in 0usize..3, phi in -TAU..TAU, which in 0usize..3) {
        let rot = |a: f64| match which {
            0 => GateOp::rx(q, AngleExpr::constant(a)),
            1 => GateOp::ry(q, AngleExpr::constant(a)),
            _ => GateOp::rz(q, AngleExpr::constant(a)),
        };
        let mut s = Statevector::zero(3).unwrap();
        s.apply_gate(&GateOp::h(0), 0.0).unwrap();
        s.apply_gate(&GateOp::cnot(0, 2), 0.0).unwrap();
        let before = s.clone();
        s.apply_gate(&rot(phi), phi).unwrap();
        s.apply_gate(&rot(-phi), -phi).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
