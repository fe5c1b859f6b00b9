use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AngleExpr, GateKind, GateOp, ParamCircuit};

/// A random circuit of `depth` gates for testing and benchmarking.
///
/// Gates are drawn uniformly from H, RX, RY, RZ, PHASE and CNOT (CNOT only
/// when `n_qubits >= 2`). Angles mix constants, features, parameters and
/// their products. Parameters only appear on Pauli rotations, so the result
/// is always differentiable with the shift rule. Some parameters may be
/// left unused.
pub fn random_circuit(n_qubits: usize, n_features: usize, n_params: usize, depth: usize, seed: u64) -> ParamCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = ParamCircuit::new(n_qubits, n_features, n_params);
    let kinds: &[GateKind] = if n_qubits >= 2 {
        &[GateKind::H, GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Phase, GateKind::Cnot]
    } else {
        &[GateKind::H, GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Phase]
    };
    for _ in 0..depth {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let q = rng.random_range(0..n_qubits);
        let gate = match kind {
            GateKind::H => GateOp::h(q),
            GateKind::Cnot => {
                let t = (q + rng.random_range(1..n_qubits)) % n_qubits;
                GateOp::cnot(q, t)
            }
            _ => {
                let allow_param = kind.is_pauli_rotation() && n_params > 0;
                GateOp::rotation(kind, q, random_angle(&mut rng, n_features, n_params, allow_param))
            }
        };
        c.push(gate);
    }
    c
}

fn random_angle(rng: &mut impl Rng, n_features: usize, n_params: usize, allow_param: bool) -> AngleExpr {
    let coeff = rng.random_range(-2.0..2.0);
    let mut a = AngleExpr::constant(coeff);
    if allow_param && rng.random_bool(0.7) {
        a = a.with_param(rng.random_range(0..n_params));
    }
    if n_features > 0 {
        match rng.random_range(0..4) {
            0 => a = a.times_feature(rng.random_range(0..n_features)),
            1 => a = a.times_offset_feature(std::f64::consts::PI, rng.random_range(0..n_features)),
            2 => {
                a = a
                    .times_feature(rng.random_range(0..n_features))
                    .times_feature(rng.random_range(0..n_features))
            }
            _ => {}
        }
    }
    a
}
