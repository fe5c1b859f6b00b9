use std::f64::consts::PI;

use super::{AngleExpr, GateOp, ParamCircuit};
use crate::error::{Error, Result};

fn require_two_qubits(n_qubits: usize, what: &str) -> Result<()> {
    if n_qubits < 2 {
        return Err(Error::Argument(format!(
            "{what} needs at least 2 qubits, got {n_qubits}"
        )));
    }
    Ok(())
}

/// Second-order Pauli-Z evolution feature map with full pairing.
///
/// Each repetition is a Hadamard layer, `PHASE(2 x_i)` on every qubit and,
/// for every pair `i < j`, `CNOT(i,j) PHASE(2 (pi - x_i)(pi - x_j)) CNOT(i,j)`
/// with the phase on `j`.
pub fn build_zz_feature_map(n_qubits: usize, reps: usize) -> Result<ParamCircuit> {
    require_two_qubits(n_qubits, "ZZ feature map")?;
    if reps == 0 {
        return Err(Error::Argument("feature map needs at least one repetition".into()));
    }
    let mut c = ParamCircuit::new(n_qubits, n_qubits, 0);
    for _ in 0..reps {
        for q in 0..n_qubits {
            c.push(GateOp::h(q));
        }
        for q in 0..n_qubits {
            c.push(GateOp::phase(q, AngleExpr::constant(2.0).times_feature(q)));
        }
        for i in 0..n_qubits {
            for j in i + 1..n_qubits {
                let pair = AngleExpr::constant(2.0)
                    .times_offset_feature(PI, i)
                    .times_offset_feature(PI, j);
                c.push(GateOp::cnot(i, j))
                    .push(GateOp::phase(j, pair))
                    .push(GateOp::cnot(i, j));
            }
        }
    }
    Ok(c)
}

/// RY layers separated by full CNOT entanglement; `(reps + 1) * n` parameters.
pub fn build_real_amplitudes(n_qubits: usize, reps: usize) -> Result<ParamCircuit> {
    require_two_qubits(n_qubits, "RealAmplitudes ansatz")?;
    let mut c = ParamCircuit::new(n_qubits, 0, (reps + 1) * n_qubits);
    for r in 0..=reps {
        if r > 0 {
            for i in 0..n_qubits {
                for j in i + 1..n_qubits {
                    c.push(GateOp::cnot(i, j));
                }
            }
        }
        for q in 0..n_qubits {
            c.push(GateOp::ry(q, AngleExpr::param(r * n_qubits + q)));
        }
    }
    Ok(c)
}

/// Feature map (2 repetitions) followed by a single-repetition RealAmplitudes
/// ansatz: the separated feature/variational design.
pub fn build_feature_var(n_qubits: usize) -> Result<ParamCircuit> {
    let fm = build_zz_feature_map(n_qubits, 2)?;
    let ansatz = build_real_amplitudes(n_qubits, 1)?;
    fm.then(&ansatz)
}

fn chain_down(c: &mut ParamCircuit) {
    for i in 0..c.n_qubits - 1 {
        c.push(GateOp::cnot(i, i + 1));
    }
}

fn chain_up(c: &mut ParamCircuit) {
    for i in (0..c.n_qubits - 1).rev() {
        c.push(GateOp::cnot(i + 1, i));
    }
}

/// The merged circuit where feature and parameter angles are interleaved.
///
/// Layout for `N` qubits:
///
/// ```text
/// RY(x_i)            on every qubit
/// chain down, chain up
/// RZ(t_{N+i})        on every qubit          (t_N .. t_{2N-1})
/// chain down
/// RX(t_2N) RY(t_2N+1) RZ(t_2N+2) on qubit 0
/// chain up
/// RY(t_i * x_i)      on every qubit          (t_0 .. t_{N-1})
/// chain down, chain up
/// ```
///
/// A chain is `N - 1` nearest-neighbour CNOTs, so there are `6 (N - 1)`
/// entanglers and `2N + 3` parameters. Every RZ is followed by an RY on
/// the same qubit. A diagonal gate followed only by CNOTs cannot change
/// Z-basis probabilities, so this ordering keeps all parameters trainable.
pub fn build_combined(n_qubits: usize) -> Result<ParamCircuit> {
    require_two_qubits(n_qubits, "combined circuit")?;
    let n = n_qubits;
    let mut c = ParamCircuit::new(n, n, 2 * n + 3);
    for q in 0..n {
        c.push(GateOp::ry(q, AngleExpr::feature(q)));
    }
    chain_down(&mut c);
    chain_up(&mut c);
    for q in 0..n {
        c.push(GateOp::rz(q, AngleExpr::param(n + q)));
    }
    chain_down(&mut c);
    c.push(GateOp::rx(0, AngleExpr::param(2 * n)))
        .push(GateOp::ry(0, AngleExpr::param(2 * n + 1)))
        .push(GateOp::rz(0, AngleExpr::param(2 * n + 2)));
    chain_up(&mut c);
    for q in 0..n {
        c.push(GateOp::ry(q, AngleExpr::param(q).times_feature(q)));
    }
    chain_down(&mut c);
    chain_up(&mut c);
    Ok(c)
}
