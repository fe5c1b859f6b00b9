//! Reference unitary built from explicit Kronecker products.
//!
//! Shares nothing with the sweep kernels in the parent module: every gate
//! matrix is assembled from Pauli matrices (`cos(phi/2) I - i sin(phi/2) A`),
//! embedded with identities and multiplied out. Only meant for tests on a
//! handful of qubits.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Statevector;
use crate::circuit::{GateKind, GateOp, ParamCircuit};
use crate::error::{Error, Result};

pub const ORACLE_MAX_QUBITS: usize = 4;

type CMat = DMatrix<Complex64>;

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn identity2() -> CMat {
    CMat::identity(2, 2)
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
}

fn pauli_y() -> CMat {
    let i = Complex64::i();
    CMat::from_row_slice(2, 2, &[re(0.0), -i, i, re(0.0)])
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)])
}

fn projector(bit: usize) -> CMat {
    let mut p = CMat::zeros(2, 2);
    p[(bit, bit)] = re(1.0);
    p
}

fn rotation(generator: CMat, angle: f64) -> CMat {
    let half = 0.5 * angle;
    identity2() * re(half.cos()) - generator * Complex64::new(0.0, half.sin())
}

fn single_qubit_matrix(gate: &GateOp, angle: f64) -> CMat {
    match gate.kind {
        GateKind::H => (pauli_x() + pauli_z()) * re(std::f64::consts::FRAC_1_SQRT_2),
        GateKind::Rx => rotation(pauli_x(), angle),
        GateKind::Ry => rotation(pauli_y(), angle),
        GateKind::Rz => rotation(pauli_z(), angle),
        GateKind::Phase => projector(0) + projector(1) * Complex64::from_polar(1.0, angle),
        GateKind::Cnot => unreachable!("CNOT is not a single-qubit gate"),
    }
}

/// `ops[q]` acts on qubit `q`; qubit 0 is the rightmost Kronecker factor.
fn embed(n_qubits: usize, ops: &[(usize, CMat)]) -> CMat {
    let mut full = CMat::identity(1, 1);
    for q in (0..n_qubits).rev() {
        let factor = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map_or_else(identity2, |(_, m)| m.clone());
        full = full.kronecker(&factor);
    }
    full
}

fn gate_matrix(n_qubits: usize, gate: &GateOp, angle: f64) -> Result<CMat> {
    for q in gate.qubits() {
        if q >= n_qubits {
            return Err(Error::Index { index: q, n_qubits });
        }
    }
    if gate.kind == GateKind::Cnot {
        let control = gate
            .control
            .ok_or_else(|| Error::Argument("CNOT without control qubit".into()))?;
        if control == gate.target {
            return Err(Error::Argument("CNOT control equals target".into()));
        }
        let off = embed(n_qubits, &[(control, projector(0))]);
        let on = embed(n_qubits, &[(control, projector(1)), (gate.target, pauli_x())]);
        return Ok(off + on);
    }
    Ok(embed(n_qubits, &[(gate.target, single_qubit_matrix(gate, angle))]))
}

/// Full `2^n x 2^n` unitary of `circuit` at `(x, theta)`.
pub fn dense_matrix_oracle(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = circuit.n_qubits;
    if n == 0 || n > ORACLE_MAX_QUBITS {
        return Err(Error::Size(format!(
            "dense oracle supports 1..={ORACLE_MAX_QUBITS} qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut u = CMat::identity(dim, dim);
    for g in &circuit.gates {
        let angle = match &g.angle {
            Some(a) => a.resolve(x, theta)?,
            None => 0.0,
        };
        u = gate_matrix(n, g, angle)? * u;
    }
    Ok(u)
}

/// The oracle unitary applied to `|0...0>`.
pub fn oracle_state(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> Result<Statevector> {
    if x.len() != circuit.n_features || theta.len() != circuit.n_params {
        return Err(Error::Shape("oracle input lengths do not match circuit".into()));
    }
    let u = dense_matrix_oracle(circuit, x, theta)?;
    Statevector::from_amplitudes(u.column(0).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::AngleExpr;

    #[test]
    fn single_hadamard() {
        let mut c = ParamCircuit::new(1, 0, 0);
        c.push(GateOp::h(0));
        let u = dense_matrix_oracle(&c, &[], &[]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = CMat::from_row_slice(2, 2, &[re(s), re(s), re(s), re(-s)]);
        assert!((u - expected).norm() < 1e-15);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = ParamCircuit::new(3, 0, 0);
        assert_eq!(dense_matrix_oracle(&c, &[], &[]).unwrap(), CMat::identity(8, 8));
    }

    #[test]
    fn cnot_is_permutation_with_lsb_control() {
        let mut c = ParamCircuit::new(2, 0, 0);
        c.push(GateOp::cnot(0, 1));
        let u = dense_matrix_oracle(&c, &[], &[]).unwrap();
        // |01> (index 1) <-> |11> (index 3)
        assert_eq!(u[(3, 1)], re(1.0));
        assert_eq!(u[(1, 3)], re(1.0));
        assert_eq!(u[(0, 0)], re(1.0));
        assert_eq!(u[(2, 2)], re(1.0));
    }

    #[test]
    fn oracle_is_unitary() {
        let mut c = ParamCircuit::new(2, 1, 1);
        c.push(GateOp::h(0))
            .push(GateOp::ry(1, AngleExpr::param(0).times_feature(0)))
            .push(GateOp::cnot(1, 0))
            .push(GateOp::phase(1, AngleExpr::constant(0.3)));
        let u = dense_matrix_oracle(&c, &[0.4], &[1.3]).unwrap();
        let prod = u.adjoint() * &u;
        assert!((prod - CMat::identity(4, 4)).norm() < 1e-13);
    }

    #[test]
    fn too_many_qubits() {
        let c = ParamCircuit::new(5, 0, 0);
        assert!(matches!(dense_matrix_oracle(&c, &[], &[]), Err(Error::Size(_))));
    }
}
