//! Gradients of circuit observables with respect to the trainable angles.
//!
//! [`shift_rule_grad`] is exact for Pauli rotations: for a gate with angle
//! `s * theta_j` (where `s` collects the coefficient and feature factors)
//!
//! ```text
//! d<O>/d theta_j += s/2 * (<O>(phi + pi/2) - <O>(phi - pi/2))
//! ```
//!
//! summed over every gate that references `theta_j`. [`finite_diff_grad`]
//! is the central-difference oracle used to check it.

use std::f64::consts::FRAC_PI_2;

use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::qsim::{run_resolved, Statevector};

/// Readout evaluated on the final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Probability of odd parity, `(1 - <Z...Z>) / 2`. One row.
    Parity,
    /// `<Z_0>, ..., <Z_{n-1}>`. One row per qubit.
    PerQubitZ,
    /// `<Z (x) ... (x) Z>`. One row.
    ZString,
}

impl Observable {
    pub fn n_rows(self, n_qubits: usize) -> usize {
        match self {
            Observable::PerQubitZ => n_qubits,
            Observable::Parity | Observable::ZString => 1,
        }
    }

    pub fn evaluate(self, state: &Statevector) -> Vec<f64> {
        match self {
            Observable::Parity => vec![state.probability_odd_parity()],
            Observable::PerQubitZ => state.expectations_z(),
            Observable::ZString => vec![state.expectation_parity()],
        }
    }
}

/// Row-major `(n_observables, n_params)` matrix of derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumJacobian {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl QuantumJacobian {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    fn add(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] += v;
    }

    /// `weights^T J`: contracts the observable axis, giving one entry per
    /// parameter.
    pub fn vjp(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.rows {
            return Err(Error::Shape(format!(
                "jacobian has {} rows, got {} weights",
                self.rows,
                weights.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, w) in weights.iter().enumerate() {
            for (o, j) in out.iter_mut().zip(self.row(r)) {
                *o += w * j;
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }
}

fn observe(circuit: &ParamCircuit, angles: &[f64], obs: Observable) -> Result<Vec<f64>> {
    Ok(obs.evaluate(&run_resolved(circuit, angles)?))
}

pub fn shift_rule_grad(
    circuit: &ParamCircuit,
    x: &[f64],
    theta: &[f64],
    obs: Observable,
) -> Result<QuantumJacobian> {
    for g in &circuit.gates {
        if let Some(p) = g.param() {
            if !g.kind.is_pauli_rotation() {
                return Err(Error::UnsupportedGate {
                    param: p,
                    gate: g.kind.name(),
                });
            }
        }
    }
    let mut angles = circuit.resolve_angles(x, theta)?;
    let mut jac = QuantumJacobian::zeros(obs.n_rows(circuit.n_qubits), circuit.n_params);
    for (gi, g) in circuit.gates.iter().enumerate() {
        let (Some(expr), Some(p)) = (g.angle, g.param()) else {
            continue;
        };
        let scale = expr.scale(x)?;
        if scale == 0.0 {
            continue;
        }
        let base = angles[gi];
        angles[gi] = base + FRAC_PI_2;
        let plus = observe(circuit, &angles, obs)?;
        angles[gi] = base - FRAC_PI_2;
        let minus = observe(circuit, &angles, obs)?;
        angles[gi] = base;
        for (r, (a, b)) in plus.iter().zip(&minus).enumerate() {
            jac.add(r, p, 0.5 * scale * (a - b));
        }
    }
    Ok(jac)
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

pub fn finite_diff_grad(
    circuit: &ParamCircuit,
    x: &[f64],
    theta: &[f64],
    obs: Observable,
    h: f64,
) -> Result<QuantumJacobian> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Argument(format!("step must be positive, got {h}")));
    }
    let mut jac = QuantumJacobian::zeros(obs.n_rows(circuit.n_qubits), circuit.n_params);
    let mut t = theta.to_vec();
    for j in 0..circuit.n_params.min(t.len()) {
        let base = t[j];
        t[j] = base + h;
        let plus = observe(circuit, &circuit.resolve_angles(x, &t)?, obs)?;
        t[j] = base - h;
        let minus = observe(circuit, &circuit.resolve_angles(x, &t)?, obs)?;
        t[j] = base;
        for (r, (a, b)) in plus.iter().zip(&minus).enumerate() {
            jac.add(r, j, (a - b) / (2.0 * h));
        }
    }
    // surface shape errors even when there are no parameters
    circuit.resolve_angles(x, theta)?;
    Ok(jac)
}
