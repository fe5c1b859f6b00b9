//! Exact statevector simulation.
//!
//! Amplitudes are stored densely with qubit 0 as the least significant bit
//! of the basis index. Rotations follow `R_A(phi) = exp(-i phi A / 2)` and
//! `PHASE(phi) = diag(1, e^{i phi})`. Global phase is left untouched.

pub mod oracle;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use oracle::{dense_matrix_oracle, oracle_state, ORACLE_MAX_QUBITS};

use crate::circuit::{GateKind, GateOp, ParamCircuit};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Takes ownership of raw amplitudes. The length must be a power of two;
    /// normalisation is the caller's concern.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(Error::Size(format!(
                "amplitude count {len} is not 2^n for 1 <= n <= {MAX_QUBITS}"
            )));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::Size(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::Index {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies the 2x2 matrix `[[a, b], [c, d]]` to qubit `q`.
    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (v0, v1) = (*a0, *a1);
                *a0 = m[0][0] * v0 + m[0][1] * v1;
                *a1 = m[1][0] * v0 + m[1][1] * v1;
            }
        }
    }

    fn apply_diag(&mut self, q: usize, d0: Complex64, d1: Complex64) {
        let stride = 1usize << q;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            lo.iter_mut().for_each(|a| *a *= d0);
            hi.iter_mut().for_each(|a| *a *= d1);
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    /// Applies `gate` in place with its angle already resolved to `angle`
    /// (ignored for H and CNOT).
    pub fn apply_gate(&mut self, gate: &GateOp, angle: f64) -> Result<()> {
        self.check_qubit(gate.target)?;
        let q = gate.target;
        let half = 0.5 * angle;
        match gate.kind {
            GateKind::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(q, [[h, h], [h, -h]]);
            }
            GateKind::Rx => {
                let c = Complex64::new(half.cos(), 0.0);
                let s = Complex64::new(0.0, -half.sin());
                self.apply_1q(q, [[c, s], [s, c]]);
            }
            GateKind::Ry => {
                let (s, c) = half.sin_cos();
                let (s, c) = (Complex64::new(s, 0.0), Complex64::new(c, 0.0));
                self.apply_1q(q, [[c, -s], [s, c]]);
            }
            GateKind::Rz => {
                self.apply_diag(q, Complex64::from_polar(1.0, -half), Complex64::from_polar(1.0, half));
            }
            GateKind::Phase => {
                self.apply_diag(q, Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, angle));
            }
            GateKind::Cnot => {
                let control = gate
                    .control
                    .ok_or_else(|| Error::Argument("CNOT without control qubit".into()))?;
                self.check_qubit(control)?;
                if control == q {
                    return Err(Error::Argument("CNOT control equals target".into()));
                }
                self.apply_cnot(control, q);
            }
        }
        Ok(())
    }

    /// `<Z_q>`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| if b & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `<Z_0>, ..., <Z_{n-1}>` in a single sweep.
    pub fn expectations_z(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, e) in out.iter_mut().enumerate() {
                if b >> q & 1 == 0 {
                    *e += p;
                } else {
                    *e -= p;
                }
            }
        }
        out
    }

    /// `(P(even parity), P(odd parity))`, summed from the same moduli.
    pub fn parity_probabilities(&self) -> (f64, f64) {
        let mut even = 0.0;
        let mut odd = 0.0;
        for (b, a) in self.amps.iter().enumerate() {
            if b.count_ones() % 2 == 0 {
                even += a.norm_sqr();
            } else {
                odd += a.norm_sqr();
            }
        }
        (even, odd)
    }

    pub fn probability_odd_parity(&self) -> f64 {
        self.parity_probabilities().1
    }

    /// `<Z (x) Z (x) ... (x) Z>`.
    pub fn expectation_parity(&self) -> f64 {
        let (even, odd) = self.parity_probabilities();
        even - odd
    }

    /// Draws `shots` basis states from `|amp|^2`. Keys are bitstrings with
    /// qubit `n-1` leftmost.
    pub fn sample_measurements(&self, shots: usize, seed: u64) -> Result<BTreeMap<String, usize>> {
        if shots == 0 {
            return Err(Error::Argument("shots must be at least 1".into()));
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| Error::Argument(format!("cannot sample from state: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0usize; self.amps.len()];
        for _ in 0..shots {
            counts[dist.sample(&mut rng)] += 1;
        }
        Ok(counts
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c > 0)
            .map(|(b, c)| (format!("{b:0width$b}", width = self.n_qubits), c))
            .collect())
    }
}

pub fn init_zero(n_qubits: usize) -> Result<Statevector> {
    Statevector::zero(n_qubits)
}

/// Runs `circuit` from `|0...0>` with one pre-resolved angle per gate.
pub fn run_resolved(circuit: &ParamCircuit, angles: &[f64]) -> Result<Statevector> {
    if angles.len() != circuit.gates.len() {
        return Err(Error::Shape(format!(
            "expected {} resolved angles, got {}",
            circuit.gates.len(),
            angles.len()
        )));
    }
    let mut state = Statevector::zero(circuit.n_qubits)?;
    for (g, &a) in circuit.gates.iter().zip(angles) {
        state.apply_gate(g, a)?;
    }
    Ok(state)
}

pub fn run_circuit(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> Result<Statevector> {
    let angles = circuit.resolve_angles(x, theta)?;
    run_resolved(circuit, &angles)
}
