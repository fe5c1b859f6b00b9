//! Circuit intermediate representation.
//!
//! A [`ParamCircuit`] is an ordered list of gates whose rotation angles are
//! small expressions over an input feature vector `x` and a trainable
//! parameter vector `theta`. Circuits are immutable once built and can be
//! shared freely between threads.

mod builders;
mod random;
mod text;

use std::fmt;

pub use builders::{build_combined, build_feature_var, build_real_amplitudes, build_zz_feature_map};
pub use random::random_circuit;
pub use text::parse_circuit;

use crate::error::{Error, Result};

/// One feature-dependent factor of an angle.
///
/// `offset: None` is the bare feature `x_i`, `offset: Some(a)` is `(a - x_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureFactor {
    pub index: usize,
    pub offset: Option<f64>,
}

impl FeatureFactor {
    fn value(&self, x: &[f64]) -> f64 {
        match self.offset {
            None => x[self.index],
            Some(a) => a - x[self.index],
        }
    }
}

/// Angle expression `coeff * theta_p? * f1(x)? * f2(x)?`.
///
/// Absent factors are 1, so a bare `coeff` is a constant angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleExpr {
    pub coeff: f64,
    pub param: Option<usize>,
    pub feature: Option<FeatureFactor>,
    pub feature2: Option<FeatureFactor>,
}

impl AngleExpr {
    pub fn constant(coeff: f64) -> Self {
        Self {
            coeff,
            param: None,
            feature: None,
            feature2: None,
        }
    }

    /// `theta_index`
    pub fn param(index: usize) -> Self {
        Self::constant(1.0).with_param(index)
    }

    /// `x_index`
    pub fn feature(index: usize) -> Self {
        Self::constant(1.0).times_feature(index)
    }

    pub fn with_param(mut self, index: usize) -> Self {
        self.param = Some(index);
        self
    }

    pub fn times_feature(self, index: usize) -> Self {
        self.push_factor(FeatureFactor {
            index,
            offset: None,
        })
    }

    /// Multiplies by `(offset - x_index)`.
    pub fn times_offset_feature(self, offset: f64, index: usize) -> Self {
        self.push_factor(FeatureFactor {
            index,
            offset: Some(offset),
        })
    }

    fn push_factor(mut self, factor: FeatureFactor) -> Self {
        if self.feature.is_none() {
            self.feature = Some(factor);
        } else if self.feature2.is_none() {
            self.feature2 = Some(factor);
        } else {
            panic!("angle expression supports at most two feature factors");
        }
        self
    }

    pub fn features(&self) -> impl Iterator<Item = &FeatureFactor> {
        self.feature.iter().chain(self.feature2.iter())
    }

    /// `coeff` times the feature factors, i.e. the derivative of the angle
    /// with respect to its parameter.
    pub fn scale(&self, x: &[f64]) -> Result<f64> {
        let mut v = self.coeff;
        for f in self.features() {
            if f.index >= x.len() {
                return Err(Error::Shape(format!(
                    "angle references x{} but only {} features were given",
                    f.index,
                    x.len()
                )));
            }
            v *= f.value(x);
        }
        Ok(v)
    }

    pub fn resolve(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let scale = self.scale(x)?;
        match self.param {
            None => Ok(scale),
            Some(p) if p < theta.len() => Ok(scale * theta[p]),
            Some(p) => Err(Error::Shape(format!(
                "angle references t{p} but only {} parameters were given",
                theta.len()
            ))),
        }
    }
}

pub fn resolve_angle(expr: &AngleExpr, x: &[f64], theta: &[f64]) -> Result<f64> {
    expr.resolve(x, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
    Phase,
    Cnot,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Phase => "PHASE",
            GateKind::Cnot => "CNOT",
        }
    }

    pub fn takes_angle(self) -> bool {
        !matches!(self, GateKind::H | GateKind::Cnot)
    }

    /// Pauli rotations, the only gates allowed to carry a trainable parameter.
    pub fn is_pauli_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single gate. For CNOT `control` is set and `target` is the flipped qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub angle: Option<AngleExpr>,
}

impl GateOp {
    pub fn h(q: usize) -> Self {
        Self {
            kind: GateKind::H,
            target: q,
            control: None,
            angle: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            angle: None,
        }
    }

    pub fn rotation(kind: GateKind, q: usize, angle: AngleExpr) -> Self {
        debug_assert!(kind.takes_angle());
        Self {
            kind,
            target: q,
            control: None,
            angle: Some(angle),
        }
    }

    pub fn rx(q: usize, angle: AngleExpr) -> Self {
        Self::rotation(GateKind::Rx, q, angle)
    }

    pub fn ry(q: usize, angle: AngleExpr) -> Self {
        Self::rotation(GateKind::Ry, q, angle)
    }

    pub fn rz(q: usize, angle: AngleExpr) -> Self {
        Self::rotation(GateKind::Rz, q, angle)
    }

    pub fn phase(q: usize, angle: AngleExpr) -> Self {
        Self::rotation(GateKind::Phase, q, angle)
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        self.control.into_iter().chain(std::iter::once(self.target))
    }

    pub fn param(&self) -> Option<usize> {
        self.angle.and_then(|a| a.param)
    }
}

/// A violated circuit invariant, reported by [`ParamCircuit::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    QubitOutOfRange { gate: usize, qubit: usize },
    ControlEqualsTarget { gate: usize },
    MissingControl { gate: usize },
    UnexpectedControl { gate: usize },
    MissingAngle { gate: usize },
    UnexpectedAngle { gate: usize },
    FeatureOutOfRange { gate: usize, feature: usize },
    ParamOutOfRange { gate: usize, param: usize },
    ParamOnNonRotation { gate: usize, param: usize, kind: GateKind },
    UnusedParam { param: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::QubitOutOfRange { gate, qubit } => {
                write!(f, "gate {gate}: qubit {qubit} out of range")
            }
            Diagnostic::ControlEqualsTarget { gate } => {
                write!(f, "gate {gate}: control equals target")
            }
            Diagnostic::MissingControl { gate } => write!(f, "gate {gate}: CNOT without control"),
            Diagnostic::UnexpectedControl { gate } => {
                write!(f, "gate {gate}: single-qubit gate with a control")
            }
            Diagnostic::MissingAngle { gate } => write!(f, "gate {gate}: rotation without angle"),
            Diagnostic::UnexpectedAngle { gate } => {
                write!(f, "gate {gate}: angle on a fixed gate")
            }
            Diagnostic::FeatureOutOfRange { gate, feature } => {
                write!(f, "gate {gate}: feature x{feature} out of range")
            }
            Diagnostic::ParamOutOfRange { gate, param } => {
                write!(f, "gate {gate}: parameter t{param} out of range")
            }
            Diagnostic::ParamOnNonRotation { gate, param, kind } => {
                write!(f, "gate {gate}: parameter t{param} on {kind}")
            }
            Diagnostic::UnusedParam { param } => write!(f, "parameter t{param} is never used"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    pub n_qubits: usize,
    pub n_features: usize,
    pub n_params: usize,
    pub gates: Vec<GateOp>,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize, n_features: usize, n_params: usize) -> Self {
        Self {
            n_qubits,
            n_features,
            n_params,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: GateOp) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Appends `other` after `self`. Parameter indices of `other` are shifted
    /// past those of `self`; feature indices are shared.
    pub fn then(mut self, other: &ParamCircuit) -> Result<Self> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Shape(format!(
                "cannot concatenate circuits on {} and {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        let shift = self.n_params;
        self.gates.extend(other.gates.iter().map(|g| {
            let mut g = g.clone();
            if let Some(a) = g.angle.as_mut() {
                a.param = a.param.map(|p| p + shift);
            }
            g
        }));
        self.n_params += other.n_params;
        self.n_features = self.n_features.max(other.n_features);
        Ok(self)
    }

    /// All invariant violations, empty when the circuit is well formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut used = vec![false; self.n_params];
        for (i, g) in self.gates.iter().enumerate() {
            for q in g.qubits() {
                if q >= self.n_qubits {
                    out.push(Diagnostic::QubitOutOfRange { gate: i, qubit: q });
                }
            }
            match (g.kind, g.control) {
                (GateKind::Cnot, None) => out.push(Diagnostic::MissingControl { gate: i }),
                (GateKind::Cnot, Some(c)) if c == g.target => {
                    out.push(Diagnostic::ControlEqualsTarget { gate: i })
                }
                (GateKind::Cnot, Some(_)) => {}
                (_, Some(_)) => out.push(Diagnostic::UnexpectedControl { gate: i }),
                (_, None) => {}
            }
            match (g.kind.takes_angle(), &g.angle) {
                (true, None) => out.push(Diagnostic::MissingAngle { gate: i }),
                (false, Some(_)) => out.push(Diagnostic::UnexpectedAngle { gate: i }),
                _ => {}
            }
            if let Some(a) = &g.angle {
                for f in a.features() {
                    if f.index >= self.n_features {
                        out.push(Diagnostic::FeatureOutOfRange {
                            gate: i,
                            feature: f.index,
                        });
                    }
                }
                if let Some(p) = a.param {
                    if p >= self.n_params {
                        out.push(Diagnostic::ParamOutOfRange { gate: i, param: p });
                    } else {
                        used[p] = true;
                    }
                    if !g.kind.is_pauli_rotation() {
                        out.push(Diagnostic::ParamOnNonRotation {
                            gate: i,
                            param: p,
                            kind: g.kind,
                        });
                    }
                }
            }
        }
        out.extend(
            used.iter()
                .enumerate()
                .filter(|(_, u)| !**u)
                .map(|(param, _)| Diagnostic::UnusedParam { param }),
        );
        out
    }

    /// [`validate`](Self::validate) folded into an error.
    pub fn check(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            return Ok(());
        }
        let msg = diags
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::Argument(format!("invalid circuit: {msg}")))
    }

    /// Resolves every gate angle; gates without an angle resolve to 0.
    pub fn resolve_angles(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        if theta.len() != self.n_params {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params,
                theta.len()
            )));
        }
        self.gates
            .iter()
            .map(|g| g.angle.map_or(Ok(0.0), |a| a.resolve(x, theta)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        text::write_circuit(self)
    }
}
