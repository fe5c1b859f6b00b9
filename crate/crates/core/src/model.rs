//! The five classifier families behind one prediction/gradient interface.
//!
//! | kind               | circuit            | readout            | classical part |
//! |--------------------|--------------------|--------------------|----------------|
//! | `classical_net`    | none               | none               | n-n-n-1 MLP    |
//! | `feature_var`      | ZZ map + RealAmp   | odd-parity prob.   | none           |
//! | `feature_var_cnn`  | ZZ map + RealAmp   | `<Z_i>` per qubit  | sigmoid head   |
//! | `combined_qnn`     | combined           | odd-parity prob.   | none           |
//! | `combined_qnn_cnn` | combined           | `<Z_i>` per qubit  | sigmoid head   |

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{build_combined, build_feature_var, ParamCircuit};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gradients::{shift_rule_grad, Observable};
use crate::neuralnet::{build_classical_net, build_head, Mlp};
use crate::qsim::run_circuit;

/// Probabilities are clamped to `[EPS, 1 - EPS]` before the loss.
pub const PROB_EPS: f64 = 1e-7;
/// Inputs are expected in `[0, pi]`; anything further out than this is rejected.
pub const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    ClassicalNet,
    FeatureVar,
    FeatureVarCnn,
    CombinedQnn,
    CombinedQnnCnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::ClassicalNet,
        ModelKind::FeatureVar,
        ModelKind::FeatureVarCnn,
        ModelKind::CombinedQnn,
        ModelKind::CombinedQnnCnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::ClassicalNet => "classical_net",
            ModelKind::FeatureVar => "feature_var",
            ModelKind::FeatureVarCnn => "feature_var_cnn",
            ModelKind::CombinedQnn => "combined_qnn",
            ModelKind::CombinedQnnCnn => "combined_qnn_cnn",
        }
    }

    pub fn is_quantum(self) -> bool {
        self != ModelKind::ClassicalNet
    }

    pub fn has_head(self) -> bool {
        matches!(self, ModelKind::FeatureVarCnn | ModelKind::CombinedQnnCnn)
    }

    fn readout(self) -> Option<Observable> {
        match self {
            ModelKind::ClassicalNet => None,
            ModelKind::FeatureVar | ModelKind::CombinedQnn => Some(Observable::Parity),
            ModelKind::FeatureVarCnn | ModelKind::CombinedQnnCnn => Some(Observable::PerQubitZ),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown model kind '{s}'")))
    }
}

/// Architecture of one classifier. Trainable values live in [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    kind: ModelKind,
    n_inputs: usize,
    circuit: Option<ParamCircuit>,
    net: Option<Mlp>,
}

impl HybridModel {
    /// Default architecture of `kind` for `n_inputs` features.
    pub fn new(kind: ModelKind, n_inputs: usize) -> Result<Self> {
        let circuit = match kind {
            ModelKind::ClassicalNet => None,
            ModelKind::FeatureVar | ModelKind::FeatureVarCnn => Some(build_feature_var(n_inputs)?),
            ModelKind::CombinedQnn | ModelKind::CombinedQnnCnn => Some(build_combined(n_inputs)?),
        };
        Self::assemble(kind, n_inputs, circuit)
    }

    /// Quantum `kind` with a caller-supplied circuit in place of the preset.
    pub fn with_circuit(kind: ModelKind, circuit: ParamCircuit) -> Result<Self> {
        if !kind.is_quantum() {
            return Err(Error::Argument(format!("{kind} has no circuit to replace")));
        }
        circuit.check()?;
        let n_inputs = circuit.n_features;
        Self::assemble(kind, n_inputs, Some(circuit))
    }

    fn assemble(kind: ModelKind, n_inputs: usize, circuit: Option<ParamCircuit>) -> Result<Self> {
        let net = match kind {
            ModelKind::ClassicalNet => Some(build_classical_net(n_inputs)?),
            k if k.has_head() => {
                let n_q = circuit.as_ref().map_or(n_inputs, |c| c.n_qubits);
                Some(build_head(n_q)?)
            }
            _ => None,
        };
        Ok(Self {
            kind,
            n_inputs,
            circuit,
            net,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn circuit(&self) -> Option<&ParamCircuit> {
        self.circuit.as_ref()
    }

    /// `(classical, quantum)` trainable parameter counts.
    pub fn param_counts(&self) -> (usize, usize) {
        (
            self.net.as_ref().map_or(0, Mlp::param_count),
            self.circuit.as_ref().map_or(0, |c| c.n_params),
        )
    }

    pub fn n_params(&self) -> usize {
        let (c, q) = self.param_counts();
        c + q
    }

    /// All-zero parameters.
    pub fn zero_params(&self) -> ModelParams {
        ModelParams {
            net: self.net.clone(),
            theta: vec![0.0; self.param_counts().1],
        }
    }

    /// Xavier-uniform classical weights and `theta ~ U(0, 2 pi)`.
    pub fn init_params(&self, seed: u64) -> ModelParams {
        let mut params = self.zero_params();
        if let Some(net) = params.net.as_mut() {
            net.init_params(seed);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        let dist = Uniform::new(0.0, TAU).expect("valid range");
        params.theta.iter_mut().for_each(|t| *t = dist.sample(&mut rng));
        params
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs {
            return Err(Error::Shape(format!(
                "{} expects {} features, got {}",
                self.kind,
                self.n_inputs,
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !(**v >= -DOMAIN_TOL && **v <= PI + DOMAIN_TOL)) {
            return Err(Error::Domain(format!("feature value {v} outside the scaled range [0, pi]")));
        }
        Ok(())
    }

    fn check_params(&self, params: &ModelParams) -> Result<()> {
        let (nc, nq) = self.param_counts();
        let pc = params.net.as_ref().map_or(0, Mlp::param_count);
        if pc != nc || params.theta.len() != nq {
            return Err(Error::Shape(format!(
                "{} needs {nc}/{nq} parameters, got {pc}/{}",
                self.kind,
                params.theta.len()
            )));
        }
        Ok(())
    }

    /// Unclamped class-1 probability.
    fn raw_probability(&self, params: &ModelParams, x: &[f64]) -> Result<f64> {
        match (self.kind.readout(), &self.circuit, &params.net) {
            (None, _, Some(net)) => Ok(net.predict(x)?[0]),
            (Some(Observable::Parity), Some(c), _) => Ok(run_circuit(c, x, &params.theta)?.probability_odd_parity()),
            (Some(_), Some(c), Some(head)) => {
                let z = run_circuit(c, x, &params.theta)?.expectations_z();
                Ok(head.predict(&z)?[0])
            }
            _ => Err(Error::Shape(format!("{} parameters are incomplete", self.kind))),
        }
    }

    /// Class-1 probability clamped to `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn predict(&self, params: &ModelParams, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        self.check_params(params)?;
        Ok(clamp_probability(self.raw_probability(params, x)?))
    }

    /// Loss and its gradient for a single observation.
    pub fn grad_all(&self, params: &ModelParams, x: &[f64], y: u8) -> Result<LossGrad> {
        self.check_input(x)?;
        self.check_params(params)?;
        check_label(y)?;
        let (nc, nq) = self.param_counts();

        let (raw, cached) = match (self.kind.readout(), &self.circuit, &params.net) {
            (None, _, Some(net)) => {
                let (out, cache) = net.forward(x)?;
                (out[0], Some(cache))
            }
            (Some(Observable::Parity), Some(c), _) => (run_circuit(c, x, &params.theta)?.probability_odd_parity(), None),
            (Some(_), Some(c), Some(head)) => {
                let z = run_circuit(c, x, &params.theta)?.expectations_z();
                let (out, cache) = head.forward(&z)?;
                (out[0], Some(cache))
            }
            _ => return Err(Error::Shape(format!("{} parameters are incomplete", self.kind))),
        };
        let p = clamp_probability(raw);
        let loss = loss_bce(p, y)?;
        // flat region of the clamp
        let dl_dp = if p == raw { bce_grad(p, y) } else { 0.0 };

        let mut classical = vec![0.0; nc];
        let mut quantum = vec![0.0; nq];
        match (self.kind.readout(), &self.circuit, &params.net) {
            (None, _, Some(net)) => {
                let (g, _) = net.backward(cached.as_ref().expect("forward cache"), &[dl_dp])?;
                classical = g.flatten();
            }
            (Some(obs @ Observable::Parity), Some(c), _) => {
                if dl_dp != 0.0 {
                    quantum = shift_rule_grad(c, x, &params.theta, obs)?.vjp(&[dl_dp])?;
                }
            }
            (Some(obs), Some(c), Some(head)) => {
                let (g, d_z) = head.backward(cached.as_ref().expect("forward cache"), &[dl_dp])?;
                classical = g.flatten();
                if d_z.iter().any(|v| *v != 0.0) {
                    quantum = shift_rule_grad(c, x, &params.theta, obs)?.vjp(&d_z)?;
                }
            }
            _ => unreachable!("checked during the forward pass"),
        }
        Ok(LossGrad {
            loss,
            p,
            classical,
            quantum,
        })
    }

    /// Mean BCE and accuracy over `data`; `p >= 0.5` predicts class 1.
    pub fn evaluate(&self, params: &ModelParams, data: &Dataset) -> Result<Evaluation> {
        if data.is_empty() {
            return Err(Error::Argument("cannot evaluate on an empty dataset".into()));
        }
        let preds: Vec<f64> = data
            .features()
            .par_iter()
            .map(|x| self.predict(params, x))
            .collect::<Result<_>>()?;
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (&p, &y) in preds.iter().zip(data.targets()) {
            loss += loss_bce(p, y)?;
            if u8::from(p >= 0.5) == y {
                correct += 1;
            }
        }
        let n = data.len() as f64;
        Ok(Evaluation {
            loss: loss / n,
            accuracy: correct as f64 / n,
        })
    }
}

/// Trainable values of a [`HybridModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub net: Option<Mlp>,
    pub theta: Vec<f64>,
}

impl ModelParams {
    /// Classical parameters first, then `theta`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.net.as_ref().map_or_else(Vec::new, Mlp::params_flat);
        flat.extend_from_slice(&self.theta);
        flat
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let nc = self.net.as_ref().map_or(0, Mlp::param_count);
        if flat.len() != nc + self.theta.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                nc + self.theta.len(),
                flat.len()
            )));
        }
        let (c, q) = flat.split_at(nc);
        if let Some(net) = self.net.as_mut() {
            net.set_params_flat(c)?;
        }
        self.theta.copy_from_slice(q);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub p: f64,
    pub classical: Vec<f64>,
    pub quantum: Vec<f64>,
}

impl LossGrad {
    /// Same layout as [`ModelParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        self.classical.iter().chain(&self.quantum).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn check_label(y: u8) -> Result<()> {
    if y > 1 {
        return Err(Error::Domain(format!("target must be 0 or 1, got {y}")));
    }
    Ok(())
}

/// Binary cross entropy `-(y ln p + (1 - y) ln(1 - p))`.
pub fn loss_bce(p: f64, y: u8) -> Result<f64> {
    check_label(y)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    Ok(if y == 1 { -p.ln() } else { -(1.0 - p).ln() })
}

fn bce_grad(p: f64, y: u8) -> f64 {
    if y == 1 {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

pub fn param_counts(model: &HybridModel) -> (usize, usize) {
    model.param_counts()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;

    #[test]
    fn table_counts() {
        let expect3 = [(28, 0), (0, 6), (4, 6), (0, 9), (4, 9)];
        let expect2 = [(15, 0), (0, 4), (3, 4), (0, 7), (3, 7)];
        for (k, (e3, e2)) in ModelKind::ALL.iter().zip(expect3.iter().zip(&expect2)) {
            assert_eq!(HybridModel::new(*k, 3).unwrap().param_counts(), *e3, "{k}");
            assert_eq!(HybridModel::new(*k, 2).unwrap().param_counts(), *e2, "{k}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("qnn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn feature_var_zero_params_is_clamped_low() {
        let m = HybridModel::new(ModelKind::FeatureVar, 2).unwrap();
        let p = m.predict(&m.zero_params(), &[PI, PI]).unwrap();
        assert_eq!(p, PROB_EPS);
    }

    #[test]
    fn zero_heads_predict_one_half() {
        for kind in [ModelKind::ClassicalNet, ModelKind::CombinedQnnCnn, ModelKind::FeatureVarCnn] {
            let m = HybridModel::new(kind, 3).unwrap();
            let mut params = m.zero_params();
            let q = params.theta.len();
            params.theta = (0..q).map(|i| i as f64 * 0.3).collect();
            assert_eq!(m.predict(&params, &[0.1, 1.0, 3.0]).unwrap(), 0.5);
        }
    }

    #[test]
    fn zero_head_weights_give_zero_quantum_gradient() {
        let m = HybridModel::new(ModelKind::CombinedQnnCnn, 3).unwrap();
        let mut params = m.init_params(1);
        params.net.as_mut().unwrap().set_params_flat(&[0.0; 4]).unwrap();
        let g = m.grad_all(&params, &[0.2, 0.4, 0.6], 1).unwrap();
        assert!(g.quantum.iter().all(|v| *v == 0.0));
        // bias still receives dL/dp * p(1-p) = -0.5
        assert!((g.classical[3] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn input_domain_and_shape() {
        let m = HybridModel::new(ModelKind::CombinedQnn, 2).unwrap();
        let p = m.zero_params();
        assert!(matches!(m.predict(&p, &[0.0, 3.2]), Err(Error::Domain(_))));
        assert!(matches!(m.predict(&p, &[-1e-6, 1.0]), Err(Error::Domain(_))));
        assert!(m.predict(&p, &[PI + 1e-10, 0.0]).is_ok());
        assert!(matches!(m.predict(&p, &[0.0]), Err(Error::Shape(_))));
        let other = HybridModel::new(ModelKind::CombinedQnn, 3).unwrap().zero_params();
        assert!(matches!(m.predict(&other, &[0.0, 0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn bce_values() {
        assert!((loss_bce(0.5, 0).unwrap() - LN_2).abs() < 1e-15);
        assert!((loss_bce(0.5, 1).unwrap() - LN_2).abs() < 1e-15);
        assert!((loss_bce(1.0 - 1e-7, 1).unwrap() - 1e-7).abs() < 1e-12);
        assert!(matches!(loss_bce(0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(loss_bce(1.0, 0), Err(Error::Domain(_))));
        assert!(loss_bce(0.5, 2).is_err());
    }

    #[test]
    fn evaluate_perfect_and_constant() {
        let data = Dataset::new(
            vec![vec![0.0], vec![PI], vec![PI], vec![0.0]],
            vec![0, 1, 1, 0],
            vec!["f".into()],
        )
        .unwrap();
        // one-input classical net with a steep logistic output
        let m = HybridModel::new(ModelKind::ClassicalNet, 1).unwrap();
        let mut params = m.zero_params();
        // layers: 1->1 tanh, 1->1 tanh, 1->1 sigmoid; push x - pi/2 through
        params.set_flat(&[1.0, -PI / 2.0, 1.0, 0.0, 1000.0, 0.0]).unwrap();
        let e = m.evaluate(&params, &data).unwrap();
        assert_eq!(e.accuracy, 1.0);
        assert!((e.loss - 1e-7).abs() < 1e-9, "{}", e.loss);

        let zero = m.zero_params();
        let e = m.evaluate(&zero, &data).unwrap();
        assert_eq!(e.accuracy, 0.5);
        assert!((e.loss - LN_2).abs() < 1e-15);

        let empty = Dataset::new(vec![], vec![], vec!["f".into()]).unwrap();
        assert!(matches!(m.evaluate(&zero, &empty), Err(Error::Argument(_))));
    }

    #[test]
    fn flat_layout_matches_gradient_layout() {
        let m = HybridModel::new(ModelKind::FeatureVarCnn, 2).unwrap();
        let params = m.init_params(9);
        let flat = params.to_flat();
        assert_eq!(flat.len(), 7);
        assert_eq!(&flat[3..], params.theta.as_slice());
        let g = m.grad_all(&params, &[0.5, 1.5], 0).unwrap();
        assert_eq!(g.to_flat().len(), 7);
        let mut back = m.zero_params();
        back.set_flat(&flat).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn theta_init_range_and_determinism() {
        let m = HybridModel::new(ModelKind::CombinedQnn, 3).unwrap();
        let a = m.init_params(3);
        assert_eq!(a, m.init_params(3));
        assert!(a.theta.iter().all(|t| (0.0..TAU).contains(t)));
        assert_ne!(a, m.init_params(4));
    }
}
