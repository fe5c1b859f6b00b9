//! Line-oriented circuit text format.
//!
//! ```text
//! # comment
//! qubits 2
//! features 2
//! params 1
//! H 0
//! CNOT 0,1
//! PHASE 1 2 * (3.141592653589793 - x0) * (3.141592653589793 - x1)
//! RY 0 1 * t0 * x1
//! ```
//!
//! An angle is `c [* t<j>] [* (a - x<i>)] [* (b - x<k>)]`; a bare `x<i>`
//! factor is accepted too, and `pi` may stand for any number. The
//! `qubits`/`features`/`params` headers are optional and inferred from the
//! largest index used when absent.

use std::f64::consts::PI;
use std::fmt::Write;

use super::{AngleExpr, FeatureFactor, GateKind, GateOp, ParamCircuit};
use crate::error::{Error, Result};

fn fmt_factor(f: &FeatureFactor) -> String {
    match f.offset {
        None => format!("x{}", f.index),
        Some(a) => format!("({a:?} - x{})", f.index),
    }
}

fn fmt_angle(a: &AngleExpr) -> String {
    let mut s = format!("{:?}", a.coeff);
    if let Some(p) = a.param {
        write!(s, " * t{p}").unwrap();
    }
    for f in a.features() {
        write!(s, " * {}", fmt_factor(f)).unwrap();
    }
    s
}

pub(super) fn write_circuit(c: &ParamCircuit) -> String {
    let mut s = format!(
        "qubits {}\nfeatures {}\nparams {}\n",
        c.n_qubits, c.n_features, c.n_params
    );
    for g in &c.gates {
        s.push_str(g.kind.name());
        match g.control {
            Some(ctl) => write!(s, " {ctl},{}", g.target).unwrap(),
            None => write!(s, " {}", g.target).unwrap(),
        }
        if let Some(a) = &g.angle {
            write!(s, " {}", fmt_angle(a)).unwrap();
        }
        s.push('\n');
    }
    s
}

struct LineCtx {
    line: usize,
}

impl LineCtx {
    fn err<T>(&self, col: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            row: self.line,
            col,
            msg: msg.into(),
        })
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok {
        "pi" => Some(PI),
        "-pi" => Some(-PI),
        _ => tok.parse().ok(),
    }
}

fn parse_index(tok: &str, prefix: char) -> Option<usize> {
    tok.strip_prefix(prefix)?.parse().ok()
}

fn parse_angle(ctx: &LineCtx, src: &str) -> Result<AngleExpr> {
    let mut expr = AngleExpr::constant(1.0);
    let mut n_features = 0;
    for (k, raw) in src.split('*').enumerate() {
        let tok = raw.trim();
        let col = k + 3;
        if tok.is_empty() {
            return ctx.err(col, "empty factor in angle expression");
        }
        if let Some(v) = parse_number(tok) {
            expr.coeff *= v;
        } else if let Some(p) = parse_index(tok, 't') {
            if expr.param.is_some() {
                return ctx.err(col, "at most one parameter per angle");
            }
            expr.param = Some(p);
        } else {
            let factor = if let Some(i) = parse_index(tok, 'x') {
                FeatureFactor {
                    index: i,
                    offset: None,
                }
            } else if let Some(inner) = tok.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
                let Some((a, xi)) = inner.rsplit_once('-') else {
                    return ctx.err(col, format!("expected (a - x<i>), got {tok}"));
                };
                match (parse_number(a.trim()), parse_index(xi.trim(), 'x')) {
                    (Some(a), Some(i)) => FeatureFactor {
                        index: i,
                        offset: Some(a),
                    },
                    _ => return ctx.err(col, format!("expected (a - x<i>), got {tok}")),
                }
            } else {
                return ctx.err(col, format!("unrecognised factor {tok}"));
            };
            n_features += 1;
            if n_features > 2 {
                return ctx.err(col, "at most two feature factors per angle");
            }
            if expr.feature.is_none() {
                expr.feature = Some(factor);
            } else {
                expr.feature2 = Some(factor);
            }
        }
    }
    Ok(expr)
}

fn parse_kind(tok: &str) -> Option<GateKind> {
    Some(match tok.to_ascii_uppercase().as_str() {
        "H" => GateKind::H,
        "RX" => GateKind::Rx,
        "RY" => GateKind::Ry,
        "RZ" => GateKind::Rz,
        "PHASE" | "P" => GateKind::Phase,
        "CNOT" | "CX" => GateKind::Cnot,
        _ => return None,
    })
}

fn parse_header(ctx: &LineCtx, value: Option<&str>) -> Result<usize> {
    match value.and_then(|v| v.parse().ok()) {
        Some(v) => Ok(v),
        None => ctx.err(2, "expected a non-negative integer"),
    }
}

/// Parses the text format. The result is validated before it is returned.
pub fn parse_circuit(src: &str) -> Result<ParamCircuit> {
    let (mut n_qubits, mut n_features, mut n_params) = (None, None, None);
    let mut gates = Vec::new();

    for (i, raw) in src.lines().enumerate() {
        let ctx = LineCtx { line: i + 1 };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, char::is_whitespace);
        let head = parts.next().unwrap_or("");
        match head {
            "qubits" => n_qubits = Some(parse_header(&ctx, parts.next())?),
            "features" => n_features = Some(parse_header(&ctx, parts.next())?),
            "params" => n_params = Some(parse_header(&ctx, parts.next())?),
            _ => {
                let Some(kind) = parse_kind(head) else {
                    return ctx.err(1, format!("unknown gate {head}"));
                };
                let Some(qtok) = parts.next() else {
                    return ctx.err(2, "missing qubit operand");
                };
                let qubits: Vec<usize> = match qtok.split(',').map(str::parse).collect() {
                    Ok(q) => q,
                    Err(_) => return ctx.err(2, format!("bad qubit operand {qtok}")),
                };
                let rest = parts.next().map(str::trim).filter(|r| !r.is_empty());
                let gate = match (kind, qubits.as_slice(), rest) {
                    (GateKind::Cnot, &[c, t], None) => GateOp::cnot(c, t),
                    (GateKind::Cnot, _, _) => {
                        return ctx.err(2, "CNOT takes control,target and no angle")
                    }
                    (GateKind::H, &[q], None) => GateOp::h(q),
                    (GateKind::H, _, _) => return ctx.err(2, "H takes one qubit and no angle"),
                    (_, &[q], Some(a)) => GateOp::rotation(kind, q, parse_angle(&ctx, a)?),
                    (_, _, _) => return ctx.err(2, format!("{kind} takes one qubit and an angle")),
                };
                gates.push(gate);
            }
        }
    }

    let max_plus_one = |it: &mut dyn Iterator<Item = usize>| it.max().map_or(0, |m| m + 1);
    let n_qubits = n_qubits.unwrap_or_else(|| max_plus_one(&mut gates.iter().flat_map(|g| g.qubits())));
    let n_features = n_features.unwrap_or_else(|| {
        max_plus_one(
            &mut gates
                .iter()
                .filter_map(|g| g.angle)
                .flat_map(|a| a.features().map(|f| f.index).collect::<Vec<_>>()),
        )
    });
    let n_params = n_params.unwrap_or_else(|| max_plus_one(&mut gates.iter().filter_map(GateOp::param)));

    let circuit = ParamCircuit {
        n_qubits,
        n_features,
        n_params,
        gates,
    };
    circuit.check()?;
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_combined, build_feature_var};
    use proptest::prelude::*;

    #[test]
    fn presets_round_trip() {
        for c in [build_feature_var(3).unwrap(), build_combined(4).unwrap()] {
            assert_eq!(parse_circuit(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn parses_hand_written_circuit_and_infers_sizes() {
        let c = parse_circuit(
            "# toy\nH 0\nCNOT 0,1\nRY 1 0.5 * t0 * x1  # trailing\nPHASE 0 2 * (pi - x0) * (pi - x1)\n",
        )
        .unwrap();
        assert_eq!((c.n_qubits, c.n_features, c.n_params), (2, 2, 1));
        let a = c.gates[2].angle.unwrap();
        assert_eq!(a.resolve(&[0.0, 4.0], &[3.0]).unwrap(), 6.0);
        let b = c.gates[3].angle.unwrap();
        assert_eq!(b.resolve(&[PI, 0.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_circuit("H 0\nFOO 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = parse_circuit("RY 0 2 * t0 * t1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
        let err = parse_circuit("CNOT 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, col: 2, .. }));
    }

    #[test]
    fn invalid_circuit_is_rejected() {
        // t1 used but params header says 1
        assert!(matches!(
            parse_circuit("params 1\nRY 0 t1\n"),
            Err(Error::Argument(_))
        ));
        assert!(matches!(parse_circuit("PHASE 0 t0\n"), Err(Error::Argument(_))));
    }

    fn arb_factor() -> impl Strategy<Value = Option<FeatureFactor>> {
        prop::option::of(
            (0usize..3, prop::option::of(-10.0f64..10.0))
                .prop_map(|(index, offset)| FeatureFactor { index, offset }),
        )
    }

    proptest! {
        #[test]
        fn angle_expressions_round_trip(
            coeff in -100.0f64..100.0,
            param in prop::option::of(0usize..4),
            f1 in arb_factor(),
            f2 in arb_factor(),
        ) {
            let feature2 = if f1.is_some() { f2 } else { None };
            let expr = AngleExpr { coeff, param, feature: f1, feature2 };
            let ctx = LineCtx { line: 1 };
            prop_assert_eq!(parse_angle(&ctx, &fmt_angle(&expr)).unwrap(), expr);
        }
    }
}
