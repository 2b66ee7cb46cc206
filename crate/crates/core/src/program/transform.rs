//! Program rewrites: deferring measurements into a unitary circuit, and
//! hardwiring one transcript into a postselected circuit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::exec::{execute, MeasurementRecord, Policy};
use super::{Builder, ClassicalFn, Condition, Instr, Layer, Op, Program, Role};
use crate::error::{LaqccError, Result};
use crate::state::from_bits;

/// Largest classical table turned into an in-circuit lookup.
pub const MAX_TABLE_INPUTS: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Deferred {
    pub program: Program,
    /// Copy qubits holding each measured value, in measurement order.
    pub copies: Vec<usize>,
    /// Qubits of the source program, unchanged in index.
    pub system: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Postselected {
    pub program: Program,
    /// Set exactly when every measurement agrees with the transcript.
    pub flag: usize,
    /// One agreement bit per measurement layer.
    pub equal_flags: Vec<usize>,
}

/// XOR-into-target circuit computing a classical layer on qubits.
fn classical_circuit(function: &ClassicalFn, inputs: &[usize], outputs: &[usize]) -> Result<Vec<Op>> {
    Ok(match function {
        ClassicalFn::Identity => {
            inputs.iter().zip(outputs).map(|(&c, &t)| Op::Cnot { control: c, target: t }).collect()
        }
        ClassicalFn::Linear { matrix } => {
            let mut ops = Vec::new();
            for (r, &t) in outputs.iter().enumerate() {
                for (c, &q) in inputs.iter().enumerate() {
                    if matrix.get(r, c) {
                        ops.push(Op::Cnot { control: q, target: t });
                    }
                }
            }
            ops
        }
        ClassicalFn::Table { input_bits, table, .. } => {
            if *input_bits > MAX_TABLE_INPUTS {
                return Err(LaqccError::NoCircuitForm(format!(
                    "table on {input_bits} bits exceeds the {MAX_TABLE_INPUTS}-bit lookup limit"
                )));
            }
            vec![Op::Oracle { inputs: inputs.to_vec(), outputs: outputs.to_vec(), table: table.clone() }]
        }
    })
}

fn add_controls(op: Op, extra: Vec<(usize, bool)>) -> Op {
    if extra.is_empty() {
        return op;
    }
    match op {
        Op::Controlled { mut controls, op } => {
            let mut all = extra;
            all.append(&mut controls);
            Op::Controlled { controls: all, op }
        }
        op => Op::Controlled { controls: extra, op: Box::new(op) },
    }
}

/// Replaces every mid-circuit measurement by a copy onto a fresh qubit and
/// every classically controlled operation by a quantum-controlled one.
/// Classical layers are computed reversibly on scratch qubits and uncomputed
/// after their last use. All copies are measured once at the end.
pub fn defer_measurements(program: &Program) -> Result<Deferred> {
    program.validate()?;
    let system: Vec<usize> = (0..program.qubits).collect();
    if program.measurement_count() == 0 {
        return Ok(Deferred { program: program.clone(), copies: vec![], system });
    }
    let mut last_use: BTreeMap<&str, usize> = BTreeMap::new();
    for (li, layer) in program.layers.iter().enumerate() {
        if let Layer::Quantum { gates, condition } = layer {
            for c in gates.iter().filter_map(|g| g.condition.as_ref()).chain(condition) {
                last_use.insert(c.source.as_str(), li);
            }
        }
    }

    let mut b = Builder::with_registers(program.qubits, program.registers.registers.clone());
    let mut copies = Vec::new();
    let mut measured: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut computed: BTreeMap<&str, (Vec<usize>, Vec<Op>)> = BTreeMap::new();
    let control_of = |c: &Condition, computed: &BTreeMap<&str, (Vec<usize>, Vec<Op>)>| -> (usize, bool) {
        (computed[c.source.as_str()].0[c.bit], true)
    };
    for (li, layer) in program.layers.iter().enumerate() {
        match layer {
            Layer::Quantum { gates, condition } => {
                let outer: Vec<(usize, bool)> = condition.iter().map(|c| control_of(c, &computed)).collect();
                for g in gates {
                    let mut ctl = outer.clone();
                    ctl.extend(g.condition.iter().map(|c| control_of(c, &computed)));
                    b.op(add_controls(g.op.clone(), ctl));
                }
                let done: Vec<&str> =
                    last_use.iter().filter(|(_, &l)| l == li).map(|(&s, _)| s).collect();
                for label in done {
                    if let Some((temps, ops)) = computed.remove(label) {
                        b.ops(ops.into_iter().rev());
                        b.release(&temps);
                    }
                }
            }
            Layer::Measure { qubits, label } => {
                let cs = b.alloc(&format!("copy_{label}"), qubits.len(), Role::Ancilla);
                for (&q, &c) in qubits.iter().zip(&cs) {
                    b.op(Op::Cnot { control: q, target: c });
                }
                copies.extend(&cs);
                measured.insert(label, cs);
            }
            Layer::Classical { function, inputs, output, .. } => {
                if !last_use.contains_key(output.as_str()) {
                    continue;
                }
                let ins: Vec<usize> = inputs.iter().flat_map(|l| measured[l.as_str()].iter().copied()).collect();
                let temps = b.alloc_scratch(function.output_width(ins.len()));
                let ops = classical_circuit(function, &ins, &temps)?;
                b.ops(ops.iter().cloned());
                computed.insert(output, (temps, ops));
            }
        }
    }
    b.measure(&copies, "deferred");
    Ok(Deferred { program: b.finish()?, copies, system })
}

/// Hardwires the classical choices made along `transcript` and replaces each
/// measurement by an equality test against the recorded outcome. The flag
/// qubit is 1 with the transcript's probability, and conditioned on it the
/// remaining qubits hold the state that path produces.
pub fn to_postselected(program: &Program, transcript: &MeasurementRecord) -> Result<Postselected> {
    program.validate()?;
    let measures: Vec<(&Vec<usize>, &String)> = program
        .layers
        .iter()
        .filter_map(|l| match l {
            Layer::Measure { qubits, label } => Some((qubits, label)),
            _ => None,
        })
        .collect();
    if measures.len() != transcript.entries.len() {
        return Err(LaqccError::Validation(format!(
            "transcript has {} entries for {} measurement layers",
            transcript.entries.len(),
            measures.len()
        )));
    }
    for ((qs, label), e) in measures.iter().zip(&transcript.entries) {
        if *label != &e.label || qs.len() != e.outcome.len() {
            return Err(LaqccError::Validation(format!("transcript entry `{}` does not match layer `{label}`", e.label)));
        }
        if qs.len() > 64 {
            return Err(LaqccError::NoCircuitForm(format!("measurement `{label}` is wider than 64 bits")));
        }
    }
    // rejects zero-probability transcripts
    let run = execute(program, &Policy::Forced(transcript.outcomes()))?;
    let data = run.classical;
    let holds = |c: &Option<Condition>| c.as_ref().is_none_or(|c| data[&c.source][c.bit]);

    let mut b = Builder::with_registers(program.qubits, program.registers.registers.clone());
    let equal_flags = b.alloc("agree", measures.len(), Role::Flag);
    let flag = b.alloc("postselect", 1, Role::Flag)[0];
    let mut next = 0;
    for layer in &program.layers {
        match layer {
            Layer::Quantum { gates, condition } => {
                if !holds(condition) {
                    continue;
                }
                for g in gates.iter().filter(|g| holds(&g.condition)) {
                    b.instr(Instr { op: g.op.clone(), condition: None });
                }
            }
            Layer::Measure { qubits, .. } => {
                let value = from_bits(&transcript.entries[next].outcome) as u64;
                b.op(Op::Equal { inputs: qubits.clone(), value, out: equal_flags[next] });
                next += 1;
            }
            Layer::Classical { .. } => {}
        }
    }
    if equal_flags.is_empty() {
        b.op(Op::X { q: flag });
    } else {
        b.op(Op::And { inputs: equal_flags.clone(), out: flag });
    }
    Ok(Postselected { program: b.finish()?, flag, equal_flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{explore, DepthClass, ExploreOptions};

    fn teleport_bit() -> Program {
        let mut b = Builder::new();
        let q = b.alloc("q", 2, Role::System);
        b.op(Op::H { q: q[0] });
        let m = b.measure(&[q[0]], "m");
        let c = b.classical(ClassicalFn::Identity, &[m], "c", DepthClass::Nc1);
        b.conditional(Op::X { q: q[1] }, &c, 0);
        b.finish().unwrap()
    }

    #[test]
    fn deferred_copy_is_controlled() {
        let d = defer_measurements(&teleport_bit()).unwrap();
        assert_eq!(d.program.measurement_count(), 1);
        assert_eq!(d.copies.len(), 1);
        let ex = explore(&d.program, &ExploreOptions::default()).unwrap();
        assert_eq!(ex.leaves.len(), 2);
        for leaf in &ex.leaves {
            let (sys, _) = leaf.state.extract(&d.system).unwrap();
            let v = sys.entries()[0].0;
            assert_eq!(v & 1, (v >> 1) & 1);
        }
    }

    #[test]
    fn postselected_flag_probability_matches_transcript() {
        let p = teleport_bit();
        let run = execute(&p, &Policy::Forced(vec![vec![true]])).unwrap();
        let ps = to_postselected(&p, &run.record).unwrap();
        let out = execute(&ps.program, &Policy::Seeded(0)).unwrap();
        let p1: f64 = out.state.entries().iter().filter(|(i, _)| (i >> ps.flag) & 1 == 1).map(|(_, a)| a.norm_sqr()).sum();
        assert!((p1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unmeasured_program_flag_is_set() {
        let mut b = Builder::new();
        let q = b.alloc("q", 1, Role::System);
        b.op(Op::H { q: q[0] });
        let p = b.finish().unwrap();
        let ps = to_postselected(&p, &MeasurementRecord::default()).unwrap();
        let out = execute(&ps.program, &Policy::Seeded(0)).unwrap();
        assert!(out.state.entries().iter().all(|(i, _)| (i >> ps.flag) & 1 == 1));
    }
}
