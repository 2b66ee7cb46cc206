//! Alternating quantum / measurement / classical programs.

mod builder;
mod exec;
mod layout;
pub mod ops;
mod resources;
mod transform;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{LaqccError, Result};
use crate::gf2::BitMatrix;

pub use builder::Builder;
pub use exec::{
    execute, execute_from, explore, explore_from, record_values, BranchMode, Execution, ExploreOptions, Exploration, Leaf,
    MeasurementRecord, Policy, RecordEntry,
};
pub use layout::{validate_layout, GridLayout, Violation};
pub use ops::Op;
pub use resources::{charge_table, resources, ChargeEntry, ChargeTable, DepthClass, ResourceProfile};
pub use transform::{defer_measurements, to_postselected, Deferred, Postselected};

/// A classical bit produced by an earlier classical layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub source: String,
    pub bit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instr {
    #[serde(flatten)]
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
}

impl From<Op> for Instr {
    fn from(op: Op) -> Self {
        Instr { op, condition: None }
    }
}

/// Host-side function from measurement bits to control bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "function_name", rename_all = "lowercase")]
pub enum ClassicalFn {
    Identity,
    /// `out = M · in` over GF(2).
    Linear { matrix: BitMatrix },
    /// `out = table[in]`, inputs read least significant first.
    Table { input_bits: usize, output_bits: usize, table: Vec<u64> },
}

impl ClassicalFn {
    pub fn output_width(&self, input_width: usize) -> usize {
        match self {
            ClassicalFn::Identity => input_width,
            ClassicalFn::Linear { matrix } => matrix.rows(),
            ClassicalFn::Table { output_bits, .. } => *output_bits,
        }
    }

    pub fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>> {
        match self {
            ClassicalFn::Identity => Ok(input.to_vec()),
            ClassicalFn::Linear { matrix } => matrix.mul_vec(input),
            ClassicalFn::Table { input_bits, output_bits, table } => {
                if input.len() != *input_bits {
                    return Err(LaqccError::DimensionMismatch(input.len(), *input_bits));
                }
                let v = crate::state::from_bits(input) as usize;
                Ok(crate::state::to_bits(table[v] as u128, *output_bits))
            }
        }
    }

    fn check(&self, input_width: usize) -> Result<()> {
        match self {
            ClassicalFn::Identity => Ok(()),
            ClassicalFn::Linear { matrix } if matrix.cols() != input_width => Err(LaqccError::MalformedProgram(
                format!("linear map takes {} bits, layer supplies {input_width}", matrix.cols()),
            )),
            ClassicalFn::Table { input_bits, table, .. }
                if *input_bits != input_width || *input_bits > 24 || table.len() != 1 << input_bits =>
            {
                Err(LaqccError::MalformedProgram("table shape does not match its inputs".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer {
    Quantum {
        gates: Vec<Instr>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        condition: Option<Condition>,
    },
    Measure {
        qubits: Vec<usize>,
        label: String,
    },
    Classical {
        #[serde(flatten)]
        function: ClassicalFn,
        inputs: Vec<String>,
        output: String,
        class: DepthClass,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Index,
    System,
    Ancilla,
    Flag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub qubits: Vec<usize>,
    pub role: Role,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegisterMap {
    pub registers: Vec<Register>,
}

impl RegisterMap {
    pub fn get(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn qubits(&self, name: &str) -> Option<&[usize]> {
        self.get(name).map(|r| r.qubits.as_slice())
    }

    pub fn by_role(&self, role: Role) -> Vec<usize> {
        self.registers.iter().filter(|r| r.role == role).flat_map(|r| r.qubits.iter().copied()).collect()
    }

    /// Registers must be disjoint and cover `0..num_qubits`.
    pub fn check(&self, num_qubits: usize) -> Result<()> {
        let mut seen = vec![false; num_qubits];
        for r in &self.registers {
            for &q in &r.qubits {
                if q >= num_qubits {
                    return Err(LaqccError::Index { index: q, num_qubits });
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(LaqccError::MalformedProgram(format!("qubit {q} is in two registers")));
                }
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(LaqccError::MalformedProgram(format!("qubit {q} is in no register")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub qubits: usize,
    pub registers: RegisterMap,
    pub layers: Vec<Layer>,
}

impl Program {
    pub fn empty(qubits: usize) -> Self {
        let registers = RegisterMap {
            registers: if qubits == 0 {
                vec![]
            } else {
                vec![Register { name: "q".into(), qubits: (0..qubits).collect(), role: Role::System }]
            },
        };
        Program { qubits, registers, layers: vec![] }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Program = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Output width of every classical label (measurements and classical layers).
    pub fn label_widths(&self) -> BTreeMap<String, usize> {
        let mut widths = BTreeMap::new();
        for layer in &self.layers {
            match layer {
                Layer::Measure { qubits, label } => {
                    widths.insert(label.clone(), qubits.len());
                }
                Layer::Classical { function, inputs, output, .. } => {
                    let w: usize = inputs.iter().map(|l| widths.get(l).copied().unwrap_or(0)).sum();
                    widths.insert(output.clone(), function.output_width(w));
                }
                Layer::Quantum { .. } => {}
            }
        }
        widths
    }

    pub fn measurement_count(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::Measure { .. })).count()
    }

    /// Checks the structural invariants of an alternating program.
    pub fn validate(&self) -> Result<()> {
        self.registers.check(self.qubits)?;
        let mut measured: BTreeMap<String, usize> = BTreeMap::new();
        let mut classical: BTreeMap<String, usize> = BTreeMap::new();
        let check_cond = |c: &Option<Condition>, classical: &BTreeMap<String, usize>| -> Result<()> {
            if let Some(c) = c {
                match classical.get(&c.source) {
                    Some(&w) if c.bit < w => Ok(()),
                    Some(_) => Err(LaqccError::MalformedProgram(format!("bit {} of `{}` out of range", c.bit, c.source))),
                    None => Err(LaqccError::MalformedProgram(format!(
                        "condition reads `{}` before any classical layer produced it",
                        c.source
                    ))),
                }
            } else {
                Ok(())
            }
        };
        for (li, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Quantum { gates, condition } => {
                    check_cond(condition, &classical)?;
                    let mut used = HashSet::new();
                    for g in gates {
                        g.op.validate(self.qubits)?;
                        check_cond(&g.condition, &classical)?;
                        for q in g.op.qubits() {
                            if !used.insert(q) {
                                return Err(LaqccError::MalformedProgram(format!(
                                    "qubit {q} appears twice in quantum layer {li}"
                                )));
                            }
                        }
                    }
                }
                Layer::Measure { qubits, label } => {
                    let mut seen = HashSet::new();
                    for &q in qubits {
                        if q >= self.qubits {
                            return Err(LaqccError::Index { index: q, num_qubits: self.qubits });
                        }
                        if !seen.insert(q) {
                            return Err(LaqccError::MalformedProgram(format!("qubit {q} measured twice in `{label}`")));
                        }
                    }
                    if measured.contains_key(label) || classical.contains_key(label) {
                        return Err(LaqccError::MalformedProgram(format!("label `{label}` reused")));
                    }
                    measured.insert(label.clone(), qubits.len());
                }
                Layer::Classical { function, inputs, output, .. } => {
                    let mut w = 0;
                    for l in inputs {
                        w += measured.get(l).copied().ok_or_else(|| {
                            LaqccError::MalformedProgram(format!("classical layer reads unknown measurement `{l}`"))
                        })?;
                    }
                    function.check(w)?;
                    if measured.contains_key(output) || classical.contains_key(output) {
                        return Err(LaqccError::MalformedProgram(format!("label `{output}` reused")));
                    }
                    classical.insert(output.clone(), function.output_width(w));
                }
            }
        }
        Ok(())
    }
}

/// A unitary program fragment: a list of operations applied in order.
pub type Fragment = Vec<Op>;

pub fn inverse_fragment(f: &[Op]) -> Fragment {
    f.iter().rev().map(|op| op.inverse()).collect()
}
