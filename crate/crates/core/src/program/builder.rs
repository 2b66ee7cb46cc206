use std::collections::HashSet;

use super::{ClassicalFn, Condition, DepthClass, Instr, Layer, Program, Register, RegisterMap, Role};
use crate::error::{LaqccError, Result};
use crate::program::Op;
use crate::state::MAX_QUBITS;

/// Incremental program construction with qubit allocation and layer packing.
///
/// Operations are packed into the most recent quantum layer when their
/// qubits are free there; otherwise a new layer is opened.
#[derive(Debug, Default)]
pub struct Builder {
    qubits: usize,
    registers: Vec<Register>,
    layers: Vec<Layer>,
    last_used: HashSet<usize>,
    free_scratch: Vec<usize>,
    labels: usize,
    sealed: bool,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from an existing qubit allocation, with no layers.
    pub fn with_registers(qubits: usize, registers: Vec<Register>) -> Self {
        Self { qubits, registers, ..Self::default() }
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    /// Allocates a named register of `n` fresh qubits.
    pub fn alloc(&mut self, name: &str, n: usize, role: Role) -> Vec<usize> {
        let qs: Vec<usize> = (self.qubits..self.qubits + n).collect();
        self.qubits += n;
        let mut name = name.to_string();
        if self.registers.iter().any(|r| r.name == name) {
            name = format!("{name}#{}", self.registers.len());
        }
        self.registers.push(Register { name, qubits: qs.clone(), role });
        qs
    }

    /// Scratch qubits in |0⟩, reusing released ones first.
    pub fn alloc_scratch(&mut self, n: usize) -> Vec<usize> {
        self.free_scratch.sort_unstable_by(|a, b| b.cmp(a));
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            match self.free_scratch.pop() {
                Some(q) => out.push(q),
                None => break,
            }
        }
        let missing = n - out.len();
        if missing > 0 {
            let fresh: Vec<usize> = (self.qubits..self.qubits + missing).collect();
            self.qubits += missing;
            match self.registers.iter_mut().find(|r| r.name == "scratch") {
                Some(r) => r.qubits.extend(&fresh),
                None => self.registers.push(Register { name: "scratch".into(), qubits: fresh.clone(), role: Role::Ancilla }),
            }
            out.extend(fresh);
        }
        out
    }

    /// Returns scratch qubits to the pool. They must be back in |0⟩.
    pub fn release(&mut self, qubits: &[usize]) {
        self.free_scratch.extend_from_slice(qubits);
    }

    fn fresh_label(&mut self, prefix: &str) -> String {
        self.labels += 1;
        format!("{prefix}{}", self.labels)
    }

    /// Forces the next operation into a new quantum layer.
    pub fn barrier(&mut self) {
        self.sealed = true;
    }

    pub fn instr(&mut self, instr: Instr) {
        let qs = instr.op.qubits();
        let fits = !self.sealed
            && matches!(self.layers.last(), Some(Layer::Quantum { condition: None, .. }))
            && qs.iter().all(|q| !self.last_used.contains(q));
        if !fits {
            self.layers.push(Layer::Quantum { gates: vec![], condition: None });
            self.last_used.clear();
            self.sealed = false;
        }
        self.last_used.extend(qs);
        if let Some(Layer::Quantum { gates, .. }) = self.layers.last_mut() {
            gates.push(instr);
        }
    }

    pub fn op(&mut self, op: Op) {
        self.instr(op.into());
    }

    pub fn ops<I: IntoIterator<Item = Op>>(&mut self, ops: I) {
        for op in ops {
            self.op(op);
        }
    }

    pub fn conditional(&mut self, op: Op, source: &str, bit: usize) {
        self.instr(Instr { op, condition: Some(Condition { source: source.to_string(), bit }) });
    }

    /// Appends a measurement layer and returns its label.
    pub fn measure(&mut self, qubits: &[usize], prefix: &str) -> String {
        let label = self.fresh_label(prefix);
        self.layers.push(Layer::Measure { qubits: qubits.to_vec(), label: label.clone() });
        label
    }

    /// Appends a classical layer and returns its output label.
    pub fn classical(&mut self, function: ClassicalFn, inputs: &[String], prefix: &str, class: DepthClass) -> String {
        let output = self.fresh_label(prefix);
        self.layers.push(Layer::Classical { function, inputs: inputs.to_vec(), output: output.clone(), class });
        output
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn finish(self) -> Result<Program> {
        if self.qubits > MAX_QUBITS {
            return Err(LaqccError::Validation(format!("program needs {} qubits, limit is {MAX_QUBITS}", self.qubits)));
        }
        let layers = self
            .layers
            .into_iter()
            .filter(|l| !matches!(l, Layer::Quantum { gates, .. } if gates.is_empty()))
            .collect();
        let p = Program { qubits: self.qubits, registers: RegisterMap { registers: self.registers }, layers };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_disjoint_ops() {
        let mut b = Builder::new();
        let q = b.alloc("q", 3, Role::System);
        b.op(Op::H { q: q[0] });
        b.op(Op::H { q: q[1] });
        b.op(Op::Cnot { control: q[0], target: q[2] });
        let p = b.finish().unwrap();
        assert_eq!(p.layers.len(), 2);
    }

    #[test]
    fn scratch_is_reused() {
        let mut b = Builder::new();
        b.alloc("q", 1, Role::System);
        let s = b.alloc_scratch(2);
        b.release(&s);
        let t = b.alloc_scratch(3);
        assert_eq!(&t[..2], &s[..]);
        assert_eq!(b.num_qubits(), 4);
    }
}
