//! Grid placement checks.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Layer, Program};
use crate::error::{LaqccError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub coords: BTreeMap<usize, (i64, i64)>,
}

impl GridLayout {
    /// Qubits `0..n` on a single row.
    pub fn line(n: usize) -> Self {
        Self { coords: (0..n).map(|q| (q, (0, q as i64))).collect() }
    }

    pub fn place(&mut self, qubit: usize, row: i64, col: i64) {
        self.coords.insert(qubit, (row, col));
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        match (self.coords.get(&a), self.coords.get(&b)) {
            (Some(p), Some(q)) => (p.0 - q.0).abs() + (p.1 - q.1).abs() == 1,
            _ => false,
        }
    }

    fn connected(&self, qubits: &[usize]) -> bool {
        let set: BTreeSet<usize> = qubits.iter().copied().collect();
        let Some(&start) = set.iter().next() else { return true };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(q) = queue.pop_front() {
            for &r in &set {
                if !seen.contains(&r) && self.adjacent(q, r) {
                    seen.insert(r);
                    queue.push_back(r);
                }
            }
        }
        seen.len() == set.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub layer: usize,
    pub gate: String,
    pub qubits: Vec<usize>,
}

/// Two-qubit gates must act on grid neighbours; a multi-qubit macro's support
/// must form a connected patch.
pub fn validate_layout(program: &Program, layout: &GridLayout) -> Result<Vec<Violation>> {
    if let Some(q) = (0..program.qubits).find(|q| !layout.coords.contains_key(q)) {
        return Err(LaqccError::Validation(format!("layout does not place qubit {q}")));
    }
    let mut positions = BTreeSet::new();
    for (q, p) in &layout.coords {
        if !positions.insert(*p) {
            return Err(LaqccError::Validation(format!("qubit {q} shares grid point {p:?}")));
        }
    }
    let mut out = Vec::new();
    for (li, layer) in program.layers.iter().enumerate() {
        let Layer::Quantum { gates, .. } = layer else { continue };
        for g in gates {
            let qs = g.op.qubits();
            let ok = match qs.len() {
                0 | 1 => true,
                2 => layout.adjacent(qs[0], qs[1]),
                _ => layout.connected(&qs),
            };
            if !ok {
                out.push(Violation { layer: li, gate: g.op.name().to_string(), qubits: qs });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Builder, Op, Role};

    #[test]
    fn distance_two_cnot_is_flagged() {
        let mut b = Builder::new();
        let q = b.alloc("q", 3, Role::System);
        b.op(Op::Cnot { control: q[0], target: q[2] });
        let p = b.finish().unwrap();
        let v = validate_layout(&p, &GridLayout::line(3)).unwrap();
        assert_eq!(v.len(), 1);
        assert!(validate_layout(&p, &GridLayout::line(2)).is_err());
    }
}
