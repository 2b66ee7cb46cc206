//! Gate and macro operations with their basis-state semantics.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{LaqccError, Result};
use crate::numbersys::{comb_to_fac, fac_decompose, fac_to_comb, Factoradic};
use crate::state::{gates, gather, scatter, Basis, Mat2, SparseState};

/// One operation. One- and two-qubit gates are primitive; everything from
/// `Fanout` down is a macro executed by its basis-state map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Op {
    H { q: usize },
    X { q: usize },
    Y { q: usize },
    Z { q: usize },
    S { q: usize },
    Sdg { q: usize },
    T { q: usize },
    Tdg { q: usize },
    Phase { q: usize, theta: f64 },
    Rz { q: usize, theta: f64 },
    Ry { q: usize, theta: f64 },
    /// Row-major 2×2 matrix of `[re, im]` pairs.
    Unitary1 { q: usize, matrix: [[[f64; 2]; 2]; 2] },
    Cnot { control: usize, target: usize },
    Cz { a: usize, b: usize },
    Swap { a: usize, b: usize },
    Fanout { control: usize, targets: Vec<usize> },
    Or { inputs: Vec<usize>, out: usize },
    And { inputs: Vec<usize>, out: usize },
    Equal { inputs: Vec<usize>, value: u64, out: usize },
    /// `y ← y + x mod 2^|y|`.
    Add { x: Vec<usize>, y: Vec<usize> },
    Sub { x: Vec<usize>, y: Vec<usize> },
    /// `out ← out ⊕ |x|`.
    HammingWeight { x: Vec<usize>, out: Vec<usize> },
    Qft { reg: Vec<usize>, inverse: bool },
    /// Register `l` moves to slot `perm[l]`.
    Permute { registers: Vec<Vec<usize>>, perm: Vec<usize> },
    /// `outputs ← outputs ⊕ table[inputs]`.
    Oracle { inputs: Vec<usize>, outputs: Vec<usize>, table: Vec<u64> },
    /// Phase `exp(i·phases[v])` on basis value `v` of `qubits`.
    Diagonal { qubits: Vec<usize>, phases: Vec<f64> },
    /// `out ← out ⊕ A(y)` for a valid factoradic in `digits` (most significant first).
    FacToComb { digits: Vec<Vec<usize>>, k: usize, out: Vec<usize> },
    /// `(z, o) ← (z, o) ⊕ (Z(y), O(y))`.
    FacDecompose { digits: Vec<Vec<usize>>, k: usize, z: Vec<Vec<usize>>, o: Vec<Vec<usize>> },
    /// `digits ← digits ⊕ y(sys, z, o)`.
    CombToFac { sys: Vec<usize>, k: usize, z: Vec<Vec<usize>>, o: Vec<Vec<usize>>, digits: Vec<Vec<usize>> },
    /// Applies `op` on basis states where every `(qubit, value)` matches.
    Controlled { controls: Vec<(usize, bool)>, op: Box<Op> },
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::H { .. } => "h",
            Op::X { .. } => "x",
            Op::Y { .. } => "y",
            Op::Z { .. } => "z",
            Op::S { .. } => "s",
            Op::Sdg { .. } => "sdg",
            Op::T { .. } => "t",
            Op::Tdg { .. } => "tdg",
            Op::Phase { .. } => "phase",
            Op::Rz { .. } => "rz",
            Op::Ry { .. } => "ry",
            Op::Unitary1 { .. } => "unitary1",
            Op::Cnot { .. } => "cnot",
            Op::Cz { .. } => "cz",
            Op::Swap { .. } => "swap",
            Op::Fanout { .. } => "fanout",
            Op::Or { .. } => "or",
            Op::And { .. } => "and",
            Op::Equal { .. } => "equal",
            Op::Add { .. } => "add",
            Op::Sub { .. } => "sub",
            Op::HammingWeight { .. } => "hammingweight",
            Op::Qft { .. } => "qft",
            Op::Permute { .. } => "permute",
            Op::Oracle { .. } => "oracle",
            Op::Diagonal { .. } => "diagonal",
            Op::FacToComb { .. } => "factocomb",
            Op::FacDecompose { .. } => "facdecompose",
            Op::CombToFac { .. } => "combtofac",
            Op::Controlled { .. } => "controlled",
        }
    }

    /// True for one- and two-qubit gates.
    pub fn is_primitive(&self) -> bool {
        match self {
            Op::Controlled { controls, op } => controls.is_empty() && op.is_primitive(),
            _ => self.qubits().len() <= 2 && !matches!(self, Op::Fanout { .. } | Op::Or { .. } | Op::And { .. } | Op::Equal { .. } | Op::Add { .. } | Op::Sub { .. } | Op::HammingWeight { .. } | Op::Qft { .. } | Op::Permute { .. } | Op::Oracle { .. } | Op::Diagonal { .. } | Op::FacToComb { .. } | Op::FacDecompose { .. } | Op::CombToFac { .. }),
        }
    }

    /// Problem size used for resource charges.
    pub fn size(&self) -> usize {
        match self {
            Op::Fanout { targets, .. } => targets.len(),
            Op::Or { inputs, .. } | Op::And { inputs, .. } | Op::Equal { inputs, .. } => inputs.len(),
            Op::Add { y, .. } | Op::Sub { y, .. } => y.len(),
            Op::HammingWeight { x, .. } => x.len(),
            Op::Qft { reg, .. } => reg.len(),
            Op::Permute { registers, .. } => registers.iter().map(|r| r.len()).sum(),
            Op::Oracle { inputs, .. } => inputs.len(),
            Op::Diagonal { qubits, .. } => qubits.len(),
            Op::FacToComb { digits, .. } | Op::FacDecompose { digits, .. } => digits.len(),
            Op::CombToFac { sys, .. } => sys.len(),
            Op::Controlled { controls, .. } => controls.len(),
            _ => self.qubits().len(),
        }
    }

    /// Every qubit the op touches.
    pub fn qubits(&self) -> Vec<usize> {
        let mut v = self.reads();
        v.extend(self.writes());
        v
    }

    /// Qubits whose computational-basis value the op may change.
    pub fn writes(&self) -> Vec<usize> {
        match self {
            Op::H { q } | Op::X { q } | Op::Y { q } | Op::Ry { q, .. } | Op::Unitary1 { q, .. } => vec![*q],
            Op::Z { .. } | Op::S { .. } | Op::Sdg { .. } | Op::T { .. } | Op::Tdg { .. } => vec![],
            Op::Phase { .. } | Op::Rz { .. } | Op::Cz { .. } | Op::Diagonal { .. } => vec![],
            Op::Cnot { target, .. } => vec![*target],
            Op::Swap { a, b } => vec![*a, *b],
            Op::Fanout { targets, .. } => targets.clone(),
            Op::Or { out, .. } | Op::And { out, .. } | Op::Equal { out, .. } => vec![*out],
            Op::Add { y, .. } | Op::Sub { y, .. } => y.clone(),
            Op::HammingWeight { out, .. } => out.clone(),
            Op::Qft { reg, .. } => reg.clone(),
            Op::Permute { registers, .. } => registers.concat(),
            Op::Oracle { outputs, .. } => outputs.clone(),
            Op::FacToComb { out, .. } => out.clone(),
            Op::FacDecompose { z, o, .. } => [z.concat(), o.concat()].concat(),
            Op::CombToFac { digits, .. } => digits.concat(),
            Op::Controlled { op, .. } => op.writes(),
        }
    }

    /// Qubits the op uses without changing their basis value.
    pub fn reads(&self) -> Vec<usize> {
        match self {
            Op::H { .. } | Op::X { .. } | Op::Y { .. } | Op::Ry { .. } | Op::Unitary1 { .. } => vec![],
            Op::Z { q } | Op::S { q } | Op::Sdg { q } | Op::T { q } | Op::Tdg { q } => vec![*q],
            Op::Phase { q, .. } | Op::Rz { q, .. } => vec![*q],
            Op::Cz { a, b } => vec![*a, *b],
            Op::Diagonal { qubits, .. } => qubits.clone(),
            Op::Cnot { control, .. } => vec![*control],
            Op::Swap { .. } => vec![],
            Op::Fanout { control, .. } => vec![*control],
            Op::Or { inputs, .. } | Op::And { inputs, .. } | Op::Equal { inputs, .. } => inputs.clone(),
            Op::Add { x, .. } | Op::Sub { x, .. } => x.clone(),
            Op::HammingWeight { x, .. } => x.clone(),
            Op::Qft { .. } | Op::Permute { .. } => vec![],
            Op::Oracle { inputs, .. } => inputs.clone(),
            Op::FacToComb { digits, .. } | Op::FacDecompose { digits, .. } => digits.concat(),
            Op::CombToFac { sys, z, o, .. } => [sys.clone(), z.concat(), o.concat()].concat(),
            Op::Controlled { controls, op } => {
                let mut v: Vec<usize> = controls.iter().map(|c| c.0).collect();
                v.extend(op.reads());
                v
            }
        }
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.writes().is_empty()
    }

    pub fn inverse(&self) -> Op {
        match self {
            Op::S { q } => Op::Sdg { q: *q },
            Op::Sdg { q } => Op::S { q: *q },
            Op::T { q } => Op::Tdg { q: *q },
            Op::Tdg { q } => Op::T { q: *q },
            Op::Phase { q, theta } => Op::Phase { q: *q, theta: -theta },
            Op::Rz { q, theta } => Op::Rz { q: *q, theta: -theta },
            Op::Ry { q, theta } => Op::Ry { q: *q, theta: -theta },
            Op::Unitary1 { q, matrix } => {
                let mut m = [[[0.0; 2]; 2]; 2];
                for (i, row) in m.iter_mut().enumerate() {
                    for (j, e) in row.iter_mut().enumerate() {
                        *e = [matrix[j][i][0], -matrix[j][i][1]];
                    }
                }
                Op::Unitary1 { q: *q, matrix: m }
            }
            Op::Add { x, y } => Op::Sub { x: x.clone(), y: y.clone() },
            Op::Sub { x, y } => Op::Add { x: x.clone(), y: y.clone() },
            Op::Qft { reg, inverse } => Op::Qft { reg: reg.clone(), inverse: !inverse },
            Op::Permute { registers, perm } => {
                let mut inv = vec![0; perm.len()];
                for (l, &p) in perm.iter().enumerate() {
                    inv[p] = l;
                }
                Op::Permute { registers: registers.clone(), perm: inv }
            }
            Op::Diagonal { qubits, phases } => {
                Op::Diagonal { qubits: qubits.clone(), phases: phases.iter().map(|p| -p).collect() }
            }
            Op::Controlled { controls, op } => Op::Controlled { controls: controls.clone(), op: Box::new(op.inverse()) },
            // the rest are self-inverse
            other => other.clone(),
        }
    }

    /// Checks qubit ranges, distinctness and register shapes.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for (i, &q) in qs.iter().enumerate() {
            if q >= num_qubits {
                return Err(LaqccError::Index { index: q, num_qubits });
            }
            if qs[..i].contains(&q) {
                return Err(LaqccError::MalformedProgram(format!("{} uses qubit {q} twice", self.name())));
            }
        }
        let bad = |m: &str| Err(LaqccError::MalformedProgram(format!("{}: {m}", self.name())));
        match self {
            Op::Unitary1 { matrix, .. } => {
                let m = to_mat2(matrix);
                let p = gates::mul(&m, &gates::adjoint(&m));
                let err = (p[0][0] - c(1.0, 0.0)).norm() + (p[1][1] - c(1.0, 0.0)).norm() + p[0][1].norm() + p[1][0].norm();
                if err > 1e-12 {
                    return Err(LaqccError::Validation("unitary1 matrix is not unitary".into()));
                }
            }
            Op::Add { x, y } | Op::Sub { x, y } if x.len() > y.len() => return bad("x wider than y"),
            Op::Permute { registers, perm } => {
                let mut seen = vec![false; perm.len()];
                if perm.len() != registers.len() || perm.iter().any(|&p| p >= perm.len() || std::mem::replace(&mut seen[p], true)) {
                    return bad("perm is not a permutation of the registers");
                }
                if registers.windows(2).any(|w| w[0].len() != w[1].len()) {
                    return bad("registers differ in width");
                }
            }
            Op::Oracle { inputs, outputs, table } => {
                if inputs.len() > 20 || table.len() != 1usize << inputs.len() {
                    return bad("table size must be 2^inputs");
                }
                if outputs.len() < 64 && table.iter().any(|&t| t >> outputs.len() != 0) {
                    return bad("table entry wider than outputs");
                }
            }
            Op::Diagonal { qubits, phases } if phases.len() != 1usize << qubits.len() => {
                return bad("phase list size must be 2^qubits");
            }
            Op::FacToComb { digits, k, out } => {
                if out.len() != digits.len() || *k > digits.len() {
                    return bad("output width must equal digit count");
                }
            }
            Op::FacDecompose { digits, k, z, o } => {
                if *k > digits.len() || z.len() + k != digits.len() || o.len() != *k {
                    return bad("z and o must have n-k and k digits");
                }
            }
            Op::CombToFac { sys, k, z, o, digits } => {
                if *k > sys.len() || digits.len() != sys.len() || z.len() + k != sys.len() || o.len() != *k {
                    return bad("register counts disagree");
                }
            }
            Op::Controlled { op, .. } => op.validate(num_qubits)?,
            _ => {}
        }
        Ok(())
    }

    /// Basis-state map for operations that permute basis states.
    pub fn basis_map(&self) -> Option<Box<dyn Fn(Basis) -> Basis + Send + Sync + '_>> {
        let flip = |idx: Basis, q: usize| idx ^ (1u128 << q);
        Some(match self {
            Op::X { q } => Box::new(move |i| flip(i, *q)),
            Op::Cnot { control, target } => Box::new(move |i| if (i >> control) & 1 == 1 { flip(i, *target) } else { i }),
            Op::Swap { a, b } => Box::new(move |i| {
                if ((i >> a) & 1) != ((i >> b) & 1) {
                    i ^ (1u128 << a) ^ (1u128 << b)
                } else {
                    i
                }
            }),
            Op::Fanout { control, targets } => {
                let m = targets.iter().fold(0u128, |m, &t| m | (1u128 << t));
                Box::new(move |i| if (i >> control) & 1 == 1 { i ^ m } else { i })
            }
            Op::Or { inputs, out } => {
                let m = inputs.iter().fold(0u128, |m, &t| m | (1u128 << t));
                Box::new(move |i| if i & m != 0 { flip(i, *out) } else { i })
            }
            Op::And { inputs, out } => {
                let m = inputs.iter().fold(0u128, |m, &t| m | (1u128 << t));
                Box::new(move |i| if i & m == m { flip(i, *out) } else { i })
            }
            Op::Equal { inputs, value, out } => {
                Box::new(move |i| if gather(i, inputs) == *value as u128 { flip(i, *out) } else { i })
            }
            Op::Add { x, y } | Op::Sub { x, y } => {
                let sub = matches!(self, Op::Sub { .. });
                let mask = low_mask(y.len());
                Box::new(move |i| {
                    let (xv, yv) = (gather(i, x), gather(i, y));
                    let nv = if sub { yv.wrapping_sub(xv) } else { yv.wrapping_add(xv) } & mask;
                    scatter(i, y, nv)
                })
            }
            Op::HammingWeight { x, out } => {
                let mask = low_mask(out.len());
                Box::new(move |i| {
                    let w = gather(i, x).count_ones() as u128 & mask;
                    scatter(i, out, gather(i, out) ^ w)
                })
            }
            Op::Permute { registers, perm } => Box::new(move |i| {
                let vals: Vec<u128> = registers.iter().map(|r| gather(i, r)).collect();
                let mut j = i;
                for (l, &p) in perm.iter().enumerate() {
                    j = scatter(j, &registers[p], vals[l]);
                }
                j
            }),
            Op::Oracle { inputs, outputs, table } => Box::new(move |i| {
                let v = table[gather(i, inputs) as usize] as u128;
                scatter(i, outputs, gather(i, outputs) ^ v)
            }),
            Op::FacToComb { digits, k, out } => Box::new(move |i| match read_factoradic(i, digits) {
                Some(y) => scatter(i, out, gather(i, out) ^ fac_to_comb(&y, *k)),
                None => i,
            }),
            Op::FacDecompose { digits, k, z, o } => Box::new(move |i| {
                let Some(y) = read_factoradic(i, digits) else { return i };
                let Ok((_, zf, of)) = fac_decompose(&y, *k) else { return i };
                let j = xor_factoradic(i, z, &zf);
                xor_factoradic(j, o, &of)
            }),
            Op::CombToFac { sys, k, z, o, digits } => Box::new(move |i| {
                let s = gather(i, sys);
                if s.count_ones() as usize != *k {
                    return i;
                }
                let (Some(zf), Some(of)) = (read_factoradic(i, z), read_factoradic(i, o)) else { return i };
                match comb_to_fac(s, sys.len(), &zf, &of) {
                    Ok(y) => xor_factoradic(i, digits, &y),
                    Err(_) => i,
                }
            }),
            Op::Controlled { controls, op } => {
                let inner = op.basis_map()?;
                Box::new(move |i| if controls_match(i, controls) { inner(i) } else { i })
            }
            _ => return None,
        })
    }

    /// Phase function for diagonal operations.
    pub fn phase_fn(&self) -> Option<Box<dyn Fn(Basis) -> C64 + Send + Sync + '_>> {
        let one = c(1.0, 0.0);
        let on = |phase: C64, q: usize| -> Box<dyn Fn(Basis) -> C64 + Send + Sync> {
            Box::new(move |i| if (i >> q) & 1 == 1 { phase } else { c(1.0, 0.0) })
        };
        Some(match self {
            Op::Z { q } => on(c(-1.0, 0.0), *q),
            Op::S { q } => on(c(0.0, 1.0), *q),
            Op::Sdg { q } => on(c(0.0, -1.0), *q),
            Op::T { q } => on(C64::from_polar(1.0, PI / 4.0), *q),
            Op::Tdg { q } => on(C64::from_polar(1.0, -PI / 4.0), *q),
            Op::Phase { q, theta } => on(C64::from_polar(1.0, *theta), *q),
            Op::Rz { q, theta } => {
                let (q, t) = (*q, *theta);
                Box::new(move |i| C64::from_polar(1.0, if (i >> q) & 1 == 1 { t / 2.0 } else { -t / 2.0 }))
            }
            Op::Cz { a, b } => {
                let m = (1u128 << a) | (1u128 << b);
                Box::new(move |i| if i & m == m { c(-1.0, 0.0) } else { one })
            }
            Op::Diagonal { qubits, phases } => {
                Box::new(move |i| C64::from_polar(1.0, phases[gather(i, qubits) as usize]))
            }
            Op::Controlled { controls, op } => {
                let inner = op.phase_fn()?;
                Box::new(move |i| if controls_match(i, controls) { inner(i) } else { one })
            }
            _ => return None,
        })
    }

    /// 2×2 matrix for the remaining one-qubit gates.
    pub fn matrix1(&self) -> Option<(usize, Mat2)> {
        match self {
            Op::H { q } => Some((*q, gates::h())),
            Op::Y { q } => Some((*q, gates::y())),
            Op::Ry { q, theta } => Some((*q, gates::ry(*theta))),
            Op::Unitary1 { q, matrix } => Some((*q, to_mat2(matrix))),
            _ => None,
        }
    }

    /// Applies the op to `state` in place.
    pub fn apply(&self, state: &mut SparseState) {
        if let Some(f) = self.basis_map() {
            state.permute_basis(f);
        } else if let Some(f) = self.phase_fn() {
            state.apply_diagonal(f);
        } else if let Some((q, m)) = self.matrix1() {
            state.apply_1q(q, &m);
        } else if let Op::Qft { reg, inverse } = self {
            apply_qft(state, reg, *inverse);
        } else if let Op::Controlled { controls, op } = self {
            let (mut hit, miss) = state.split(|i| controls_match(i, controls));
            op.apply(&mut hit);
            let mut out = miss;
            out.absorb(hit);
            *state = out;
        }
    }
}

pub(crate) fn controls_match(i: Basis, controls: &[(usize, bool)]) -> bool {
    controls.iter().all(|&(q, v)| ((i >> q) & 1 == 1) == v)
}

fn low_mask(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

pub(crate) fn to_mat2(m: &[[[f64; 2]; 2]; 2]) -> Mat2 {
    [[c(m[0][0][0], m[0][0][1]), c(m[0][1][0], m[0][1][1])], [c(m[1][0][0], m[1][0][1]), c(m[1][1][0], m[1][1][1])]]
}

pub fn from_mat2(m: &Mat2) -> [[[f64; 2]; 2]; 2] {
    [[[m[0][0].re, m[0][0].im], [m[0][1].re, m[0][1].im]], [[m[1][0].re, m[1][0].im], [m[1][1].re, m[1][1].im]]]
}

/// Reads a factoradic from digit registers (most significant first); `None`
/// when some digit exceeds its weight.
pub(crate) fn read_factoradic(i: Basis, regs: &[Vec<usize>]) -> Option<Factoradic> {
    let digits: Vec<u32> = regs.iter().map(|r| gather(i, r) as u32).collect();
    Factoradic::new(digits).ok()
}

fn xor_factoradic(i: Basis, regs: &[Vec<usize>], y: &Factoradic) -> Basis {
    let mut j = i;
    for (r, &d) in regs.iter().zip(y.digits()) {
        j = scatter(j, r, gather(j, r) ^ d as u128);
    }
    j
}

fn apply_qft(state: &mut SparseState, reg: &[usize], inverse: bool) {
    let n = reg.len();
    let dim = 1u128 << n;
    let norm = 1.0 / (dim as f64).sqrt();
    let sign = if inverse { -1.0 } else { 1.0 };
    state.map_linear(|i, out| {
        let x = gather(i, reg);
        for j in 0..dim {
            let angle = sign * 2.0 * PI * ((x * j) % dim) as f64 / dim as f64;
            out.push((scatter(i, reg, j), C64::from_polar(norm, angle)));
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(op: &Op, n: usize, idx: Basis) -> SparseState {
        op.validate(n).unwrap();
        let mut s = SparseState::basis(n, idx).unwrap();
        op.apply(&mut s);
        s
    }

    fn single(s: &SparseState) -> Basis {
        assert_eq!(s.support(), 1);
        s.entries()[0].0
    }

    #[test]
    fn serde_shape() {
        let op = Op::Cnot { control: 0, target: 1 };
        let j = serde_json::to_string(&op).unwrap();
        assert_eq!(j, r#"{"name":"cnot","control":0,"target":1}"#);
        let c = Op::Controlled { controls: vec![(2, true)], op: Box::new(op) };
        let back: Op = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn fanout_maps() {
        let op = Op::Fanout { control: 0, targets: vec![1, 2] };
        assert_eq!(single(&run(&op, 3, 0b001)), 0b111);
        assert_eq!(single(&run(&op, 3, 0b100)), 0b100);
        assert!(Op::Fanout { control: 0, targets: vec![0, 1] }.validate(3).is_err());
    }

    #[test]
    fn or_and_equal() {
        // inputs q0..q2, out q3; |101⟩ means q0=1, q1=0, q2=1
        let or = Op::Or { inputs: vec![0, 1, 2], out: 3 };
        assert_eq!(single(&run(&or, 4, 0b0101)), 0b1101);
        let and = Op::And { inputs: vec![0, 1, 2], out: 3 };
        assert_eq!(single(&run(&and, 4, 0b0111)), 0b1111);
        assert_eq!(single(&run(&and, 4, 0b0011)), 0b0011);
        let eq = Op::Equal { inputs: vec![0, 1, 2], value: 5, out: 3 };
        assert_eq!(single(&run(&eq, 4, 0b0101)), 0b1101);
        assert_eq!(single(&run(&eq, 4, 0b0100)), 0b0100);
    }

    #[test]
    fn modular_add() {
        let add = Op::Add { x: vec![0, 1, 2], y: vec![3, 4, 5] };
        assert_eq!(single(&run(&add, 6, 3 | (5 << 3))) >> 3, 0);
        let sub = add.inverse();
        assert_eq!(single(&run(&sub, 6, 3 | (5 << 3))) >> 3, 2);
    }

    #[test]
    fn hamming_weight() {
        let hw = Op::HammingWeight { x: vec![0, 1, 2, 3], out: vec![4, 5, 6] };
        assert_eq!(single(&run(&hw, 7, 0b1011)) >> 4, 3);
    }

    #[test]
    fn qft_one_qubit_is_hadamard() {
        let s = run(&Op::Qft { reg: vec![0], inverse: false }, 1, 0);
        let h = run(&Op::H { q: 0 }, 1, 0);
        assert!((s.fidelity(&h).unwrap() - 1.0).abs() < 1e-12);
        let s = run(&Op::Qft { reg: vec![0, 1, 2], inverse: false }, 3, 0);
        assert_eq!(s.support(), 8);
        assert!(s.entries().iter().all(|(_, a)| (a.re - 8f64.sqrt().recip()).abs() < 1e-12 && a.im.abs() < 1e-12));
    }

    #[test]
    fn permute_registers() {
        // three 1-bit registers holding 1,0,0; register 0 moves to slot 2
        let p = Op::Permute { registers: vec![vec![0], vec![1], vec![2]], perm: vec![2, 0, 1] };
        assert_eq!(single(&run(&p, 3, 0b001)), 0b100);
        assert_eq!(single(&run(&p.inverse(), 3, 0b100)), 0b001);
    }

    #[test]
    fn controlled_hadamard() {
        let op = Op::Controlled { controls: vec![(1, true)], op: Box::new(Op::H { q: 0 }) };
        assert_eq!(run(&op, 2, 0b00).support(), 1);
        assert_eq!(run(&op, 2, 0b10).support(), 2);
    }

    #[test]
    fn factoradic_ops_are_involutions() {
        // n = 3 digits of widths 2,1,1 (weights 2,1,0), k = 1, out 3 bits
        let digits = vec![vec![0, 1], vec![2], vec![3]];
        let op = Op::FacToComb { digits: digits.clone(), k: 1, out: vec![4, 5, 6] };
        op.validate(7).unwrap();
        // y = (2,1,0) → 001
        let s = run(&op, 7, 0b0000_1_10);
        assert_eq!(single(&s) >> 4, 0b001);
        let mut back = s.clone();
        op.apply(&mut back);
        assert_eq!(single(&back), 0b0000110);
    }
}
