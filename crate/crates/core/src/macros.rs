//! Gate library: fanout, boolean and arithmetic macros, counting gates, QFT
//! and parallelization of commuting gates.
//!
//! Pure fragment builders take any scratch qubits they need explicitly and
//! leave them in |0⟩. The `emit_*` functions append to a [`Builder`] and
//! allocate scratch there.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{LaqccError, Result};
use crate::gf2::BitMatrix;
use crate::program::{inverse_fragment, Builder, ClassicalFn, DepthClass, Fragment, Op};
use crate::state::{scatter, SparseState};

/// How a macro is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Direct basis-state map, charged from the table.
    Semantic,
    /// Measurement-based construction from one- and two-qubit gates.
    Gadget,
}

fn disjoint(groups: &[&[usize]]) -> Result<()> {
    let mut seen = HashSet::new();
    for g in groups {
        for &q in *g {
            if !seen.insert(q) {
                return Err(LaqccError::Validation(format!("register overlap on qubit {q}")));
            }
        }
    }
    Ok(())
}

/// Width of a counter holding `0..=n`.
pub fn count_width(n: u64) -> usize {
    (64 - n.leading_zeros() as usize).max(1)
}

pub fn fanout(control: usize, targets: &[usize]) -> Result<Fragment> {
    disjoint(&[&[control], targets])?;
    Ok(vec![Op::Fanout { control, targets: targets.to_vec() }])
}

/// Appends a fanout. The gadget form uses one round: a cat state made from
/// parity measurements, a measured link to the control, and a Pauli frame
/// fixed by one classical layer. All ancillas are reset.
pub fn emit_fanout(b: &mut Builder, backend: Backend, control: usize, targets: &[usize]) -> Result<()> {
    emit_fanouts(b, backend, &[(control, targets.to_vec())])
}

/// Several fanouts acting side by side. Gadget ancillas are allocated up
/// front so no two gadgets share scratch qubits.
pub fn emit_fanouts(b: &mut Builder, backend: Backend, fanouts: &[(usize, Vec<usize>)]) -> Result<()> {
    let mut all: Vec<&[usize]> = Vec::new();
    let controls: Vec<usize> = fanouts.iter().map(|f| f.0).collect();
    all.push(&controls);
    all.extend(fanouts.iter().map(|f| f.1.as_slice()));
    disjoint(&all)?;
    if backend == Backend::Semantic {
        for (control, targets) in fanouts.iter().filter(|f| !f.1.is_empty()) {
            b.op(Op::Fanout { control: *control, targets: targets.clone() });
        }
        return Ok(());
    }
    let anc: Vec<(Vec<usize>, Vec<usize>)> = fanouts
        .iter()
        .map(|(_, t)| {
            let m = t.len();
            if m == 0 {
                (vec![], vec![])
            } else {
                (b.alloc_scratch(m + 1), b.alloc_scratch(m))
            }
        })
        .collect();
    for ((control, targets), (cat, par)) in fanouts.iter().zip(&anc) {
        if !targets.is_empty() {
            fanout_gadget(b, *control, targets, cat, par)?;
        }
    }
    for (cat, par) in &anc {
        b.release(cat);
        b.release(par);
    }
    Ok(())
}

fn fanout_gadget(b: &mut Builder, control: usize, targets: &[usize], cat: &[usize], par: &[usize]) -> Result<()> {
    let m = targets.len();
    let mut labels = Vec::with_capacity(2 * m + 1);
    b.op(Op::H { q: cat[0] });
    b.op(Op::Cnot { control: cat[0], target: par[0] });
    for j in 1..=m {
        b.op(Op::H { q: cat[j] });
        if j < m {
            b.op(Op::Cnot { control: cat[j], target: par[j] });
        }
        b.op(Op::Cnot { control: cat[j], target: par[j - 1] });
        labels.push(b.measure(&[par[j - 1]], "fan_p"));
    }
    b.op(Op::Cnot { control, target: cat[0] });
    labels.push(b.measure(&[cat[0]], "fan_s"));
    for (i, &t) in targets.iter().enumerate() {
        b.op(Op::Cnot { control: cat[i + 1], target: t });
        b.op(Op::H { q: cat[i + 1] });
    }
    for i in 1..=m {
        labels.push(b.measure(&[cat[i]], "fan_r"));
    }
    // inputs: parities 0..m, link bit m, X-basis bits m+1..=2m
    let cols = 2 * m + 1;
    let mut rows = Vec::with_capacity(3 * m + 2);
    for i in 0..m {
        let mut r = vec![false; cols];
        r[m] = true;
        r[..=i].iter_mut().for_each(|v| *v = true);
        rows.push(r);
    }
    let mut z = vec![false; cols];
    z[m + 1..].iter_mut().for_each(|v| *v = true);
    rows.push(z);
    for c in 0..cols {
        let mut r = vec![false; cols];
        r[c] = true;
        rows.push(r);
    }
    let out = b.classical(ClassicalFn::Linear { matrix: BitMatrix::from_rows(&rows)? }, &labels, "fan_c", DepthClass::Nc1);
    for (i, &t) in targets.iter().enumerate() {
        b.conditional(Op::X { q: t }, &out, i);
    }
    b.conditional(Op::Z { q: control }, &out, m);
    for (j, &q) in par.iter().enumerate() {
        b.conditional(Op::X { q }, &out, m + 1 + j);
    }
    for (i, &q) in cat.iter().enumerate() {
        b.conditional(Op::X { q }, &out, 2 * m + 1 + i);
    }
    Ok(())
}

pub fn or_n(inputs: &[usize], out: usize) -> Result<Fragment> {
    disjoint(&[inputs, &[out]])?;
    Ok(vec![Op::Or { inputs: inputs.to_vec(), out }])
}

pub fn and_n(inputs: &[usize], out: usize) -> Result<Fragment> {
    disjoint(&[inputs, &[out]])?;
    Ok(vec![Op::And { inputs: inputs.to_vec(), out }])
}

/// Flags `inputs == value`.
pub fn equal(inputs: &[usize], value: u64, out: usize) -> Result<Fragment> {
    disjoint(&[inputs, &[out]])?;
    if inputs.len() < 64 && value >> inputs.len() != 0 {
        return Ok(vec![]);
    }
    Ok(vec![Op::Equal { inputs: inputs.to_vec(), value, out }])
}

/// Flags the all-zero string: OR with a negated output.
pub fn exact_zero(inputs: &[usize], out: usize) -> Result<Fragment> {
    let mut f = or_n(inputs, out)?;
    f.push(Op::X { q: out });
    Ok(f)
}

/// `y ← y + x mod 2^n`.
pub fn add(x: &[usize], y: &[usize]) -> Result<Fragment> {
    disjoint(&[x, y])?;
    if x.len() != y.len() {
        return Err(LaqccError::DimensionMismatch(x.len(), y.len()));
    }
    Ok(vec![Op::Add { x: x.to_vec(), y: y.to_vec() }])
}

/// Subtract, test for zero, add back.
pub fn equality(x: &[usize], y: &[usize], out: usize) -> Result<Fragment> {
    disjoint(&[x, y, &[out]])?;
    if x.len() != y.len() {
        return Err(LaqccError::DimensionMismatch(x.len(), y.len()));
    }
    Ok(vec![
        Op::Sub { x: x.to_vec(), y: y.to_vec() },
        Op::Equal { inputs: y.to_vec(), value: 0, out },
        Op::Add { x: x.to_vec(), y: y.to_vec() },
    ])
}

/// Flags `x > y`: `y − x` modulo `2^(n+1)` with `high` as the extra top bit
/// of `y`, whose value is the flag. `high` starts and ends in |0⟩.
pub fn greaterthan(x: &[usize], y: &[usize], high: usize, out: usize) -> Result<Fragment> {
    disjoint(&[x, y, &[high], &[out]])?;
    if x.len() != y.len() {
        return Err(LaqccError::DimensionMismatch(x.len(), y.len()));
    }
    let mut wide = y.to_vec();
    wide.push(high);
    Ok(vec![
        Op::Sub { x: x.to_vec(), y: wide.clone() },
        Op::Cnot { control: high, target: out },
        Op::Add { x: x.to_vec(), y: wide },
    ])
}

/// `out ← out ⊕ |x|`; `out` must have `count_width(n)` qubits.
pub fn hamming_weight(x: &[usize], out: &[usize]) -> Result<Fragment> {
    disjoint(&[x, out])?;
    if out.len() != count_width(x.len() as u64) {
        return Err(LaqccError::DimensionMismatch(out.len(), count_width(x.len() as u64)));
    }
    Ok(vec![Op::HammingWeight { x: x.to_vec(), out: out.to_vec() }])
}

pub fn exact_scratch(n: usize) -> usize {
    count_width(n as u64)
}

/// Flags `|x| = t`; constant 0 when `t > n`.
pub fn exact(x: &[usize], t: usize, out: usize, scratch: &[usize]) -> Result<Fragment> {
    disjoint(&[x, &[out], scratch])?;
    if t > x.len() {
        return Ok(vec![]);
    }
    let cnt = &scratch[..exact_scratch(x.len())];
    let hw = hamming_weight(x, cnt)?;
    let mut f = hw.clone();
    f.push(Op::Equal { inputs: cnt.to_vec(), value: t as u64, out });
    f.extend(hw);
    Ok(f)
}

/// Counter plus one flag per weight `t..=n`.
pub fn threshold_scratch(n: usize, t: usize) -> usize {
    count_width(n as u64) + (n + 1).saturating_sub(t)
}

/// Flags `|x| ≥ t` as the OR of the exact-weight flags.
pub fn threshold(x: &[usize], t: usize, out: usize, scratch: &[usize]) -> Result<Fragment> {
    disjoint(&[x, &[out], scratch])?;
    let n = x.len();
    if t == 0 {
        return Ok(vec![Op::X { q: out }]);
    }
    if t > n {
        return Ok(vec![]);
    }
    let w = count_width(n as u64);
    let (cnt, flags) = scratch[..threshold_scratch(n, t)].split_at(w);
    let mut compute = hamming_weight(x, cnt)?;
    for (j, &f) in (t..=n).zip(flags) {
        compute.push(Op::Equal { inputs: cnt.to_vec(), value: j as u64, out: f });
    }
    let mut frag = compute.clone();
    frag.push(Op::Or { inputs: flags.to_vec(), out });
    frag.extend(inverse_fragment(&compute));
    Ok(frag)
}

/// Rejects weights that are negative or not integers.
pub fn integer_weights(weights: &[f64]) -> Result<Vec<u64>> {
    weights
        .iter()
        .map(|&w| {
            if w >= 0.0 && w.fract() == 0.0 && w < 2f64.powi(52) {
                Ok(w as u64)
            } else {
                Err(LaqccError::Validation(format!("weight {w} is not a non-negative integer")))
            }
        })
        .collect()
}

/// `sum ← sum + Σ w_i x_i mod 2^|sum|`, by controlled phase rotations in the
/// Fourier basis of `sum`.
pub fn weighted_sum(x: &[usize], weights: &[u64], sum: &[usize]) -> Result<Fragment> {
    disjoint(&[x, sum])?;
    if weights.len() != x.len() {
        return Err(LaqccError::DimensionMismatch(weights.len(), x.len()));
    }
    let s = sum.len();
    let mut f = vec![Op::Qft { reg: sum.to_vec(), inverse: false }];
    for (&xi, &w) in x.iter().zip(weights) {
        for (bit, &q) in sum.iter().enumerate() {
            let theta = 2.0 * PI * ((w as u128 * (1u128 << bit)) % (1u128 << s)) as f64 / (1u128 << s) as f64;
            if theta != 0.0 {
                f.push(Op::Controlled { controls: vec![(xi, true)], op: Box::new(Op::Phase { q, theta }) });
            }
        }
    }
    f.push(Op::Qft { reg: sum.to_vec(), inverse: true });
    Ok(f)
}

pub fn weighted_threshold_scratch(weights: &[u64], t: u64) -> usize {
    let total: u64 = weights.iter().sum();
    count_width(total) + (total + 1).saturating_sub(t) as usize
}

/// Flags `Σ w_i x_i ≥ t` for non-negative integer weights.
pub fn weighted_threshold(x: &[usize], weights: &[u64], t: u64, out: usize, scratch: &[usize]) -> Result<Fragment> {
    disjoint(&[x, &[out], scratch])?;
    let total: u64 = weights.iter().sum();
    if t == 0 {
        return Ok(vec![Op::X { q: out }]);
    }
    if t > total {
        return Ok(vec![]);
    }
    let w = count_width(total);
    let (sum, flags) = scratch[..weighted_threshold_scratch(weights, t)].split_at(w);
    let mut compute = weighted_sum(x, weights, sum)?;
    for (j, &f) in (t..=total).zip(flags) {
        compute.push(Op::Equal { inputs: sum.to_vec(), value: j, out: f });
    }
    let mut frag = compute.clone();
    frag.push(Op::Or { inputs: flags.to_vec(), out });
    frag.extend(inverse_fragment(&compute));
    Ok(frag)
}

pub fn qft(reg: &[usize]) -> Fragment {
    vec![Op::Qft { reg: reg.to_vec(), inverse: false }]
}

/// Permutation of equal-width registers by relabeling.
pub fn permute(registers: &[Vec<usize>], perm: &[usize]) -> Result<Fragment> {
    let refs: Vec<&[usize]> = registers.iter().map(|r| r.as_slice()).collect();
    disjoint(&refs)?;
    Ok(vec![Op::Permute { registers: registers.to_vec(), perm: perm.to_vec() }])
}

/// Appends a fragment that needs `n` scratch qubits.
pub fn emit_with_scratch<F>(b: &mut Builder, n: usize, build: F) -> Result<()>
where
    F: FnOnce(&[usize]) -> Result<Fragment>,
{
    let s = b.alloc_scratch(n);
    let f = build(&s)?;
    b.ops(f);
    b.release(&s);
    Ok(())
}

/// Dense matrix of a fragment restricted to `qubits`; entry `[row][col]`,
/// with bit `b` of an index on `qubits[b]`.
pub fn dense_matrix(fragment: &[Op], qubits: &[usize]) -> Result<Vec<Vec<C64>>> {
    let width = fragment.iter().flat_map(|op| op.qubits()).chain(qubits.iter().copied()).max().map_or(0, |m| m + 1);
    let dim = 1usize << qubits.len();
    let mut m = vec![vec![C64::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let mut s = SparseState::basis(width, scatter(0, qubits, col as u128))?;
        for op in fragment {
            op.validate(width)?;
            op.apply(&mut s);
        }
        for (row, r) in m.iter_mut().enumerate() {
            r[col] = s.amplitude(scatter(0, qubits, row as u128));
        }
    }
    Ok(m)
}

fn mat_mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

fn dagger(a: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].conj()).collect()).collect()
}

/// Gates that share an eigenbasis: `U_i = T† · diag(exp(i·phases_i)) · T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutingSet {
    pub target: Vec<usize>,
    pub phases: Vec<Vec<f64>>,
    /// `T`, acting on `target`.
    pub diagonalizer: Fragment,
}

/// Largest target block whose commutation is checked densely.
pub const MAX_COMMUTING_BLOCK: usize = 3;

/// Diagonalizes each gate with `T` and rejects any that `T` does not
/// diagonalize.
pub fn commuting_set(target: &[usize], gates: &[Vec<Vec<C64>>], diagonalizer: Fragment) -> Result<CommutingSet> {
    if target.len() > MAX_COMMUTING_BLOCK {
        return Err(LaqccError::Validation(format!("target block wider than {MAX_COMMUTING_BLOCK} qubits")));
    }
    let dim = 1usize << target.len();
    let t = dense_matrix(&diagonalizer, target)?;
    let td = dagger(&t);
    let mut phases = Vec::with_capacity(gates.len());
    for (gi, g) in gates.iter().enumerate() {
        if g.len() != dim || g.iter().any(|r| r.len() != dim) {
            return Err(LaqccError::DimensionMismatch(g.len(), dim));
        }
        let d = mat_mul(&mat_mul(&t, g), &td);
        let mut ph = Vec::with_capacity(dim);
        for (i, row) in d.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j && v.norm() > 1e-9 {
                    return Err(LaqccError::NonCommuting(format!("gate {gi} is not diagonal in the given basis")));
                }
            }
            if (row[i].norm() - 1.0).abs() > 1e-9 {
                return Err(LaqccError::NonCommuting(format!("gate {gi} is not unitary")));
            }
            ph.push(row[i].arg());
        }
        phases.push(ph);
    }
    Ok(CommutingSet { target: target.to_vec(), phases, diagonalizer })
}

/// The sequential product `Π U_i^{x_i}`, one controlled diagonal at a time.
pub fn sequential_commuting(controls: &[usize], set: &CommutingSet) -> Result<Fragment> {
    disjoint(&[controls, &set.target])?;
    if controls.len() != set.phases.len() {
        return Err(LaqccError::DimensionMismatch(controls.len(), set.phases.len()));
    }
    let mut f = set.diagonalizer.clone();
    for (&c, ph) in controls.iter().zip(&set.phases) {
        f.push(Op::Controlled {
            controls: vec![(c, true)],
            op: Box::new(Op::Diagonal { qubits: set.target.clone(), phases: ph.clone() }),
        });
    }
    f.extend(inverse_fragment(&set.diagonalizer));
    Ok(f)
}

/// Parallel form: in the eigenbasis, fan the target out into one copy per
/// gate, apply every controlled diagonal at once, and fan back in.
pub fn emit_parallel_commuting(b: &mut Builder, backend: Backend, controls: &[usize], set: &CommutingSet) -> Result<()> {
    disjoint(&[controls, &set.target])?;
    let k = controls.len();
    if k != set.phases.len() {
        return Err(LaqccError::DimensionMismatch(k, set.phases.len()));
    }
    if k <= 1 {
        b.ops(sequential_commuting(controls, set)?);
        return Ok(());
    }
    let width = set.target.len();
    let copies = b.alloc_scratch((k - 1) * width);
    let copy = |i: usize| -> Vec<usize> {
        if i == 0 {
            set.target.clone()
        } else {
            copies[(i - 1) * width..i * width].to_vec()
        }
    };
    let spread: Vec<(usize, Vec<usize>)> = set
        .target
        .iter()
        .enumerate()
        .map(|(bit, &q)| (q, (1..k).map(|i| copy(i)[bit]).collect()))
        .collect();
    b.ops(set.diagonalizer.iter().cloned());
    emit_fanouts(b, backend, &spread)?;
    for (i, (&c, ph)) in controls.iter().zip(&set.phases).enumerate() {
        b.op(Op::Controlled {
            controls: vec![(c, true)],
            op: Box::new(Op::Diagonal { qubits: copy(i), phases: ph.clone() }),
        });
    }
    emit_fanouts(b, backend, &spread)?;
    b.ops(inverse_fragment(&set.diagonalizer));
    b.release(&copies);
    Ok(())
}

/// A gate diagonal in the computational basis: phase `exp(i·phases[v])` on
/// basis value `v` of `qubits`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGate {
    pub qubits: Vec<usize>,
    pub phases: Vec<f64>,
}

impl DiagonalGate {
    pub fn op(&self) -> Op {
        Op::Diagonal { qubits: self.qubits.clone(), phases: self.phases.clone() }
    }
}

/// Diagonal gates with overlapping supports applied in one step: every qubit
/// is fanned out to one copy per gate touching it, each gate acts on its own
/// copies, and the copies are fanned back in.
pub fn emit_parallel_diagonals(b: &mut Builder, backend: Backend, gates: &[DiagonalGate]) -> Result<()> {
    let mut uses: BTreeMap<usize, usize> = BTreeMap::new();
    for g in gates {
        disjoint(&[&g.qubits])?;
        if g.phases.len() != 1usize << g.qubits.len() {
            return Err(LaqccError::DimensionMismatch(g.phases.len(), 1usize << g.qubits.len()));
        }
        for &q in &g.qubits {
            *uses.entry(q).or_default() += 1;
        }
    }
    let mut copies: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&q, &u) in &uses {
        copies.insert(q, b.alloc_scratch(u - 1));
    }
    let spread: Vec<(usize, Vec<usize>)> = copies.iter().map(|(&q, c)| (q, c.clone())).collect();
    emit_fanouts(b, backend, &spread)?;
    let mut next: BTreeMap<usize, usize> = uses.keys().map(|&q| (q, 0)).collect();
    for g in gates {
        let qubits = g
            .qubits
            .iter()
            .map(|q| {
                let i = next[q];
                *next.get_mut(q).expect("counted") += 1;
                if i == 0 {
                    *q
                } else {
                    copies[q][i - 1]
                }
            })
            .collect();
        b.op(Op::Diagonal { qubits, phases: g.phases.clone() });
    }
    emit_fanouts(b, backend, &spread)?;
    for c in copies.values() {
        b.release(c);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{execute_from, explore_from, ExploreOptions, Policy, Role};
    use crate::state::{gather, Basis};

    fn run(frag: &[Op], n: usize, input: Basis) -> Basis {
        let mut s = SparseState::basis(n, input).unwrap();
        for op in frag {
            op.apply(&mut s);
        }
        let e = s.entries();
        assert_eq!(e.len(), 1);
        e[0].0
    }

    #[test]
    fn fanout_examples() {
        let f = fanout(0, &[1, 2]).unwrap();
        assert_eq!(run(&f, 3, 0b001), 0b111);
        assert_eq!(run(&f, 3, 0b110), 0b110);
        assert!(fanout(1, &[1, 2]).is_err());
    }

    #[test]
    fn boolean_examples() {
        // qubit i of the register is bit i of the value
        assert_eq!(run(&or_n(&[0, 1, 2], 3).unwrap(), 4, 0b0101) >> 3, 1);
        assert_eq!(run(&and_n(&[0, 1, 2], 3).unwrap(), 4, 0b0111) >> 3, 1);
        assert_eq!(run(&and_n(&[0, 1, 2], 3).unwrap(), 4, 0b0011) >> 3, 0);
        assert_eq!(run(&equal(&[0, 1, 2], 5, 3).unwrap(), 4, 0b0101) >> 3, 1);
        assert_eq!(run(&equal(&[0, 1, 2], 5, 3).unwrap(), 4, 0b0100) >> 3, 0);
        assert_eq!(run(&exact_zero(&[0, 1], 2).unwrap(), 3, 0) >> 2, 1);
        assert!(or_n(&[0, 1], 1).is_err());
    }

    #[test]
    fn arithmetic_examples() {
        let (x, y) = ([0, 1, 2], [3, 4, 5]);
        let v = run(&add(&x, &y).unwrap(), 6, 3 | (5 << 3));
        assert_eq!(gather(v, &y), 0);
        let eq = |a: u128, b: u128| run(&equality(&x, &y, 6).unwrap(), 7, a | (b << 3)) >> 6;
        assert_eq!(eq(6, 6), 1);
        assert_eq!(eq(6, 2), 0);
        let gt = |a: u128, b: u128| {
            let v = run(&greaterthan(&x, &y, 6, 7).unwrap(), 8, a | (b << 3));
            assert_eq!(gather(v, &[0, 1, 2, 3, 4, 5, 6]), a | (b << 3));
            v >> 7
        };
        assert_eq!(gt(5, 3), 1);
        assert_eq!(gt(3, 3), 0);
        assert_eq!(gt(2, 7), 0);
    }

    #[test]
    fn counting_examples() {
        let x = [0, 1, 2, 3];
        // |1011⟩ read left to right as x0..x3
        let v1011 = 0b1101;
        let v0011 = 0b1100;
        let hw = run(&hamming_weight(&x, &[4, 5, 6]).unwrap(), 7, v1011);
        assert_eq!(hw >> 4, 3);
        let s: Vec<usize> = (5..5 + threshold_scratch(4, 2)).collect();
        assert_eq!(run(&exact(&x, 2, 4, &s).unwrap(), 12, v1011) >> 4, 0);
        assert_eq!(run(&exact(&x, 2, 4, &s).unwrap(), 12, v0011) >> 4, 1);
        assert_eq!(run(&threshold(&x, 2, 4, &s).unwrap(), 12, v1011) >> 4, 1);
        assert!(exact(&x, 5, 4, &s).unwrap().is_empty());
        let w = [3, 1, 1, 1];
        let ws: Vec<usize> = (5..5 + weighted_threshold_scratch(&w, 4)).collect();
        let out = run(&weighted_threshold(&x, &w, 4, 4, &ws).unwrap(), 5 + ws.len(), 0b1001);
        assert_eq!(out, 0b1001 | 1 << 4);
        assert!(integer_weights(&[1.5]).is_err());
        assert_eq!(integer_weights(&[2.0, 0.0]).unwrap(), vec![2, 0]);
    }

    #[test]
    fn weighted_sum_adds() {
        let x = [0, 1, 2];
        let sum = [3, 4, 5];
        for v in 0..8u128 {
            let out = run(&weighted_sum(&x, &[1, 2, 3], &sum).unwrap(), 6, v);
            let expect = (0..3).filter(|&i| (v >> i) & 1 == 1).map(|i| [1, 2, 3][i]).sum::<u128>() % 8;
            assert_eq!(gather(out, &sum), expect);
        }
    }

    #[test]
    fn qft_one_qubit_is_hadamard() {
        let m = dense_matrix(&qft(&[0]), &[0]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m[0][0].re - r).abs() < 1e-12 && (m[1][1].re + r).abs() < 1e-12);
    }

    #[test]
    fn gadget_fanout_matches_semantic() {
        for m in 1..=3usize {
            let mut g = Builder::new();
            let q = g.alloc("q", m + 1, Role::System);
            g.op(Op::H { q: q[0] });
            emit_fanout(&mut g, Backend::Gadget, q[0], &q[1..]).unwrap();
            let p = g.finish().unwrap();
            assert_eq!(crate::program::resources(&p).rounds, 1);
            let target =
                SparseState::uniform(m + 1, [0, (1u128 << (m + 1)) - 1]).unwrap();
            let opts = ExploreOptions { merge: false, ..ExploreOptions::default() };
            let ex = explore_from(&p, SparseState::zero(p.qubits).unwrap(), &opts).unwrap();
            assert_eq!(ex.leaves.len(), 1 << (2 * m + 1));
            for l in &ex.leaves {
                let (sub, rest) = l.state.extract(&q).unwrap();
                assert_eq!(rest, 0);
                assert!(sub.fidelity(&target).unwrap() > 1.0 - 1e-9);
            }
        }
    }

    fn cz_block() -> Vec<Vec<C64>> {
        let mut m = vec![vec![C64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            m[i][i] = C64::new(if i == 3 { -1.0 } else { 1.0 }, 0.0);
        }
        m
    }

    #[test]
    fn parallel_commuting_equals_sequential() {
        // two controlled-CZ gates sharing a target pair, disjoint controls
        let set = commuting_set(&[2, 3], &[cz_block(), cz_block()], vec![]).unwrap();
        let seq = sequential_commuting(&[0, 1], &set).unwrap();
        for backend in [Backend::Semantic, Backend::Gadget] {
            let mut b = Builder::new();
            b.alloc("q", 4, Role::System);
            emit_parallel_commuting(&mut b, backend, &[0, 1], &set).unwrap();
            let p = b.finish().unwrap();
            for v in 0..16u128 {
                let mut want = SparseState::basis(4, v).unwrap();
                let h = |s: SparseState| {
                    let mut s = s;
                    for q in 0..4 {
                        Op::H { q }.apply(&mut s);
                    }
                    s
                };
                want = h(want);
                let input = want.with_extra_qubits(p.qubits - 4).unwrap();
                for op in &seq {
                    op.apply(&mut want);
                }
                let ex = explore_from(&p, input, &ExploreOptions { merge: false, ..Default::default() }).unwrap();
                for l in &ex.leaves {
                    let (sub, rest) = l.state.extract(&[0, 1, 2, 3]).unwrap();
                    assert_eq!(rest, 0);
                    assert!(sub.fidelity(&want).unwrap() > 1.0 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn non_commuting_is_rejected() {
        let h = crate::state::gates::h();
        let hm = vec![vec![h[0][0], h[0][1]], vec![h[1][0], h[1][1]]];
        let z = vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]];
        assert!(matches!(commuting_set(&[1], &[z.clone(), hm.clone()], vec![]), Err(LaqccError::NonCommuting(_))));
        // both diagonal after a Hadamard
        let x = vec![vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];
        assert!(commuting_set(&[1], &[x.clone(), x], vec![Op::H { q: 1 }]).is_ok());
    }

    #[test]
    fn single_gate_passthrough() {
        let set = commuting_set(&[1], &[cz_block()[..2].iter().map(|r| r[..2].to_vec()).collect()], vec![]).unwrap();
        let mut b = Builder::new();
        b.alloc("q", 2, Role::System);
        emit_parallel_commuting(&mut b, Backend::Gadget, &[0], &set).unwrap();
        assert_eq!(b.num_qubits(), 2);
        let p = b.finish().unwrap();
        let out = execute_from(&p, SparseState::basis(2, 3).unwrap(), &Policy::Seeded(0)).unwrap();
        assert_eq!(out.state.entries()[0].0, 3);
    }
}
