//! State-preparation protocols: uniform superpositions, W and Dicke states,
//! GHZ, and the embedding of IQP circuits.
//!
//! Every protocol returns a [`Prepared`] holding the program, the qubits that
//! carry the output, and the analytic target on those qubits.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplifier::{amplify, plan, AmplificationPlan};
use crate::clifford::{ghz, ghz_target};
use crate::error::{LaqccError, Result};
use crate::macros::{count_width, emit_fanouts, emit_parallel_diagonals, exact, greaterthan, Backend, DiagonalGate};
use crate::numbersys::weight_k_strings;
use crate::program::{
    execute, inverse_fragment, Builder, ClassicalFn, DepthClass, Fragment, Op, Policy, Program, Role,
};
use crate::state::{gather, SparseState};

/// A protocol and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ProtocolSpec {
    UniformQ { q: u64 },
    WState { n: usize },
    DickeSmallK { n: usize, k: usize },
    DickeFactoradic { n: usize, k: usize },
    Ghz { n: usize },
    Iqp { circuit: IqpCircuit },
}

impl ProtocolSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolSpec::UniformQ { .. } => "uniform_q",
            ProtocolSpec::WState { .. } => "w_state",
            ProtocolSpec::DickeSmallK { .. } => "dicke_small_k",
            ProtocolSpec::DickeFactoradic { .. } => "dicke_factoradic",
            ProtocolSpec::Ghz { .. } => "ghz",
            ProtocolSpec::Iqp { .. } => "iqp",
        }
    }

    /// Checks the parameter ranges, including the small-k policy bound.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProtocolSpec::UniformQ { q } if q == 0 => Err(LaqccError::Validation("q must be at least 1".into())),
            ProtocolSpec::UniformQ { q } if q > 1 << 20 => {
                Err(LaqccError::Infeasible(format!("q = {q} exceeds the simulated range")))
            }
            ProtocolSpec::WState { n } | ProtocolSpec::Ghz { n } if n < 2 => {
                Err(LaqccError::Validation("n must be at least 2".into()))
            }
            ProtocolSpec::DickeSmallK { n, k } => {
                if n < 2 {
                    return Err(LaqccError::Validation("n must be at least 2".into()));
                }
                let bound = small_k_bound(n);
                if k == 0 || k > bound {
                    return Err(LaqccError::Infeasible(format!(
                        "small-k Dicke needs 1 <= k <= ceil(sqrt({n})) = {bound}, got k = {k}; use the factoradic method"
                    )));
                }
                Ok(())
            }
            ProtocolSpec::DickeFactoradic { n, k } => {
                if n == 0 || k > n {
                    return Err(LaqccError::Validation(format!("need 0 <= k <= n and n >= 1, got n = {n}, k = {k}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn target(&self) -> Result<SparseState> {
        self.validate()?;
        match self {
            ProtocolSpec::UniformQ { q } => uniform_target(*q),
            ProtocolSpec::WState { n } => w_target(*n),
            ProtocolSpec::DickeSmallK { n, k } | ProtocolSpec::DickeFactoradic { n, k } => dicke_target(*n, *k),
            ProtocolSpec::Ghz { n } => ghz_target(*n),
            ProtocolSpec::Iqp { circuit } => circuit.simulate(),
        }
    }

    /// Builds the program. `backend` selects how fanouts outside amplified
    /// blocks are realized.
    pub fn build(&self, backend: Backend) -> Result<Prepared> {
        self.validate()?;
        match self {
            ProtocolSpec::UniformQ { q } => uniform_superposition(*q),
            ProtocolSpec::WState { n } => w_state(*n, backend),
            ProtocolSpec::DickeSmallK { n, k } => dicke_small_k(*n, *k, backend),
            ProtocolSpec::DickeFactoradic { n, k } => dicke_factoradic(*n, *k),
            ProtocolSpec::Ghz { n } => ghz_state(*n),
            ProtocolSpec::Iqp { circuit } => iqp_to_laqcc(circuit, backend),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub spec: ProtocolSpec,
    pub program: Program,
    pub outputs: Vec<usize>,
    pub target: SparseState,
    /// Amplification plans used, outermost last.
    pub plans: Vec<AmplificationPlan>,
}

/// One nonzero amplitude of a target state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    pub index: String,
    pub re: f64,
    pub im: f64,
}

/// Nonzero amplitudes in ascending index order.
pub fn amplitudes(state: &SparseState) -> Vec<Amplitude> {
    let mut e = state.entries();
    e.sort_by_key(|(i, _)| *i);
    e.into_iter().map(|(i, a)| Amplitude { index: i.to_string(), re: a.re, im: a.im }).collect()
}

fn bit_len(v: u64) -> usize {
    (64 - v.leading_zeros()) as usize
}

/// `⌈√n⌉`.
pub fn small_k_bound(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

pub fn uniform_target(q: u64) -> Result<SparseState> {
    if q == 0 {
        return Err(LaqccError::Validation("q must be at least 1".into()));
    }
    SparseState::uniform(uniform_width(q).max(1), 0..q as u128)
}

pub fn w_target(n: usize) -> Result<SparseState> {
    SparseState::uniform(n, (0..n).map(|i| 1u128 << i))
}

pub fn dicke_target(n: usize, k: usize) -> Result<SparseState> {
    SparseState::uniform(n, weight_k_strings(n, k))
}

/// Register width `⌈log₂ q⌉`; zero for `q = 1`.
pub fn uniform_width(q: u64) -> usize {
    bit_len(q.saturating_sub(1))
}

/// Scratch for [`uniform_fragment`]: a constant register holding `q`, the
/// comparator's top bit, the oracle flag and the zero-reflection flag.
pub fn uniform_scratch(q: u64) -> usize {
    if q.is_power_of_two() {
        0
    } else {
        uniform_width(q) + 3
    }
}

pub fn uniform_plan(q: u64) -> Result<Option<AmplificationPlan>> {
    if q == 0 {
        return Err(LaqccError::Validation("q must be at least 1".into()));
    }
    if q.is_power_of_two() {
        return Ok(None);
    }
    plan(1u64 << uniform_width(q), q).map(Some)
}

/// Unitary taking `reg` from |0⟩ to the uniform superposition over `0..q`.
/// Powers of two need only Hadamards; otherwise the Hadamard state is
/// amplified onto the values below `q`, flagged by comparing against a
/// constant register.
pub fn uniform_fragment(reg: &[usize], q: u64, scratch: &[usize]) -> Result<Fragment> {
    let l = uniform_width(q);
    if reg.len() != l {
        return Err(LaqccError::DimensionMismatch(reg.len(), l));
    }
    let prep: Fragment = reg.iter().map(|&q| Op::H { q }).collect();
    let Some(p) = uniform_plan(q)? else {
        return Ok(prep);
    };
    if scratch.len() < l + 3 {
        return Err(LaqccError::DimensionMismatch(scratch.len(), l + 3));
    }
    let (constant, rest) = scratch.split_at(l);
    let (high, flag, zero_flag) = (rest[0], rest[1], rest[2]);
    let load: Fragment = constant.iter().enumerate().filter(|(b, _)| (q >> b) & 1 == 1).map(|(_, &q)| Op::X { q }).collect();
    let oracle = greaterthan(constant, reg, high, flag)?;
    let mut f = load.clone();
    f.extend(amplify(&prep, reg, &oracle, flag, zero_flag, &p)?);
    f.extend(load);
    Ok(f)
}

/// Uniform superpositions on several registers side by side, each with its
/// own scratch. With `inverse` the maps are undone instead.
pub fn emit_uniforms(b: &mut Builder, jobs: &[(Vec<usize>, u64)], inverse: bool) -> Result<()> {
    let scratch: Vec<Vec<usize>> = jobs.iter().map(|(_, q)| b.alloc_scratch(uniform_scratch(*q))).collect();
    for ((reg, q), s) in jobs.iter().zip(&scratch) {
        let f = uniform_fragment(reg, *q, s)?;
        b.ops(if inverse { inverse_fragment(&f) } else { f });
    }
    for s in &scratch {
        b.release(s);
    }
    Ok(())
}

pub fn uniform_superposition(q: u64) -> Result<Prepared> {
    let spec = ProtocolSpec::UniformQ { q };
    spec.validate()?;
    let mut b = Builder::new();
    let out = b.alloc("uniform", uniform_width(q).max(1), Role::System);
    if q > 1 {
        emit_uniforms(&mut b, &[(out.clone(), q)], false)?;
    }
    Ok(Prepared {
        target: uniform_target(q)?,
        plans: uniform_plan(q)?.into_iter().collect(),
        program: b.finish()?,
        outputs: out,
        spec,
    })
}

fn bits_of(v: usize) -> impl Iterator<Item = usize> {
    (0..usize::BITS as usize).filter(move |b| (v >> b) & 1 == 1)
}

/// W state: a uniform index over `0..n`, one-hot decoded into the system
/// register through fanned-out index copies (uncompress), then erased by
/// cancelling its phase-space image against the system bits (compress).
pub fn w_state(n: usize, backend: Backend) -> Result<Prepared> {
    let spec = ProtocolSpec::WState { n };
    spec.validate()?;
    let l = uniform_width(n as u64);
    let mut b = Builder::new();
    let sys = b.alloc("w", n, Role::System);
    let index = b.alloc("index", l, Role::Ancilla);
    let mut copies = vec![index.clone()];
    copies.extend((1..n).map(|_| b.alloc("index_copy", l, Role::Ancilla)));
    let spread: Vec<(usize, Vec<usize>)> =
        (0..l).map(|bit| (index[bit], copies[1..].iter().map(|c| c[bit]).collect())).collect();

    emit_uniforms(&mut b, &[(index.clone(), n as u64)], false)?;
    // uncompress
    emit_fanouts(&mut b, backend, &spread)?;
    for (i, c) in copies.iter().enumerate() {
        b.op(Op::Equal { inputs: c.clone(), value: i as u64, out: sys[i] });
    }
    emit_fanouts(&mut b, backend, &spread)?;
    // compress
    b.ops(index.iter().map(|&q| Op::H { q }));
    emit_fanouts(&mut b, backend, &spread)?;
    for (i, c) in copies.iter().enumerate() {
        for bit in bits_of(i) {
            b.op(Op::Cz { a: c[bit], b: sys[i] });
        }
    }
    emit_fanouts(&mut b, backend, &spread)?;
    b.ops(index.iter().map(|&q| Op::H { q }));

    Ok(Prepared {
        target: w_target(n)?,
        plans: uniform_plan(n as u64)?.into_iter().collect(),
        program: b.finish()?,
        outputs: sys,
        spec,
    })
}

/// Scratch used by the filling step.
struct Filling {
    sys_copies: Vec<Vec<usize>>,
    index_copies: Vec<Vec<Vec<usize>>>,
    flags: Vec<Vec<usize>>,
    uniform: Vec<Vec<usize>>,
}

impl Filling {
    fn alloc(b: &mut Builder, n: usize, k: usize, l: usize) -> Self {
        Self {
            sys_copies: (1..k).map(|_| b.alloc_scratch(n)).collect(),
            index_copies: (0..k).map(|_| (1..n).map(|_| b.alloc_scratch(l)).collect()).collect(),
            flags: (0..k).map(|_| b.alloc_scratch(n)).collect(),
            uniform: (0..k).map(|_| b.alloc_scratch(uniform_scratch(n as u64))).collect(),
        }
    }

    fn release(&self, b: &mut Builder) {
        let all = self.sys_copies.iter().chain(self.index_copies.iter().flatten()).chain(&self.flags).chain(&self.uniform);
        for r in all {
            b.release(r);
        }
    }
}

fn fanout_ops(spread: &[(usize, Vec<usize>)]) -> Fragment {
    spread.iter().filter(|(_, t)| !t.is_empty()).map(|(c, t)| Op::Fanout { control: *c, targets: t.clone() }).collect()
}

/// `Σ_{j₁…j_k} |j₁⟩…|j_k⟩ |e_{j₁} ⊕ … ⊕ e_{j_k}⟩ / n^{k/2}` from |0⟩. The
/// system register goes to the Hadamard state, is copied once per index
/// register, picks up `(-1)^{l_{j_i}}` from each pair, is uncopied and
/// decoded by Hadamards.
fn filling_fragment(sys: &[usize], index: &[Vec<usize>], s: &Filling) -> Result<Fragment> {
    let n = sys.len();
    let mut f = Fragment::new();
    for (reg, scratch) in index.iter().zip(&s.uniform) {
        f.extend(uniform_fragment(reg, n as u64, scratch)?);
    }
    f.extend(sys.iter().map(|&q| Op::H { q }));
    let sys_spread: Vec<(usize, Vec<usize>)> =
        (0..n).map(|c| (sys[c], s.sys_copies.iter().map(|r| r[c]).collect())).collect();
    f.extend(fanout_ops(&sys_spread));
    for (i, reg) in index.iter().enumerate() {
        let target = if i == 0 { sys } else { &s.sys_copies[i - 1][..] };
        let copies = &s.index_copies[i];
        let spread: Vec<(usize, Vec<usize>)> =
            (0..reg.len()).map(|bit| (reg[bit], copies.iter().map(|c| c[bit]).collect())).collect();
        f.extend(fanout_ops(&spread));
        for c in 0..n {
            let inputs = if c == 0 { reg.clone() } else { copies[c - 1].clone() };
            let flag = s.flags[i][c];
            let test = Op::Equal { inputs, value: c as u64, out: flag };
            f.push(test.clone());
            f.push(Op::Cz { a: flag, b: target[c] });
            f.push(test);
        }
        f.extend(fanout_ops(&spread));
    }
    f.extend(fanout_ops(&sys_spread));
    f.extend(sys.iter().map(|&q| Op::H { q }));
    Ok(f)
}

/// Plan for lifting the filled state onto distinct indices, with good
/// fraction `n!/((n-k)!·n^k)`.
pub fn filtering_plan(n: usize, k: usize) -> Result<AmplificationPlan> {
    let ambient = (n as u64).checked_pow(k as u32).ok_or_else(|| LaqccError::Infeasible("n^k overflows".into()))?;
    let good: u64 = (0..k as u64).map(|i| n as u64 - i).product();
    plan(ambient, good)
}

/// Probability that the filled system register has weight `k`, read off a
/// simulation of the filling step alone.
pub fn filling_good_probability(n: usize, k: usize) -> Result<f64> {
    let mut b = Builder::new();
    let sys = b.alloc("dicke", n, Role::System);
    let l = uniform_width(n as u64);
    let index: Vec<Vec<usize>> = (0..k).map(|_| b.alloc("index", l, Role::Ancilla)).collect();
    let s = Filling::alloc(&mut b, n, k, l);
    b.ops(filling_fragment(&sys, &index, &s)?);
    let run = execute(&b.finish()?, &Policy::Seeded(0))?;
    Ok(run
        .state
        .iter()
        .filter(|(i, _)| gather(**i, &sys).count_ones() as usize == k)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Permutations of `0..k` in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..k {
        for rest in permutations(k - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|v| if v >= first { v + 1 } else { v }));
            out.push(p);
        }
    }
    out
}

/// Sorts the index registers: compares every ordered pair on fanned-out
/// copies, counts each register's wins, measures the counts and permutes the
/// registers into ascending order. One feed-forward round.
fn emit_ordering(b: &mut Builder, backend: Backend, index: &[Vec<usize>]) -> Result<()> {
    let k = index.len();
    let l = index[0].len();
    let w = count_width((k - 1) as u64);
    // copies[i][0..k-1] act as the left operand, copies[i][k-1..] as the right
    let copies: Vec<Vec<Vec<usize>>> = (0..k).map(|_| (0..2 * (k - 1)).map(|_| b.alloc_scratch(l)).collect()).collect();
    let wins: Vec<Vec<usize>> = (0..k).map(|_| b.alloc_scratch(k - 1)).collect();
    let highs: Vec<Vec<usize>> = (0..k).map(|_| b.alloc_scratch(k - 1)).collect();
    let rank: Vec<Vec<usize>> = (0..k).map(|_| b.alloc_scratch(w)).collect();
    let spread: Vec<(usize, Vec<usize>)> = (0..k)
        .flat_map(|i| (0..l).map(move |bit| (i, bit)))
        .map(|(i, bit)| (index[i][bit], copies[i].iter().map(|c| c[bit]).collect()))
        .collect();
    let slot = |i: usize, other: usize| if other < i { other } else { other - 1 };
    let mut compare = Fragment::new();
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            let s = slot(i, j);
            compare.extend(greaterthan(&copies[i][s], &copies[j][k - 1 + slot(j, i)], highs[i][s], wins[i][s])?);
        }
    }
    let count: Fragment = (0..k).map(|i| Op::HammingWeight { x: wins[i].clone(), out: rank[i].clone() }).collect();

    emit_fanouts(b, backend, &spread)?;
    b.ops(compare.iter().cloned());
    b.ops(count.iter().cloned());
    let ranks = b.measure(&rank.concat(), "rank");
    b.ops(count);
    b.ops(compare);
    emit_fanouts(b, backend, &spread)?;

    let perms = permutations(k);
    let mask = (1usize << w) - 1;
    let table: Vec<u64> = (0..1usize << (k * w))
        .map(|v| {
            let r: Vec<usize> = (0..k).map(|i| (v >> (i * w)) & mask).collect();
            perms.iter().position(|p| *p == r).map_or(0, |pi| 1u64 << pi)
        })
        .collect();
    let order = b.classical(
        ClassicalFn::Table { input_bits: k * w, output_bits: perms.len(), table },
        &[ranks],
        "order",
        DepthClass::Nc1,
    );
    for (pi, p) in perms.iter().enumerate() {
        if p.iter().enumerate().all(|(i, &v)| i == v) {
            continue;
        }
        b.conditional(Op::Permute { registers: index.to_vec(), perm: p.clone() }, &order, pi);
    }
    for r in copies.iter().flatten().chain(&wins).chain(&highs).chain(&rank) {
        b.release(r);
    }
    Ok(())
}

/// Erases sorted index registers. The `m`-th one of the system register sits
/// at the position `p` whose prefix weight `|x[0..p]|` is `m`; a flag marks
/// each such `(p, m)`. The semantic form XORs `p` into register `m` under the
/// flag. The gadget form moves register `m` to phase space, fans it out to one
/// copy per position, kicks `(-1)^{u·p}` from the flags, and undoes the rest.
fn emit_cleaning(b: &mut Builder, backend: Backend, sys: &[usize], index: &[Vec<usize>]) -> Result<()> {
    let n = sys.len();
    let k = index.len();
    let l = index[0].len();
    let prefix: Vec<Vec<usize>> =
        (0..n).map(|p| if p == 0 { vec![] } else { b.alloc_scratch(count_width(p as u64)) }).collect();
    let flags: Vec<Vec<usize>> = (0..n).map(|_| b.alloc_scratch(k)).collect();
    let weights: Fragment = (1..n).map(|p| Op::HammingWeight { x: sys[..p].to_vec(), out: prefix[p].clone() }).collect();
    let mut mark = Fragment::new();
    for p in 0..n {
        for m in 0..k.min(p + 1) {
            mark.push(if p == 0 {
                Op::Cnot { control: sys[0], target: flags[0][0] }
            } else {
                Op::Controlled {
                    controls: vec![(sys[p], true)],
                    op: Box::new(Op::Equal { inputs: prefix[p].clone(), value: m as u64, out: flags[p][m] }),
                }
            });
        }
    }
    b.ops(weights.iter().cloned());
    b.ops(mark.iter().cloned());
    match backend {
        Backend::Semantic => {
            for (m, reg) in index.iter().enumerate() {
                for p in m..n {
                    for bit in bits_of(p) {
                        b.op(Op::Controlled { controls: vec![(flags[p][m], true)], op: Box::new(Op::X { q: reg[bit] }) });
                    }
                }
            }
        }
        Backend::Gadget => {
            // position 1 uses the register itself, positions 2.. get copies
            let copies: Vec<Vec<Vec<usize>>> =
                (0..k).map(|_| (2..n).map(|_| b.alloc_scratch(l)).collect()).collect();
            let spread: Vec<(usize, Vec<usize>)> = (0..k)
                .flat_map(|m| (0..l).map(move |bit| (m, bit)))
                .map(|(m, bit)| (index[m][bit], copies[m].iter().map(|c| c[bit]).collect()))
                .collect();
            let at = |m: usize, p: usize| if p == 1 { index[m].clone() } else { copies[m][p - 2].clone() };
            b.ops(index.iter().flatten().map(|&q| Op::H { q }));
            emit_fanouts(b, backend, &spread)?;
            for m in 0..k {
                for p in m.max(1)..n {
                    let reg = at(m, p);
                    for bit in bits_of(p) {
                        b.op(Op::Cz { a: reg[bit], b: flags[p][m] });
                    }
                }
            }
            emit_fanouts(b, backend, &spread)?;
            b.ops(index.iter().flatten().map(|&q| Op::H { q }));
            for r in copies.iter().flatten() {
                b.release(r);
            }
        }
    }
    b.ops(inverse_fragment(&mark));
    b.ops(weights);
    for r in prefix.iter().chain(&flags) {
        b.release(r);
    }
    Ok(())
}

/// Dicke state for `k ≤ ⌈√n⌉`: filling, amplified filtering onto distinct
/// indices, ordering and cleaning. Fanouts inside the amplified block are
/// semantic since the block must be inverted; ordering uses `backend`, and
/// cleaning uses the gadget form only for `n ≤ 4`.
pub fn dicke_small_k(n: usize, k: usize, backend: Backend) -> Result<Prepared> {
    let spec = ProtocolSpec::DickeSmallK { n, k };
    spec.validate()?;
    let l = uniform_width(n as u64);
    let mut b = Builder::new();
    let sys = b.alloc("dicke", n, Role::System);
    let index: Vec<Vec<usize>> = (0..k).map(|_| b.alloc("index", l, Role::Ancilla)).collect();

    let fill = Filling::alloc(&mut b, n, k, l);
    let filling = filling_fragment(&sys, &index, &fill)?;
    let count = b.alloc_scratch(count_width(n as u64));
    let flags = b.alloc_scratch(2);
    let oracle = exact(&sys, k, flags[0], &count)?;
    let filter = filtering_plan(n, k)?;
    let mut reg = index.concat();
    reg.extend(&sys);
    b.ops(amplify(&filling, &reg, &oracle, flags[0], flags[1], &filter)?);
    fill.release(&mut b);
    b.release(&count);
    b.release(&flags);

    if k >= 2 {
        emit_ordering(&mut b, backend, &index)?;
    }
    let cleaning = if backend == Backend::Gadget && n <= 4 { Backend::Gadget } else { Backend::Semantic };
    emit_cleaning(&mut b, cleaning, &sys, &index)?;

    let mut plans: Vec<AmplificationPlan> = uniform_plan(n as u64)?.into_iter().collect();
    plans.push(filter);
    Ok(Prepared { target: dicke_target(n, k)?, plans, program: b.finish()?, outputs: sys, spec })
}

/// Digit registers of an `m`-digit factoradic, most significant first; the
/// digit of weight `j` takes `⌈log₂(j+1)⌉` qubits.
fn alloc_factoradic(b: &mut Builder, name: &str, m: usize) -> Vec<Vec<usize>> {
    (0..m).rev().map(|j| b.alloc(name, uniform_width(j as u64 + 1), Role::Ancilla)).collect()
}

fn factoradic_jobs(digits: &[Vec<usize>]) -> Vec<(Vec<usize>, u64)> {
    let m = digits.len();
    digits.iter().enumerate().map(|(i, r)| (r.clone(), (m - i) as u64)).collect()
}

/// Dicke state for any `k`: uniform factoradic digits, the forward map into
/// the system register, the split into the zero and one factoradics, the
/// inverse map clearing the digits, and inverse uniform maps on the split.
pub fn dicke_factoradic(n: usize, k: usize) -> Result<Prepared> {
    let spec = ProtocolSpec::DickeFactoradic { n, k };
    spec.validate()?;
    let mut b = Builder::new();
    let sys = b.alloc("dicke", n, Role::System);
    let digits = alloc_factoradic(&mut b, "digit", n);
    let zeros = alloc_factoradic(&mut b, "zero_digit", n - k);
    let ones = alloc_factoradic(&mut b, "one_digit", k);

    emit_uniforms(&mut b, &factoradic_jobs(&digits), false)?;
    b.op(Op::FacToComb { digits: digits.clone(), k, out: sys.clone() });
    b.op(Op::FacDecompose { digits: digits.clone(), k, z: zeros.clone(), o: ones.clone() });
    b.op(Op::CombToFac { sys: sys.clone(), k, z: zeros.clone(), o: ones.clone(), digits: digits.clone() });
    let mut split = factoradic_jobs(&zeros);
    split.extend(factoradic_jobs(&ones));
    emit_uniforms(&mut b, &split, true)?;

    let plans = (2..=n as u64).filter_map(|q| uniform_plan(q).ok().flatten()).collect();
    Ok(Prepared { target: dicke_target(n, k)?, plans, program: b.finish()?, outputs: sys, spec })
}

pub fn ghz_state(n: usize) -> Result<Prepared> {
    let spec = ProtocolSpec::Ghz { n };
    spec.validate()?;
    let program = ghz(n)?;
    let outputs = program.registers.qubits("ghz").map(<[usize]>::to_vec).unwrap_or_default();
    Ok(Prepared { target: ghz_target(n)?, plans: vec![], program, outputs, spec })
}

/// A circuit of gates diagonal in the computational basis, run on |+⟩ⁿ and
/// measured in the Hadamard basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IqpCircuit {
    pub n: usize,
    pub gates: Vec<DiagonalGate>,
}

impl IqpCircuit {
    /// Accepts dense gate matrices on the given qubits; any off-diagonal
    /// entry is rejected.
    pub fn from_matrices(n: usize, gates: &[(Vec<usize>, Vec<Vec<C64>>)]) -> Result<Self> {
        let mut out = Vec::with_capacity(gates.len());
        for (gi, (qubits, m)) in gates.iter().enumerate() {
            let dim = 1usize << qubits.len();
            if m.len() != dim || m.iter().any(|r| r.len() != dim) {
                return Err(LaqccError::DimensionMismatch(m.len(), dim));
            }
            let mut phases = Vec::with_capacity(dim);
            for (i, row) in m.iter().enumerate() {
                if row.iter().enumerate().any(|(j, v)| i != j && v.norm() > 1e-12) {
                    return Err(LaqccError::NonCommuting(format!("gate {gi} is not diagonal")));
                }
                if (row[i].norm() - 1.0).abs() > 1e-9 {
                    return Err(LaqccError::Validation(format!("gate {gi} is not unitary")));
                }
                phases.push(row[i].arg());
            }
            out.push(DiagonalGate { qubits: qubits.clone(), phases });
        }
        let c = Self { n, gates: out };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= self.n) {
                return Err(LaqccError::Index { index: q, num_qubits: self.n });
            }
            if g.phases.len() != 1usize << g.qubits.len() {
                return Err(LaqccError::DimensionMismatch(g.phases.len(), 1usize << g.qubits.len()));
            }
        }
        Ok(())
    }

    /// State before the terminal measurement, applying the gates one by one.
    pub fn simulate(&self) -> Result<SparseState> {
        self.validate()?;
        let mut s = SparseState::zero(self.n)?;
        for q in 0..self.n {
            Op::H { q }.apply(&mut s);
        }
        for g in &self.gates {
            g.op().apply(&mut s);
        }
        for q in 0..self.n {
            Op::H { q }.apply(&mut s);
        }
        Ok(s)
    }

    /// Outcome distribution of the terminal measurement, indexed by basis value.
    pub fn distribution(&self) -> Result<Vec<f64>> {
        let s = self.simulate()?;
        let mut p = vec![0.0; 1 << self.n];
        for (i, a) in s.iter() {
            p[*i as usize] += a.norm_sqr();
        }
        Ok(p)
    }
}

/// Random diagonal gates on one to three qubits with uniform phases.
pub fn random_iqp<R: Rng>(rng: &mut R, n: usize, gates: usize) -> IqpCircuit {
    let gates = (0..gates)
        .map(|_| {
            let width = rng.random_range(1..=n.clamp(1, 3));
            let mut qubits: Vec<usize> = (0..n).collect();
            for i in 0..width {
                let j = rng.random_range(i..n);
                qubits.swap(i, j);
            }
            qubits.truncate(width);
            let phases = (0..1usize << width).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            DiagonalGate { qubits, phases }
        })
        .collect();
    IqpCircuit { n, gates }
}

/// Hadamards, every diagonal gate in one parallel step, Hadamards. The
/// terminal measurement of the outputs is left to the caller.
pub fn iqp_to_laqcc(circuit: &IqpCircuit, backend: Backend) -> Result<Prepared> {
    circuit.validate()?;
    if circuit.n == 0 {
        return Err(LaqccError::Validation("IQP circuit needs at least one qubit".into()));
    }
    let mut b = Builder::new();
    let out = b.alloc("iqp", circuit.n, Role::System);
    let relabel: Vec<DiagonalGate> = circuit
        .gates
        .iter()
        .map(|g| DiagonalGate { qubits: g.qubits.iter().map(|&q| out[q]).collect(), phases: g.phases.clone() })
        .collect();
    b.ops(out.iter().map(|&q| Op::H { q }));
    emit_parallel_diagonals(&mut b, backend, &relabel)?;
    b.ops(out.iter().map(|&q| Op::H { q }));
    Ok(Prepared {
        target: circuit.simulate()?,
        plans: vec![],
        program: b.finish()?,
        outputs: out,
        spec: ProtocolSpec::Iqp { circuit: circuit.clone() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{resources, BranchMode};
    use crate::verify::verify;

    fn check(p: &Prepared, mode: BranchMode) -> crate::verify::ProtocolReport {
        let r = verify(p, mode, 7).unwrap();
        assert!(r.passed, "{r:?}");
        r
    }

    #[test]
    fn uniform_small_cases() {
        for q in 1..=16 {
            let r = check(&uniform_superposition(q).unwrap(), BranchMode::Exhaustive);
            assert_eq!(r.rounds, 0);
        }
        let p = uniform_superposition(4).unwrap();
        assert!(p.plans.is_empty());
        assert!(p.program.layers.iter().all(|l| matches!(l, crate::program::Layer::Quantum { .. })));
        assert_eq!(uniform_superposition(5).unwrap().plans[0].iterations, 1);
        assert!(uniform_superposition(0).is_err());
    }

    #[test]
    fn w_states() {
        let mut rounds = vec![];
        for n in 2..=4 {
            let r = check(&w_state(n, Backend::Gadget).unwrap(), BranchMode::Exhaustive);
            rounds.push(r.rounds);
        }
        for n in 5..=6 {
            let r = check(&w_state(n, Backend::Gadget).unwrap(), BranchMode::Sample { count: 20, seed: 3 });
            rounds.push(r.rounds);
        }
        eprintln!("{rounds:?}");
        assert!(rounds.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn dicke_small() {
        for (n, k) in [(4, 1), (4, 2), (6, 2)] {
            let r = check(&dicke_small_k(n, k, Backend::Gadget).unwrap(), BranchMode::Exhaustive);
            eprintln!("{n} {k} {r:?}");
        }
    }

    #[test]
    fn dicke_fac() {
        for n in 1..=5 {
            for k in 0..=n {
                check(&dicke_factoradic(n, k).unwrap(), BranchMode::Exhaustive);
            }
        }
    }

    fn explore_distribution(p: &Prepared) -> Vec<f64> {
        let ex = crate::program::explore(&p.program, &crate::program::ExploreOptions::default()).unwrap();
        crate::verify::output_distribution(&ex, &p.outputs).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn targets_match_definitions() {
        let u = uniform_target(5).unwrap();
        assert_eq!(u.num_qubits(), 3);
        for (i, a) in u.entries() {
            assert!(i < 5);
            assert!((a.re - 1.0 / 5f64.sqrt()).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
        assert_eq!(u.support(), 5);
        assert_eq!(uniform_target(1).unwrap().num_qubits(), 1);

        let w = w_target(3).unwrap();
        let idx: Vec<u128> = amplitudes(&w).iter().map(|a| a.index.parse().unwrap()).collect();
        assert_eq!(idx, vec![1, 2, 4]);

        // D(4,1) is W4, D(n,0) is |0…0⟩, D(n,n) is |1…1⟩
        assert!((dicke_target(4, 1).unwrap().fidelity(&w_target(4).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(amplitudes(&dicke_target(4, 0).unwrap())[0].index, "0");
        assert_eq!(amplitudes(&dicke_target(4, 4).unwrap())[0].index, "15");
        assert_eq!(dicke_target(6, 3).unwrap().support(), 20);
    }

    #[test]
    fn small_k_policy_gate() {
        assert_eq!(small_k_bound(4), 2);
        assert_eq!(small_k_bound(5), 3);
        assert_eq!(small_k_bound(9), 3);
        assert_eq!(small_k_bound(10), 4);
        for (n, k) in [(4, 3), (4, 0), (9, 4)] {
            let e = ProtocolSpec::DickeSmallK { n, k }.validate().unwrap_err();
            assert!(matches!(e, LaqccError::Infeasible(_)), "{n} {k}: {e}");
        }
        assert!(ProtocolSpec::DickeSmallK { n: 9, k: 3 }.validate().is_ok());
        assert!(matches!(ProtocolSpec::DickeFactoradic { n: 3, k: 4 }.validate(), Err(LaqccError::Validation(_))));
        assert!(matches!(ProtocolSpec::UniformQ { q: (1 << 20) + 1 }.validate(), Err(LaqccError::Infeasible(_))));
        assert!(matches!(ProtocolSpec::Ghz { n: 1 }.validate(), Err(LaqccError::Validation(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let s: ProtocolSpec = serde_json::from_str(r#"{"name":"dicke_small_k","n":4,"k":2}"#).unwrap();
        assert_eq!(s, ProtocolSpec::DickeSmallK { n: 4, k: 2 });
        let back = serde_json::to_string(&ProtocolSpec::UniformQ { q: 3 }).unwrap();
        assert_eq!(back, r#"{"name":"uniform_q","q":3}"#);
    }

    #[test]
    fn filling_probability() {
        // n!/((n-k)! n^k) counted directly
        for (n, k) in [(4usize, 1usize), (4, 2), (6, 2), (8, 2)] {
            let direct: f64 = (0..k).map(|i| (n - i) as f64).product::<f64>() / (n as f64).powi(k as i32);
            assert!((filling_good_probability(n, k).unwrap() - direct).abs() < 1e-12);
        }
        assert!((filling_good_probability(4, 2).unwrap() - 0.75).abs() < 1e-12);
        let plan = filtering_plan(4, 2).unwrap();
        assert!(plan.success > 1.0 - 1e-12);
    }

    #[test]
    fn w_two_and_uniform_three() {
        let r = check(&w_state(2, Backend::Semantic).unwrap(), BranchMode::Exhaustive);
        assert!(r.exhaustive);
        let p = uniform_superposition(3).unwrap();
        assert_eq!(p.plans.len(), 1);
        assert_eq!(p.plans[0].iterations, 1);
        assert_eq!(p.outputs.len(), 2);
        // no measurement anywhere, so one branch
        assert_eq!(check(&p, BranchMode::Exhaustive).branches_checked, 1);
    }

    #[test]
    fn w_rounds_do_not_grow() {
        let semantic: Vec<usize> =
            (2..=6).map(|n| resources(&w_state(n, Backend::Semantic).unwrap().program).rounds).collect();
        let gadget: Vec<usize> =
            (2..=8).map(|n| resources(&w_state(n, Backend::Gadget).unwrap().program).rounds).collect();
        assert!(semantic.windows(2).all(|w| w[0] == w[1]), "{semantic:?}");
        assert!(gadget.windows(2).all(|w| w[0] == w[1]), "{gadget:?}");
    }

    #[test]
    fn cleaning_backends_agree() {
        let g = check(&dicke_small_k(4, 2, Backend::Gadget).unwrap(), BranchMode::Exhaustive);
        let s = check(&dicke_small_k(4, 2, Backend::Semantic).unwrap(), BranchMode::Exhaustive);
        assert_eq!(g.fidelity, s.fidelity);
        assert!(g.width > s.width);
    }

    #[test]
    fn factoradic_edge_weights() {
        for n in [1, 3, 6] {
            check(&dicke_factoradic(n, 0).unwrap(), BranchMode::Exhaustive);
            check(&dicke_factoradic(n, n).unwrap(), BranchMode::Exhaustive);
        }
        let r = check(&dicke_factoradic(5, 4).unwrap(), BranchMode::Exhaustive);
        assert!(r.ancillas_clean);
    }

    #[test]
    fn iqp_fixed_circuits() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);

        let empty = IqpCircuit { n: 3, gates: vec![] };
        assert!(close(&empty.distribution().unwrap(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]));

        // controlled-S: H⊗H diag(1,1,1,i) |++⟩ has amplitudes (3+i, 1-i, 1-i, -1+i)/4
        let cs = vec![vec![one, zero, zero, zero], vec![zero, one, zero, zero], vec![zero, zero, one, zero], vec![zero, zero, zero, i]];
        let c = IqpCircuit::from_matrices(2, &[(vec![0, 1], cs)]).unwrap();
        let want = [0.625, 0.125, 0.125, 0.125];
        assert!(close(&c.distribution().unwrap(), &want));
        for backend in [Backend::Semantic, Backend::Gadget] {
            assert!(close(&explore_distribution(&iqp_to_laqcc(&c, backend).unwrap()), &want));
        }

        // single T: p(0) = (1 + cos π/4)/2
        let t = vec![vec![one, zero], vec![zero, C64::from_polar(1.0, PI / 4.0)]];
        let c = IqpCircuit::from_matrices(1, &[(vec![0], t)]).unwrap();
        assert!(close(&c.distribution().unwrap(), &[0.853_553_390_593_273_8, 0.146_446_609_406_726_2]));

        let x = vec![vec![zero, one], vec![one, zero]];
        assert!(matches!(IqpCircuit::from_matrices(1, &[(vec![0], x)]), Err(LaqccError::NonCommuting(_))));
        let bad = vec![vec![one, zero], vec![zero, C64::new(0.5, 0.0)]];
        assert!(IqpCircuit::from_matrices(1, &[(vec![0], bad)]).is_err());
        assert!(IqpCircuit::from_matrices(1, &[(vec![1], vec![vec![one, zero], vec![zero, one]])]).is_err());
    }

    #[test]
    fn iqp_overlapping_gates_in_one_step() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let c = random_iqp(&mut rng, 4, 6);
        let want = c.distribution().unwrap();
        assert!((want.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = iqp_to_laqcc(&c, Backend::Gadget).unwrap();
        assert!(close(&explore_distribution(&p), &want));
        // every gate acts on its own copies, so all diagonal ops commute trivially
        let mut touched = std::collections::HashSet::new();
        let mut count = 0;
        for layer in &p.program.layers {
            if let crate::program::Layer::Quantum { gates, .. } = layer {
                for g in gates {
                    if let Op::Diagonal { qubits, .. } = &g.op {
                        count += 1;
                        assert!(qubits.iter().all(|q| touched.insert(*q)), "diagonals share a qubit");
                    }
                }
            }
        }
        assert_eq!(count, c.gates.len());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn uniform_any_q(q in 1u64..=48) {
            let r = verify(&uniform_superposition(q).unwrap(), BranchMode::Exhaustive, 0).unwrap();
            proptest::prop_assert!(r.passed, "{:?}", r);
            proptest::prop_assert_eq!(r.rounds, 0);
        }

        #[test]
        fn iqp_embedding_any_circuit(seed in 0u64..1_000, n in 1usize..=3, gates in 0usize..=4) {
            use rand::SeedableRng;
            let c = random_iqp(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed), n, gates);
            let want = c.distribution().unwrap();
            for backend in [Backend::Semantic, Backend::Gadget] {
                let got = explore_distribution(&iqp_to_laqcc(&c, backend).unwrap());
                proptest::prop_assert!(crate::verify::total_variation(&got, &want) < 1e-9);
            }
        }

        #[test]
        fn factoradic_any_weight(n in 1usize..=5, k in 0usize..=5) {
            proptest::prop_assume!(k <= n);
            let r = verify(&dicke_factoradic(n, k).unwrap(), BranchMode::Exhaustive, 0).unwrap();
            proptest::prop_assert!(r.passed, "{:?}", r);
        }
    }
}
