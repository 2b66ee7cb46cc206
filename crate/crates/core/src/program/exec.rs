//! Program execution: single paths under a policy, and branch exploration.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Condition, Instr, Layer, Program};
use crate::error::{LaqccError, Result};
use crate::state::{bit, from_bits, SparseState};

/// How measurement outcomes are chosen on a single path.
#[derive(Clone, Debug)]
pub enum Policy {
    Seeded(u64),
    /// One outcome per measurement layer, in program order.
    Forced(Vec<Vec<bool>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub label: String,
    pub outcome: Vec<bool>,
    pub probability: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub entries: Vec<RecordEntry>,
}

impl MeasurementRecord {
    /// Probability of the whole transcript.
    pub fn probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).product()
    }

    pub fn outcomes(&self) -> Vec<Vec<bool>> {
        self.entries.iter().map(|e| e.outcome.clone()).collect()
    }

    pub fn get(&self, label: &str) -> Option<&RecordEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

#[derive(Clone, Debug)]
pub struct Execution {
    pub state: SparseState,
    pub record: MeasurementRecord,
    pub classical: BTreeMap<String, Vec<bool>>,
    pub support_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchMode {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    pub mode: BranchMode,
    /// Merge branches with equal live classical data and equal states up to
    /// global phase.
    pub merge: bool,
    pub max_frontier: usize,
    /// Qubits to measure right after their last write. Later operations
    /// only read them, so branching on them early leaves every reduced state
    /// on the remaining qubits unchanged.
    pub collapse: Vec<usize>,
    /// Qubits projected onto a fixed value after their last write; leaf
    /// probabilities then carry the projection weight.
    pub forced: Vec<(usize, bool)>,
    /// Reset qubits that are definite and no longer used to 0 before merging.
    /// Qubits in `keep` are never touched.
    pub canonicalize_dead: bool,
    pub keep: Vec<usize>,
    /// Use the thread pool when the `parallel` feature is on.
    pub parallel: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self {
            mode: BranchMode::Exhaustive,
            merge: true,
            max_frontier: 1 << 14,
            collapse: vec![],
            forced: vec![],
            canonicalize_dead: false,
            keep: vec![],
            parallel: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Leaf {
    pub state: SparseState,
    pub probability: f64,
    /// Number of measurement paths this leaf stands for.
    pub paths: u128,
    /// Transcript of one representative path.
    pub record: MeasurementRecord,
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub leaves: Vec<Leaf>,
    pub paths: u128,
    pub support_max: usize,
    pub frontier_max: usize,
}

impl Exploration {
    pub fn total_probability(&self) -> f64 {
        self.leaves.iter().map(|l| l.probability).sum()
    }
}

#[derive(Clone, Debug)]
struct Branch {
    state: SparseState,
    data: BTreeMap<String, Vec<bool>>,
    record: Vec<RecordEntry>,
    prob: f64,
    paths: u128,
}

/// Per-layer bookkeeping derived from the program once.
struct Schedule {
    /// Qubits to collapse (value `None`) or force after each layer; index 0
    /// holds actions before the first layer.
    collapse_after: Vec<Vec<(usize, Option<bool>)>>,
    labels_dead_after: Vec<Vec<String>>,
    qubits_dead_after: Vec<Vec<usize>>,
}

fn schedule(program: &Program, opts: &ExploreOptions) -> Schedule {
    let n_layers = program.layers.len();
    let mut last_write: Vec<Option<usize>> = vec![None; program.qubits];
    let mut last_touch: Vec<Option<usize>> = vec![None; program.qubits];
    let mut label_last_read: BTreeMap<String, usize> = BTreeMap::new();
    let mut label_born: BTreeMap<String, usize> = BTreeMap::new();
    let mut measured_by: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (li, layer) in program.layers.iter().enumerate() {
        match layer {
            Layer::Quantum { gates, condition } => {
                if let Some(c) = condition {
                    label_last_read.insert(c.source.clone(), li);
                }
                for g in gates {
                    for q in g.op.writes() {
                        last_write[q] = Some(li);
                    }
                    for q in g.op.qubits() {
                        last_touch[q] = Some(li);
                    }
                    if let Some(c) = &g.condition {
                        label_last_read.insert(c.source.clone(), li);
                    }
                }
            }
            Layer::Measure { qubits, label } => {
                label_born.insert(label.clone(), li);
                measured_by.insert(label.clone(), qubits.clone());
            }
            Layer::Classical { inputs, output, .. } => {
                label_born.insert(output.clone(), li);
                for l in inputs {
                    label_last_read.insert(l.clone(), li);
                    // a measurement whose result is used keeps its qubits alive until then
                    if let Some(qs) = measured_by.get(l) {
                        for &q in qs {
                            last_touch[q] = Some(last_touch[q].map_or(li, |t| t.max(li)));
                        }
                    }
                }
            }
        }
    }
    let mut collapse_after = vec![vec![]; n_layers + 1];
    let slot = |lw: Option<usize>| lw.map_or(0, |l| l + 1);
    for &q in &opts.collapse {
        if q < program.qubits {
            collapse_after[slot(last_write[q])].push((q, None));
        }
    }
    for &(q, v) in &opts.forced {
        if q < program.qubits {
            collapse_after[slot(last_write[q])].push((q, Some(v)));
        }
    }
    let mut labels_dead_after = vec![vec![]; n_layers];
    for (label, &born) in &label_born {
        let at = label_last_read.get(label).copied().unwrap_or(born).max(born);
        labels_dead_after[at].push(label.clone());
    }
    let mut qubits_dead_after = vec![vec![]; n_layers];
    if opts.canonicalize_dead {
        for (q, t) in last_touch.iter().enumerate() {
            if let Some(t) = t {
                if !opts.keep.contains(&q) {
                    qubits_dead_after[*t].push(q);
                }
            }
        }
    }
    Schedule { collapse_after, labels_dead_after, qubits_dead_after }
}

fn condition_holds(c: &Option<Condition>, data: &BTreeMap<String, Vec<bool>>) -> Result<bool> {
    match c {
        None => Ok(true),
        Some(c) => data
            .get(&c.source)
            .and_then(|v| v.get(c.bit).copied())
            .ok_or_else(|| LaqccError::MalformedProgram(format!("condition source `{}` unavailable", c.source))),
    }
}

fn apply_quantum(b: &mut Branch, gates: &[Instr], cond: &Option<Condition>) -> Result<()> {
    if !condition_holds(cond, &b.data)? {
        return Ok(());
    }
    for g in gates {
        if condition_holds(&g.condition, &b.data)? {
            g.op.apply(&mut b.state);
        }
    }
    Ok(())
}

fn classical_input(b: &Branch, inputs: &[String]) -> Result<Vec<bool>> {
    let mut bits = Vec::new();
    for l in inputs {
        let v = b
            .data
            .get(l)
            .ok_or_else(|| LaqccError::MalformedProgram(format!("classical input `{l}` unavailable")))?;
        bits.extend_from_slice(v);
    }
    Ok(bits)
}

/// Outcome source for single-path runs.
enum Chooser<'a> {
    Rng(ChaCha8Rng),
    Forced(std::slice::Iter<'a, Vec<bool>>),
}

fn run_path(program: &Program, init: SparseState, chooser: &mut Chooser, sched: Option<&Schedule>) -> Result<(Branch, usize)> {
    let mut b = Branch { state: init, data: BTreeMap::new(), record: vec![], prob: 1.0, paths: 1 };
    let support = b.state.support();
    if let Some(s) = sched {
        collapse_one(&mut b, &s.collapse_after[0], chooser)?;
    }
    run_path_from(program, b, 0, support, chooser, sched)
}

/// Leading layers that act the same on every path: unconditioned quantum
/// layers with nothing collapsed before or after them.
fn shared_prefix(program: &Program, sched: &Schedule) -> usize {
    if !sched.collapse_after[0].is_empty() {
        return 0;
    }
    program
        .layers
        .iter()
        .enumerate()
        .take_while(|(li, l)| matches!(l, Layer::Quantum { condition: None, .. }) && sched.collapse_after[li + 1].is_empty())
        .count()
}

fn run_path_from(
    program: &Program,
    mut b: Branch,
    start: usize,
    mut support_max: usize,
    chooser: &mut Chooser,
    sched: Option<&Schedule>,
) -> Result<(Branch, usize)> {
    support_max = support_max.max(b.state.support());
    for (li, layer) in program.layers.iter().enumerate().skip(start) {
        match layer {
            Layer::Quantum { gates, condition } => apply_quantum(&mut b, gates, condition)?,
            Layer::Measure { qubits, label } => {
                let res = match chooser {
                    Chooser::Rng(rng) => b.state.measure_with(qubits, rng)?,
                    Chooser::Forced(it) => {
                        let bits = it.next().ok_or_else(|| {
                            LaqccError::Validation("forced policy has fewer outcomes than measurement layers".into())
                        })?;
                        b.state.measure(qubits, &crate::state::OutcomePolicy::Forced(bits.clone()))?
                    }
                };
                b.prob *= res.probability;
                b.state = res.state;
                b.data.insert(label.clone(), res.outcome.clone());
                b.record.push(RecordEntry { label: label.clone(), outcome: res.outcome, probability: res.probability });
            }
            Layer::Classical { function, inputs, output, .. } => {
                let out = function.evaluate(&classical_input(&b, inputs)?)?;
                b.data.insert(output.clone(), out);
            }
        }
        if let Some(s) = sched {
            collapse_one(&mut b, &s.collapse_after[li + 1], chooser)?;
        }
        support_max = support_max.max(b.state.support());
    }
    Ok((b, support_max))
}

fn collapse_one(b: &mut Branch, actions: &[(usize, Option<bool>)], chooser: &mut Chooser) -> Result<()> {
    for &(q, forced) in actions {
        let res = match (forced, &mut *chooser) {
            (Some(v), _) => b.state.measure(&[q], &crate::state::OutcomePolicy::Forced(vec![v]))?,
            (None, Chooser::Rng(rng)) => b.state.measure_with(&[q], rng)?,
            (None, Chooser::Forced(_)) => continue,
        };
        b.prob *= res.probability;
        b.state = res.state;
    }
    Ok(())
}

/// Runs one path from |0…0⟩.
pub fn execute(program: &Program, policy: &Policy) -> Result<Execution> {
    execute_from(program, SparseState::zero(program.qubits)?, policy)
}

/// Runs one path from `init`.
pub fn execute_from(program: &Program, init: SparseState, policy: &Policy) -> Result<Execution> {
    program.validate()?;
    if init.num_qubits() != program.qubits {
        return Err(LaqccError::DimensionMismatch(init.num_qubits(), program.qubits));
    }
    let (b, support_max) = match policy {
        Policy::Seeded(seed) => {
            let mut c = Chooser::Rng(ChaCha8Rng::seed_from_u64(*seed));
            run_path(program, init, &mut c, None)?
        }
        Policy::Forced(outcomes) => {
            if outcomes.len() != program.measurement_count() {
                return Err(LaqccError::Validation(format!(
                    "forced policy has {} outcomes for {} measurement layers",
                    outcomes.len(),
                    program.measurement_count()
                )));
            }
            let mut c = Chooser::Forced(outcomes.iter());
            run_path(program, init, &mut c, None)?
        }
    };
    Ok(Execution { state: b.state, record: MeasurementRecord { entries: b.record }, classical: b.data, support_max })
}

/// Explores measurement branches from |0…0⟩.
pub fn explore(program: &Program, opts: &ExploreOptions) -> Result<Exploration> {
    explore_from(program, SparseState::zero(program.qubits)?, opts)
}

pub fn explore_from(program: &Program, init: SparseState, opts: &ExploreOptions) -> Result<Exploration> {
    program.validate()?;
    if init.num_qubits() != program.qubits {
        return Err(LaqccError::DimensionMismatch(init.num_qubits(), program.qubits));
    }
    let sched = schedule(program, opts);
    match opts.mode {
        BranchMode::Sample { count, seed } => sample(program, init, opts, &sched, count, seed),
        BranchMode::Exhaustive => exhaustive(program, init, opts, &sched),
    }
}

fn sample(program: &Program, init: SparseState, opts: &ExploreOptions, sched: &Schedule, count: usize, seed: u64) -> Result<Exploration> {
    let start = shared_prefix(program, sched);
    let mut head = Branch { state: init, data: BTreeMap::new(), record: vec![], prob: 1.0, paths: 1 };
    let mut head_support = head.state.support();
    for layer in &program.layers[..start] {
        if let Layer::Quantum { gates, condition } = layer {
            apply_quantum(&mut head, gates, condition)?;
        }
        head_support = head_support.max(head.state.support());
    }
    let one = |i: usize| -> Result<(Leaf, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut c = Chooser::Rng(rng);
        let (b, support) = run_path_from(program, head.clone(), start, head_support, &mut c, Some(sched))?;
        Ok((Leaf { state: b.state, probability: b.prob, paths: 1, record: MeasurementRecord { entries: b.record } }, support))
    };
    let results: Vec<Result<(Leaf, usize)>> = par_map(opts.parallel, (0..count).collect(), one);
    let mut leaves = Vec::with_capacity(count);
    let mut support_max = 0;
    for r in results {
        let (leaf, s) = r?;
        support_max = support_max.max(s);
        leaves.push(leaf);
    }
    Ok(Exploration { paths: count as u128, leaves, support_max, frontier_max: 1 })
}

fn par_map<T, U, F>(parallel: bool, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.into_par_iter().map(f).collect();
    }
    let _ = parallel;
    items.into_iter().map(f).collect()
}

fn expand<F>(parallel: bool, frontier: Vec<Branch>, f: F) -> Result<Vec<Branch>>
where
    F: Fn(Branch) -> Result<Vec<Branch>> + Sync + Send,
{
    let parts = par_map(parallel, frontier, f);
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn exhaustive(program: &Program, init: SparseState, opts: &ExploreOptions, sched: &Schedule) -> Result<Exploration> {
    let mut frontier = vec![Branch { state: init, data: BTreeMap::new(), record: vec![], prob: 1.0, paths: 1 }];
    let mut support_max = frontier[0].state.support();
    let mut frontier_max = 1;
    let par = opts.parallel;
    frontier = expand(par, frontier, |b| branch_collapse(b, &sched.collapse_after[0]))?;
    for (li, layer) in program.layers.iter().enumerate() {
        frontier = match layer {
            Layer::Quantum { gates, condition } => expand(par, frontier, |mut b| {
                apply_quantum(&mut b, gates, condition)?;
                Ok(vec![b])
            })?,
            Layer::Measure { qubits, label } => expand(par, frontier, |b| {
                let kids = b.state.branch_enumerate(qubits)?;
                Ok(kids
                    .into_iter()
                    .map(|k| {
                        let mut data = b.data.clone();
                        data.insert(label.clone(), k.outcome.clone());
                        let mut record = b.record.clone();
                        record.push(RecordEntry { label: label.clone(), outcome: k.outcome, probability: k.probability });
                        Branch { state: k.state, data, record, prob: b.prob * k.probability, paths: b.paths }
                    })
                    .collect())
            })?,
            Layer::Classical { function, inputs, output, .. } => expand(par, frontier, |mut b| {
                let out = function.evaluate(&classical_input(&b, inputs)?)?;
                b.data.insert(output.clone(), out);
                Ok(vec![b])
            })?,
        };
        let actions = &sched.collapse_after[li + 1];
        if !actions.is_empty() {
            frontier = expand(par, frontier, |b| branch_collapse(b, actions))?;
        }
        for b in frontier.iter_mut() {
            for l in &sched.labels_dead_after[li] {
                b.data.remove(l);
            }
            canonicalize(b, &sched.qubits_dead_after[li]);
        }
        frontier_max = frontier_max.max(frontier.len());
        if frontier.len() > opts.max_frontier {
            return Err(LaqccError::FrontierExceeded(opts.max_frontier));
        }
        if opts.merge && frontier.len() > 1 {
            frontier = merge(frontier);
        }
        support_max = support_max.max(frontier.iter().map(|b| b.state.support()).max().unwrap_or(0));
    }
    let paths = frontier.iter().map(|b| b.paths).sum();
    let leaves = frontier
        .into_iter()
        .map(|b| Leaf { state: b.state, probability: b.prob, paths: b.paths, record: MeasurementRecord { entries: b.record } })
        .collect();
    Ok(Exploration { leaves, paths, support_max, frontier_max })
}

fn branch_collapse(b: Branch, actions: &[(usize, Option<bool>)]) -> Result<Vec<Branch>> {
    let mut out = vec![b];
    for &(q, forced) in actions {
        let mut next = Vec::with_capacity(out.len() * 2);
        for b in out {
            match forced {
                Some(v) => match b.state.project(&[q], v as u128) {
                    Ok((p, st)) => next.push(Branch { state: st, prob: b.prob * p, ..b }),
                    Err(LaqccError::InfeasibleBranch { .. }) => {}
                    Err(e) => return Err(e),
                },
                None => {
                    for k in b.state.branch_enumerate(&[q])? {
                        next.push(Branch {
                            state: k.state,
                            data: b.data.clone(),
                            record: b.record.clone(),
                            prob: b.prob * k.probability,
                            paths: b.paths,
                        });
                    }
                }
            }
        }
        out = next;
    }
    Ok(out)
}

fn canonicalize(b: &mut Branch, dead: &[usize]) {
    for &q in dead {
        let all_set = {
            let mut vals = b.state.iter().map(|(&i, _)| bit(i, q));
            matches!(vals.next(), Some(true)) && vals.all(|v| v)
        };
        if all_set {
            b.state.permute_basis(|i| i & !(1u128 << q));
        }
    }
}

fn fingerprint(state: &SparseState) -> u64 {
    let entries = state.entries();
    let max = entries.iter().map(|(_, a)| a.norm()).fold(0.0, f64::max);
    let reference = entries.iter().find(|(_, a)| a.norm() > 0.5 * max).map(|(_, a)| a.conj() / a.norm());
    let mut h = DefaultHasher::new();
    if let Some(r) = reference {
        for (i, a) in entries {
            let z = a * r;
            i.hash(&mut h);
            ((z.re * 1e8).round() as i64).hash(&mut h);
            ((z.im * 1e8).round() as i64).hash(&mut h);
        }
    }
    h.finish()
}

fn merge(frontier: Vec<Branch>) -> Vec<Branch> {
    let keys: Vec<u64> = frontier
        .iter()
        .map(|b| {
            let mut h = DefaultHasher::new();
            b.data.hash(&mut h);
            fingerprint(&b.state).hash(&mut h);
            h.finish()
        })
        .collect();
    let mut reps: Vec<Branch> = Vec::new();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (b, key) in frontier.into_iter().zip(keys) {
        let bucket = buckets.entry(key).or_default();
        let hit = bucket.iter().copied().find(|&r| {
            reps[r].data == b.data && reps[r].state.fidelity(&b.state).map(|f| f >= 1.0 - 1e-10).unwrap_or(false)
        });
        match hit {
            Some(r) => {
                reps[r].prob += b.prob;
                reps[r].paths += b.paths;
            }
            None => {
                bucket.push(reps.len());
                reps.push(b);
            }
        }
    }
    reps
}

/// The outcome bits of a record as one integer per entry.
pub fn record_values(record: &MeasurementRecord) -> Vec<u128> {
    record.entries.iter().map(|e| from_bits(&e.outcome)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Builder, ClassicalFn, DepthClass, Op, Role};

    fn feed_forward() -> Program {
        let mut b = Builder::new();
        let q = b.alloc("q", 2, Role::System);
        b.op(Op::H { q: q[0] });
        let m = b.measure(&[q[0]], "m");
        let c = b.classical(ClassicalFn::Identity, &[m], "c", DepthClass::Nc1);
        b.conditional(Op::X { q: q[1] }, &c, 0);
        b.finish().unwrap()
    }

    #[test]
    fn empty_program() {
        let p = Program::empty(1);
        let e = execute(&p, &Policy::Seeded(1)).unwrap();
        assert!((e.state.amplitude(0).re - 1.0).abs() < 1e-12);
        assert!(e.record.entries.is_empty());
    }

    #[test]
    fn forced_feed_forward() {
        let e = execute(&feed_forward(), &Policy::Forced(vec![vec![true]])).unwrap();
        assert!((e.state.amplitude(0b11).norm() - 1.0).abs() < 1e-12);
        assert!((e.record.probability() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_branches() {
        let opts = ExploreOptions { merge: false, ..Default::default() };
        let x = explore(&feed_forward(), &opts).unwrap();
        assert_eq!(x.leaves.len(), 2);
        assert_eq!(x.paths, 2);
        assert!((x.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        let opts = ExploreOptions { mode: BranchMode::Sample { count: 16, seed: 7 }, ..Default::default() };
        let a = explore(&feed_forward(), &opts).unwrap();
        let b = explore(&feed_forward(), &ExploreOptions { parallel: false, ..opts }).unwrap();
        assert_eq!(a.leaves.len(), 16);
        for (x, y) in a.leaves.iter().zip(&b.leaves) {
            assert_eq!(x.record, y.record);
        }
    }

    #[test]
    fn merge_after_correction() {
        // teleport-like reset: measure a |+⟩ ancilla, then undo it classically
        let mut b = Builder::new();
        let q = b.alloc("q", 1, Role::Ancilla);
        b.op(Op::H { q: q[0] });
        let m = b.measure(&q, "m");
        let c = b.classical(ClassicalFn::Identity, &[m], "c", DepthClass::Nc1);
        b.conditional(Op::X { q: q[0] }, &c, 0);
        let p = b.finish().unwrap();
        let x = explore(&p, &ExploreOptions::default()).unwrap();
        assert_eq!(x.leaves.len(), 1);
        assert_eq!(x.paths, 2);
        assert!((x.leaves[0].probability - 1.0).abs() < 1e-12);
    }
}
