//! Pauli frames, Clifford conjugation and the teleportation-based flattening
//! of Clifford ladders and brickwork grids into one-round programs.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LaqccError, Result};
use crate::gf2::BitMatrix;
use crate::program::{
    explore_from, BranchMode, Builder, ClassicalFn, DepthClass, ExploreOptions, GridLayout, Op, Program, Role,
};
use crate::state::{gates, scatter, GateSpec, SparseState};

/// `i^phase · Z^z · X^x`, qubit by qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    pub z: Vec<bool>,
    pub x: Vec<bool>,
    /// Power of `i`, in `0..4`.
    pub phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { z: vec![false; n], x: vec![false; n], phase: 0 }
    }

    pub fn from_vectors(z: Vec<bool>, x: Vec<bool>) -> Result<Self> {
        if z.len() != x.len() {
            return Err(LaqccError::DimensionMismatch(z.len(), x.len()));
        }
        Ok(Self { z, x, phase: 0 })
    }

    /// Parses labels such as `"XIZ"` or `"-iYX"`; character `q` acts on qubit `q`.
    pub fn parse(label: &str) -> Result<Self> {
        let (phase, body) = if let Some(r) = label.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = label.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = label.strip_prefix('i') {
            (1, r)
        } else {
            (0, label.strip_prefix('+').unwrap_or(label))
        };
        let mut p = Self::identity(body.chars().count());
        p.phase = phase;
        for (q, c) in body.chars().enumerate() {
            match c {
                'I' => {}
                'X' => p.x[q] = true,
                'Z' => p.z[q] = true,
                // Y = -i·Z·X
                'Y' => {
                    p.x[q] = true;
                    p.z[q] = true;
                    p.phase = (p.phase + 3) % 4;
                }
                _ => return Err(LaqccError::Validation(format!("unknown Pauli letter `{c}`"))),
            }
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.z.iter().zip(&self.x).filter(|(a, b)| **a || **b).count()
    }

    /// The `(z, x)` exponent vector, `z` first.
    pub fn exponents(&self) -> Vec<bool> {
        self.z.iter().chain(&self.x).copied().collect()
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.len() != other.len() {
            return Err(LaqccError::DimensionMismatch(self.len(), other.len()));
        }
        // X^b Z^a = (-1)^{ab} Z^a X^b
        let swaps = self.x.iter().zip(&other.z).filter(|(b, a)| **b && **a).count();
        Ok(PauliString {
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            phase: ((self.phase as usize + other.phase as usize + 2 * swaps) % 4) as u8,
        })
    }

    /// Applies the operator to a state.
    pub fn apply(&self, state: &SparseState) -> Result<SparseState> {
        let mut s = state.clone();
        for q in 0..self.len() {
            if self.x[q] {
                s = s.apply_gate(&GateSpec::One(gates::x()), &[q])?;
            }
            if self.z[q] {
                s = s.apply_gate(&GateSpec::One(gates::z()), &[q])?;
            }
        }
        if self.phase != 0 {
            let i_pow = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
            let g = i_pow[self.phase as usize];
            s = s.apply_gate(&GateSpec::One([[g, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), g]]), &[0])?;
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordGate {
    pub name: String,
    pub qubits: Vec<usize>,
}

impl CliffordGate {
    pub fn new(name: &str, qubits: &[usize]) -> Self {
        Self { name: name.to_string(), qubits: qubits.to_vec() }
    }

    fn arity(&self) -> Result<usize> {
        match self.name.as_str() {
            "h" | "s" | "sdg" | "x" | "y" | "z" => Ok(1),
            "cnot" | "cz" | "swap" => Ok(2),
            other => Err(LaqccError::Validation(format!("`{other}` is not a Clifford generator"))),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let k = self.arity()?;
        if self.qubits.len() != k {
            return Err(LaqccError::Validation(format!("{} takes {k} qubits", self.name)));
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n) {
            return Err(LaqccError::Index { index: q, num_qubits: n });
        }
        if k == 2 && self.qubits[0] == self.qubits[1] {
            return Err(LaqccError::Validation(format!("{} on a repeated qubit", self.name)));
        }
        Ok(())
    }

    fn op(&self, map: impl Fn(usize) -> usize) -> Op {
        let q: Vec<usize> = self.qubits.iter().map(|&q| map(q)).collect();
        match self.name.as_str() {
            "h" => Op::H { q: q[0] },
            "s" => Op::S { q: q[0] },
            "sdg" => Op::Sdg { q: q[0] },
            "x" => Op::X { q: q[0] },
            "y" => Op::Y { q: q[0] },
            "z" => Op::Z { q: q[0] },
            "cnot" => Op::Cnot { control: q[0], target: q[1] },
            "cz" => Op::Cz { a: q[0], b: q[1] },
            _ => Op::Swap { a: q[0], b: q[1] },
        }
    }

    /// `p ↦ g p g†` in place.
    fn conjugate_in_place(&self, p: &mut PauliString) -> Result<()> {
        let q = &self.qubits;
        let add = |p: &mut PauliString, k: usize| p.phase = ((p.phase as usize + k) % 4) as u8;
        match self.name.as_str() {
            "h" => {
                let (a, b) = (p.z[q[0]], p.x[q[0]]);
                p.z[q[0]] = b;
                p.x[q[0]] = a;
                if a && b {
                    add(p, 2);
                }
            }
            "s" | "sdg" => {
                let reps = if self.name == "s" { 1 } else { 3 };
                for _ in 0..reps {
                    // S X S† = Y = -i Z X
                    let (a, b) = (p.z[q[0]], p.x[q[0]]);
                    p.z[q[0]] = a ^ b;
                    if b {
                        add(p, 3);
                    }
                }
            }
            "x" => {
                if p.z[q[0]] {
                    add(p, 2);
                }
            }
            "z" => {
                if p.x[q[0]] {
                    add(p, 2);
                }
            }
            "y" => {
                if p.z[q[0]] ^ p.x[q[0]] {
                    add(p, 2);
                }
            }
            "cnot" => {
                let (c, t) = (q[0], q[1]);
                p.z[c] ^= p.z[t];
                p.x[t] ^= p.x[c];
            }
            "cz" => {
                for g in [CliffordGate::new("h", &q[1..]), CliffordGate::new("cnot", q), CliffordGate::new("h", &q[1..])] {
                    g.conjugate_in_place(p)?;
                }
            }
            "swap" => {
                p.z.swap(q[0], q[1]);
                p.x.swap(q[0], q[1]);
            }
            other => return Err(LaqccError::Validation(format!("`{other}` is not a Clifford generator"))),
        }
        Ok(())
    }

    fn spec(&self) -> GateSpec {
        match self.name.as_str() {
            "h" => GateSpec::One(gates::h()),
            "s" => GateSpec::One(gates::s()),
            "sdg" => GateSpec::One(gates::adjoint(&gates::s())),
            "x" => GateSpec::One(gates::x()),
            "y" => GateSpec::One(gates::y()),
            "z" => GateSpec::One(gates::z()),
            "cnot" => GateSpec::Two(gates::cnot()),
            "cz" => GateSpec::Two(gates::cz()),
            _ => GateSpec::Two(gates::swap()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Ladder,
    Grid,
}

/// A word over Clifford generators with a ladder or brickwork shape.
///
/// A ladder applies step `i` on qubits `(i, i+1)` for `i = 0..n-1` in order.
/// A grid of depth `d` applies layer `t` on the pairs `(i, i+1)` with
/// `i ≡ t (mod 2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordCircuit {
    pub shape: Shape,
    pub n: usize,
    pub depth: usize,
    pub gates: Vec<CliffordGate>,
}

impl CliffordCircuit {
    pub fn ladder(n: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        let c = Self { shape: Shape::Ladder, n, depth: n.saturating_sub(1), gates };
        c.steps()?;
        Ok(c)
    }

    pub fn grid(n: usize, depth: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        let c = Self { shape: Shape::Grid, n, depth, gates };
        c.steps()?;
        Ok(c)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.steps()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Groups the word into ladder steps or grid layers, keeping word order.
    pub fn steps(&self) -> Result<Vec<Vec<CliffordGate>>> {
        for g in &self.gates {
            g.check(self.n)?;
        }
        let count = match self.shape {
            Shape::Ladder => self.n.saturating_sub(1),
            Shape::Grid => self.depth,
        };
        if self.n < 2 {
            return Err(LaqccError::ShapeMismatch("a ladder or grid needs at least two qubits".into()));
        }
        let fits = |s: usize, g: &CliffordGate| -> bool {
            let pair = |i: usize| g.qubits.iter().all(|&q| q == i || q == i + 1);
            match self.shape {
                Shape::Ladder => pair(s),
                Shape::Grid => (0..self.n - 1).filter(|i| i % 2 == s % 2).any(pair),
            }
        };
        let mut steps = vec![Vec::new(); count];
        let mut cur = 0;
        for g in &self.gates {
            while cur < count && !fits(cur, g) {
                cur += 1;
            }
            if cur == count {
                return Err(LaqccError::ShapeMismatch(format!(
                    "gate {} on {:?} does not fit the {:?} shape",
                    g.name, g.qubits, self.shape
                )));
            }
            steps[cur].push(g.clone());
        }
        Ok(steps)
    }

    /// Direct statevector application.
    pub fn simulate(&self, input: &SparseState) -> Result<SparseState> {
        if input.num_qubits() != self.n {
            return Err(LaqccError::DimensionMismatch(input.num_qubits(), self.n));
        }
        let mut s = input.clone();
        for g in &self.gates {
            g.check(self.n)?;
            s = s.apply_gate(&g.spec(), &g.qubits)?;
        }
        Ok(s)
    }
}

/// Returns `P'` with `C·P = P'·C`, phase included.
pub fn conjugate(circuit: &CliffordCircuit, p: &PauliString) -> Result<PauliString> {
    if p.len() != circuit.n {
        return Err(LaqccError::DimensionMismatch(p.len(), circuit.n));
    }
    conjugate_gates(&circuit.gates, p, circuit.n)
}

pub fn conjugate_gates(gates: &[CliffordGate], p: &PauliString, n: usize) -> Result<PauliString> {
    let mut out = p.clone();
    for g in gates {
        g.check(n)?;
        g.conjugate_in_place(&mut out)?;
    }
    Ok(out)
}

/// Binary map from Bell-measurement bits `(a, b)` (all Z bits, then all X
/// bits) to the output frame `(z, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionMap {
    pub matrix: BitMatrix,
    /// `(step, wire)` of each teleportation, in input-bit order.
    pub sites: Vec<(usize, usize)>,
}

impl CorrectionMap {
    /// Output frame `(z, x)` for a measurement outcome.
    pub fn frame(&self, bits: &[bool]) -> Result<Vec<bool>> {
        self.matrix.mul_vec(bits)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.matrix.to_rows()
    }
}

/// Teleportation sites: before every ladder step on its left wire; before
/// every grid layer after the first on every wire.
fn sites(circuit: &CliffordCircuit) -> Vec<(usize, usize)> {
    match circuit.shape {
        Shape::Ladder => (0..circuit.n - 1).map(|s| (s, s)).collect(),
        Shape::Grid => (1..circuit.depth).flat_map(|t| (0..circuit.n).map(move |w| (t, w))).collect(),
    }
}

/// Propagates each unit error through the rest of the circuit.
pub fn build_correction_map(circuit: &CliffordCircuit) -> Result<CorrectionMap> {
    let steps = circuit.steps()?;
    let sites = sites(circuit);
    let (n, m) = (circuit.n, sites.len());
    let mut matrix = BitMatrix::zeros(2 * n, 2 * m);
    for (i, &(s, w)) in sites.iter().enumerate() {
        let rest: Vec<CliffordGate> = steps[s..].iter().flatten().cloned().collect();
        for (col, is_x) in [(i, false), (m + i, true)] {
            let mut p = PauliString::identity(n);
            if is_x {
                p.x[w] = true;
            } else {
                p.z[w] = true;
            }
            let img = conjugate_gates(&rest, &p, n)?;
            matrix.set_column(col, &img.exponents());
        }
    }
    Ok(CorrectionMap { matrix, sites })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Flattened {
    pub program: Program,
    /// Physical qubit holding each wire's input.
    pub inputs: Vec<usize>,
    /// Physical qubit holding each wire's output.
    pub outputs: Vec<usize>,
    pub correction: CorrectionMap,
    pub layout: GridLayout,
}

pub fn flatten_ladder(circuit: &CliffordCircuit) -> Result<Flattened> {
    if circuit.shape != Shape::Ladder {
        return Err(LaqccError::ShapeMismatch("expected a ladder circuit".into()));
    }
    flatten(circuit)
}

pub fn flatten_grid(circuit: &CliffordCircuit) -> Result<Flattened> {
    if circuit.shape != Shape::Grid {
        return Err(LaqccError::ShapeMismatch("expected a grid circuit".into()));
    }
    flatten(circuit)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Segment { wire: usize, seg: usize },
    Bell { site: usize },
}

fn flatten(circuit: &CliffordCircuit) -> Result<Flattened> {
    let steps = circuit.steps()?;
    let correction = build_correction_map(circuit)?;
    let n = circuit.n;
    let sites = &correction.sites;

    // grid coordinates of every physical qubit
    let mut nodes: Vec<(Node, (i64, i64))> = Vec::new();
    let mut seg_count = vec![1usize; n];
    for w in 0..n {
        let at = match circuit.shape {
            Shape::Ladder => (0, 3 * w as i64),
            Shape::Grid => (w as i64, 0),
        };
        nodes.push((Node::Segment { wire: w, seg: 0 }, at));
    }
    for (i, &(s, w)) in sites.iter().enumerate() {
        let seg = seg_count[w];
        seg_count[w] += 1;
        let (bell, out) = match circuit.shape {
            Shape::Ladder => ((0, 3 * w as i64 + 1), (0, 3 * w as i64 + 2)),
            Shape::Grid => ((w as i64, 2 * s as i64 - 1), (w as i64, 2 * s as i64)),
        };
        nodes.push((Node::Bell { site: i }, bell));
        nodes.push((Node::Segment { wire: w, seg }, out));
    }
    nodes.sort_by_key(|&(_, c)| c);
    let index = |node: Node| nodes.iter().position(|(k, _)| *k == node).expect("node placed");
    let mut layout = GridLayout::default();
    for (i, &(_, (r, c))) in nodes.iter().enumerate() {
        layout.place(i, r, c);
    }

    let inputs: Vec<usize> = (0..n).map(|w| index(Node::Segment { wire: w, seg: 0 })).collect();
    let outputs: Vec<usize> = (0..n).map(|w| index(Node::Segment { wire: w, seg: seg_count[w] - 1 })).collect();
    // physical qubit of each site: (previous segment, bell half, next segment)
    let mut seen = vec![0usize; n];
    let site_qubits: Vec<(usize, usize, usize)> = sites
        .iter()
        .enumerate()
        .map(|(i, &(_, w))| {
            seen[w] += 1;
            (
                index(Node::Segment { wire: w, seg: seen[w] - 1 }),
                index(Node::Bell { site: i }),
                index(Node::Segment { wire: w, seg: seen[w] }),
            )
        })
        .collect();

    let out_set: Vec<usize> = outputs.clone();
    let rest: Vec<usize> = (0..nodes.len()).filter(|q| !out_set.contains(q)).collect();
    let registers = vec![
        crate::program::Register { name: "out".into(), qubits: outputs.clone(), role: Role::System },
        crate::program::Register { name: "bell".into(), qubits: rest, role: Role::Ancilla },
    ];
    let mut b = Builder::with_registers(nodes.len(), registers);
    for &(_, a, _) in &site_qubits {
        b.op(Op::H { q: a });
    }
    for &(_, a, l) in &site_qubits {
        b.op(Op::Cnot { control: a, target: l });
    }
    let mut current: Vec<usize> = inputs.clone();
    for (s, gates) in steps.iter().enumerate() {
        for (i, &(ss, w)) in sites.iter().enumerate() {
            if ss == s {
                current[w] = site_qubits[i].2;
            }
        }
        for g in gates {
            b.op(g.op(|q| current[q]));
        }
    }
    for &(r, a, _) in &site_qubits {
        b.op(Op::Cnot { control: r, target: a });
    }
    for &(r, _, _) in &site_qubits {
        b.op(Op::H { q: r });
    }
    if !sites.is_empty() {
        let measured: Vec<usize> =
            site_qubits.iter().map(|s| s.0).chain(site_qubits.iter().map(|s| s.1)).collect();
        let m = b.measure(&measured, "bell");
        let c = b.classical(
            ClassicalFn::Linear { matrix: correction.matrix.clone() },
            &[m],
            "frame",
            DepthClass::Nc1,
        );
        for (w, &q) in outputs.iter().enumerate() {
            if correction.matrix.row(n + w).iter().any(|&v| v) {
                b.conditional(Op::X { q }, &c, n + w);
            }
        }
        for (w, &q) in outputs.iter().enumerate() {
            if correction.matrix.row(w).iter().any(|&v| v) {
                b.conditional(Op::Z { q }, &c, w);
            }
        }
    }
    Ok(Flattened { program: b.finish()?, inputs, outputs, correction, layout })
}

/// Embeds an `n`-qubit input state on the flattened program's input qubits.
pub fn embed_input(flat: &Flattened, input: &SparseState) -> Result<SparseState> {
    if input.num_qubits() != flat.inputs.len() {
        return Err(LaqccError::DimensionMismatch(input.num_qubits(), flat.inputs.len()));
    }
    SparseState::from_amplitudes(
        flat.program.qubits,
        input.entries().into_iter().map(|(i, a)| (scatter(0, &flat.inputs, i), a)),
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlattenCheck {
    pub branches: usize,
    pub min_fidelity: f64,
    pub total_probability: f64,
}

/// Runs the flattened program on `input` and compares every explored branch
/// with direct application of the circuit.
pub fn check_flattened(
    circuit: &CliffordCircuit,
    flat: &Flattened,
    input: &SparseState,
    mode: BranchMode,
) -> Result<FlattenCheck> {
    let expected = circuit.simulate(input)?;
    let init = embed_input(flat, input)?;
    let opts = ExploreOptions { mode, merge: false, ..ExploreOptions::default() };
    let ex = explore_from(&flat.program, init, &opts)?;
    let mut min_fidelity: f64 = 1.0;
    for leaf in &ex.leaves {
        let (out, _) = leaf.state.extract(&flat.outputs)?;
        min_fidelity = min_fidelity.min(out.fidelity(&expected)?);
    }
    Ok(FlattenCheck { branches: ex.leaves.len(), min_fidelity, total_probability: ex.total_probability() })
}

/// Exhaustive for ladders and for grids with `n·d ≤ 8`, sampled beyond.
pub fn default_branch_mode(circuit: &CliffordCircuit, samples: usize, seed: u64) -> BranchMode {
    if circuit.shape == Shape::Ladder || circuit.n * circuit.depth <= 8 {
        BranchMode::Exhaustive
    } else {
        BranchMode::Sample { count: samples, seed }
    }
}

/// A random word over `{h, s, cnot}` on the pair `(i, i+1)`.
pub fn random_pair_word<R: Rng>(rng: &mut R, i: usize, len: usize) -> Vec<CliffordGate> {
    (0..len)
        .map(|_| match rng.random_range(0..6) {
            0 => CliffordGate::new("h", &[i]),
            1 => CliffordGate::new("h", &[i + 1]),
            2 => CliffordGate::new("s", &[i]),
            3 => CliffordGate::new("s", &[i + 1]),
            4 => CliffordGate::new("cnot", &[i, i + 1]),
            _ => CliffordGate::new("cnot", &[i + 1, i]),
        })
        .collect()
}

pub fn random_ladder<R: Rng>(rng: &mut R, n: usize, word_len: usize) -> Result<CliffordCircuit> {
    let gates = (0..n.saturating_sub(1)).flat_map(|i| random_pair_word(rng, i, word_len)).collect();
    CliffordCircuit::ladder(n, gates)
}

pub fn random_grid<R: Rng>(rng: &mut R, n: usize, depth: usize, word_len: usize) -> Result<CliffordCircuit> {
    let mut gates = Vec::new();
    for t in 0..depth {
        for i in (0..n.saturating_sub(1)).filter(|i| i % 2 == t % 2) {
            gates.extend(random_pair_word(rng, i, word_len));
        }
    }
    CliffordCircuit::grid(n, depth, gates)
}

/// Product state with independent random Bloch vectors.
pub fn random_product_state<R: Rng>(rng: &mut R, n: usize) -> Result<SparseState> {
    let mut s = SparseState::zero(n)?;
    for q in 0..n {
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let phi = rng.random_range(0.0..2.0 * std::f64::consts::PI);
        s = s.apply_gate(&GateSpec::One(gates::ry(theta)), &[q])?;
        s = s.apply_gate(&GateSpec::One(gates::rz(phi)), &[q])?;
    }
    Ok(s)
}

/// `random_product_state` driven by a ChaCha8 stream seeded with `seed`.
pub fn seeded_product_state(n: usize, seed: u64) -> Result<SparseState> {
    random_product_state(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Cat state on `2n-1` line qubits in one round: the GHZ qubits sit at even
/// positions, and each odd position measures the parity of its neighbours.
pub fn ghz(n: usize) -> Result<Program> {
    if n < 2 {
        return Err(LaqccError::Validation("GHZ needs at least two qubits".into()));
    }
    let sys: Vec<usize> = (0..n).map(|j| 2 * j).collect();
    let par: Vec<usize> = (0..n - 1).map(|j| 2 * j + 1).collect();
    let registers = vec![
        crate::program::Register { name: "ghz".into(), qubits: sys.clone(), role: Role::System },
        crate::program::Register { name: "parity".into(), qubits: par.clone(), role: Role::Ancilla },
    ];
    let mut b = Builder::with_registers(2 * n - 1, registers);
    for &q in &sys {
        b.op(Op::H { q });
    }
    for j in 0..n - 1 {
        b.op(Op::Cnot { control: sys[j], target: par[j] });
    }
    for j in 0..n - 1 {
        b.op(Op::Cnot { control: sys[j + 1], target: par[j] });
    }
    let m = b.measure(&par, "parity");
    // rows 0..n-1: flip GHZ qubit j+1 by the prefix parity; then ancilla resets
    let k = n - 1;
    let mut rows = vec![vec![false; k]; 2 * k];
    for j in 0..k {
        for (i, v) in rows[j].iter_mut().enumerate() {
            *v = i <= j;
        }
        rows[k + j][j] = true;
    }
    let c = b.classical(ClassicalFn::Linear { matrix: BitMatrix::from_rows(&rows)? }, &[m], "fix", DepthClass::Nc1);
    for j in 0..k {
        b.conditional(Op::X { q: sys[j + 1] }, &c, j);
        b.conditional(Op::X { q: par[j] }, &c, k + j);
    }
    b.finish()
}

pub fn ghz_target(n: usize) -> Result<SparseState> {
    SparseState::uniform(n, [0, (1u128 << n) - 1])
}
