//! Resource accounting: width, scheduled depth, feed-forward rounds and the
//! table-charged width of macros.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{Condition, Layer, Op, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthClass {
    Nc1,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthForm {
    Const,
    N,
    NLogN,
    N2,
    N2LogN,
    N3LogN,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundsForm {
    Zero,
    LogN,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeEntry {
    pub form: WidthForm,
    pub coef: f64,
    pub depth: usize,
    pub rounds: RoundsForm,
}

pub type ChargeTable = HashMap<String, ChargeEntry>;

/// `⌈log₂ n⌉`, at least 1.
pub fn log2_ceil(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

impl ChargeEntry {
    pub fn width(&self, n: usize) -> usize {
        let (nf, l) = (n as f64, log2_ceil(n) as f64);
        let base = match self.form {
            WidthForm::Const => 1.0,
            WidthForm::N => nf,
            WidthForm::NLogN => nf * l,
            WidthForm::N2 => nf * nf,
            WidthForm::N2LogN => nf * nf * l,
            WidthForm::N3LogN => nf * nf * nf * l,
        };
        (self.coef * base).ceil() as usize
    }

    pub fn rounds(&self, n: usize) -> usize {
        match self.rounds {
            RoundsForm::Zero => 0,
            RoundsForm::LogN if n <= 1 => 0,
            RoundsForm::LogN => log2_ceil(n),
        }
    }
}

/// The shipped charge table (`config/charges.json`).
pub fn charge_table() -> &'static ChargeTable {
    static TABLE: OnceLock<ChargeTable> = OnceLock::new();
    TABLE.get_or_init(|| serde_json::from_str(include_str!("../../config/charges.json")).expect("charge table parses"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub width: usize,
    /// As-soon-as-possible scheduled depth; a macro occupies its charged depth.
    pub quantum_depth: usize,
    /// Longest chain of measurement → classical → controlled-operation
    /// dependencies, plus rounds charged to macros.
    pub rounds: usize,
    /// The same chain without macro charges.
    pub feedforward_rounds: usize,
    pub classical_depth_class: Option<DepthClass>,
    /// Width plus the peak summed charge of macros running at the same time.
    pub charged_width: usize,
    pub measurements: usize,
    pub macros: usize,
}

pub fn resources(program: &Program) -> ResourceProfile {
    resources_with(program, charge_table())
}

pub fn resources_with(program: &Program, table: &ChargeTable) -> ResourceProfile {
    let n = program.qubits;
    let mut time = vec![0usize; n];
    let mut rnd = vec![0usize; n];
    let mut ff = vec![0usize; n];
    let mut label_time: BTreeMap<&str, usize> = BTreeMap::new();
    let mut label_round: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut events: Vec<(usize, usize, usize)> = Vec::new();
    let mut class = None;
    let mut measurements = 0;
    let mut macros = 0;
    let cond_info = |c: &Option<Condition>, lt: &BTreeMap<&str, usize>, lr: &BTreeMap<&str, (usize, usize)>| match c {
        Some(c) => (
            lt.get(c.source.as_str()).copied().unwrap_or(0),
            lr.get(c.source.as_str()).copied().unwrap_or((0, 0)),
        ),
        None => (0, (0, 0)),
    };
    for layer in &program.layers {
        match layer {
            Layer::Quantum { gates, condition } => {
                let (lt, (lr, lf)) = cond_info(condition, &label_time, &label_round);
                for g in gates {
                    let (gt, (gr, gf)) = cond_info(&g.condition, &label_time, &label_round);
                    let qs = g.op.qubits();
                    let start = qs.iter().map(|&q| time[q]).max().unwrap_or(0).max(lt).max(gt);
                    let charge = if g.op.is_primitive() { None } else { table.get(g.op.name()) };
                    let (depth, extra_rounds) = match (&g.op, charge) {
                        (_, Some(c)) => (c.depth, c.rounds(g.op.size())),
                        (Op::Controlled { .. }, None) => (1, 0),
                        _ => (1, 0),
                    };
                    if let Some(c) = charge {
                        macros += 1;
                        events.push((start, start + depth, c.width(g.op.size())));
                    }
                    let r = qs.iter().map(|&q| rnd[q]).max().unwrap_or(0).max(lr).max(gr) + extra_rounds;
                    let f = qs.iter().map(|&q| ff[q]).max().unwrap_or(0).max(lf).max(gf);
                    for &q in &qs {
                        time[q] = start + depth;
                        rnd[q] = r;
                        ff[q] = f;
                    }
                }
            }
            Layer::Measure { qubits, label } => {
                measurements += 1;
                let t = qubits.iter().map(|&q| time[q]).max().unwrap_or(0);
                let r = qubits.iter().map(|&q| rnd[q]).max().unwrap_or(0);
                let f = qubits.iter().map(|&q| ff[q]).max().unwrap_or(0);
                label_time.insert(label, t);
                label_round.insert(label, (r, f));
            }
            Layer::Classical { inputs, output, class: c, .. } => {
                class = Some(class.map_or(*c, |old: DepthClass| old.max(*c)));
                let t = inputs.iter().map(|l| label_time.get(l.as_str()).copied().unwrap_or(0)).max().unwrap_or(0);
                let (r, f) = inputs
                    .iter()
                    .map(|l| label_round.get(l.as_str()).copied().unwrap_or((0, 0)))
                    .fold((0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
                label_time.insert(output, t);
                label_round.insert(output, (r + 1, f + 1));
            }
        }
    }
    let mut points: Vec<(usize, i64)> = Vec::new();
    for &(s, e, w) in &events {
        points.push((s, w as i64));
        points.push((e, -(w as i64)));
    }
    // ends sort before starts at the same time step
    points.sort_by_key(|&(t, d)| (t, d));
    let (mut cur, mut peak) = (0i64, 0i64);
    for (_, d) in points {
        cur += d;
        peak = peak.max(cur);
    }
    ResourceProfile {
        width: n,
        quantum_depth: time.iter().copied().max().unwrap_or(0),
        rounds: rnd.iter().copied().max().unwrap_or(0),
        feedforward_rounds: ff.iter().copied().max().unwrap_or(0),
        classical_depth_class: class,
        charged_width: n + peak as usize,
        measurements,
        macros,
    }
}
