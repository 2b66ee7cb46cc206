//! Branch-by-branch verification of prepared states and the report format.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{LaqccError, Result};
use crate::program::{explore, explore_from, resources, BranchMode, Exploration, ExploreOptions, Program};
use crate::state::SparseState;
use crate::stateprep::Prepared;

/// Outputs below this fidelity fail.
pub const FIDELITY_TOL: f64 = 1e-9;

/// Samples taken when an exhaustive run would exceed the frontier.
pub const FALLBACK_SAMPLES: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    /// Smallest `|⟨target|output⟩|` over checked branches.
    pub fidelity: f64,
    pub width: usize,
    pub charged_width: usize,
    pub quantum_depth: usize,
    pub rounds: usize,
    pub support_max: usize,
    /// Measurement paths covered: all of them when exhaustive, else the sample count.
    pub branches_checked: u128,
    pub exhaustive: bool,
    /// Exhaustive was requested but the branch count forced sampling.
    pub downgraded: bool,
    /// Summed probability of the checked leaves; 1 when exhaustive.
    pub total_probability: f64,
    pub ancillas_clean: bool,
    pub passed: bool,
    pub seed: u64,
    pub wall_time_ms: u64,
}

/// Per-leaf comparison of the outputs with a target.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafCheck {
    pub min_fidelity: f64,
    pub ancillas_clean: bool,
    pub total_probability: f64,
}

/// Compares every leaf's `outputs` with `target`. A leaf is clean when the
/// outputs factor out and every other qubit reads 0.
pub fn check_leaves(ex: &Exploration, outputs: &[usize], target: &SparseState) -> Result<LeafCheck> {
    let mut min_fidelity: f64 = 1.0;
    let mut clean = true;
    for leaf in &ex.leaves {
        match leaf.state.extract(outputs) {
            Ok((out, rest)) => {
                min_fidelity = min_fidelity.min(out.fidelity(target)?);
                clean &= rest == 0;
            }
            Err(LaqccError::Entangled(_)) => {
                min_fidelity = min_fidelity.min(leaf.state.reduced_fidelity(outputs, target)?);
                clean = false;
            }
            Err(e) => return Err(e),
        }
    }
    if ex.leaves.is_empty() {
        min_fidelity = 0.0;
    }
    Ok(LeafCheck { min_fidelity, ancillas_clean: clean, total_probability: ex.total_probability() })
}

/// Explores `program`, dropping to `FALLBACK_SAMPLES` seeded samples when an
/// exhaustive run outgrows the frontier. Returns the exploration and whether
/// it was downgraded.
pub fn explore_with_fallback(
    program: &Program,
    init: Option<SparseState>,
    opts: &ExploreOptions,
    seed: u64,
) -> Result<(Exploration, bool)> {
    let run = |o: &ExploreOptions| match &init {
        Some(s) => explore_from(program, s.clone(), o),
        None => explore(program, o),
    };
    match run(opts) {
        Err(LaqccError::FrontierExceeded(_)) if opts.mode == BranchMode::Exhaustive => {
            let o = ExploreOptions { mode: BranchMode::Sample { count: FALLBACK_SAMPLES, seed }, ..opts.clone() };
            Ok((run(&o)?, true))
        }
        r => Ok((r?, false)),
    }
}

fn parameters(p: &Prepared) -> BTreeMap<String, serde_json::Value> {
    let mut m = match serde_json::to_value(&p.spec) {
        Ok(serde_json::Value::Object(o)) => o.into_iter().collect::<BTreeMap<_, _>>(),
        _ => BTreeMap::new(),
    };
    m.remove("name");
    m
}

/// Runs the program over the requested branches and compares every leaf
/// with the target.
pub fn verify(prepared: &Prepared, mode: BranchMode, seed: u64) -> Result<ProtocolReport> {
    let start = Instant::now();
    let res = resources(&prepared.program);
    let opts = ExploreOptions { mode, ..ExploreOptions::default() };
    let (ex, downgraded) = explore_with_fallback(&prepared.program, None, &opts, seed)?;
    let check = check_leaves(&ex, &prepared.outputs, &prepared.target)?;
    let exhaustive = mode == BranchMode::Exhaustive && !downgraded;
    let branches_checked = if exhaustive {
        ex.paths
    } else {
        match (mode, downgraded) {
            (BranchMode::Sample { count, .. }, false) => count as u128,
            _ => FALLBACK_SAMPLES as u128,
        }
    };
    let probability_ok = !exhaustive || (check.total_probability - 1.0).abs() < FIDELITY_TOL;
    let passed = check.min_fidelity >= 1.0 - FIDELITY_TOL && check.ancillas_clean && probability_ok;
    Ok(ProtocolReport {
        protocol: prepared.spec.name().to_string(),
        parameters: parameters(prepared),
        fidelity: check.min_fidelity.min(1.0),
        width: res.width,
        charged_width: res.charged_width,
        quantum_depth: res.quantum_depth,
        rounds: res.rounds,
        support_max: ex.support_max,
        branches_checked,
        exhaustive,
        downgraded,
        total_probability: check.total_probability,
        ancillas_clean: check.ancillas_clean,
        passed,
        seed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

/// Outcome distribution of `outputs` over all leaves, indexed by value.
pub fn output_distribution(ex: &Exploration, outputs: &[usize]) -> Result<Vec<f64>> {
    if outputs.len() > 20 {
        return Err(LaqccError::Validation("distribution over more than 20 qubits".into()));
    }
    let mut p = vec![0.0; 1 << outputs.len()];
    for leaf in &ex.leaves {
        for (v, q) in leaf.state.outcome_distribution(outputs)? {
            p[v as usize] += leaf.probability * q;
        }
    }
    Ok(p)
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
