//! The acceptance suite: ten end-to-end checks over every protocol, the
//! flattening, the number system, the gate library and the transforms.

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigUint;
use num_complex::Complex64 as C64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{
    check_flattened, default_branch_mode, flatten_grid, flatten_ladder, random_grid, random_ladder,
    random_product_state,
};
use crate::error::{LaqccError, Result};
use crate::macros::{
    add, and_n, commuting_set, count_width, emit_fanout, emit_parallel_commuting, equal, equality, exact,
    exact_scratch, exact_zero, fanout, greaterthan, hamming_weight, or_n, permute, qft, sequential_commuting,
    threshold, threshold_scratch, weighted_threshold, weighted_threshold_scratch, Backend,
};
use crate::numbersys::{
    all_factoradics, birthday_bound_check, check_bijection, comb_to_int,
    factorial, int_to_comb,
};
use crate::program::{
    defer_measurements, execute, explore, explore_from, inverse_fragment, resources, to_postselected, BranchMode,
    Builder, ExploreOptions, Fragment, MeasurementRecord, Op, Policy, Role,
};
use crate::state::{gather, scatter, SparseState};
use crate::stateprep::{
    dicke_factoradic, dicke_small_k, filling_good_probability, ghz_state, iqp_to_laqcc, random_iqp,
    small_k_bound, uniform_plan, uniform_superposition, uniform_width, w_state, Prepared,
};
use crate::verify::{check_leaves, output_distribution, total_variation, verify, FIDELITY_TOL};

/// Rounds of the factoradic Dicke protocol stay within this multiple of
/// `max(1, ⌈log₂ n⌉)`.
pub const FACTORADIC_ROUND_CONSTANT: usize = 1;

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Largest protocol size exercised; smaller values shorten the run.
    pub max_n: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { max_n: 8, seed: 2024 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u64,
    pub limit_ms: u64,
}

pub const CRITERIA: [(&str, u64); 10] = [
    ("ghz", 10_000),
    ("clifford flattening", 60_000),
    ("uniform superposition", 10_000),
    ("w state", 60_000),
    ("dicke small k", 300_000),
    ("dicke factoradic", 300_000),
    ("number system", 30_000),
    ("gate macros", 60_000),
    ("transforms", 30_000),
    ("iqp embedding", 60_000),
];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(LaqccError::Validation(msg()))
    }
}

/// Runs criterion `id` (1-based). Panics inside a check count as failures.
pub fn run_criterion(id: usize, opts: &SuiteOptions) -> CriterionResult {
    let (name, limit_ms) = CRITERIA.get(id.wrapping_sub(1)).copied().unwrap_or(("unknown", 0));
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| match id {
        1 => ghz_criterion(opts),
        2 => clifford_criterion(opts),
        3 => uniform_criterion(opts),
        4 => w_criterion(opts),
        5 => dicke_small_k_criterion(opts),
        6 => factoradic_criterion(opts),
        7 => numbersys_criterion(opts),
        8 => macros_criterion(opts),
        9 => transforms_criterion(opts),
        10 => iqp_criterion(opts),
        _ => Err(LaqccError::Validation(format!("no criterion {id}"))),
    }));
    let elapsed_ms = start.elapsed().as_millis() as u64;
    let (mut passed, mut detail) = match outcome {
        Ok(Ok(d)) => (true, d),
        Ok(Err(e)) => (false, e.to_string()),
        Err(p) => (false, p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())),
    };
    if passed && elapsed_ms > limit_ms {
        passed = false;
        detail = format!("{detail}; took {elapsed_ms} ms, limit {limit_ms} ms");
    }
    CriterionResult { id, name: name.to_string(), passed, detail, elapsed_ms, limit_ms }
}

pub fn run_all(opts: &SuiteOptions) -> Vec<CriterionResult> {
    (1..=CRITERIA.len()).map(|id| run_criterion(id, opts)).collect()
}

fn ghz_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut counts = Vec::new();
    for n in 2..=opts.max_n.min(6) {
        let p = ghz_state(n)?;
        let ex = explore(&p.program, &ExploreOptions { merge: false, ..ExploreOptions::default() })?;
        ensure(ex.leaves.len() == 1 << (n - 1), || format!("GHZ{n}: {} branches", ex.leaves.len()))?;
        let c = check_leaves(&ex, &p.outputs, &p.target)?;
        ensure(c.min_fidelity >= 1.0 - FIDELITY_TOL && c.ancillas_clean, || format!("GHZ{n}: {c:?}"))?;
        ensure((c.total_probability - 1.0).abs() < FIDELITY_TOL, || format!("GHZ{n}: probability {}", c.total_probability))?;
        counts.push(ex.leaves.len());
    }
    Ok(format!("branches per n: {counts:?}"))
}

fn clifford_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut branches = 0usize;
    let max_ladder = opts.max_n.clamp(2, 5);
    for i in 0..100 {
        let n = rng.random_range(2..=max_ladder);
        let c = random_ladder(&mut rng, n, 3)?;
        let flat = flatten_ladder(&c)?;
        let input = random_product_state(&mut rng, n)?;
        let mode = default_branch_mode(&c, 64, opts.seed + i);
        let r = check_flattened(&c, &flat, &input, mode)?;
        ensure(r.min_fidelity >= 1.0 - FIDELITY_TOL, || format!("ladder {i} (n={n}): fidelity {}", r.min_fidelity))?;
        if mode == BranchMode::Exhaustive {
            ensure(r.branches == 1 << (2 * (n - 1)), || format!("ladder {i}: {} branches", r.branches))?;
            ensure((r.total_probability - 1.0).abs() < FIDELITY_TOL, || format!("ladder {i}: probability"))?;
        }
        branches += r.branches;
    }
    for i in 0..20 {
        let c = random_grid(&mut rng, 3, 3, 2)?;
        let flat = flatten_grid(&c)?;
        let input = random_product_state(&mut rng, 3)?;
        let mode = default_branch_mode(&c, 64, opts.seed + 1000 + i);
        let r = check_flattened(&c, &flat, &input, mode)?;
        ensure(r.min_fidelity >= 1.0 - FIDELITY_TOL, || format!("grid {i}: fidelity {}", r.min_fidelity))?;
        branches += r.branches;
    }
    Ok(format!("100 ladders and 20 grids, {branches} branches"))
}

fn uniform_criterion(_opts: &SuiteOptions) -> Result<String> {
    let mut iterations = Vec::new();
    for q in 1..=16u64 {
        let p = uniform_superposition(q)?;
        let r = verify(&p, BranchMode::Exhaustive, 0)?;
        ensure(r.passed, || format!("q={q}: {r:?}"))?;
        let j = uniform_plan(q)?.map_or(0, |p| p.iterations);
        let fraction = q as f64 / (1u64 << uniform_width(q)) as f64;
        ensure(fraction < 0.5 || j <= 1, || format!("q={q}: {j} iterations at fraction {fraction}"))?;
        iterations.push(j);
    }
    Ok(format!("iterations for q=1..16: {iterations:?}"))
}

fn w_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut rounds = BTreeMap::new();
    for n in 2..=opts.max_n.min(8) {
        let p = w_state(n, Backend::Gadget)?;
        let mode = if n <= 4 { BranchMode::Exhaustive } else { BranchMode::Sample { count: 100, seed: opts.seed } };
        let r = verify(&p, mode, opts.seed)?;
        ensure(r.passed && !r.downgraded, || format!("W{n}: {r:?}"))?;
        rounds.insert(n, r.rounds);
    }
    let first = rounds.values().next().copied();
    ensure(rounds.values().all(|&r| Some(r) == first), || format!("rounds vary: {rounds:?}"))?;
    Ok(format!("rounds per n: {rounds:?}"))
}

/// Single output state of a run whose leaves all agree.
fn output_state(p: &Prepared) -> Result<SparseState> {
    let ex = explore(&p.program, &ExploreOptions::default())?;
    let leaf = ex.leaves.first().ok_or_else(|| LaqccError::Validation("no leaves".into()))?;
    Ok(leaf.state.extract(&p.outputs)?.0)
}

fn dicke_small_k_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut out = Vec::new();
    for (n, k) in [(4usize, 1usize), (4, 2), (6, 2), (8, 2)].into_iter().filter(|(n, _)| *n <= opts.max_n) {
        let p = dicke_small_k(n, k, Backend::Gadget)?;
        let r = verify(&p, BranchMode::Exhaustive, opts.seed)?;
        ensure(r.passed && r.exhaustive, || format!("D({n},{k}): {r:?}"))?;
        let measured = filling_good_probability(n, k)?;
        let exact: f64 = (0..k).map(|i| (n - i) as f64 / n as f64).product();
        let bound = (-2.0 * (k * k) as f64 / n as f64).exp();
        ensure((measured - exact).abs() < 1e-9, || format!("D({n},{k}): good probability {measured} vs {exact}"))?;
        ensure(measured > bound, || format!("D({n},{k}): {measured} not above {bound}"))?;
        out.push(format!("({n},{k}) p={measured:.4} rounds={}", r.rounds));
    }
    if opts.max_n >= 4 {
        // every ordering outcome, one branch each
        let p = dicke_small_k(4, 2, Backend::Semantic)?;
        let ex = explore(&p.program, &ExploreOptions { merge: false, ..ExploreOptions::default() })?;
        let outcomes: HashSet<Vec<bool>> = ex
            .leaves
            .iter()
            .flat_map(|l| l.record.entries.iter().filter(|e| e.label.starts_with("rank")))
            .map(|e| e.outcome.clone())
            .collect();
        ensure(ex.leaves.len() == 2 && outcomes.len() == 2, || format!("D(4,2): {} ordering branches", ex.leaves.len()))?;
        let c = check_leaves(&ex, &p.outputs, &p.target)?;
        ensure(c.min_fidelity >= 1.0 - FIDELITY_TOL && c.ancillas_clean, || format!("D(4,2) orderings: {c:?}"))?;
        for l in &ex.leaves {
            ensure((l.probability - 0.5).abs() < 1e-9, || format!("ordering probability {}", l.probability))?;
        }
    }
    Ok(out.join(", "))
}

fn factoradic_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut max_rounds = BTreeMap::new();
    for n in 1..=opts.max_n.min(6) {
        let bound = FACTORADIC_ROUND_CONSTANT * uniform_width(n as u64).max(1);
        for k in 0..=n {
            let p = dicke_factoradic(n, k)?;
            let r = verify(&p, BranchMode::Exhaustive, opts.seed)?;
            ensure(r.passed, || format!("D({n},{k}): {r:?}"))?;
            ensure(r.rounds <= bound, || format!("D({n},{k}): {} rounds above {bound}", r.rounds))?;
            let e = max_rounds.entry(n).or_insert(0);
            *e = (*e).max(r.rounds);
            if n >= 2 && (1..=small_k_bound(n)).contains(&k) {
                let a = output_state(&p)?;
                let b = output_state(&dicke_small_k(n, k, Backend::Semantic)?)?;
                let f = a.fidelity(&b)?;
                ensure(f >= 1.0 - FIDELITY_TOL, || format!("D({n},{k}): methods differ, overlap {f}"))?;
            }
        }
    }
    for n in [4usize, 8] {
        let r = resources(&dicke_factoradic(n, n / 2)?.program).rounds;
        let bound = FACTORADIC_ROUND_CONSTANT * uniform_width(n as u64);
        ensure(r <= bound, || format!("D({n},{}): {r} rounds above {bound}", n / 2))?;
    }
    Ok(format!("max rounds per n: {max_rounds:?}"))
}

fn numbersys_criterion(_opts: &SuiteOptions) -> Result<String> {
    for n in 1..=8usize {
        let ys: Vec<_> = all_factoradics(n).collect();
        ensure(ys.len() as u128 == factorial(n).to_u128().unwrap_or(0), || format!("{n}: factoradic count"))?;
        for k in 0..=n {
            let b = check_bijection(n, k)?;
            ensure(b.holds, || format!("split at n={n}, k={k}: {b:?}"))?;
            // combinatorial index against lexicographic rank
            let lex: Vec<u128> = (0..1u128 << n).filter(|s| s.count_ones() as usize == k).collect();
            for (m, &s) in lex.iter().enumerate() {
                let c = int_to_comb(&BigUint::from(m), k, n)?;
                ensure(c.to_bits() == s, || format!("rank {m} of C({n},{k})"))?;
                ensure(comb_to_int(&c) == BigUint::from(m), || format!("index of rank {m}"))?;
            }
        }
    }
    for n in 1..=64usize {
        for k in (0..n).filter(|k| 2 * k < n) {
            let b = birthday_bound_check(n, k)?;
            let direct: f64 = (0..k).map(|i| (n - i) as f64 / n as f64).product();
            ensure(b.holds && (b.lhs - direct).abs() < 1e-12, || format!("birthday bound at n={n}, k={k}"))?;
        }
    }
    Ok("n <= 8 exhaustive, birthday bound n <= 64".into())
}

/// Runs `frag` on every basis value of `data` with `scratch` at 0 and checks
/// the result is a basis state, the map is injective, and scratch returns to 0.
fn check_permutation(name: &str, frag: &[Op], data: &[usize], scratch: &[usize]) -> Result<()> {
    let width = frag.iter().flat_map(|op| op.qubits()).chain(data.iter().copied()).chain(scratch.iter().copied()).max().map_or(0, |m| m + 1);
    let mut images = HashSet::new();
    for v in 0..1u128 << data.len() {
        let mut s = SparseState::basis(width, scatter(0, data, v))?;
        for op in frag {
            op.apply(&mut s);
        }
        let e = s.entries();
        ensure(e.len() == 1 && (e[0].1.norm() - 1.0).abs() < 1e-9, || format!("{name}: input {v} spreads"))?;
        ensure(gather(e[0].0, scratch) == 0, || format!("{name}: scratch dirty on input {v}"))?;
        ensure(images.insert(e[0].0), || format!("{name}: not injective"))?;
    }
    Ok(())
}

fn range(a: usize, n: usize) -> Vec<usize> {
    (a..a + n).collect()
}

fn macros_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut checked = 0;
    let mut perm = |name: &str, f: Fragment, data: Vec<usize>, scratch: Vec<usize>| -> Result<()> {
        checked += 1;
        check_permutation(name, &f, &data, &scratch)
    };
    for n in 1..=4usize {
        let x = range(0, n);
        let out = n;
        let with_out = range(0, n + 1);
        if n >= 2 {
            perm("fanout", fanout(0, &x[1..])?, x.clone(), vec![])?;
        }
        perm("or", or_n(&x, out)?, with_out.clone(), vec![])?;
        perm("and", and_n(&x, out)?, with_out.clone(), vec![])?;
        perm("exact_zero", exact_zero(&x, out)?, with_out.clone(), vec![])?;
        for v in 0..1u64 << n {
            perm("equal", equal(&x, v, out)?, with_out.clone(), vec![])?;
        }
        let cw = count_width(n as u64);
        let cnt = range(n, cw);
        perm("hammingweight", hamming_weight(&x, &cnt)?, range(0, n + cw), vec![])?;
        for t in 0..=n {
            let s = range(n + 1, exact_scratch(n));
            perm("exact", exact(&x, t, out, &s)?, with_out.clone(), s)?;
            let s = range(n + 1, threshold_scratch(n, t));
            perm("threshold", threshold(&x, t, out, &s)?, with_out.clone(), s)?;
        }
        let weights = [1u64, 2, 1, 3];
        for t in 0..=4u64 {
            let s = range(n + 1, weighted_threshold_scratch(&weights[..n], t));
            perm("weighted_threshold", weighted_threshold(&x, &weights[..n], t, out, &s)?, with_out.clone(), s)?;
        }
        if n <= 2 {
            let (a, b) = (range(0, n), range(n, n));
            perm("add", add(&a, &b)?, range(0, 2 * n), vec![])?;
            perm("equality", equality(&a, &b, 2 * n)?, range(0, 2 * n + 1), vec![])?;
            perm("greaterthan", greaterthan(&a, &b, 2 * n, 2 * n + 1)?, [range(0, 2 * n), vec![2 * n + 1]].concat(), vec![2 * n])?;
        }
        if n >= 2 {
            let regs: Vec<Vec<usize>> = x.iter().map(|&q| vec![q]).collect();
            let p: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
            perm("permute", permute(&regs, &p)?, x.clone(), vec![])?;
        }
    }

    // QFT round trip on random states
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for n in 1..=4usize {
        let reg = range(0, n);
        let s0 = random_product_state(&mut rng, n)?;
        let mut s = s0.clone();
        let f = qft(&reg);
        for op in f.iter().chain(inverse_fragment(&f).iter()) {
            op.apply(&mut s);
        }
        let fid = s.fidelity(&s0)?;
        ensure(fid >= 1.0 - FIDELITY_TOL, || format!("QFT round trip on {n} qubits: {fid}"))?;
    }

    // gadget fanout against the semantic map on every branch
    for m in 1..=3usize {
        for v in 0..1u128 << m {
            let mut b = Builder::new();
            let q = b.alloc("q", m + 1, Role::System);
            emit_fanout(&mut b, Backend::Gadget, q[0], &q[1..])?;
            let p = b.finish()?;
            let mut input = SparseState::basis(m + 1, v << 1)?;
            Op::H { q: 0 }.apply(&mut input);
            let mut want = input.clone();
            Op::Fanout { control: 0, targets: q[1..].to_vec() }.apply(&mut want);
            let ex = explore_from(&p, input.with_extra_qubits(p.qubits - m - 1)?, &ExploreOptions { merge: false, ..ExploreOptions::default() })?;
            ensure(ex.leaves.len() == 1 << (2 * m + 1), || format!("fanout m={m}: {} branches", ex.leaves.len()))?;
            let c = check_leaves(&ex, &q, &want)?;
            ensure(c.min_fidelity >= 1.0 - FIDELITY_TOL && c.ancillas_clean, || format!("fanout m={m}: {c:?}"))?;
        }
    }

    // commuting gates: controlled X-basis phases on one target
    let xphase = |t: f64| -> Vec<Vec<C64>> {
        let (a, b) = (C64::new(1.0, 0.0), C64::from_polar(1.0, t));
        vec![vec![(a + b) * 0.5, (a - b) * 0.5], vec![(a - b) * 0.5, (a + b) * 0.5]]
    };
    for k in 2..=3usize {
        let target = vec![k];
        let controls = range(0, k);
        let gates: Vec<_> = (0..k).map(|i| xphase(0.7 + i as f64)).collect();
        let set = commuting_set(&target, &gates, vec![Op::H { q: k }])?;
        let seq = sequential_commuting(&controls, &set)?;
        let mut b = Builder::new();
        b.alloc("q", k + 1, Role::System);
        emit_parallel_commuting(&mut b, Backend::Gadget, &controls, &set)?;
        let p = b.finish()?;
        for v in 0..1u128 << (k + 1) {
            let mut input = SparseState::basis(k + 1, v)?;
            for q in 0..=k {
                Op::H { q }.apply(&mut input);
            }
            let mut want = input.clone();
            for op in &seq {
                op.apply(&mut want);
            }
            let ex = explore_from(&p, input.with_extra_qubits(p.qubits - k - 1)?, &ExploreOptions { merge: false, ..ExploreOptions::default() })?;
            let c = check_leaves(&ex, &range(0, k + 1), &want)?;
            ensure(c.min_fidelity >= 1.0 - FIDELITY_TOL && c.ancillas_clean, || format!("commuting k={k}: {c:?}"))?;
        }
    }
    Ok(format!("{checked} permutation checks, QFT, fanout and commuting gadgets"))
}

/// Every transcript for small measurement counts, otherwise a few seeded ones.
fn transcripts(p: &Prepared, seed: u64) -> Result<Vec<MeasurementRecord>> {
    if p.program.measurement_count() <= 4 {
        let ex = explore(&p.program, &ExploreOptions { merge: false, ..ExploreOptions::default() })?;
        return Ok(ex.leaves.into_iter().map(|l| l.record).collect());
    }
    (0..3).map(|i| Ok(execute(&p.program, &Policy::Seeded(seed + i))?.record)).collect()
}

fn transforms_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut done = Vec::new();
    for p in [ghz_state(3)?, w_state(4, Backend::Gadget)?, uniform_superposition(3)?] {
        let name = p.spec.name();
        // deferred: copies collapse right after they are written
        let d = defer_measurements(&p.program)?;
        let eo = ExploreOptions {
            collapse: d.copies.clone(),
            canonicalize_dead: true,
            keep: p.outputs.clone(),
            ..ExploreOptions::default()
        };
        let ex = explore(&d.program, &eo)?;
        let c = check_leaves(&ex, &p.outputs, &p.target)?;
        ensure(c.min_fidelity >= 1.0 - FIDELITY_TOL, || format!("{name} deferred: {c:?}"))?;
        ensure((c.total_probability - 1.0).abs() < FIDELITY_TOL, || format!("{name} deferred probability"))?;

        // postselected: agreement flags projected to 1
        let ts = transcripts(&p, opts.seed)?;
        for t in &ts {
            let ps = to_postselected(&p.program, t)?;
            let mut forced: Vec<(usize, bool)> = ps.equal_flags.iter().map(|&f| (f, true)).collect();
            if ps.equal_flags.is_empty() {
                forced.push((ps.flag, true));
            }
            let eo = ExploreOptions { forced, keep: p.outputs.clone(), ..ExploreOptions::default() };
            let ex = explore(&ps.program, &eo)?;
            let c = check_leaves(&ex, &p.outputs, &p.target)?;
            ensure(c.min_fidelity >= 1.0 - FIDELITY_TOL, || format!("{name} postselected: {c:?}"))?;
            let flag_p: f64 = ex
                .leaves
                .iter()
                .map(|l| l.probability * l.state.outcome_distribution(&[ps.flag]).map(|d| d.get(&1).copied().unwrap_or(0.0)).unwrap_or(0.0))
                .sum();
            let want = t.probability();
            ensure((flag_p - want).abs() < 1e-9 && (flag_p - want).abs() <= 1e-6 * want, || {
                format!("{name}: flag probability {flag_p} vs transcript {want}")
            })?;
        }
        done.push(format!("{name} ({} transcripts)", ts.len()));
    }
    Ok(done.join(", "))
}

fn iqp_criterion(opts: &SuiteOptions) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x1a9);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let n = rng.random_range(2..=opts.max_n.clamp(2, 5));
        let g = rng.random_range(1..=6);
        let circuit = random_iqp(&mut rng, n, g);
        let p = iqp_to_laqcc(&circuit, Backend::Gadget)?;
        let ex = explore(&p.program, &ExploreOptions::default())?;
        let got = output_distribution(&ex, &p.outputs)?;
        let want = circuit.distribution()?;
        let tv = total_variation(&got, &want);
        ensure(tv <= 1e-9, || format!("circuit {i} (n={n}, {g} gates): total variation {tv}"))?;
        worst = worst.max(tv);
    }
    Ok(format!("20 circuits, worst total variation {worst:.2e}"))
}
