//! Randomized properties of the simulator, the program executor and its
//! rewrites, and the amplifier.

use std::collections::BTreeMap;

use laqcc::amplifier::{amplify, plan};
use laqcc::program::{
    defer_measurements, execute, explore, resources, to_postselected, BranchMode, Builder, ClassicalFn, DepthClass,
    ExploreOptions, Op, Policy, Program, Role,
};
use laqcc::state::{OutcomePolicy, SparseState};
use laqcc::verify::{output_distribution, total_variation};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gate<R: Rng>(rng: &mut R, n: usize) -> Op {
    let q = rng.random_range(0..n);
    let other = |rng: &mut R| {
        let mut p = rng.random_range(0..n - 1);
        if p >= q {
            p += 1;
        }
        p
    };
    match rng.random_range(0..if n > 1 { 9 } else { 5 }) {
        0 => Op::H { q },
        1 => Op::T { q },
        2 => Op::S { q },
        3 => Op::Ry { q, theta: rng.random_range(0.0..6.3) },
        4 => Op::Rz { q, theta: rng.random_range(0.0..6.3) },
        5 => Op::Cnot { control: q, target: other(rng) },
        6 => Op::Cz { a: q, b: other(rng) },
        7 => Op::Swap { a: q, b: other(rng) },
        _ => Op::Fanout { control: q, targets: vec![other(rng)] },
    }
}

fn random_permutation_gate<R: Rng>(rng: &mut R, n: usize) -> Op {
    let mut qs: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let j = rng.random_range(i..n);
        qs.swap(i, j);
    }
    let h = n / 2;
    match rng.random_range(0..6) {
        0 => Op::X { q: qs[0] },
        1 => Op::Cnot { control: qs[0], target: qs[1] },
        2 => Op::Swap { a: qs[0], b: qs[1] },
        3 => Op::Fanout { control: qs[0], targets: qs[1..].to_vec() },
        4 => Op::Add { x: qs[..h].to_vec(), y: qs[h..2 * h].to_vec() },
        _ => Op::Permute { registers: vec![vec![qs[0]], vec![qs[1]], vec![qs[2]]], perm: vec![2, 0, 1] },
    }
}

fn random_state<R: Rng>(rng: &mut R, n: usize, support: usize) -> SparseState {
    let mut m = BTreeMap::new();
    for _ in 0..support {
        m.insert(rng.random_range(0..1u128 << n), C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    }
    let norm = m.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    SparseState::from_amplitudes(n, m.into_iter().map(|(i, a)| (i, a / norm))).unwrap()
}

#[test]
fn norm_drift_over_ten_thousand_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut s = SparseState::zero(6).unwrap();
    for _ in 0..10_000 {
        random_gate(&mut rng, 6).apply(&mut s);
    }
    assert!((s.norm_sqr() - 1.0).abs() < 1e-9, "{}", s.norm_sqr());
}

/// A program of random gates interleaved with measurements, table lookups on
/// the outcomes, and gates conditioned on the looked-up bits.
fn random_program(seed: u64, n: usize) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::new();
    let q = b.alloc("sys", n, Role::System);
    for _ in 0..rng.random_range(1..=2) {
        for _ in 0..rng.random_range(2..=5) {
            b.op(random_gate(&mut rng, n));
        }
        let width = rng.random_range(1..=n.min(2));
        let mut measured: Vec<usize> = q.clone();
        for i in 0..width {
            let j = rng.random_range(i..n);
            measured.swap(i, j);
        }
        measured.truncate(width);
        let label = b.measure(&measured, "m");
        let out_bits = rng.random_range(1..=2);
        let table = (0..1u64 << width).map(|_| rng.random_range(0..1u64 << out_bits)).collect();
        let c = b.classical(
            ClassicalFn::Table { input_bits: width, output_bits: out_bits, table },
            &[label],
            "c",
            DepthClass::Nc1,
        );
        for bit in 0..out_bits {
            let t = rng.random_range(0..n);
            let op = match rng.random_range(0..3) {
                0 => Op::X { q: t },
                1 => Op::H { q: t },
                _ => Op::Ry { q: t, theta: rng.random_range(0.0..6.3) },
            };
            b.conditional(op, &c, bit);
        }
    }
    for _ in 0..rng.random_range(0..=3) {
        b.op(random_gate(&mut rng, n));
    }
    b.finish().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gates_preserve_norm(seed in any::<u64>(), n in 1usize..=5, len in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = random_state(&mut rng, n, 1 << n);
        for _ in 0..len {
            random_gate(&mut rng, n).apply(&mut s);
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn basis_permutations_keep_support(seed in any::<u64>(), n in 3usize..=6, support in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = random_state(&mut rng, n, support);
        let before = s.support();
        let mut probs: Vec<f64> = s.entries().iter().map(|(_, a)| a.norm_sqr()).collect();
        for _ in 0..8 {
            random_permutation_gate(&mut rng, n).apply(&mut s);
            prop_assert!(s.support() <= before);
        }
        prop_assert_eq!(s.support(), before);
        let mut after: Vec<f64> = s.entries().iter().map(|(_, a)| a.norm_sqr()).collect();
        probs.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        prop_assert!(probs.iter().zip(&after).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn branches_recombine_to_marginal(seed in any::<u64>(), n in 1usize..=6, support in 1usize..40, mask in 1u32..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng, n, support);
        let qubits: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        prop_assume!(!qubits.is_empty());
        let mut recombined: BTreeMap<u128, f64> = BTreeMap::new();
        for k in s.branch_enumerate(&qubits).unwrap() {
            for (i, a) in k.state.entries() {
                *recombined.entry(i).or_default() += k.probability * a.norm_sqr();
            }
        }
        for (i, a) in s.entries() {
            prop_assert!((recombined.remove(&i).unwrap_or(0.0) - a.norm_sqr()).abs() < 1e-12);
        }
        prop_assert!(recombined.values().all(|p| *p < 1e-12));
    }

    #[test]
    fn deferring_keeps_the_output_distribution(seed in any::<u64>(), n in 2usize..=4) {
        let p = random_program(seed, n);
        let sys: Vec<usize> = (0..n).collect();
        let before = output_distribution(&explore(&p, &ExploreOptions::default()).unwrap(), &sys).unwrap();
        let d = defer_measurements(&p).unwrap();
        prop_assert_eq!(d.copies.len(), p.layers.iter().map(|l| match l {
            laqcc::program::Layer::Measure { qubits, .. } => qubits.len(),
            _ => 0,
        }).sum::<usize>());
        let after = output_distribution(&explore(&d.program, &ExploreOptions::default()).unwrap(), &d.system).unwrap();
        prop_assert!(total_variation(&before, &after) < 1e-9);
    }

    #[test]
    fn postselection_matches_the_transcript(seed in any::<u64>(), n in 2usize..=4, run in 0u64..8) {
        let p = random_program(seed, n);
        let sys: Vec<usize> = (0..n).collect();
        let exec = execute(&p, &Policy::Seeded(run)).unwrap();
        let ps = to_postselected(&p, &exec.record).unwrap();
        let forced = ps.equal_flags.iter().map(|&f| (f, true)).collect();
        let ex = explore(&ps.program, &ExploreOptions { forced, keep: sys.clone(), ..ExploreOptions::default() }).unwrap();
        let mut flag_p = 0.0;
        for leaf in &ex.leaves {
            prop_assert!(leaf.state.reduced_fidelity(&sys, &exec.state).unwrap() > 1.0 - 1e-9);
            flag_p += leaf.probability * leaf.state.outcome_distribution(&[ps.flag]).unwrap().get(&1).copied().unwrap_or(0.0);
        }
        prop_assert!((flag_p - exec.record.probability()).abs() < 1e-9);
    }

    #[test]
    fn sampled_paths_replay_under_forced_outcomes(seed in any::<u64>(), n in 2usize..=4, sample_seed in any::<u64>()) {
        let p = random_program(seed, n);
        let opts = ExploreOptions { mode: BranchMode::Sample { count: 6, seed: sample_seed }, ..ExploreOptions::default() };
        let ex = explore(&p, &opts).unwrap();
        prop_assert_eq!(ex.leaves.len(), 6);
        for leaf in &ex.leaves {
            let again = execute(&p, &Policy::Forced(leaf.record.outcomes())).unwrap();
            prop_assert!((again.state.fidelity(&leaf.state).unwrap() - 1.0).abs() < 1e-9);
            prop_assert!((again.record.probability() - leaf.probability).abs() < 1e-12);
        }
        // the same seed gives the same transcripts
        let twice = explore(&p, &opts).unwrap();
        prop_assert!(ex.leaves.iter().zip(&twice.leaves).all(|(a, b)| a.record == b.record));
    }

    #[test]
    fn amplified_circuit_reaches_the_good_set(n_bits in 1usize..=5, good_frac in 0.0f64..1.0) {
        let ambient = 1u64 << n_bits;
        let good = ((good_frac * ambient as f64) as u64).clamp(1, ambient);
        let reg: Vec<usize> = (0..n_bits).collect();
        let prep: Vec<Op> = reg.iter().map(|&q| Op::H { q }).collect();
        let table = (0..ambient).map(|v| (v < good) as u64).collect();
        let oracle = vec![Op::Oracle { inputs: reg.clone(), outputs: vec![n_bits], table }];
        let pl = plan(ambient, good).unwrap();
        if 2 * good >= ambient {
            prop_assert!(pl.iterations <= 1);
        }
        let frag = amplify(&prep, &reg, &oracle, n_bits, n_bits + 1, &pl).unwrap();
        let mut s = SparseState::zero(n_bits + 2).unwrap();
        for op in &frag {
            op.apply(&mut s);
        }
        let mut p_good = 0.0;
        for (i, a) in s.entries() {
            if ((i & (ambient as u128 - 1)) as u64) < good && i >> n_bits == 0 {
                p_good += a.norm_sqr();
            }
        }
        prop_assert!(p_good > 1.0 - 1e-9, "{}/{}: {}", good, ambient, p_good);
    }
}

#[test]
fn forced_measurement_of_impossible_outcome_fails() {
    let s = SparseState::zero(2).unwrap();
    assert!(s.measure(&[0], &OutcomePolicy::Forced(vec![true])).is_err());
}

/// Charged width of a program holding a single macro, minus its own width.
fn macro_charge(op: Op, qubits: usize) -> usize {
    let mut b = Builder::new();
    b.alloc("r", qubits, Role::System);
    b.op(op);
    let r = resources(&b.finish().unwrap());
    r.charged_width - r.width
}

#[test]
fn charged_widths_scale_with_their_form() {
    let or = |n: usize| macro_charge(Op::Or { inputs: (0..n).collect(), out: n }, n + 1);
    let add = |n: usize| macro_charge(Op::Add { x: (0..n).collect(), y: (n..2 * n).collect() }, 2 * n);
    let fan = |n: usize| macro_charge(Op::Fanout { control: 0, targets: (1..=n).collect() }, n + 1);
    let ratio = |f: &dyn Fn(usize) -> usize, n: usize| f(2 * n) as f64 / f(n) as f64;
    // n log n at n = 16 → 32 doubles n and raises ⌈log₂⌉ from 4 to 5 (plus one
    // output qubit on each side)
    let r = ratio(&or, 16);
    assert!((2.0..=2.8).contains(&r), "or {r}");
    let r = ratio(&add, 8);
    assert!((3.5..=4.5).contains(&r), "add {r}");
    let r = ratio(&fan, 16);
    assert!((1.8..=2.2).contains(&r), "fanout {r}");
}
