//! Zero-failure amplitude amplification with matched phases.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{LaqccError, Result};
use crate::macros::exact_zero;
use crate::program::{inverse_fragment, Fragment, Op};

/// Iteration count and phases that rotate the prepared state fully onto the
/// good subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationPlan {
    pub ambient: u64,
    pub good: u64,
    pub iterations: usize,
    /// Phase on good states.
    pub phi: f64,
    /// Phase on the all-zero state inside the reflection about the prepared state.
    pub theta: f64,
    /// `arcsin √(good/ambient)`.
    pub beta: f64,
    /// Good-subspace probability reached in the two-dimensional model.
    pub success: f64,
}

const PLAN_TOL: f64 = 1e-9;

/// Good-subspace probability after `j` phase-matched iterations.
pub fn success_probability(beta: f64, j: usize, phi: f64, theta: f64) -> f64 {
    iterate(beta, j, phi, theta)[0].norm_sqr()
}

/// Magnitude left on the bad direction after `j` iterations.
pub fn failure_amplitude(beta: f64, j: usize, phi: f64, theta: f64) -> f64 {
    iterate(beta, j, phi, theta)[1].norm()
}

fn iterate(beta: f64, j: usize, phi: f64, theta: f64) -> [C64; 2] {
    let (s, c) = (beta.sin(), beta.cos());
    let psi = [C64::new(s, 0.0), C64::new(c, 0.0)];
    let eth = C64::from_polar(1.0, theta);
    let eph = C64::from_polar(1.0, phi);
    let mut v = psi;
    for _ in 0..j {
        v[0] *= eph;
        // (1 - e^{iθ}) |ψ⟩⟨ψ| v - v, the overall sign dropped
        let ov = psi[0] * v[0] + psi[1] * v[1];
        let k = (C64::new(1.0, 0.0) - eth) * ov;
        v = [k * psi[0] - v[0], k * psi[1] - v[1]];
    }
    v
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / 2.0
}

pub fn plan(ambient: u64, good: u64) -> Result<AmplificationPlan> {
    if good == 0 {
        return Err(LaqccError::Validation("no good states to amplify".into()));
    }
    if good > ambient {
        return Err(LaqccError::Validation(format!("good count {good} exceeds ambient count {ambient}")));
    }
    let beta = (good as f64 / ambient as f64).sqrt().asin();
    if good == ambient {
        return Ok(AmplificationPlan { ambient, good, iterations: 0, phi: 0.0, theta: 0.0, beta, success: 1.0 });
    }
    let j = ((PI / 2.0 - beta) / (2.0 * beta)).ceil().max(0.0) as usize;
    let f = |p: f64| success_probability(beta, j, p, p);
    let mut phi = PI;
    if f(PI) < 1.0 - 1e-13 {
        let steps = 4096;
        let best = (1..=steps)
            .map(|i| PI * i as f64 / steps as f64)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .expect("non-empty scan");
        let w = PI / steps as f64;
        // the failure amplitude has a kink at its root, so the search
        // reaches machine precision where the flat success peak would not
        phi = golden_max(|p| -failure_amplitude(beta, j, p, p), (best - w).max(0.0), (best + w).min(PI));
    }
    let success = 1.0 - failure_amplitude(beta, j, phi, phi).powi(2);
    if success < 1.0 - PLAN_TOL {
        return Err(LaqccError::Infeasible(format!(
            "no matched phase reaches the good subspace for {good}/{ambient} (best {success})"
        )));
    }
    Ok(AmplificationPlan { ambient, good, iterations: j, phi, theta: phi, beta, success })
}

/// Amplification fragment. `prep` acts on `register` from |0…0⟩ and must be
/// unitary; `oracle` XORs the good-set indicator into `flag`. `flag` and
/// `zero_flag` start and end in |0⟩.
pub fn amplify(
    prep: &[Op],
    register: &[usize],
    oracle: &[Op],
    flag: usize,
    zero_flag: usize,
    plan: &AmplificationPlan,
) -> Result<Fragment> {
    if register.contains(&flag) || register.contains(&zero_flag) || flag == zero_flag {
        return Err(LaqccError::Validation("flags overlap the register".into()));
    }
    let mut f: Fragment = prep.to_vec();
    let prep_inv = inverse_fragment(prep);
    let oracle_inv = inverse_fragment(oracle);
    let zero = exact_zero(register, zero_flag)?;
    let zero_inv = inverse_fragment(&zero);
    for _ in 0..plan.iterations {
        f.extend(oracle.iter().cloned());
        f.push(Op::Phase { q: flag, theta: plan.phi });
        f.extend(oracle_inv.iter().cloned());
        f.extend(prep_inv.iter().cloned());
        f.extend(zero.iter().cloned());
        f.push(Op::Phase { q: zero_flag, theta: plan.theta });
        f.extend(zero_inv.iter().cloned());
        f.extend(prep.iter().cloned());
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::SparseState;

    #[test]
    fn full_good_set_needs_no_iterations() {
        let p = plan(8, 8).unwrap();
        assert_eq!(p.iterations, 0);
        assert!(plan(8, 0).is_err());
        assert!(plan(4, 5).is_err());
    }

    #[test]
    fn quarter_good_is_one_standard_step() {
        let p = plan(4, 1).unwrap();
        assert_eq!(p.iterations, 1);
        assert!((p.phi - PI).abs() < 1e-12);
        assert!((success_probability(PI / 6.0, 1, PI, PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn five_of_eight() {
        let p = plan(8, 5).unwrap();
        assert_eq!(p.iterations, 1);
        assert!(p.success > 1.0 - 1e-9);
    }

    #[test]
    fn zero_failure_and_query_bound() {
        for n in 1..=64u64 {
            for m in 1..=n {
                let p = plan(n, m).unwrap();
                assert!(p.success >= 1.0 - 1e-9, "{m}/{n}");
                assert!(failure_amplitude(p.beta, p.iterations, p.phi, p.theta) < 1e-13, "{m}/{n}");
                let bound = ((PI / 4.0) * (n as f64 / m as f64).sqrt()).ceil() as usize + 1;
                assert!(p.iterations <= bound);
                if 2 * m >= n {
                    assert!(p.iterations <= 1);
                }
            }
        }
    }

    #[test]
    fn five_of_eight_circuit() {
        let reg = [0, 1, 2];
        let prep: Vec<Op> = reg.iter().map(|&q| Op::H { q }).collect();
        let table = (0..8u64).map(|v| (v < 5) as u64).collect();
        let oracle = vec![Op::Oracle { inputs: reg.to_vec(), outputs: vec![3], table }];
        let p = plan(8, 5).unwrap();
        let frag = amplify(&prep, &reg, &oracle, 3, 4, &p).unwrap();
        let mut s = SparseState::zero(5).unwrap();
        for op in &frag {
            op.apply(&mut s);
        }
        let target = SparseState::uniform(5, 0..5).unwrap();
        assert!(s.fidelity(&target).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn good_equals_ambient_is_prep() {
        let prep = vec![Op::H { q: 0 }];
        let p = plan(2, 2).unwrap();
        let frag = amplify(&prep, &[0], &[], 1, 2, &p).unwrap();
        assert_eq!(frag, prep);
    }
}
