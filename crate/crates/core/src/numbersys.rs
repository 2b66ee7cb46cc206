//! Factoradics, the combinatorial number system and the conversions between
//! weight-k bitstrings and factoradics.
//!
//! Factoradic digits are stored most significant first: `digits[0]` is the
//! digit of weight `n-1` and may be at most `n-1`. Bitstrings are `u128`
//! values of a stated length `n`; bit `n-1` is the leftmost character.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LaqccError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factoradic {
    digits: Vec<u32>,
}

impl Factoradic {
    pub fn new(digits: Vec<u32>) -> Result<Self> {
        let n = digits.len();
        for (i, &d) in digits.iter().enumerate() {
            let weight = (n - 1 - i) as u32;
            if d > weight {
                return Err(LaqccError::OutOfRange(format!(
                    "factoradic digit of weight {weight} is {d}"
                )));
            }
        }
        Ok(Self { digits })
    }

    pub fn zero(n: usize) -> Self {
        Self { digits: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Digit with weight `j`, i.e. `y_j`.
    pub fn digit(&self, j: usize) -> u32 {
        self.digits[self.digits.len() - 1 - j]
    }

    fn set_digit(&mut self, j: usize, v: u32) {
        let n = self.digits.len();
        self.digits[n - 1 - j] = v;
    }
}

impl std::fmt::Display for Factoradic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.digits.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Strictly decreasing positions `c_k > … > c_1 >= 0`, stored `c_k` first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombIndex {
    positions: Vec<u32>,
}

impl CombIndex {
    pub fn new(positions: Vec<u32>) -> Result<Self> {
        if positions.windows(2).any(|w| w[0] <= w[1]) {
            return Err(LaqccError::OutOfRange(format!(
                "combination positions {positions:?} are not strictly decreasing"
            )));
        }
        Ok(Self { positions })
    }

    pub fn k(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// The bitstring with ones at the stored positions.
    pub fn to_bits(&self) -> u128 {
        self.positions.iter().fold(0u128, |acc, &c| acc | (1u128 << c))
    }

    pub fn from_bits(bits: u128) -> Self {
        let mut positions: Vec<u32> = (0..128).filter(|&i| (bits >> i) & 1 == 1).collect();
        positions.reverse();
        Self { positions }
    }
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `C(n, k)` in machine integers, for small arguments.
pub fn binomial_u128(n: usize, k: usize) -> u128 {
    binomial(n, k).to_u128().unwrap_or(u128::MAX)
}

/// `m = Σ_j y_j · j!`.
pub fn factoradic_to_int(y: &Factoradic) -> BigUint {
    let mut m = BigUint::zero();
    let mut fact = BigUint::one();
    for j in 0..y.len() {
        if j > 0 {
            fact *= BigUint::from(j);
        }
        m += &fact * BigUint::from(y.digit(j));
    }
    m
}

pub fn int_to_factoradic(m: &BigUint, n: usize) -> Result<Factoradic> {
    if *m >= factorial(n) {
        return Err(LaqccError::OutOfRange(format!("{m} is not below {n}!")));
    }
    let mut y = Factoradic::zero(n);
    let mut rest = m.clone();
    // digit j is (m / j!) mod (j+1)
    for j in 1..n {
        let base = BigUint::from(j + 1);
        let d = (&rest % &base).to_u32().unwrap_or(0);
        y.set_digit(j, d);
        rest /= base;
    }
    Ok(y)
}

/// `m = Σ_i C(c_i, i)` with `i` running from `k` down to 1.
pub fn comb_to_int(c: &CombIndex) -> BigUint {
    let k = c.k();
    c.positions
        .iter()
        .enumerate()
        .map(|(idx, &ci)| binomial(ci as usize, k - idx))
        .sum()
}

/// Greedy unranking: the `m`-th weight-`k` string of length `n` in
/// lexicographic order.
pub fn int_to_comb(m: &BigUint, k: usize, n: usize) -> Result<CombIndex> {
    if *m >= binomial(n, k) {
        return Err(LaqccError::OutOfRange(format!("{m} is not below C({n},{k})")));
    }
    let mut rest = m.clone();
    let mut positions = Vec::with_capacity(k);
    let mut upper = n;
    for i in (1..=k).rev() {
        let mut c = upper - 1;
        while binomial(c, i) > rest {
            c -= 1;
        }
        rest -= binomial(c, i);
        positions.push(c as u32);
        upper = c;
    }
    CombIndex::new(positions)
}

/// Algorithm A: scan left to right, emitting 1 when the digit is below the
/// number of ones still owed.
pub fn fac_to_comb(y: &Factoradic, k: usize) -> u128 {
    let n = y.len();
    let mut owed = k as u32;
    let mut out = 0u128;
    for pos in (0..n).rev() {
        if y.digit(pos) < owed {
            out |= 1u128 << pos;
            owed -= 1;
        }
    }
    out
}

/// Inverse direction. A one at a position where `h1` ones were already
/// emitted takes its digit from `O` at weight `k-1-h1`; a zero after `h0`
/// zeros takes `k-h1` plus the digit of `Z` at weight `n-k-1-h0`.
pub fn comb_to_fac(s: u128, n: usize, z: &Factoradic, o: &Factoradic) -> Result<Factoradic> {
    let k = o.len();
    if z.len() + k != n {
        return Err(LaqccError::Validation(format!(
            "factoradic lengths {} + {} do not sum to {n}",
            z.len(),
            k
        )));
    }
    if s.count_ones() as usize != k || (n < 128 && s >> n != 0) {
        return Err(LaqccError::Validation(format!("bitstring is not a weight-{k} string of length {n}")));
    }
    let mut y = Factoradic::zero(n);
    let (mut h0, mut h1) = (0usize, 0usize);
    for pos in (0..n).rev() {
        if (s >> pos) & 1 == 1 {
            y.set_digit(pos, o.digit(k - 1 - h1));
            h1 += 1;
        } else {
            y.set_digit(pos, (k - h1) as u32 + z.digit(n - k - 1 - h0));
            h0 += 1;
        }
    }
    Ok(y)
}

/// Splits a factoradic into `(A(y), Z(y), O(y))`.
pub fn fac_decompose(y: &Factoradic, k: usize) -> Result<(u128, Factoradic, Factoradic)> {
    let n = y.len();
    if k > n {
        return Err(LaqccError::OutOfRange(format!("weight {k} exceeds length {n}")));
    }
    let s = fac_to_comb(y, k);
    let mut z = Factoradic::zero(n - k);
    let mut o = Factoradic::zero(k);
    let (mut h0, mut h1) = (0usize, 0usize);
    for pos in (0..n).rev() {
        let d = y.digit(pos);
        if (s >> pos) & 1 == 1 {
            o.set_digit(k - 1 - h1, d);
            h1 += 1;
        } else {
            z.set_digit(n - k - 1 - h0, d - (k - h1) as u32);
            h0 += 1;
        }
    }
    Ok((s, z, o))
}

/// Every `n`-factoradic in increasing integer order.
pub fn all_factoradics(n: usize) -> impl Iterator<Item = Factoradic> {
    let total: u64 = (1..=n as u64).product();
    (0..total).map(move |m| {
        let mut y = Factoradic::zero(n);
        let mut rest = m;
        for j in 1..n {
            let base = (j + 1) as u64;
            y.set_digit(j, (rest % base) as u32);
            rest /= base;
        }
        y
    })
}

/// Every weight-`k` string of length `n`, ascending.
pub fn weight_k_strings(n: usize, k: usize) -> Vec<u128> {
    let total = binomial_u128(n, k);
    (0..total)
        .map(|m| int_to_comb(&BigUint::from(m), k, n).map(|c| c.to_bits()).unwrap_or(0))
        .collect()
}

/// Result of checking the weight-`k` split of all `n`-factoradics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BijectionCheck {
    pub n: usize,
    pub k: usize,
    pub factoradics: u128,
    /// Distinct bitstrings reached; should be C(n, k).
    pub image_size: u128,
    /// Factoradics mapping to each bitstring; should be k!(n-k)! for all.
    pub preimage_sizes: Vec<usize>,
    pub round_trip: bool,
    pub injective: bool,
    pub holds: bool,
}

/// Exhaustively checks that `y ↦ (A(y), Z(y), O(y))` is a bijection onto
/// weight-`k` strings times `(n-k)`- and `k`-factoradics, with every string
/// hit `k!(n-k)!` times.
pub fn check_bijection(n: usize, k: usize) -> Result<BijectionCheck> {
    if k > n {
        return Err(LaqccError::OutOfRange(format!("weight {k} exceeds length {n}")));
    }
    if n > 10 {
        return Err(LaqccError::OutOfRange(format!("exhaustive check limited to n <= 10, got {n}")));
    }
    let per = (factorial(k) * factorial(n - k)).to_usize().unwrap_or(0);
    let mut count: std::collections::BTreeMap<u128, usize> = Default::default();
    let mut seen = std::collections::HashSet::new();
    let mut round_trip = true;
    let mut factoradics = 0u128;
    for y in all_factoradics(n) {
        factoradics += 1;
        let (s, z, o) = fac_decompose(&y, k)?;
        round_trip &= s.count_ones() as usize == k && s >> n == 0 && s == fac_to_comb(&y, k);
        round_trip &= comb_to_fac(s, n, &z, &o)? == y;
        *count.entry(s).or_default() += 1;
        seen.insert((s, z, o));
    }
    let injective = seen.len() as u128 == factoradics;
    let image_size = count.len() as u128;
    let preimage_sizes: Vec<usize> = count.values().copied().collect();
    let holds = round_trip && injective && image_size == binomial_u128(n, k) && preimage_sizes.iter().all(|&c| c == per);
    Ok(BijectionCheck { n, k, factoradics, image_size, preimage_sizes, round_trip, injective, holds })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BirthdayBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `n!/(n^k (n-k)!)` against `exp(-2k²/n)` in log space.
pub fn birthday_bound_check(n: usize, k: usize) -> Result<BirthdayBound> {
    if n == 0 || 2 * k >= n {
        return Err(LaqccError::OutOfRange(format!("need k < n/2, got n={n}, k={k}")));
    }
    let nf = n as f64;
    let ln_lhs: f64 = (0..k).map(|i| ((n - i) as f64 / nf).ln()).sum();
    let ln_rhs = -2.0 * (k * k) as f64 / nf;
    // at k = 0 both sides are exactly 1
    let holds = if k == 0 { true } else { ln_lhs > ln_rhs };
    Ok(BirthdayBound { lhs: ln_lhs.exp(), rhs: ln_rhs.exp(), holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{HashMap, HashSet};

    fn fac(d: &[u32]) -> Factoradic {
        Factoradic::new(d.to_vec()).unwrap()
    }

    #[test]
    fn factoradic_values() {
        assert_eq!(factoradic_to_int(&fac(&[0, 0, 0])), BigUint::zero());
        assert_eq!(factoradic_to_int(&fac(&[2, 1, 0])), BigUint::from(5u32));
        assert_eq!(int_to_factoradic(&BigUint::from(5u32), 3).unwrap(), fac(&[2, 1, 0]));
        assert_eq!(int_to_factoradic(&BigUint::from(23u32), 4).unwrap(), fac(&[3, 2, 1, 0]));
        assert!(int_to_factoradic(&BigUint::from(6u32), 3).is_err());
        assert!(Factoradic::new(vec![3, 0, 0]).is_err());
    }

    #[test]
    fn factoradic_round_trip_below_5_factorial() {
        for m in 0u32..120 {
            let y = int_to_factoradic(&BigUint::from(m), 5).unwrap();
            assert_eq!(factoradic_to_int(&y), BigUint::from(m));
        }
    }

    #[test]
    fn max_factoradic_is_factorial_minus_one() {
        // Σ j·j! = n! - 1
        for n in 1..=20usize {
            let y = Factoradic::new((0..n as u32).rev().collect()).unwrap();
            assert_eq!(factoradic_to_int(&y) + BigUint::one(), factorial(n));
        }
    }

    #[test]
    fn comb_rank_examples() {
        let c = int_to_comb(&BigUint::zero(), 2, 4).unwrap();
        assert_eq!(c.positions(), &[1, 0]);
        assert_eq!(c.to_bits(), 0b0011);
        let c = int_to_comb(&BigUint::from(5u32), 2, 4).unwrap();
        assert_eq!(c.positions(), &[3, 2]);
        assert_eq!(c.to_bits(), 0b1100);
        assert!(CombIndex::new(vec![1, 1]).is_err());
    }

    #[test]
    fn comb_rank_round_trip_and_order() {
        let strings = weight_k_strings(6, 3);
        assert_eq!(strings.len(), 20);
        for (m, &s) in strings.iter().enumerate() {
            let c = CombIndex::from_bits(s);
            assert_eq!(comb_to_int(&c), BigUint::from(m));
        }
        assert!(strings.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn algorithm_a_examples() {
        for y1 in 0..=1 {
            assert_eq!(fac_to_comb(&fac(&[0, y1, 0]), 1), 0b100);
        }
        assert_eq!(fac_to_comb(&fac(&[2, 1, 0]), 1), 0b001);
        for y in all_factoradics(4) {
            assert_eq!(fac_to_comb(&y, 0), 0);
        }
    }

    #[test]
    fn preimage_counts_n4_k2() {
        let mut counts: HashMap<u128, usize> = HashMap::new();
        for y in all_factoradics(4) {
            *counts.entry(fac_to_comb(&y, 2)).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        assert!(counts.values().all(|&c| c == 4));
    }

    #[test]
    fn comb_to_fac_bijection_n4_k2() {
        let mut seen = HashSet::new();
        for s in weight_k_strings(4, 2) {
            for z in all_factoradics(2) {
                for o in all_factoradics(2) {
                    let y = comb_to_fac(s, 4, &z, &o).unwrap();
                    assert_eq!(fac_to_comb(&y, 2), s);
                    assert_eq!(fac_decompose(&y, 2).unwrap(), (s, z.clone(), o.clone()));
                    seen.insert(y);
                }
            }
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn all_zero_string_uses_only_z() {
        let y = comb_to_fac(0, 3, &Factoradic::zero(3), &Factoradic::zero(0)).unwrap();
        assert_eq!(y, Factoradic::zero(3));
        assert_eq!(fac_to_comb(&y, 0), 0);
    }

    #[test]
    fn birthday_examples() {
        let b = birthday_bound_check(16, 4).unwrap();
        assert!((b.lhs - 43680.0 / 65536.0).abs() < 1e-12);
        assert!((b.rhs - (-2.0f64).exp()).abs() < 1e-12);
        assert!(b.holds);
        let b = birthday_bound_check(9, 0).unwrap();
        assert_eq!((b.lhs, b.rhs), (1.0, 1.0));
        assert!(b.holds);
        let b = birthday_bound_check(10, 1).unwrap();
        assert_eq!(b.lhs, 1.0);
        assert!(birthday_bound_check(8, 4).is_err());
    }

    proptest! {
        #[test]
        fn unranking_is_monotone((n, k) in (2usize..12).prop_flat_map(|n| (Just(n), 1..n)), a in 0u64..1000, gap in 1u64..1000) {
            let total = binomial_u128(n, k) as u64;
            let a = a % (total - 1);
            let b = (a + gap).min(total - 1);
            let sa = int_to_comb(&BigUint::from(a), k, n).unwrap().to_bits();
            let sb = int_to_comb(&BigUint::from(b), k, n).unwrap().to_bits();
            prop_assert!(sa < sb);
        }

        #[test]
        fn decompose_then_rebuild((n, k) in (1usize..9).prop_flat_map(|n| (Just(n), 0..=n)), m in 0u64..40320) {
            let total: u64 = (1..=n as u64).product();
            let y = int_to_factoradic(&BigUint::from(m % total), n).unwrap();
            let (s, z, o) = fac_decompose(&y, k).unwrap();
            prop_assert_eq!(s.count_ones() as usize, k);
            prop_assert_eq!(comb_to_fac(s, n, &z, &o).unwrap(), y);
        }
    }
}
