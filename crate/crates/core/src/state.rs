//! Sparse complex state vectors.
//!
//! A state is a map from basis index to amplitude. Bit `q` of a basis index is
//! the value of qubit `q`. Entries with magnitude below [`PRUNE_THRESHOLD`] are
//! dropped after every operation.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::BuildHasherDefault;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LaqccError, Result};

pub type Basis = u128;
pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

pub const MAX_QUBITS: usize = 128;
pub const PRUNE_THRESHOLD: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-9;

// Fixed-key hasher so iteration order, and hence float summation order, is
// reproducible from run to run.
pub(crate) type AmpMap = HashMap<Basis, C64, BuildHasherDefault<DefaultHasher>>;

/// A one- or two-qubit unitary. For two-qubit matrices the first target is
/// the high bit of the row/column index.
#[derive(Clone, Debug)]
pub enum GateSpec {
    One(Mat2),
    Two(Mat4),
}

#[derive(Clone, Debug)]
pub enum OutcomePolicy {
    Seeded(u64),
    Forced(Vec<bool>),
}

#[derive(Clone, Debug)]
pub struct MeasureResult {
    pub outcome: Vec<bool>,
    pub probability: f64,
    pub state: SparseState,
}

#[derive(Clone, Debug)]
pub struct SparseState {
    num_qubits: usize,
    amps: AmpMap,
}

#[inline]
pub fn bit(idx: Basis, q: usize) -> bool {
    (idx >> q) & 1 == 1
}

/// Reads the bits at `qubits` as an integer, `qubits[0]` least significant.
#[inline]
pub fn gather(idx: Basis, qubits: &[usize]) -> u128 {
    let mut v = 0u128;
    for (i, &q) in qubits.iter().enumerate() {
        v |= ((idx >> q) & 1) << i;
    }
    v
}

/// Writes `value` into the bits at `qubits`, leaving the others untouched.
#[inline]
pub fn scatter(idx: Basis, qubits: &[usize], value: u128) -> Basis {
    let mut out = idx;
    for (i, &q) in qubits.iter().enumerate() {
        let b = (value >> i) & 1;
        out = (out & !(1u128 << q)) | (b << q);
    }
    out
}

pub fn mask_of(qubits: &[usize]) -> Basis {
    qubits.iter().fold(0, |m, &q| m | (1u128 << q))
}

impl SparseState {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: Basis) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(LaqccError::Validation(format!(
                "{num_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit"
            )));
        }
        if num_qubits < MAX_QUBITS && index >> num_qubits != 0 {
            return Err(LaqccError::OutOfRange(format!(
                "basis index {index} needs more than {num_qubits} qubits"
            )));
        }
        let mut amps = AmpMap::default();
        amps.insert(index, C64::new(1.0, 0.0));
        Ok(Self { num_qubits, amps })
    }

    /// Builds a state from explicit amplitudes. Duplicate indices accumulate.
    /// The result must be normalized within [`NORM_TOL`].
    pub fn from_amplitudes<I>(num_qubits: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Basis, C64)>,
    {
        let mut st = Self::zero(num_qubits)?;
        st.amps.clear();
        for (idx, a) in entries {
            if num_qubits < MAX_QUBITS && idx >> num_qubits != 0 {
                return Err(LaqccError::Index {
                    index: (128 - idx.leading_zeros()) as usize - 1,
                    num_qubits,
                });
            }
            *st.amps.entry(idx).or_insert(C64::new(0.0, 0.0)) += a;
        }
        st.prune();
        let n = st.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(LaqccError::Validation(format!("state norm² is {n}, expected 1")));
        }
        Ok(st)
    }

    /// Equal-weight superposition over the given basis indices.
    pub fn uniform<I: IntoIterator<Item = Basis>>(num_qubits: usize, indices: I) -> Result<Self> {
        let idx: Vec<Basis> = indices.into_iter().collect();
        if idx.is_empty() {
            return Err(LaqccError::Validation("empty support".into()));
        }
        let a = C64::new(1.0 / (idx.len() as f64).sqrt(), 0.0);
        Self::from_amplitudes(num_qubits, idx.into_iter().map(|i| (i, a)))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of stored (non-negligible) amplitudes.
    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, index: Basis) -> C64 {
        self.amps.get(&index).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Basis, &C64)> {
        self.amps.iter()
    }

    /// Entries sorted by basis index.
    pub fn entries(&self) -> Vec<(Basis, C64)> {
        let mut v: Vec<_> = self.amps.iter().map(|(&k, &a)| (k, a)).collect();
        v.sort_by_key(|e| e.0);
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut e = self.entries();
        e.sort_by_key(|x| x.0);
        e.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub(crate) fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }

    /// Rescales to unit norm.
    pub(crate) fn renormalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for a in self.amps.values_mut() {
                *a /= n;
            }
        }
    }

    /// Extends the state with `extra` fresh qubits in |0⟩.
    pub fn with_extra_qubits(&self, extra: usize) -> Result<Self> {
        let n = self.num_qubits + extra;
        if n > MAX_QUBITS {
            return Err(LaqccError::Validation(format!("{n} qubits exceeds the limit")));
        }
        Ok(Self { num_qubits: n, amps: self.amps.clone() })
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.num_qubits {
                return Err(LaqccError::Index { index: t, num_qubits: self.num_qubits });
            }
            if targets[..i].contains(&t) {
                return Err(LaqccError::Validation(format!("qubit {t} repeated")));
            }
        }
        Ok(())
    }

    /// Applies a validated one- or two-qubit unitary and returns the new state.
    pub fn apply_gate(&self, gate: &GateSpec, targets: &[usize]) -> Result<Self> {
        self.check_targets(targets)?;
        let mut out = self.clone();
        match gate {
            GateSpec::One(m) => {
                if targets.len() != 1 {
                    return Err(LaqccError::Validation("one-qubit gate needs one target".into()));
                }
                check_unitary(&m.iter().map(|r| r.to_vec()).collect::<Vec<_>>())?;
                out.apply_1q(targets[0], m);
            }
            GateSpec::Two(m) => {
                if targets.len() != 2 {
                    return Err(LaqccError::Validation("two-qubit gate needs two targets".into()));
                }
                check_unitary(&m.iter().map(|r| r.to_vec()).collect::<Vec<_>>())?;
                out.apply_2q(targets[0], targets[1], m);
            }
        }
        Ok(out)
    }

    pub(crate) fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let mask = 1u128 << q;
        let zero = C64::new(0.0, 0.0);
        let mut next = AmpMap::with_capacity_and_hasher(self.amps.len() * 2, Default::default());
        for (&idx, &a) in self.amps.iter() {
            let b = ((idx >> q) & 1) as usize;
            let i0 = idx & !mask;
            let c0 = m[0][b];
            let c1 = m[1][b];
            if c0 != zero {
                *next.entry(i0).or_insert(zero) += c0 * a;
            }
            if c1 != zero {
                *next.entry(i0 | mask).or_insert(zero) += c1 * a;
            }
        }
        self.amps = next;
        self.prune();
    }

    pub(crate) fn apply_2q(&mut self, q0: usize, q1: usize, m: &Mat4) {
        let m0 = 1u128 << q0;
        let m1 = 1u128 << q1;
        let zero = C64::new(0.0, 0.0);
        let mut next = AmpMap::with_capacity_and_hasher(self.amps.len() * 2, Default::default());
        for (&idx, &a) in self.amps.iter() {
            let col = (((idx >> q0) & 1) << 1 | ((idx >> q1) & 1)) as usize;
            let base = idx & !(m0 | m1);
            for (row, mrow) in m.iter().enumerate() {
                let c = mrow[col];
                if c == zero {
                    continue;
                }
                let mut j = base;
                if row & 2 != 0 {
                    j |= m0;
                }
                if row & 1 != 0 {
                    j |= m1;
                }
                *next.entry(j).or_insert(zero) += c * a;
            }
        }
        self.amps = next;
        self.prune();
    }

    /// Multiplies each amplitude by `phase(index)`.
    pub(crate) fn apply_diagonal<F: Fn(Basis) -> C64>(&mut self, phase: F) {
        for (&idx, a) in self.amps.iter_mut() {
            *a *= phase(idx);
        }
    }

    /// Relabels basis states by a bijection `f`.
    pub(crate) fn permute_basis<F: Fn(Basis) -> Basis>(&mut self, f: F) {
        let mut next = AmpMap::with_capacity_and_hasher(self.amps.len(), Default::default());
        for (&idx, &a) in self.amps.iter() {
            *next.entry(f(idx)).or_insert(C64::new(0.0, 0.0)) += a;
        }
        self.amps = next;
        self.prune();
    }

    /// General linear map given per basis state as a list of (image, coefficient).
    pub(crate) fn map_linear<F: Fn(Basis, &mut Vec<(Basis, C64)>)>(&mut self, f: F) {
        let zero = C64::new(0.0, 0.0);
        let mut next = AmpMap::with_capacity_and_hasher(self.amps.len(), Default::default());
        let mut buf = Vec::new();
        for (&idx, &a) in self.amps.iter() {
            buf.clear();
            f(idx, &mut buf);
            for &(j, c) in &buf {
                *next.entry(j).or_insert(zero) += c * a;
            }
        }
        self.amps = next;
        self.prune();
    }

    /// Splits into (entries where `pred` holds, the rest).
    pub(crate) fn split<F: Fn(Basis) -> bool>(&self, pred: F) -> (Self, Self) {
        let mut yes = AmpMap::default();
        let mut no = AmpMap::default();
        for (&idx, &a) in self.amps.iter() {
            if pred(idx) {
                yes.insert(idx, a);
            } else {
                no.insert(idx, a);
            }
        }
        (
            Self { num_qubits: self.num_qubits, amps: yes },
            Self { num_qubits: self.num_qubits, amps: no },
        )
    }

    /// Adds the entries of `other` into `self`.
    pub(crate) fn absorb(&mut self, other: Self) {
        for (idx, a) in other.amps {
            *self.amps.entry(idx).or_insert(C64::new(0.0, 0.0)) += a;
        }
        self.prune();
    }

    /// Born probabilities of each outcome on `qubits`, keyed by the outcome as
    /// an integer (`qubits[0]` least significant).
    pub fn outcome_distribution(&self, qubits: &[usize]) -> Result<BTreeMap<u128, f64>> {
        self.check_targets(qubits)?;
        let mut dist = BTreeMap::new();
        for (idx, a) in self.entries() {
            *dist.entry(gather(idx, qubits)).or_insert(0.0) += a.norm_sqr();
        }
        Ok(dist)
    }

    /// Projects `qubits` onto `outcome` and renormalizes.
    pub fn project(&self, qubits: &[usize], outcome: u128) -> Result<(f64, Self)> {
        self.check_targets(qubits)?;
        let mut amps = AmpMap::default();
        let mut p = 0.0;
        for (idx, a) in self.entries() {
            if gather(idx, qubits) == outcome {
                p += a.norm_sqr();
                amps.insert(idx, a);
            }
        }
        if p <= PRUNE_THRESHOLD {
            return Err(LaqccError::InfeasibleBranch { probability: p });
        }
        let mut st = Self { num_qubits: self.num_qubits, amps };
        st.renormalize();
        Ok((p, st))
    }

    /// Measures `qubits` in the computational basis.
    pub fn measure(&self, qubits: &[usize], policy: &OutcomePolicy) -> Result<MeasureResult> {
        match policy {
            OutcomePolicy::Forced(bits) => {
                if bits.len() != qubits.len() {
                    return Err(LaqccError::Validation("forced outcome length mismatch".into()));
                }
                let v = bits.iter().enumerate().fold(0u128, |v, (i, &b)| v | ((b as u128) << i));
                let (p, st) = self.project(qubits, v)?;
                Ok(MeasureResult { outcome: bits.clone(), probability: p, state: st })
            }
            OutcomePolicy::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                self.measure_with(qubits, &mut rng)
            }
        }
    }

    pub(crate) fn measure_with<R: Rng>(&self, qubits: &[usize], rng: &mut R) -> Result<MeasureResult> {
        let dist = self.outcome_distribution(qubits)?;
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        let mut chosen = None;
        let mut last = 0u128;
        for (&v, &p) in &dist {
            if p <= PRUNE_THRESHOLD {
                continue;
            }
            last = v;
            acc += p;
            if u < acc {
                chosen = Some(v);
                break;
            }
        }
        let v = chosen.unwrap_or(last);
        let (p, st) = self.project(qubits, v)?;
        Ok(MeasureResult { outcome: to_bits(v, qubits.len()), probability: p, state: st })
    }

    /// Every outcome of measuring `qubits` with nonzero probability, sorted by
    /// outcome value.
    pub fn branch_enumerate(&self, qubits: &[usize]) -> Result<Vec<MeasureResult>> {
        let dist = self.outcome_distribution(qubits)?;
        let mut out = Vec::new();
        for (&v, &p) in &dist {
            if p <= PRUNE_THRESHOLD {
                continue;
            }
            let (p, st) = self.project(qubits, v)?;
            out.push(MeasureResult { outcome: to_bits(v, qubits.len()), probability: p, state: st });
        }
        Ok(out)
    }

    /// |⟨target|self⟩|.
    pub fn fidelity(&self, target: &SparseState) -> Result<f64> {
        if self.num_qubits != target.num_qubits {
            return Err(LaqccError::DimensionMismatch(self.num_qubits, target.num_qubits));
        }
        Ok(self.inner(target).norm())
    }

    /// ⟨other|self⟩.
    pub fn inner(&self, other: &SparseState) -> C64 {
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut e = small.entries();
        e.sort_by_key(|x| x.0);
        let mut acc = C64::new(0.0, 0.0);
        for (idx, a) in e {
            if let Some(b) = large.amps.get(&idx) {
                // want Σ conj(other) · self
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        acc
    }

    /// Splits the state across `qubits` and the remaining qubits. Succeeds when
    /// the remaining qubits are in a single basis state; returns the state on
    /// `qubits` (in that order) and the value of the rest.
    pub fn extract(&self, qubits: &[usize]) -> Result<(SparseState, Basis)> {
        self.check_targets(qubits)?;
        let mask = mask_of(qubits);
        let mut rest = None;
        let mut entries = Vec::with_capacity(self.amps.len());
        for (idx, a) in self.entries() {
            let r = idx & !mask;
            match rest {
                None => rest = Some(r),
                Some(r0) if r0 != r => {
                    return Err(LaqccError::Entangled(format!("{qubits:?}")));
                }
                _ => {}
            }
            entries.push((gather(idx, qubits), a));
        }
        let sub = SparseState::from_amplitudes(qubits.len(), entries)?;
        Ok((sub, rest.unwrap_or(0)))
    }

    /// Fidelity of the reduced state on `qubits` with a pure `target`:
    /// sqrt(⟨t|ρ|t⟩). Equals |⟨t|ψ⟩| when the rest is unentangled.
    pub fn reduced_fidelity(&self, qubits: &[usize], target: &SparseState) -> Result<f64> {
        self.check_targets(qubits)?;
        if qubits.len() != target.num_qubits {
            return Err(LaqccError::DimensionMismatch(qubits.len(), target.num_qubits));
        }
        let mask = mask_of(qubits);
        let mut by_rest: BTreeMap<Basis, C64> = BTreeMap::new();
        for (idx, a) in self.entries() {
            let t = target.amplitude(gather(idx, qubits));
            *by_rest.entry(idx & !mask).or_insert(C64::new(0.0, 0.0)) += t.conj() * a;
        }
        let f2: f64 = by_rest.values().map(|c| c.norm_sqr()).sum();
        Ok(f2.sqrt().min(1.0))
    }

    /// Dense amplitude vector (only for small states).
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        if self.num_qubits > 20 {
            return Err(LaqccError::Validation("dense export limited to 20 qubits".into()));
        }
        let mut v = vec![C64::new(0.0, 0.0); 1 << self.num_qubits];
        for (&i, &a) in &self.amps {
            v[i as usize] = a;
        }
        Ok(v)
    }
}

pub fn to_bits(v: u128, len: usize) -> Vec<bool> {
    (0..len).map(|i| (v >> i) & 1 == 1).collect()
}

pub fn from_bits(bits: &[bool]) -> u128 {
    bits.iter().enumerate().fold(0u128, |v, (i, &b)| v | ((b as u128) << i))
}

fn check_unitary(m: &[Vec<C64>]) -> Result<()> {
    let d = m.len();
    for i in 0..d {
        for j in 0..d {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..d {
                s += m[i][k] * m[j][k].conj();
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            if (s - C64::new(expect, 0.0)).norm() > 1e-12 {
                return Err(LaqccError::Validation("gate matrix is not unitary".into()));
            }
        }
    }
    Ok(())
}

/// Common gate matrices.
pub mod gates {
    use super::{Mat2, Mat4};
    use num_complex::Complex64 as C64;
    use std::f64::consts::FRAC_1_SQRT_2;

    const O: C64 = C64 { re: 0.0, im: 0.0 };
    const I1: C64 = C64 { re: 1.0, im: 0.0 };

    pub fn h() -> Mat2 {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        [[s, s], [s, -s]]
    }
    pub fn x() -> Mat2 {
        [[O, I1], [I1, O]]
    }
    pub fn y() -> Mat2 {
        [[O, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), O]]
    }
    pub fn z() -> Mat2 {
        [[I1, O], [O, -I1]]
    }
    pub fn s() -> Mat2 {
        [[I1, O], [O, C64::new(0.0, 1.0)]]
    }
    pub fn phase(theta: f64) -> Mat2 {
        [[I1, O], [O, C64::from_polar(1.0, theta)]]
    }
    pub fn rz(theta: f64) -> Mat2 {
        [[C64::from_polar(1.0, -theta / 2.0), O], [O, C64::from_polar(1.0, theta / 2.0)]]
    }
    pub fn ry(theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
    }
    pub fn cnot() -> Mat4 {
        [[I1, O, O, O], [O, I1, O, O], [O, O, O, I1], [O, O, I1, O]]
    }
    pub fn cz() -> Mat4 {
        [[I1, O, O, O], [O, I1, O, O], [O, O, I1, O], [O, O, O, -I1]]
    }
    pub fn swap() -> Mat4 {
        [[I1, O, O, O], [O, O, I1, O], [O, I1, O, O], [O, O, O, I1]]
    }
    pub fn adjoint(m: &Mat2) -> Mat2 {
        [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
    }
    pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut r = [[O; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let s = SparseState::zero(1).unwrap().apply_gate(&GateSpec::One(gates::h()), &[0]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(approx(s.amplitude(0).re, r) && approx(s.amplitude(1).re, r));
    }

    #[test]
    fn cnot_control_first() {
        // |10⟩ with qubit 0 = 1
        let s = SparseState::basis(2, 0b01).unwrap();
        let s = s.apply_gate(&GateSpec::Two(gates::cnot()), &[0, 1]).unwrap();
        assert!(approx(s.amplitude(0b11).re, 1.0));
    }

    #[test]
    fn x_is_involution() {
        let g = GateSpec::One(gates::x());
        let s = SparseState::zero(1).unwrap().apply_gate(&g, &[0]).unwrap().apply_gate(&g, &[0]).unwrap();
        assert!(approx(s.amplitude(0).re, 1.0));
        assert_eq!(s.support(), 1);
    }

    #[test]
    fn rejects_bad_gates() {
        let bad = [[C64::new(1.0, 0.0), C64::new(1.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
        let s = SparseState::zero(2).unwrap();
        assert!(matches!(s.apply_gate(&GateSpec::One(bad), &[0]), Err(LaqccError::Validation(_))));
        assert!(matches!(s.apply_gate(&GateSpec::One(gates::h()), &[5]), Err(LaqccError::Index { .. })));
        assert!(s.apply_gate(&GateSpec::Two(gates::cnot()), &[1, 1]).is_err());
    }

    fn bell() -> SparseState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        SparseState::from_amplitudes(2, [(0, C64::new(r, 0.0)), (3, C64::new(r, 0.0))]).unwrap()
    }

    #[test]
    fn forced_measurements() {
        let plus = SparseState::zero(1).unwrap().apply_gate(&GateSpec::One(gates::h()), &[0]).unwrap();
        let m = plus.measure(&[0], &OutcomePolicy::Forced(vec![true])).unwrap();
        assert!(approx(m.probability, 0.5));
        assert!(approx(m.state.amplitude(1).norm(), 1.0));

        let m = bell().measure(&[0, 1], &OutcomePolicy::Forced(vec![false, false])).unwrap();
        assert!(approx(m.probability, 0.5));

        let s = SparseState::basis(2, 0b01).unwrap();
        let e = s.measure(&[1], &OutcomePolicy::Forced(vec![true]));
        assert!(matches!(e, Err(LaqccError::InfeasibleBranch { .. })));
    }

    #[test]
    fn enumerate_branches() {
        let b = bell().branch_enumerate(&[0]).unwrap();
        assert_eq!(b.len(), 2);
        assert!(b.iter().all(|x| approx(x.probability, 0.5)));

        let s = SparseState::zero(2).unwrap().apply_gate(&GateSpec::One(gates::h()), &[1]).unwrap();
        let b = s.branch_enumerate(&[0]).unwrap();
        assert_eq!(b.len(), 1);
        assert!(approx(b[0].probability, 1.0));
    }

    #[test]
    fn fidelities() {
        let z = SparseState::zero(1).unwrap();
        let one = SparseState::basis(1, 1).unwrap();
        let plus = z.apply_gate(&GateSpec::One(gates::h()), &[0]).unwrap();
        assert!(approx(z.fidelity(&z).unwrap(), 1.0));
        assert!(approx(z.fidelity(&one).unwrap(), 0.0));
        assert!((plus.fidelity(&z).unwrap() - 0.70711).abs() < 1e-5);
        assert!(z.fidelity(&bell()).is_err());
    }

    #[test]
    fn extract_and_reduce() {
        let s = SparseState::basis(3, 0b100).unwrap();
        let (sub, rest) = s.extract(&[0, 1]).unwrap();
        assert_eq!(rest, 0b100);
        assert!(approx(sub.amplitude(0).re, 1.0));
        assert!(bell().extract(&[0]).is_err());
        let mixed = bell().reduced_fidelity(&[0], &SparseState::zero(1).unwrap()).unwrap();
        assert!(approx(mixed, std::f64::consts::FRAC_1_SQRT_2));
    }
}
