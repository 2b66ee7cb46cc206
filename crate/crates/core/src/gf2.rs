//! Dense bit matrices over GF(2).

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LaqccError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LaqccError::Validation("ragged bit matrix".into()));
        }
        let bits = rows.iter().flatten().copied().collect();
        Ok(Self { rows: rows.len(), cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<bool> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, col: &[bool]) {
        for (r, &v) in col.iter().enumerate() {
            self.set(r, c, v);
        }
    }

    pub fn mul_vec(&self, v: &[bool]) -> Result<Vec<bool>> {
        if v.len() != self.cols {
            return Err(LaqccError::DimensionMismatch(v.len(), self.cols));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(false, |acc, (&a, &b)| acc ^ (a & b)))
            .collect())
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(LaqccError::DimensionMismatch(self.cols, other.rows));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    for c in 0..other.cols {
                        let v = out.get(r, c) ^ other.get(k, c);
                        out.set(r, c, v);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else { continue };
            for k in 0..m.cols {
                let (a, b) = (m.get(rank, k), m.get(p, k));
                m.set(rank, k, b);
                m.set(p, k, a);
            }
            for r in 0..m.rows {
                if r != rank && m.get(r, c) {
                    for k in 0..m.cols {
                        let v = m.get(r, k) ^ m.get(rank, k);
                        m.set(r, k, v);
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Row-major 0/1 rows, the exported form.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|r| self.row(r).iter().map(|&b| b as u8).collect()).collect()
    }
}

impl Serialize for BitMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            rows: usize,
            cols: usize,
            data: Vec<Vec<u8>>,
        }
        Repr { rows: self.rows, cols: self.cols, data: self.to_rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rows: usize,
            cols: usize,
            data: Vec<Vec<u8>>,
        }
        let r = Repr::deserialize(d)?;
        if r.data.len() != r.rows || r.data.iter().any(|row| row.len() != r.cols) {
            return Err(serde::de::Error::custom("bit matrix shape does not match data"));
        }
        let bits = r.data.iter().flatten().map(|&b| b != 0).collect();
        Ok(BitMatrix { rows: r.rows, cols: r.cols, bits })
    }
}

pub fn xor_vec(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(&x, &y)| x ^ y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_rank() {
        let i = BitMatrix::identity(4);
        assert_eq!(i.rank(), 4);
        let v = vec![true, false, true, true];
        assert_eq!(i.mul_vec(&v).unwrap(), v);
        let m = BitMatrix::from_rows(&[vec![true, true], vec![true, true]]).unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(m.mul(&m).unwrap(), BitMatrix::zeros(2, 2));
    }

    #[test]
    fn json_round_trip() {
        let m = BitMatrix::from_rows(&[vec![true, false, true], vec![false, true, true]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: BitMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.transpose().transpose(), m);
    }
}
