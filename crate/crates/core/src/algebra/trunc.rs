//! The finite rings `F_q[t]/(t^m)`, i.e. `o/ϖ^m` for `o = F_q[[t]]`.

use std::sync::Arc;

use crate::algebra::fq::FieldSpec;
use crate::error::{Error, Result};

/// An element `a_0 + a_1 t + ... + a_{m-1} t^{m-1}`, stored as residue codes.
pub type TruncElem = Vec<u8>;

#[derive(Debug, Clone)]
pub struct TruncRing {
    field: Arc<FieldSpec>,
    m: usize,
}

impl TruncRing {
    pub fn new(field: &Arc<FieldSpec>, m: usize) -> Self {
        TruncRing { field: field.clone(), m }
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `q^m`.
    pub fn size(&self) -> u64 {
        (self.field.q() as u64).pow(self.m as u32)
    }

    pub fn zero(&self) -> TruncElem {
        vec![0; self.m]
    }

    pub fn one(&self) -> TruncElem {
        let mut v = self.zero();
        if self.m > 0 {
            v[0] = 1;
        }
        v
    }

    /// The class of `t`.
    pub fn uniformizer(&self) -> TruncElem {
        let mut v = self.zero();
        if self.m > 1 {
            v[1] = 1;
        }
        v
    }

    pub fn scalar(&self, c: u8) -> TruncElem {
        let mut v = self.zero();
        if self.m > 0 {
            v[0] = c;
        }
        v
    }

    pub fn from_coeffs(&self, coeffs: &[u8]) -> TruncElem {
        let mut v = self.zero();
        for (slot, &c) in v.iter_mut().zip(coeffs) {
            *slot = c;
        }
        v
    }

    pub fn add(&self, a: &[u8], b: &[u8]) -> TruncElem {
        a.iter().zip(b).map(|(&x, &y)| self.field.add(x, y)).collect()
    }

    pub fn sub(&self, a: &[u8], b: &[u8]) -> TruncElem {
        a.iter().zip(b).map(|(&x, &y)| self.field.sub(x, y)).collect()
    }

    pub fn neg(&self, a: &[u8]) -> TruncElem {
        a.iter().map(|&x| self.field.neg(x)).collect()
    }

    pub fn mul(&self, a: &[u8], b: &[u8]) -> TruncElem {
        let mut out = self.zero();
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b[..self.m - i].iter().enumerate() {
                out[i + j] = self.field.add(out[i + j], self.field.mul(x, y));
            }
        }
        out
    }

    pub fn is_unit(&self, a: &[u8]) -> bool {
        self.m == 0 || a[0] != 0
    }

    pub fn is_zero(&self, a: &[u8]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    /// t-adic order of `a` (equal to `m` for zero).
    pub fn order(&self, a: &[u8]) -> usize {
        a.iter().position(|&c| c != 0).unwrap_or(self.m)
    }

    pub fn inv(&self, a: &[u8]) -> Result<TruncElem> {
        if !self.is_unit(a) {
            return Err(Error::NotAUnit);
        }
        let b0 = self.field.inv(a[0]);
        let mut out = self.zero();
        for i in 0..self.m {
            let mut acc = if i == 0 { 1 } else { 0 };
            for j in 1..=i {
                acc = self.field.sub(acc, self.field.mul(a[j], out[i - j]));
            }
            out[i] = self.field.mul(acc, b0);
        }
        Ok(out)
    }

    pub fn pow(&self, a: &[u8], mut e: u64) -> TruncElem {
        let mut base = a.to_vec();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Applies `c -> c^{p^j}` to each coefficient.
    pub fn frobenius(&self, a: &[u8], j: i64) -> TruncElem {
        a.iter().map(|&c| self.field.frobenius(c, j)).collect()
    }

    /// Reduction `o/ϖ^m -> o/ϖ^k` for `k <= m`.
    pub fn reduce(&self, a: &[u8], k: usize) -> TruncElem {
        a[..k.min(self.m)].to_vec()
    }

    /// All elements, in lexicographic order of coefficient sequences.
    pub fn elements(&self) -> Vec<TruncElem> {
        let q = self.field.q() as u64;
        (0..self.size())
            .map(|mut idx| {
                let mut v = vec![0u8; self.m];
                for slot in v.iter_mut().rev() {
                    *slot = (idx % q) as u8;
                    idx /= q;
                }
                v
            })
            .collect()
    }

    pub fn units(&self) -> Vec<TruncElem> {
        self.elements().into_iter().filter(|a| self.is_unit(a)).collect()
    }
}
