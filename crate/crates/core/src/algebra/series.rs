//! Precision-tracked truncated Laurent series over a finite field.
//!
//! A [`Series`] is `sum_{i} c_i u^{val + i} + O(u^prec)`. Exactly known
//! series carry `prec == EXACT`. Every operation returns the precision that
//! is actually justified by its inputs, so "zero modulo `u^N`" and exact
//! zero are never confused.

use crate::algebra::fq::FieldSpec;
use crate::error::{Error, Result};

/// Precision marker for exactly known series.
pub const EXACT: i64 = i64::MAX / 4;

#[inline]
pub(crate) fn padd(a: i64, b: i64) -> i64 {
    if a >= EXACT || b >= EXACT {
        EXACT
    } else {
        a + b
    }
}

#[inline]
fn pmul(a: i64, k: i64) -> i64 {
    if a >= EXACT {
        EXACT
    } else {
        a * k
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Series {
    val: i64,
    coeffs: Vec<u8>,
    prec: i64,
}

impl Series {
    /// Builds and normalizes `u^val * sum coeffs[i] u^i + O(u^prec)`.
    pub fn from_terms(val: i64, coeffs: Vec<u8>, prec: i64) -> Self {
        let mut s = Series { val, coeffs, prec };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|&c| c != 0);
        match lead {
            None => {
                self.coeffs.clear();
                self.val = self.prec;
            }
            Some(k) => {
                if k > 0 {
                    self.coeffs.drain(..k);
                    self.val += k as i64;
                }
                if self.prec < EXACT {
                    let keep = (self.prec - self.val).max(0) as usize;
                    self.coeffs.truncate(keep);
                }
                while self.coeffs.last() == Some(&0) {
                    self.coeffs.pop();
                }
                if self.coeffs.is_empty() {
                    self.val = self.prec;
                }
            }
        }
    }

    pub fn exact_zero() -> Self {
        Series { val: EXACT, coeffs: Vec::new(), prec: EXACT }
    }

    /// Zero modulo `u^prec`.
    pub fn zero_mod(prec: i64) -> Self {
        Series { val: prec, coeffs: Vec::new(), prec }
    }

    pub fn constant(c: u8) -> Self {
        Self::monomial(c, 0)
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    /// Exact `c u^k`.
    pub fn monomial(c: u8, k: i64) -> Self {
        Self::from_terms(k, vec![c], EXACT)
    }

    /// Leading exponent of the stored terms (lower bound `prec` when zero).
    pub fn leading_exponent(&self) -> i64 {
        self.val
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec >= EXACT
    }

    /// True if no nonzero coefficient is known.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Exact valuation, or `None` for a (possibly uncertain) zero.
    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Coefficient of `u^i`; `None` if it lies beyond the precision.
    pub fn coeff(&self, i: i64) -> Option<u8> {
        if i >= self.prec {
            return None;
        }
        if i < self.val || self.coeffs.is_empty() {
            return Some(0);
        }
        Some(self.coeffs.get((i - self.val) as usize).copied().unwrap_or(0))
    }

    pub fn leading_coeff(&self) -> Option<u8> {
        self.coeffs.first().copied()
    }

    /// Lowers the precision to at most `n`.
    pub fn truncate(&self, n: i64) -> Self {
        if n >= self.prec {
            return self.clone();
        }
        Self::from_terms(self.val.min(n), self.padded(self.val.min(n), n), n)
    }

    /// Coefficients from exponent `from` up to (excluding) `to`.
    fn padded(&self, from: i64, to: i64) -> Vec<u8> {
        (from..to).map(|i| self.coeff(i).unwrap_or(0)).collect()
    }

    pub fn neg(&self, k: &FieldSpec) -> Self {
        Series { val: self.val, coeffs: self.coeffs.iter().map(|&c| k.neg(c)).collect(), prec: self.prec }
    }

    pub fn add(&self, other: &Self, k: &FieldSpec) -> Self {
        let prec = self.prec.min(other.prec);
        if self.is_zero() {
            return other.truncate(prec);
        }
        if other.is_zero() {
            return self.truncate(prec);
        }
        let lo = self.val.min(other.val);
        let hi_a = self.val + self.coeffs.len() as i64;
        let hi_b = other.val + other.coeffs.len() as i64;
        let hi = hi_a.max(hi_b).min(prec);
        if hi <= lo {
            return Self::zero_mod(prec);
        }
        let mut out = vec![0u8; (hi - lo) as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let e = self.val + i as i64;
            if e >= hi {
                break;
            }
            out[(e - lo) as usize] = c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            let e = other.val + i as i64;
            if e >= hi {
                break;
            }
            let slot = &mut out[(e - lo) as usize];
            *slot = k.add(*slot, c);
        }
        Self::from_terms(lo, out, prec)
    }

    pub fn sub(&self, other: &Self, k: &FieldSpec) -> Self {
        self.add(&other.neg(k), k)
    }

    /// Multiplies by the constant `c`.
    pub fn scale(&self, c: u8, k: &FieldSpec) -> Self {
        if c == 0 {
            return Self::exact_zero();
        }
        Series { val: self.val, coeffs: self.coeffs.iter().map(|&x| k.mul(x, c)).collect(), prec: self.prec }
    }

    /// Multiplies by `u^s`.
    pub fn shift(&self, s: i64) -> Self {
        Series { val: padd(self.val, s), coeffs: self.coeffs.clone(), prec: padd(self.prec, s) }
    }

    pub fn mul(&self, other: &Self, k: &FieldSpec) -> Self {
        self.mul_limited(other, k, EXACT)
    }

    /// Product, truncated to absolute precision `limit` if that is lower
    /// than the propagated precision.
    pub fn mul_limited(&self, other: &Self, k: &FieldSpec, limit: i64) -> Self {
        let va = self.val;
        let vb = other.val;
        let prec = padd(self.prec, vb).min(padd(other.prec, va)).min(limit);
        if self.is_zero() || other.is_zero() {
            if prec >= EXACT {
                return Self::exact_zero();
            }
            return Self::zero_mod(prec);
        }
        let lo = va + vb;
        let full = self.coeffs.len() + other.coeffs.len() - 1;
        let len = if prec >= EXACT { full } else { ((prec - lo).max(0) as usize).min(full) };
        let mut out = vec![0u8; len];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if i >= len {
                break;
            }
            if a == 0 {
                continue;
            }
            let upto = (len - i).min(other.coeffs.len());
            for (j, &b) in other.coeffs[..upto].iter().enumerate() {
                if b != 0 {
                    let slot = &mut out[i + j];
                    *slot = k.add(*slot, k.mul(a, b));
                }
            }
        }
        Self::from_terms(lo, out, prec)
    }

    /// Multiplicative inverse. Exact non-monomial inputs are inverted to
    /// `default_rel` terms of relative precision.
    pub fn inv(&self, k: &FieldSpec, default_rel: i64) -> Result<Self> {
        if self.is_zero() {
            return Err(if self.is_exact() { Error::DivisionByZero } else { Error::DivisionByUncertainZero });
        }
        let v = self.val;
        let b0 = k.inv(self.coeffs[0]);
        if self.is_exact() && self.coeffs.len() == 1 {
            return Ok(Self::monomial(b0, -v));
        }
        let rel = if self.is_exact() { default_rel } else { self.prec - v };
        let n = rel.max(0) as usize;
        let mut out = vec![0u8; n];
        for i in 0..n {
            let mut acc = if i == 0 { 1u8 } else { 0u8 };
            for j in 1..=i.min(self.coeffs.len() - 1) {
                acc = k.sub(acc, k.mul(self.coeffs[j], out[i - j]));
            }
            out[i] = k.mul(acc, b0);
        }
        Ok(Self::from_terms(-v, out, -v + rel))
    }

    pub fn div(&self, other: &Self, k: &FieldSpec, default_rel: i64) -> Result<Self> {
        let inv = other.inv(k, default_rel)?;
        Ok(self.mul(&inv, k))
    }

    /// `self^{p^j}` computed coefficientwise (Frobenius in characteristic p).
    pub fn pow_p(&self, j: u32, k: &FieldSpec) -> Self {
        let pj = (k.p() as i64).pow(j);
        if self.is_zero() {
            return if self.is_exact() { Self::exact_zero() } else { Self::zero_mod(pmul(self.prec, pj)) };
        }
        let prec = pmul(self.prec, pj);
        let mut out = vec![0u8; (self.coeffs.len() - 1) * pj as usize + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i * pj as usize] = k.frobenius(c, j as i64);
        }
        Self::from_terms(self.val * pj, out, prec)
    }

    pub fn pow(&self, mut e: u64, k: &FieldSpec) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, k);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base, k);
            }
        }
        acc
    }

    /// Applies a coefficient map (a residue-field homomorphism table).
    pub fn map_coeffs(&self, table: &[u8]) -> Self {
        Series { val: self.val, coeffs: self.coeffs.iter().map(|&c| table[c as usize]).collect(), prec: self.prec }
    }

    /// Applies `c -> c^{p^j}` to every coefficient.
    pub fn frobenius_coeffs(&self, j: i64, k: &FieldSpec) -> Self {
        Series { val: self.val, coeffs: self.coeffs.iter().map(|&c| k.frobenius(c, j)).collect(), prec: self.prec }
    }

    /// Substitutes `y` (positive valuation) for the variable: `self(y)`.
    /// `default_rel` bounds the relative precision of `y^{-1}` when `self`
    /// has negative valuation and `y` is exact.
    pub fn compose(&self, y: &Self, k: &FieldSpec, default_rel: i64) -> Result<Self> {
        let vy = y
            .valuation()
            .ok_or_else(|| Error::PrecisionExhausted("substituted series is zero modulo its precision".into()))?;
        if vy < 1 {
            return Err(Error::Invalid("substituted series must have positive valuation".into()));
        }
        let cap = pmul(self.prec, vy);
        if self.is_zero() {
            return Ok(if cap >= EXACT { Self::exact_zero() } else { Self::zero_mod(cap) });
        }
        let vx = self.val;
        // absolute precision needed from the Horner accumulator at step i
        let need = |i: i64| if cap >= EXACT { EXACT } else { cap - (vx + i) * vy };
        let n = self.coeffs.len();
        let mut acc = Self::constant(self.coeffs[n - 1]).truncate(need(n as i64 - 1));
        for i in (0..n - 1).rev() {
            acc = acc.mul_limited(y, k, need(i as i64)).add(&Self::constant(self.coeffs[i]), k);
        }
        let head = if vx >= 0 {
            y.pow(vx as u64, k)
        } else {
            y.inv(k, default_rel)?.pow((-vx) as u64, k)
        };
        Ok(acc.mul(&head, k).truncate(cap))
    }

    /// True when `self - other` is zero modulo its precision.
    pub fn agrees_with(&self, other: &Self, k: &FieldSpec) -> bool {
        self.sub(other, k).is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn f2() -> Arc<FieldSpec> {
        FieldSpec::standard(2, 1).unwrap()
    }

    fn poly(coeffs: &[u8], prec: i64) -> Series {
        Series::from_terms(0, coeffs.to_vec(), prec)
    }

    #[test]
    fn char_two_cancellation() {
        let k = f2();
        let a = poly(&[0, 1, 1], 10);
        let b = poly(&[0, 1], 10);
        let s = a.add(&b, &k);
        assert_eq!(s, Series::from_terms(2, vec![1], 10));
        assert_eq!(s.precision(), 10);
    }

    #[test]
    fn valuations_add() {
        let k = f2();
        let a = Series::monomial(1, 2);
        let b = Series::monomial(1, 3);
        assert_eq!(a.mul(&b, &k).valuation(), Some(5));
    }

    #[test]
    fn geometric_series_inverse() {
        let k = f2();
        let a = poly(&[1, 1], 5);
        let inv = a.inv(&k, 64).unwrap();
        assert_eq!(inv, poly(&[1, 1, 1, 1, 1], 5));
        let one = a.mul(&inv, &k);
        assert!(one.agrees_with(&Series::one(), &k));
        assert_eq!(one.precision(), 5);
    }

    #[test]
    fn uncertain_zero_is_not_exact_zero() {
        let k = f2();
        let z = Series::zero_mod(7);
        assert!(z.is_zero() && !z.is_exact());
        assert_eq!(z.valuation(), None);
        assert_eq!(z.leading_exponent(), 7);
        assert!(matches!(z.inv(&k, 10), Err(Error::DivisionByUncertainZero)));
        assert!(matches!(Series::exact_zero().inv(&k, 10), Err(Error::DivisionByZero)));
    }

    #[test]
    fn mul_precision_rule() {
        let k = f2();
        let a = Series::from_terms(1, vec![1, 1], 6); // v = 1, prec 6
        let b = Series::from_terms(2, vec![1], 9); // v = 2, prec 9
        assert_eq!(a.mul(&b, &k).precision(), (6 + 2));
    }

    #[test]
    fn pow_p_matches_repeated_multiplication() {
        let k = FieldSpec::standard(3, 2).unwrap();
        let a = Series::from_terms(1, vec![1, 4, 0, 7, 2], 12);
        let fast = a.pow_p(1, &k);
        let slow = a.mul(&a, &k).mul(&a, &k);
        // characteristic 3: (x + e)^3 = x^3 + e^3, so the fast route keeps more terms
        assert_eq!(fast.precision(), 36);
        assert!(fast.agrees_with(&slow, &k));
    }

    #[test]
    fn compose_geometric() {
        let k = f2();
        // x(y) with x = 1/(1+u) to 8 terms, y = u^2
        let x = poly(&[1, 1], EXACT).inv(&k, 8).unwrap();
        let y = Series::monomial(1, 2);
        let c = x.compose(&y, &k, 8).unwrap();
        assert_eq!(c.precision(), 16);
        let back = c.mul(&poly(&[1, 0, 1], EXACT), &k);
        assert!(back.agrees_with(&Series::one(), &k));
    }
}
