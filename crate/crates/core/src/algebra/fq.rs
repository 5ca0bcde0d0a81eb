//! Finite fields `F_{p^f}` with `p^f <= 256`, stored in a polynomial basis.
//!
//! Elements are encoded as a single byte `sum c_i p^i`, where `c_i` are the
//! coefficients on the basis `1, x, ..., x^{f-1}`. All arithmetic goes
//! through tables built once per field.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest residue field the toolkit will build.
pub const RESIDUE_CAP: u32 = 256;

/// Published moduli, low coefficient first. These agree with the Conway
/// polynomials for the listed sizes.
const STANDARD_MODULI: &[(u32, &[u32])] = &[
    (2, &[1, 1]),
    (2, &[1, 1, 1]),
    (2, &[1, 1, 0, 1]),
    (2, &[1, 1, 0, 0, 1]),
    (2, &[1, 0, 1, 0, 0, 1]),
    (2, &[1, 1, 0, 1, 1, 0, 1]),
    (2, &[1, 1, 0, 0, 0, 0, 0, 1]),
    (2, &[1, 0, 1, 1, 1, 0, 0, 0, 1]),
    (3, &[1, 1]),
    (3, &[2, 2, 1]),
    (3, &[1, 2, 0, 1]),
    (3, &[2, 0, 0, 2, 1]),
    (3, &[1, 2, 0, 0, 0, 1]),
    (5, &[3, 1]),
    (5, &[2, 4, 1]),
    (5, &[3, 3, 0, 1]),
    (7, &[4, 1]),
    (7, &[3, 6, 1]),
    (11, &[9, 1]),
    (11, &[2, 7, 1]),
    (13, &[11, 1]),
    (13, &[2, 12, 1]),
];

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Remainder of `a` modulo the monic `b` over `F_p`; both low-first.
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = r.pop().unwrap();
        if lead != 0 {
            let shift = r.len() - db;
            for (i, &bi) in b[..db].iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * bi) % p) % p;
            }
        }
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let f = modulus.len() - 1;
    if f <= 1 {
        return true;
    }
    // trial division by every monic polynomial of degree <= f/2
    for d in 1..=f / 2 {
        let count = (p as u64).pow(d as u32);
        for idx in 0..count {
            let mut cand = Vec::with_capacity(d + 1);
            let mut k = idx;
            for _ in 0..d {
                cand.push((k % p as u64) as u32);
                k /= p as u64;
            }
            cand.push(1);
            if poly_rem(modulus, &cand, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Description of a finite field `F_p[x]/(modulus)`.
pub struct FieldSpec {
    p: u32,
    f: u32,
    q: u32,
    modulus: Vec<u32>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    frob: Vec<u8>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}[x]/{:?}", self.p, self.modulus)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

impl FieldSpec {
    /// Builds `F_p[x]/(modulus)`, checking primality and irreducibility.
    pub fn new(p: u32, modulus: Vec<u32>) -> Result<Arc<Self>> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if modulus.len() < 2 || *modulus.last().unwrap() != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(Error::BadModulus);
        }
        let f = (modulus.len() - 1) as u32;
        let q = (p as u64).pow(f);
        if q > RESIDUE_CAP as u64 {
            return Err(Error::CapExceeded { what: "residue field size", value: q, cap: RESIDUE_CAP as u64 });
        }
        if !is_irreducible(&modulus, p) {
            return Err(Error::ReducibleModulus(modulus));
        }
        Ok(Arc::new(Self::build_tables(p, f, q as u32, modulus)))
    }

    /// The field of size `p^f` with its published modulus.
    pub fn standard(p: u32, f: u32) -> Result<Arc<Self>> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let q = (p as u64).checked_pow(f).unwrap_or(u64::MAX);
        if q > RESIDUE_CAP as u64 {
            return Err(Error::CapExceeded { what: "residue field size", value: q, cap: RESIDUE_CAP as u64 });
        }
        if let Some((_, m)) = STANDARD_MODULI.iter().find(|(pp, m)| *pp == p && m.len() as u32 == f + 1) {
            return Self::new(p, m.to_vec());
        }
        if f == 1 {
            return Self::new(p, vec![0, 1]);
        }
        Err(Error::NoStandardModulus { p, f })
    }

    /// Standard field of the given cardinality.
    pub fn of_size(q: u32) -> Result<Arc<Self>> {
        for p in 2..=q {
            if is_prime(p) && q.is_multiple_of(p) {
                let mut f = 0;
                let mut r = q;
                while r.is_multiple_of(p) {
                    r /= p;
                    f += 1;
                }
                if r != 1 {
                    return Err(Error::Invalid(format!("{q} is not a prime power")));
                }
                return Self::standard(p, f);
            }
        }
        Err(Error::Invalid(format!("{q} is not a prime power")))
    }

    fn build_tables(p: u32, f: u32, q: u32, modulus: Vec<u32>) -> Self {
        let n = q as usize;
        let decode = |c: u32| -> Vec<u32> {
            let mut v = Vec::with_capacity(f as usize);
            let mut k = c;
            for _ in 0..f {
                v.push(k % p);
                k /= p;
            }
            v
        };
        let encode = |v: &[u32]| -> u32 { v.iter().rev().fold(0, |acc, &c| acc * p + c) };
        let digits: Vec<Vec<u32>> = (0..q).map(decode).collect();
        let mut add = vec![0u8; n * n];
        let mut mul = vec![0u8; n * n];
        for a in 0..n {
            for b in 0..n {
                let s: Vec<u32> = digits[a].iter().zip(&digits[b]).map(|(x, y)| (x + y) % p).collect();
                add[a * n + b] = encode(&s) as u8;
                let mut prod = vec![0u32; 2 * f as usize - 1];
                for (i, x) in digits[a].iter().enumerate() {
                    for (j, y) in digits[b].iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let mut r = poly_rem(&prod, &modulus, p);
                r.resize(f as usize, 0);
                mul[a * n + b] = encode(&r) as u8;
            }
        }
        let mut neg = vec![0u8; n];
        let mut inv = vec![0u8; n];
        for a in 0..n {
            for b in 0..n {
                if add[a * n + b] == 0 {
                    neg[a] = b as u8;
                }
                if mul[a * n + b] == 1 {
                    inv[a] = b as u8;
                }
            }
        }
        let mut frob = vec![0u8; n];
        for a in 0..n {
            let mut acc = 1u8;
            for _ in 0..p {
                acc = mul[acc as usize * n + a];
            }
            frob[a] = acc;
        }
        FieldSpec { p, f, q, modulus, add, mul, neg, inv, frob }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Degree over the prime field.
    pub fn f(&self) -> u32 {
        self.f
    }

    /// Cardinality `p^f`.
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg[b as usize])
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.neg[a as usize]
    }

    /// Inverse of a nonzero code; `inv(0)` is reported as 0 by the table,
    /// callers guard against it.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }

    /// `a^{p^j}`.
    pub fn frobenius(&self, a: u8, j: i64) -> u8 {
        let j = j.rem_euclid(self.f as i64);
        (0..j).fold(a, |acc, _| self.frob[acc as usize])
    }

    pub fn pow(&self, a: u8, mut e: u64) -> u8 {
        let mut base = a;
        let mut acc = 1u8;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Coefficient vector (length `f`) of a code.
    pub fn coeffs(&self, a: u8) -> Vec<u32> {
        let mut v = Vec::with_capacity(self.f as usize);
        let mut k = a as u32;
        for _ in 0..self.f {
            v.push(k % self.p);
            k /= self.p;
        }
        v
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<u8> {
        if coeffs.len() != self.f as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::Invalid(format!("bad coefficient vector {coeffs:?}")));
        }
        Ok(coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c) as u8)
    }

    /// Image of an integer under `Z -> F_p -> F_q`.
    pub fn from_int(&self, n: i64) -> u8 {
        n.rem_euclid(self.p as i64) as u8
    }

    /// The polynomial generator `x` (equal to 1's successor in `F_p` when `f = 1`).
    pub fn generator(&self) -> u8 {
        if self.f == 1 {
            self.from_int(-(self.modulus[0] as i64))
        } else {
            self.p as u8
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = u8> {
        (0..self.q).map(|a| a as u8)
    }

    /// Table of images of every code of `self` inside `big`, for a
    /// homomorphism fixed by sending `x` to a root of `self`'s modulus.
    pub fn embedding_into(&self, big: &FieldSpec) -> Result<Vec<u8>> {
        if self.p != big.p || !big.f.is_multiple_of(self.f) {
            return Err(Error::NotInTower);
        }
        let root = if self.f == 1 {
            big.from_int(-(self.modulus[0] as i64))
        } else {
            let eval = |r: u8| {
                self.modulus.iter().rev().fold(0u8, |acc, &c| big.add(big.mul(acc, r), big.from_int(c as i64)))
            };
            // compatible choice for Conway-style moduli, otherwise smallest root
            let norm_gen = big.pow(big.generator(), ((big.q - 1) / (self.q - 1)) as u64);
            if eval(norm_gen) == 0 {
                norm_gen
            } else {
                big.elements().find(|&r| eval(r) == 0).ok_or(Error::NotInTower)?
            }
        };
        Ok(self
            .elements()
            .map(|a| {
                self.coeffs(a)
                    .iter()
                    .rev()
                    .fold(0u8, |acc, &c| big.add(big.mul(acc, root), big.from_int(c as i64)))
            })
            .collect())
    }
}

/// Canonical JSON form: `{"p": .., "f": .., "modulus": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpecRepr {
    pub p: u32,
    pub f: u32,
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    pub fn repr(&self) -> FieldSpecRepr {
        FieldSpecRepr { p: self.p, f: self.f, modulus: self.modulus.clone() }
    }

    pub fn from_repr(repr: &FieldSpecRepr) -> Result<Arc<Self>> {
        let spec = Self::new(repr.p, repr.modulus.clone())?;
        if spec.f != repr.f {
            return Err(Error::BadModulus);
        }
        Ok(spec)
    }
}

/// An element of a finite field together with its field.
#[derive(Clone)]
pub struct FqElement {
    spec: Arc<FieldSpec>,
    code: u8,
}

impl fmt::Debug for FqElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.spec.coeffs(self.code))
    }
}

impl PartialEq for FqElement {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.code == other.code
    }
}

impl Eq for FqElement {}

impl FqElement {
    pub fn new(spec: &Arc<FieldSpec>, code: u8) -> Self {
        assert!((code as u32) < spec.q, "code out of range");
        FqElement { spec: spec.clone(), code }
    }

    pub fn from_coeffs(spec: &Arc<FieldSpec>, coeffs: &[u32]) -> Result<Self> {
        Ok(FqElement { spec: spec.clone(), code: spec.from_coeffs(coeffs)? })
    }

    pub fn zero(spec: &Arc<FieldSpec>) -> Self {
        Self::new(spec, 0)
    }

    pub fn one(spec: &Arc<FieldSpec>) -> Self {
        Self::new(spec, 1)
    }

    pub fn spec(&self) -> &Arc<FieldSpec> {
        &self.spec
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn coeffs(&self) -> Vec<u32> {
        self.spec.coeffs(self.code)
    }

    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    fn check(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.spec, &other.spec) || self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::MixedFields)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(&self.spec, self.spec.add(self.code, other.code)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(&self.spec, self.spec.sub(self.code, other.code)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(&self.spec, self.spec.mul(self.code, other.code)))
    }

    pub fn neg(&self) -> Self {
        Self::new(&self.spec, self.spec.neg(self.code))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.code == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::new(&self.spec, self.spec.inv(self.code)))
    }

    /// `a^{p^j}`; negative `j` inverts the Frobenius.
    pub fn frobenius(&self, j: i64) -> Self {
        Self::new(&self.spec, self.spec.frobenius(self.code, j))
    }

    pub fn pow(&self, e: u64) -> Self {
        Self::new(&self.spec, self.spec.pow(self.code, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FqElementRepr {
    pub field: FieldSpecRepr,
    pub coeffs: Vec<u32>,
}

impl Serialize for FqElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FqElementRepr { field: self.spec.repr(), coeffs: self.coeffs() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FqElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FqElementRepr::deserialize(d)?;
        let spec = FieldSpec::from_repr(&repr.field).map_err(serde::de::Error::custom)?;
        FqElement::from_coeffs(&spec, &repr.coeffs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f4() -> Arc<FieldSpec> {
        FieldSpec::new(2, vec![1, 1, 1]).unwrap()
    }

    fn f9() -> Arc<FieldSpec> {
        FieldSpec::new(3, vec![1, 0, 1]).unwrap()
    }

    #[test]
    fn char_two_addition() {
        let f2 = FieldSpec::standard(2, 1).unwrap();
        let one = FqElement::one(&f2);
        assert!(one.add(&one).unwrap().is_zero());
    }

    #[test]
    fn f4_reduces_x_squared() {
        let k = f4();
        let x = FqElement::from_coeffs(&k, &[0, 1]).unwrap();
        assert_eq!(x.mul(&x).unwrap().coeffs(), vec![1, 1]);
        assert_eq!(x.frobenius(1).coeffs(), vec![1, 1]);
    }

    #[test]
    fn f9_inverse_of_x() {
        let k = f9();
        let x = FqElement::from_coeffs(&k, &[0, 1]).unwrap();
        // brute-force inverse from the multiplication table
        let brute = k.elements().find(|&b| k.mul(x.code(), b) == 1).unwrap();
        assert_eq!(k.coeffs(brute), vec![0, 2]);
        assert_eq!(x.inv().unwrap().coeffs(), vec![0, 2]);
        assert_eq!(x.frobenius(1).coeffs(), vec![0, 2]);
    }

    #[test]
    fn frobenius_full_cycle_is_identity() {
        for (p, f) in [(2, 3), (3, 2), (2, 4), (5, 2)] {
            let k = FieldSpec::standard(p, f).unwrap();
            for a in k.elements() {
                assert_eq!(k.frobenius(a, f as i64), a);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(FieldSpec::new(4, vec![1, 1]), Err(Error::NotPrime(4))));
        assert!(matches!(FieldSpec::new(2, vec![1, 0, 1]), Err(Error::ReducibleModulus(_))));
        assert!(matches!(FieldSpec::standard(2, 9), Err(Error::CapExceeded { .. })));
        let k = f4();
        let z = FqElement::zero(&k);
        assert!(matches!(z.inv(), Err(Error::DivisionByZero)));
        let other = FqElement::one(&f9());
        assert!(matches!(z.add(&other), Err(Error::MixedFields)));
    }

    #[test]
    fn standard_table_is_irreducible() {
        for (p, m) in STANDARD_MODULI {
            assert!(FieldSpec::new(*p, m.to_vec()).is_ok(), "{p} {m:?}");
        }
    }

    #[test]
    fn field_axioms_exhaustive_up_to_16() {
        for (p, f) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (11, 1), (13, 1), (2, 4)] {
            let k = FieldSpec::standard(p, f).unwrap();
            for a in k.elements() {
                if a != 0 {
                    assert_eq!(k.mul(a, k.inv(a)), 1);
                }
                assert_eq!(k.add(a, k.neg(a)), 0);
                for b in k.elements() {
                    assert_eq!(k.mul(a, b), k.mul(b, a));
                    let fa = k.frobenius(k.add(a, b), 1);
                    assert_eq!(fa, k.add(k.frobenius(a, 1), k.frobenius(b, 1)));
                    assert_eq!(k.frobenius(k.mul(a, b), 1), k.mul(k.frobenius(a, 1), k.frobenius(b, 1)));
                    for c in k.elements() {
                        assert_eq!(k.mul(k.mul(a, b), c), k.mul(a, k.mul(b, c)));
                        assert_eq!(k.add(k.add(a, b), c), k.add(a, k.add(b, c)));
                        assert_eq!(k.mul(a, k.add(b, c)), k.add(k.mul(a, b), k.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn embedding_is_a_homomorphism() {
        let small = FieldSpec::standard(2, 2).unwrap();
        let big = FieldSpec::standard(2, 4).unwrap();
        let e = small.embedding_into(&big).unwrap();
        for a in small.elements() {
            for b in small.elements() {
                assert_eq!(e[small.mul(a, b) as usize], big.mul(e[a as usize], e[b as usize]));
                assert_eq!(e[small.add(a, b) as usize], big.add(e[a as usize], e[b as usize]));
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let k = f9();
        let x = FqElement::from_coeffs(&k, &[2, 1]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"field":{"p":3,"f":2,"modulus":[1,0,1]},"coeffs":[2,1]}"#);
        let back: FqElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
    }
}
