use std::sync::Arc;

use rand::Rng;

use crate::algebra::{FieldSpec, TruncElem, TruncRing};
use crate::error::{Error, Result};

use super::matrix::{det, Matrix};

/// `o_B / t^m o_B` for the maximal order of the division algebra of
/// invariant `1/n` over `F_q((t))`: elements `sum_{i<n} a_i Π^i` with
/// `a_i ∈ o'/t^m`, `o' = F_{q^n}[[t]]`, `Π^n = t` and `Π a = Frob(a) Π`,
/// `Frob` the `q`-power map.
#[derive(Clone, Debug)]
pub struct DivisionAlgebraOrder {
    n: usize,
    m: usize,
    /// `F_q` inside `F_{q^n}`.
    small: Arc<FieldSpec>,
    /// `o'/t^m`.
    ring: TruncRing,
    /// `o'/t^{m+1}`, where the left-multiplication matrix lives.
    wide: TruncRing,
    /// Standard `F_q` codes to `F_{q^n}` codes.
    embedding: Vec<u8>,
}

/// `sum_i a_i Π^i`, `a_i` as coefficient sequences in `o'/t^m`.
pub type OrderElem = Vec<TruncElem>;

impl DivisionAlgebraOrder {
    pub fn new(q: u32, n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("n must be positive".into()));
        }
        let small = FieldSpec::of_size(q)?;
        let big = FieldSpec::standard(small.p(), small.f() * n as u32)?;
        let embedding = small.embedding_into(&big)?;
        Ok(DivisionAlgebraOrder { n, m, ring: TruncRing::new(&big, m), wide: TruncRing::new(&big, m + 1), small, embedding })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `o'/t^m`.
    pub fn coefficient_ring(&self) -> &TruncRing {
        &self.ring
    }

    /// `Frob^j` on `o'/t^m` (`j` may be negative).
    pub fn frob(&self, a: &[u8], j: i64) -> TruncElem {
        self.ring.frobenius(a, j * self.small.f() as i64)
    }

    pub fn from_unramified(&self, a: &[u8]) -> OrderElem {
        let mut b = vec![self.ring.zero(); self.n];
        b[0] = a.to_vec();
        b
    }

    pub fn one(&self) -> OrderElem {
        self.from_unramified(&self.ring.one())
    }

    /// `Π`.
    pub fn pi(&self) -> OrderElem {
        let mut b = vec![self.ring.zero(); self.n];
        if self.n == 1 {
            b[0] = self.ring.uniformizer();
        } else {
            b[1] = self.ring.one();
        }
        b
    }

    pub fn mul(&self, a: &OrderElem, b: &OrderElem) -> OrderElem {
        let r = &self.ring;
        let mut out = vec![r.zero(); self.n];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                // a_i Π^i b_j Π^j = a_i Frob^i(b_j) Π^{i+j}
                let mut c = r.mul(ai, &self.frob(bj, i as i64));
                let k = i + j;
                if k >= self.n {
                    c = r.mul(&c, &r.uniformizer());
                }
                out[k % self.n] = r.add(&out[k % self.n], &c);
            }
        }
        out
    }

    pub fn add(&self, a: &OrderElem, b: &OrderElem) -> OrderElem {
        a.iter().zip(b).map(|(x, y)| self.ring.add(x, y)).collect()
    }

    /// Units are exactly the elements with `a_0` invertible mod `t`.
    pub fn is_unit(&self, b: &OrderElem) -> bool {
        self.m == 0 || b[0][0] != 0
    }

    pub fn random_unit(&self, rng: &mut impl Rng) -> OrderElem {
        let q = self.ring.field().q();
        loop {
            let b: OrderElem = (0..self.n).map(|_| (0..self.m).map(|_| rng.gen_range(0..q) as u8).collect()).collect();
            if self.is_unit(&b) {
                return b;
            }
        }
    }

    /// Matrix of `x -> b x` on the right `o'`-basis `1, Π, ..., Π^{n-1}`
    /// over `o'/t^{m+1}`: `a Π^k` sends `Π^i c` to
    /// `Π^{(k+i) mod n} t^{[k+i>=n]} Frob^{-(k+i)}(a) c`.
    pub fn left_multiplication(&self, b: &OrderElem) -> Matrix {
        let w = &self.wide;
        let n = self.n;
        let mut mat = vec![vec![w.zero(); n]; n];
        for (k, a) in b.iter().enumerate() {
            let lifted = w.from_coeffs(a);
            for i in 0..n {
                let mut c = w.frobenius(&lifted, -((k + i) as i64) * self.small.f() as i64);
                if k + i >= n {
                    c = w.mul(&c, &w.uniformizer());
                }
                let row = (k + i) % n;
                mat[row][i] = w.add(&mat[row][i], &c);
            }
        }
        mat
    }

    /// `Nrd(b) mod t^m` in standard `F_q` codes.
    pub fn reduced_norm(&self, b: &OrderElem) -> Result<TruncElem> {
        if !self.is_unit(b) {
            return Err(Error::NotAUnit);
        }
        let d = self.wide.reduce(&det(&self.wide, &self.left_multiplication(b)), self.m);
        self.descend(&d)
    }

    /// `N_{o'/o}(a) = prod_{j<n} Frob^j(a)` in standard `F_q` codes.
    pub fn norm(&self, a: &[u8]) -> Result<TruncElem> {
        let d = (0..self.n).fold(self.ring.one(), |acc, j| self.ring.mul(&acc, &self.frob(a, j as i64)));
        self.descend(&d)
    }

    fn descend(&self, d: &[u8]) -> Result<TruncElem> {
        d.iter()
            .map(|&c| {
                self.embedding.iter().position(|&e| e == c).map(|i| i as u8).ok_or_else(|| {
                    Error::FrobeniusInvarianceViolation(format!("coefficient {c} of {d:?} is not in F_{}", self.small.q()))
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pi_relations() {
        let d = DivisionAlgebraOrder::new(2, 2, 2).unwrap();
        let r = d.coefficient_ring();
        let pi = d.pi();
        assert_eq!(d.mul(&pi, &pi), d.from_unramified(&r.uniformizer()));
        let x = r.from_coeffs(&[2]);
        let a = d.from_unramified(&x);
        assert_eq!(d.mul(&pi, &a), d.mul(&d.from_unramified(&d.frob(&x, 1)), &pi));
    }

    #[test]
    fn associativity_sampled() {
        let d = DivisionAlgebraOrder::new(3, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (a, b, c) = (d.random_unit(&mut rng), d.random_unit(&mut rng), d.random_unit(&mut rng));
            assert_eq!(d.mul(&d.mul(&a, &b), &c), d.mul(&a, &d.mul(&b, &c)));
        }
    }

    #[test]
    fn explicit_two_by_two() {
        // q = 2, n = 2, m = 1, b = x + a_1 Π: det = x Frob(x) - t a_1 Frob(a_1) = 1 mod t
        let d = DivisionAlgebraOrder::new(2, 2, 1).unwrap();
        let x = vec![2u8];
        for a1 in 0..4u8 {
            let b = vec![x.clone(), vec![a1]];
            assert_eq!(d.reduced_norm(&b).unwrap(), vec![1]);
        }
        assert_eq!(d.reduced_norm(&d.one()).unwrap(), vec![1]);
        assert!(matches!(d.reduced_norm(&vec![vec![0], vec![1]]), Err(Error::NotAUnit)));
    }

    #[test]
    fn nrd_is_norm_on_unramified_units() {
        for (q, n, m) in [(2, 2, 2), (3, 2, 1), (2, 3, 1)] {
            let d = DivisionAlgebraOrder::new(q, n, m).unwrap();
            for a in d.coefficient_ring().units() {
                assert_eq!(d.reduced_norm(&d.from_unramified(&a)).unwrap(), d.norm(&a).unwrap());
            }
        }
    }

    #[test]
    fn nrd_multiplicative() {
        let d = DivisionAlgebraOrder::new(2, 2, 2).unwrap();
        let r = TruncRing::new(&FieldSpec::of_size(2).unwrap(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let (a, b) = (d.random_unit(&mut rng), d.random_unit(&mut rng));
            let lhs = d.reduced_norm(&d.mul(&a, &b)).unwrap();
            assert_eq!(lhs, r.mul(&d.reduced_norm(&a).unwrap(), &d.reduced_norm(&b).unwrap()));
        }
    }
}
