use std::sync::Arc;

use crate::algebra::{LocalFieldElement, LocalFieldSpec};
use crate::error::{Error, Result};
use crate::tower::embed;

/// Degree cap for additive polynomials built by composition.
pub const DEGREE_CAP: u64 = 4096;

/// An `F_q`-linear polynomial `sum_i c_i T^{q^i}` over a local field.
#[derive(Clone, Debug)]
pub struct AdditivePolynomial {
    field: Arc<LocalFieldSpec>,
    q: u32,
    coeffs: Vec<LocalFieldElement>,
}

/// `log_p(q)` for a prime power `q`.
pub(crate) fn log_p(q: u32, p: u32) -> u32 {
    let mut f = 0;
    let mut r = q;
    while r > 1 {
        r /= p;
        f += 1;
    }
    f
}

impl AdditivePolynomial {
    pub fn new(field: &Arc<LocalFieldSpec>, q: u32, mut coeffs: Vec<LocalFieldElement>) -> Result<Self> {
        let p = field.residue().p();
        let f0 = log_p(q, p);
        if q < p || (p as u64).pow(f0) != q as u64 || !field.residue().f().is_multiple_of(f0) {
            return Err(Error::Invalid(format!("{q} is not a power of the characteristic dividing the residue field")));
        }
        if coeffs.iter().any(|c| !Arc::ptr_eq(c.field(), field)) {
            return Err(Error::MixedFields);
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero() && c.is_exact()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(LocalFieldElement::zero(field));
        }
        Ok(AdditivePolynomial { field: field.clone(), q, coeffs })
    }

    pub fn zero(field: &Arc<LocalFieldSpec>, q: u32) -> Self {
        AdditivePolynomial { field: field.clone(), q, coeffs: vec![LocalFieldElement::zero(field)] }
    }

    /// The polynomial `T`.
    pub fn identity(field: &Arc<LocalFieldSpec>, q: u32) -> Self {
        AdditivePolynomial { field: field.clone(), q, coeffs: vec![LocalFieldElement::one(field)] }
    }

    pub fn field(&self) -> &Arc<LocalFieldSpec> {
        &self.field
    }

    /// Size of the field over which the polynomial is linear.
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn coeffs(&self) -> &[LocalFieldElement] {
        &self.coeffs
    }

    /// Coefficient of `T^{q^i}` (zero beyond the top).
    pub fn coeff(&self, i: usize) -> LocalFieldElement {
        self.coeffs.get(i).cloned().unwrap_or_else(|| LocalFieldElement::zero(&self.field))
    }

    pub fn linear_coefficient(&self) -> &LocalFieldElement {
        &self.coeffs[0]
    }

    /// Index `d` of the top term `T^{q^d}`.
    pub fn degree_index(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero() && self.coeffs[0].is_exact()
    }

    pub fn degree(&self) -> u64 {
        (self.q as u64).pow(self.degree_index() as u32)
    }

    fn f0(&self) -> u32 {
        log_p(self.q, self.field.residue().p())
    }

    pub fn eval(&self, x: &LocalFieldElement) -> Result<LocalFieldElement> {
        let f0 = self.f0();
        let mut acc = LocalFieldElement::zero(&self.field);
        let mut power = x.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                power = power.pow_p(f0);
            }
            if !(c.is_zero() && c.is_exact()) {
                acc = acc.add(&c.mul(&power)?)?;
            }
        }
        Ok(acc)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self, degree_cap: u64) -> Result<Self> {
        if !Arc::ptr_eq(&self.field, &other.field) || self.q != other.q {
            return Err(Error::MixedFields);
        }
        let d = self.degree_index() + other.degree_index();
        let deg = (self.q as u64).checked_pow(d as u32).unwrap_or(u64::MAX);
        if deg > degree_cap {
            return Err(Error::CapExceeded { what: "additive polynomial degree", value: deg, cap: degree_cap });
        }
        let f0 = self.f0();
        let mut out = vec![LocalFieldElement::zero(&self.field); d + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() && c.is_exact() {
                continue;
            }
            for (k, r) in other.coeffs.iter().enumerate() {
                let twisted = r.pow_p(f0 * i as u32);
                out[i + k] = out[i + k].add(&c.mul(&twisted)?)?;
            }
        }
        Self::new(&self.field, self.q, out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.field, &other.field) || self.q != other.q {
            return Err(Error::MixedFields);
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).add(&other.coeff(i))).collect::<Result<Vec<_>>>()?;
        Self::new(&self.field, self.q, coeffs)
    }

    /// Multiplies every coefficient by the residue constant `c`.
    pub fn scale(&self, c: u8) -> Self {
        AdditivePolynomial { field: self.field.clone(), q: self.q, coeffs: self.coeffs.iter().map(|x| x.scale(c)).collect() }
    }

    /// Coefficientwise image in a field above.
    pub fn embed(&self, target: &Arc<LocalFieldSpec>) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| embed(c, target)).collect::<Result<Vec<_>>>()?;
        Ok(AdditivePolynomial { field: target.clone(), q: self.q, coeffs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FieldSpec;

    #[test]
    fn eval_is_additive() {
        let k = LocalFieldSpec::laurent(&FieldSpec::standard(3, 1).unwrap(), "t");
        let t = LocalFieldElement::uniformizer(&k);
        let p = AdditivePolynomial::new(&k, 3, vec![t.clone(), LocalFieldElement::one(&k)]).unwrap();
        let x = t.add(&LocalFieldElement::one(&k)).unwrap();
        let y = t.pow(2).scale(2);
        let lhs = p.eval(&x.add(&y).unwrap()).unwrap();
        let rhs = p.eval(&x).unwrap().add(&p.eval(&y).unwrap()).unwrap();
        assert!(lhs.agrees_with(&rhs).unwrap());
        assert!(p.eval(&x.scale(2)).unwrap().agrees_with(&p.eval(&x).unwrap().scale(2)).unwrap());
    }

    #[test]
    fn composition_cap() {
        let k = LocalFieldSpec::laurent(&FieldSpec::standard(2, 1).unwrap(), "t");
        let t = LocalFieldElement::uniformizer(&k);
        let p = AdditivePolynomial::new(&k, 2, vec![t, LocalFieldElement::zero(&k), LocalFieldElement::one(&k)]).unwrap();
        assert!(p.compose(&p, 16).is_ok());
        assert!(matches!(p.compose(&p, 8), Err(Error::CapExceeded { .. })));
    }
}
