use std::sync::Arc;

use crate::algebra::{FieldSpec, LocalFieldElement, LocalFieldSpec};
use crate::error::{Error, Result};
use crate::tower::root_uniformizer_image;

use super::additive::{log_p, AdditivePolynomial};

/// Where valuations are read: on the generic fibre `t` is invertible and
/// every nonzero element is a unit; on the closed fibre the field's own
/// valuation is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Specialization {
    GenericFibre,
    ClosedFibre,
}

impl Specialization {
    pub fn is_unit(self, x: &LocalFieldElement) -> bool {
        match self {
            Specialization::GenericFibre => !x.is_zero(),
            Specialization::ClosedFibre => x.exact_valuation() == Some(0),
        }
    }

    /// `x` lies in the maximal ideal (zero counts).
    pub fn is_topologically_nilpotent(self, x: &LocalFieldElement) -> bool {
        match self {
            Specialization::GenericFibre => x.is_zero(),
            Specialization::ClosedFibre => x.exact_valuation().is_none_or(|v| v > 0),
        }
    }
}

/// A formal o-module in the additive model, given by its monic
/// `[t](T) = t T + c_1 T^q + ... + T^{q^n}`.
#[derive(Clone, Debug)]
pub struct FormalOModule {
    t_action: AdditivePolynomial,
    /// `F_q` in its standard presentation.
    scalars: Arc<FieldSpec>,
    /// Standard `F_q` codes to codes of the coefficient field's residue field.
    scalar_map: Vec<u8>,
}

impl FormalOModule {
    pub fn new(t_action: AdditivePolynomial) -> Result<Self> {
        let field = t_action.field().clone();
        let t = root_uniformizer_image(&field)?;
        if !t_action.linear_coefficient().agrees_with(&t)? {
            return Err(Error::Invalid("linear coefficient of [t] must be the image of t".into()));
        }
        let top = &t_action.coeffs()[t_action.degree_index()];
        if t_action.degree_index() == 0 || !(top.is_exact() && top.series() == LocalFieldElement::one(&field).series()) {
            return Err(Error::Invalid("[t] must be monic of degree at least q".into()));
        }
        let k = field.residue();
        let scalars = FieldSpec::standard(k.p(), log_p(t_action.q(), k.p()))?;
        let scalar_map = scalars.embedding_into(k)?;
        Ok(FormalOModule { t_action, scalars, scalar_map })
    }

    /// `[t](T) = tT + sum_{0<i<n} u_i T^{q^i} + T^{q^n}` with the given
    /// middle coefficients.
    pub fn with_parameters(field: &Arc<LocalFieldSpec>, q: u32, middle: &[LocalFieldElement]) -> Result<Self> {
        let mut coeffs = vec![root_uniformizer_image(field)?];
        coeffs.extend(middle.iter().cloned());
        coeffs.push(LocalFieldElement::one(field));
        Self::new(AdditivePolynomial::new(field, q, coeffs)?)
    }

    /// The Lubin–Tate model `tT + T^{q^n}`.
    pub fn lubin_tate(field: &Arc<LocalFieldSpec>, q: u32, n: usize) -> Result<Self> {
        let zeros = vec![LocalFieldElement::zero(field); n.saturating_sub(1)];
        Self::with_parameters(field, q, &zeros)
    }

    pub fn field(&self) -> &Arc<LocalFieldSpec> {
        self.t_action.field()
    }

    pub fn t_action(&self) -> &AdditivePolynomial {
        &self.t_action
    }

    pub fn q(&self) -> u32 {
        self.t_action.q()
    }

    /// F-height bound `n` (the degree of `[t]` is `q^n`).
    pub fn height(&self) -> usize {
        self.t_action.degree_index()
    }

    pub fn scalars(&self) -> &Arc<FieldSpec> {
        &self.scalars
    }

    /// Image of a standard `F_q` code in the coefficient field's residue field.
    pub fn scalar(&self, c: u8) -> u8 {
        self.scalar_map[c as usize]
    }

    /// Same module with coefficients pushed to a field above.
    pub fn embed(&self, target: &Arc<LocalFieldSpec>) -> Result<Self> {
        Self::new(self.t_action.embed(target)?)
    }

    /// `[a]` for `a = sum_j a_j t^j` (standard `F_q` codes).
    pub fn multiply_by(&self, a: &[u8], degree_cap: u64) -> Result<AdditivePolynomial> {
        let field = self.field();
        let Some(top) = a.iter().rposition(|&c| c != 0) else {
            return Ok(AdditivePolynomial::zero(field, self.q()));
        };
        let deg = (self.q() as u64).checked_pow((self.height() * top) as u32).unwrap_or(u64::MAX);
        if deg > degree_cap {
            return Err(Error::CapExceeded { what: "[a] degree", value: deg, cap: degree_cap });
        }
        let mut power = AdditivePolynomial::identity(field, self.q());
        let mut acc = AdditivePolynomial::zero(field, self.q());
        for (j, &c) in a[..=top].iter().enumerate() {
            if j > 0 {
                power = self.t_action.compose(&power, degree_cap)?;
            }
            if c != 0 {
                acc = acc.add(&power.scale(self.scalar(c)))?;
            }
        }
        Ok(acc)
    }

    /// `x, [t](x), ..., [t^{len-1}](x)`.
    pub fn t_orbit(&self, x: &LocalFieldElement, len: usize) -> Result<Vec<LocalFieldElement>> {
        let mut out = Vec::with_capacity(len);
        let mut cur = x.clone();
        for j in 0..len {
            if j > 0 {
                cur = self.t_action.eval(&cur)?;
            }
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// `[a](x)` evaluated along the `t`-orbit of `x`.
    pub fn act(&self, a: &[u8], x: &LocalFieldElement) -> Result<LocalFieldElement> {
        let orbit = self.t_orbit(x, a.len())?;
        combine(self, a, &orbit)
    }

    /// Index of the first unit coefficient of `[t]` at `spec`.
    pub fn connected_height(&self, spec: Specialization) -> usize {
        self.t_action.coeffs().iter().position(|c| spec.is_unit(c)).expect("monic")
    }
}

/// `sum_j a_j orbit[j]`.
pub(crate) fn combine(module: &FormalOModule, a: &[u8], orbit: &[LocalFieldElement]) -> Result<LocalFieldElement> {
    let mut acc = LocalFieldElement::zero(module.field());
    for (&c, x) in a.iter().zip(orbit) {
        if c != 0 {
            acc = acc.add(&x.scale(module.scalar(c)))?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::series::EXACT;
    use crate::algebra::Series;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(p: u32, f: u32) -> Arc<LocalFieldSpec> {
        LocalFieldSpec::laurent(&FieldSpec::standard(p, f).unwrap(), "t")
    }

    fn random_element(k: &Arc<LocalFieldSpec>, rng: &mut ChaCha8Rng) -> LocalFieldElement {
        let q = k.residue().q();
        let coeffs: Vec<u8> = (0..12).map(|_| rng.gen_range(0..q) as u8).collect();
        LocalFieldElement::from_series(k, Series::from_terms(rng.gen_range(-2..3), coeffs, EXACT))
    }

    #[test]
    fn multiply_by_one_and_t() {
        let k = f(3, 1);
        let x = FormalOModule::lubin_tate(&k, 3, 1).unwrap();
        assert_eq!(x.multiply_by(&[1], 4096).unwrap().degree(), 1);
        let t = x.multiply_by(&[0, 1], 4096).unwrap();
        assert!(t.coeff(0).agrees_with(&LocalFieldElement::uniformizer(&k)).unwrap());
        assert!(t.coeff(1).agrees_with(&LocalFieldElement::one(&k)).unwrap());
        assert!(x.multiply_by(&[0, 0], 4096).unwrap().is_zero());
    }

    #[test]
    fn t_squared_q2() {
        let k = f(2, 1);
        let x = FormalOModule::lubin_tate(&k, 2, 1).unwrap();
        let p = x.multiply_by(&[0, 0, 1], 4096).unwrap();
        let t = LocalFieldElement::uniformizer(&k);
        let expected = [t.pow(2), t.add(&t.pow(2)).unwrap(), LocalFieldElement::one(&k)];
        assert_eq!(p.degree_index(), 2);
        for (i, e) in expected.iter().enumerate() {
            assert!(p.coeff(i).agrees_with(e).unwrap(), "coefficient {i}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_element(&k, &mut rng);
            let b = random_element(&k, &mut rng);
            let lhs = p.eval(&a.add(&b).unwrap()).unwrap();
            let rhs = p.eval(&a).unwrap().add(&p.eval(&b).unwrap()).unwrap();
            assert!(lhs.agrees_with(&rhs).unwrap());
        }
    }

    #[test]
    fn ring_action_law_exhaustive() {
        // o/t^2 over F_4 acting through [t] = tT + T^4 (q = 2, n = 2)
        let k = f(2, 2);
        let x = FormalOModule::lubin_tate(&k, 2, 2).unwrap();
        let ring = crate::algebra::TruncRing::new(x.scalars(), 2);
        // products of two elements of degree < 2 are exact modulo t^3
        let wide = crate::algebra::TruncRing::new(x.scalars(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_element(&k, &mut rng);
        for a in ring.elements() {
            for b in ring.elements() {
                let pa = x.multiply_by(&a, 4096).unwrap();
                let pb = x.multiply_by(&b, 4096).unwrap();
                let sum = x.multiply_by(&ring.add(&a, &b), 4096).unwrap();
                let prod = x.multiply_by(&wide.mul(&wide.from_coeffs(&a), &wide.from_coeffs(&b)), 4096).unwrap();
                let lhs = pa.compose(&pb, 4096).unwrap().eval(&y).unwrap();
                assert!(lhs.agrees_with(&prod.eval(&y).unwrap()).unwrap(), "[a][b] at {a:?} {b:?}");
                let lhs = pa.add(&pb).unwrap().eval(&y).unwrap();
                assert!(lhs.agrees_with(&sum.eval(&y).unwrap()).unwrap());
                assert!(x.act(&a, &y).unwrap().agrees_with(&pa.eval(&y).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn multiply_cap() {
        let k = f(2, 1);
        let x = FormalOModule::lubin_tate(&k, 2, 2).unwrap();
        assert!(matches!(x.multiply_by(&[0, 0, 1], 8), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn connected_heights() {
        let k = f(2, 2);
        let cm = FormalOModule::lubin_tate(&k, 2, 2).unwrap();
        assert_eq!(cm.connected_height(Specialization::ClosedFibre), 2);
        assert_eq!(cm.connected_height(Specialization::GenericFibre), 0);
        let u1 = FormalOModule::with_parameters(&k, 2, &[LocalFieldElement::one(&k)]).unwrap();
        assert_eq!(u1.connected_height(Specialization::ClosedFibre), 1);
    }

    #[test]
    fn rejects_non_monic() {
        let k = f(2, 1);
        let t = LocalFieldElement::uniformizer(&k);
        let p = AdditivePolynomial::new(&k, 2, vec![t.clone(), t]).unwrap();
        assert!(FormalOModule::new(p).is_err());
    }
}
