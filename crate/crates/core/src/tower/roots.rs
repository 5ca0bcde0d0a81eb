//! Solutions of `P(T) = rhs` for a separable additive polynomial `P`,
//! inside a given field.
//!
//! Solutions are built term by term. If `T` has leading term `a u^k`, then
//! either the leading term of `P(T)` is `R_k(a) u^{g(k)}` with
//! `g(k) = min_i v(c_i) + q^i k` and `R_k` the residual polynomial of the
//! terms achieving the minimum, or `R_k(a) = 0` and `k` is a root valuation
//! of `P`. Both branches are explored. Once the current exponent exceeds
//! every root valuation the continuation is unique and Newton's iteration
//! `T <- T - (P(T) - rhs)/c_0` takes over.

use std::sync::Arc;

use crate::algebra::{FieldSpec, LocalFieldElement, LocalFieldSpec, NewtonPolygon, Rational, Series, EXACT};
use crate::error::{Error, Result};
use crate::formalmod::AdditivePolynomial;

use super::embed;

struct Solver<'a> {
    k: &'a FieldSpec,
    /// Frobenius exponent `log_p q`.
    f0: u32,
    coeffs: Vec<Series>,
    vals: Vec<Option<i64>>,
    lead: Vec<u8>,
    qi: Vec<i64>,
    /// Integral root valuations of `P`, ascending.
    kernel_slopes: Vec<i64>,
    /// Largest root valuation of `P`, if `P` is not a monomial.
    w_max: Option<Rational>,
    limit: usize,
    out: Vec<Series>,
}

fn ceil_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b) + if a.rem_euclid(b) == 0 { 0 } else { 1 }
}

impl<'a> Solver<'a> {
    fn new(p: &'a AdditivePolynomial, limit: usize) -> Result<Self> {
        let k = p.field().residue().as_ref();
        let c0 = p.linear_coefficient();
        if c0.is_zero() {
            return Err(if c0.is_exact() {
                Error::InseparablePolynomial
            } else {
                Error::PrecisionExhausted("linear coefficient is zero modulo its precision".into())
            });
        }
        let mut vals = Vec::new();
        let mut lead = Vec::new();
        let mut qi = Vec::new();
        let q = p.q() as i64;
        for (i, c) in p.coeffs().iter().enumerate() {
            if c.is_zero() && !c.is_exact() {
                return Err(Error::PrecisionExhausted(format!("coefficient {i} is zero modulo its precision")));
            }
            vals.push(c.exact_valuation());
            lead.push(c.series().leading_coeff().unwrap_or(0));
            qi.push(q.pow(i as u32));
        }
        let points: Vec<(i64, Option<Rational>)> =
            qi.iter().zip(&vals).map(|(&d, v)| (d, v.map(Rational::from_integer))).collect();
        let (kernel_slopes, w_max) = match NewtonPolygon::new(&points) {
            Ok(np) => {
                let ks = np
                    .root_valuations()
                    .into_iter()
                    .filter(|(w, _)| w.is_integer())
                    .map(|(w, _)| w.to_integer())
                    .rev()
                    .collect();
                (ks, np.root_valuations().first().map(|(w, _)| *w))
            }
            Err(Error::DegeneratePolynomial) => (Vec::new(), None),
            Err(e) => return Err(e),
        };
        Ok(Solver {
            k,
            f0: crate::formalmod::additive::log_p(p.q(), k.p()),
            coeffs: p.coeffs().iter().map(|c| c.series().clone()).collect(),
            vals,
            lead,
            qi,
            kernel_slopes,
            w_max,
            limit,
            out: Vec::new(),
        })
    }

    fn g(&self, k: i64) -> i64 {
        self.vals.iter().zip(&self.qi).filter_map(|(v, q)| v.map(|v| v + q * k)).min().unwrap()
    }

    /// Smallest exponent whose terms are invisible modulo `u^n`.
    fn invisible_from(&self, n: i64) -> i64 {
        if n >= EXACT {
            return EXACT;
        }
        self.vals.iter().zip(&self.qi).filter_map(|(v, q)| v.map(|v| ceil_div(n - v, *q))).max().unwrap()
    }

    fn residual(&self, k: i64, a: u8) -> u8 {
        let g = self.g(k);
        let mut acc = 0;
        for i in 0..self.vals.len() {
            if self.vals[i].map(|v| v + self.qi[i] * k) == Some(g) {
                let ai = self.k.frobenius(a, (self.f0 * i as u32) as i64);
                acc = self.k.add(acc, self.k.mul(self.lead[i], ai));
            }
        }
        acc
    }

    /// `P(a u^k)`.
    fn term(&self, k: i64, a: u8) -> Series {
        let mut acc = Series::exact_zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let ai = self.k.frobenius(a, (self.f0 * i as u32) as i64);
            acc = acc.add(&c.scale(ai, self.k).shift(k * self.qi[i]), self.k);
        }
        acc
    }

    fn eval(&self, x: &Series) -> Series {
        let mut acc = Series::exact_zero();
        let mut power = x.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                power = power.pow_p(self.f0, self.k);
            }
            acc = acc.add(&c.mul(&power, self.k), self.k);
        }
        acc
    }

    fn record(&mut self, t: &Series, n: i64) {
        self.out.push(t.truncate(self.invisible_from(n)));
    }

    fn done(&self) -> bool {
        self.out.len() >= self.limit
    }

    fn unique_regime(&self, w: Option<i64>) -> bool {
        match (w, self.w_max) {
            (_, None) => true,
            (Some(w), Some(m)) => Rational::from_integer(w) >= m,
            (None, Some(_)) => false,
        }
    }

    /// All solutions `t + T'` of `P(T') = r` with every exponent of `T'`
    /// above `w`.
    fn search(&mut self, t: Series, r: Series, w: Option<i64>) -> Result<()> {
        if self.done() {
            return Ok(());
        }
        let n = r.precision();
        let e = r.valuation();
        if e.is_some() && self.unique_regime(w) {
            return self.newton(t, r, w);
        }
        if e.is_none() {
            self.record(&t, n);
        }
        let above = |k: i64| w.is_none_or(|w| k > w);
        let bound = e.unwrap_or(n);
        let all: Vec<u8> = self.k.elements().collect();
        if let Some(e) = e {
            let target = r.leading_coeff().unwrap();
            let mut ks: Vec<i64> = self
                .vals
                .iter()
                .zip(&self.qi)
                .filter_map(|(v, q)| v.and_then(|v| ((e - v) % q == 0).then(|| (e - v) / q)))
                .filter(|&k| above(k) && self.g(k) == e)
                .collect();
            ks.dedup();
            for k in ks {
                for &a in &all {
                    if a != 0 && self.residual(k, a) == target {
                        let nt = t.add(&Series::monomial(a, k), self.k);
                        let nr = r.sub(&self.term(k, a), self.k);
                        self.search(nt, nr, Some(k))?;
                    }
                }
            }
        }
        for k in self.kernel_slopes.clone() {
            if !above(k) || self.g(k) >= bound {
                continue;
            }
            for &a in &all {
                if a != 0 && self.residual(k, a) == 0 {
                    let nt = t.add(&Series::monomial(a, k), self.k);
                    let nr = r.sub(&self.term(k, a), self.k);
                    self.search(nt, nr, Some(k))?;
                }
            }
        }
        Ok(())
    }

    fn newton(&mut self, mut t: Series, mut r: Series, w: Option<i64>) -> Result<()> {
        let v0 = self.vals[0].unwrap();
        let c0 = &self.coeffs[0];
        let mut iterations = 0;
        while let Some(e) = r.valuation() {
            if w.is_some_and(|w| e - v0 <= w) {
                return Ok(());
            }
            iterations += 1;
            let delta = r.div(c0, self.k, (r.precision() - e).max(1))?;
            t = t.add(&delta, self.k);
            let nr = r.sub(&self.eval(&delta), self.k);
            if nr.valuation().is_some_and(|v| v <= e) {
                return Err(Error::NoConvergence { iterations });
            }
            r = nr;
        }
        self.record(&t, r.precision());
        Ok(())
    }
}

/// Polygon of `P(T) - rhs`.
fn polygon(p: &AdditivePolynomial, rhs: &LocalFieldElement) -> Result<NewtonPolygon> {
    let q = p.q() as i64;
    let mut points = vec![(0, rhs.exact_valuation().map(Rational::from_integer))];
    for (i, c) in p.coeffs().iter().enumerate() {
        points.push((q.pow(i as u32), c.exact_valuation().map(Rational::from_integer)));
    }
    NewtonPolygon::new(&points)
}

fn solve(p: &AdditivePolynomial, rhs: &LocalFieldElement, limit: usize) -> Result<Vec<LocalFieldElement>> {
    if !Arc::ptr_eq(p.field(), rhs.field()) {
        return Err(Error::MixedFields);
    }
    let field = p.field();
    let mut solver = Solver::new(p, limit)?;
    let v0 = solver.vals[0].unwrap();
    // solutions are wanted to `default_precision` terms beyond the linear regime
    let cap = v0 + field.default_precision() + solver.w_max.map_or(0, |w| w.ceil().to_integer().max(0));
    let r = rhs.series().truncate(cap);
    solver.search(Series::exact_zero(), r, None)?;
    let out: Vec<LocalFieldElement> =
        solver.out.into_iter().map(|s| LocalFieldElement::from_series(field, s)).collect();
    for i in 0..out.len() {
        for j in 0..i {
            if out[i].agrees_with(&out[j])? {
                return Err(Error::PrecisionExhausted("two solutions agree to working precision".into()));
            }
        }
    }
    Ok(out)
}

/// Every solution of `P(T) = rhs` lying in `P`'s field.
pub fn solutions_in_field(p: &AdditivePolynomial, rhs: &LocalFieldElement) -> Result<Vec<LocalFieldElement>> {
    solve(p, rhs, usize::MAX)
}

/// One solution of `P(T) = rhs` in `P`'s field, if any exists.
pub fn find_solution(p: &AdditivePolynomial, rhs: &LocalFieldElement) -> Result<Option<LocalFieldElement>> {
    Ok(solve(p, rhs, 1)?.into_iter().next())
}

/// All `deg P` solutions of `P(T) = rhs` in `field` (which must lie above
/// the field of `P` and `rhs`). Fails with `ExtensionRequired` carrying the
/// Newton polygon of `P(T) - rhs` when some solution lies outside `field`.
pub fn additive_roots_in_field(
    p: &AdditivePolynomial,
    rhs: &LocalFieldElement,
    field: &Arc<LocalFieldSpec>,
) -> Result<Vec<LocalFieldElement>> {
    let p = p.embed(field)?;
    let rhs = embed(rhs, field)?;
    let roots = solutions_in_field(&p, &rhs)?;
    if (roots.len() as u64) < p.degree() {
        return Err(Error::ExtensionRequired(Box::new(polygon(&p, &rhs)?)));
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{ramified_extension_by_relation, unramified_extension};

    fn f(p: u32, f: u32) -> Arc<LocalFieldSpec> {
        LocalFieldSpec::laurent(&FieldSpec::standard(p, f).unwrap(), "t")
    }

    fn check_roots(p: &AdditivePolynomial, rhs: &LocalFieldElement, roots: &[LocalFieldElement], min_prec: i64) {
        for x in roots {
            let d = p.eval(x).unwrap().sub(rhs).unwrap();
            assert!(d.is_zero(), "P(x) - rhs = {:?}", d.series());
            assert!(d.precision() >= min_prec, "residual precision {}", d.precision());
        }
    }

    fn tt_t2_t4(k: &Arc<LocalFieldSpec>) -> AdditivePolynomial {
        let t = crate::tower::root_uniformizer_image(k).unwrap();
        let one = LocalFieldElement::one(k);
        AdditivePolynomial::new(k, 2, vec![t, one.clone(), one]).unwrap()
    }

    #[test]
    fn base_field_finds_zero_and_valuation_one_root() {
        let k = f(2, 1);
        let p = tt_t2_t4(&k);
        let zero = LocalFieldElement::zero(&k);
        let roots = solutions_in_field(&p, &zero).unwrap();
        assert_eq!(roots.len(), 2);
        check_roots(&p, &zero, &roots, 40);
        let vals: Vec<_> = roots.iter().map(|r| r.exact_valuation()).collect();
        assert!(vals.contains(&None) && vals.contains(&Some(1)));
        let r = additive_roots_in_field(&p, &zero, &k);
        match r {
            Err(Error::ExtensionRequired(np)) => {
                assert_eq!(np.root_valuation_multiset().iter().filter(|w| **w == Rational::from_integer(0)).count(), 2)
            }
            other => panic!("expected ExtensionRequired, got {other:?}"),
        }
    }

    #[test]
    fn unramified_quadratic_is_not_enough() {
        // T^3 + T + t reduces to T(T + 1)^2: the valuation-0 roots are wild
        let k = f(2, 1);
        let k4 = unramified_extension(&k, 2).unwrap();
        let p = tt_t2_t4(&k);
        let zero = LocalFieldElement::zero(&k);
        assert!(matches!(additive_roots_in_field(&p, &zero, &k4), Err(Error::ExtensionRequired(_))));
    }

    #[test]
    fn wild_quadratic_contains_all_four_roots() {
        // t = π^2 + π^3 makes 1 + π a root
        let k = f(2, 1);
        let seed = Series::from_terms(2, vec![1, 1], EXACT);
        let s = seed.clone();
        let w = ramified_extension_by_relation(&k, 2, "pi", 80, seed, move |_| Ok(s.clone())).unwrap();
        let p = tt_t2_t4(&k);
        let zero = LocalFieldElement::zero(&k);
        let roots = additive_roots_in_field(&p, &zero, &w).unwrap();
        assert_eq!(roots.len(), 4);
        let pw = p.embed(&w).unwrap();
        check_roots(&pw, &embed(&zero, &w).unwrap(), &roots, 40);
        let pi = LocalFieldElement::uniformizer(&w);
        let one_plus_pi = LocalFieldElement::one(&w).add(&pi).unwrap();
        assert!(roots.iter().any(|r| r.agrees_with(&one_plus_pi).unwrap()));
        let mut vals: Vec<_> = roots.iter().map(|r| r.exact_valuation()).collect();
        vals.sort();
        assert_eq!(vals, vec![None, Some(0), Some(0), Some(2)]);
    }

    #[test]
    fn lubin_tate_level_one_roots() {
        // tT + T^3 over F_3((t)) has roots {0, ±λ} in the field t = 2λ^2
        let k = f(3, 1);
        let f1 = ramified_extension_by_relation(&k, 2, "l", 60, Series::monomial(2, 2), |_| Ok(Series::monomial(2, 2))).unwrap();
        let t = LocalFieldElement::uniformizer(&k);
        let p = AdditivePolynomial::new(&k, 3, vec![t, LocalFieldElement::one(&k)]).unwrap();
        let zero = LocalFieldElement::zero(&k);
        let roots = additive_roots_in_field(&p, &zero, &f1).unwrap();
        assert_eq!(roots.len(), 3);
        let lam = LocalFieldElement::uniformizer(&f1);
        for a in [0u8, 1, 2] {
            assert!(roots.iter().any(|r| r.agrees_with(&lam.scale(a)).unwrap()));
        }
    }

    #[test]
    fn constructed_rhs_has_its_preimage() {
        // tT + T^2 has kernel {0, t} in F_2((t)), so all preimages are found
        let k = f(2, 1);
        let t = LocalFieldElement::uniformizer(&k);
        let p = AdditivePolynomial::new(&k, 2, vec![t.clone(), LocalFieldElement::one(&k)]).unwrap();
        let x0 = LocalFieldElement::from_series(&k, Series::from_terms(-2, vec![1, 0, 1, 1, 0, 1], EXACT));
        let rhs = p.eval(&x0).unwrap();
        let roots = additive_roots_in_field(&p, &rhs, &k).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().any(|r| r.agrees_with(&x0).unwrap()));
        assert!(roots.iter().any(|r| r.agrees_with(&x0.add(&t).unwrap()).unwrap()));
    }

    #[test]
    fn no_solution_when_residual_root_missing() {
        // T^2 + T = 1 has no root in F_2, hence none in F_2((t))
        let k = f(2, 1);
        let p = AdditivePolynomial::new(&k, 2, vec![LocalFieldElement::one(&k), LocalFieldElement::one(&k)]).unwrap();
        let one = LocalFieldElement::one(&k);
        assert!(find_solution(&p, &one).unwrap().is_none());
        let k4 = unramified_extension(&k, 2).unwrap();
        assert_eq!(additive_roots_in_field(&p, &one, &k4).unwrap().len(), 2);
    }

    #[test]
    fn inseparable_rejected() {
        let k = f(2, 1);
        let p = AdditivePolynomial::new(&k, 2, vec![LocalFieldElement::zero(&k), LocalFieldElement::one(&k)]).unwrap();
        assert!(matches!(solutions_in_field(&p, &LocalFieldElement::zero(&k)), Err(Error::InseparablePolynomial)));
    }
}
