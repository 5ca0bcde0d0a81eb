use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{format_rational, LocalFieldElement, LocalFieldSpec, Rational, TruncElem};
use crate::error::{Error, Result};
use crate::formalmod::{FormalOModule, TorsionModule, DEGREE_CAP};
use crate::tower::{apply_automorphism, find_solution, solutions_in_field, unramified_extension};

use super::{build_tower, laurent_field, LubinTateTower};

/// The CM point of height `n`: `X = tT + T^{q^n}` over `F' = F_{q^n}((t))`,
/// whose `t^m`-torsion generates the Lubin–Tate tower `F'_m` of `F'`.
#[derive(Clone, Debug)]
pub struct CmSetting {
    pub q: u32,
    pub n: usize,
    pub m: usize,
    pub base: Arc<LocalFieldSpec>,
    pub tower: LubinTateTower,
    /// `X` as an o-module over `F'_m`.
    pub module: FormalOModule,
}

impl CmSetting {
    pub fn new(q: u32, n: usize, m: usize, precision: i64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Invalid("height and level must be positive".into()));
        }
        let base = laurent_field(q)?;
        let unramified = unramified_extension(&base, n as u32)?;
        Self::from_tower(q, n, build_tower(&unramified, m, precision)?)
    }

    /// Uses an already built tower over `F_{q^n}((t))`.
    pub fn from_tower(q: u32, n: usize, tower: LubinTateTower) -> Result<Self> {
        let m = tower.m();
        let base = tower.base().root();
        if n == 0 || m == 0 || base.residue().q() != q || tower.q() as u64 != (q as u64).pow(n as u32) {
            return Err(Error::Invalid(format!("tower does not sit over F_{}((t)) with Q = {q}^{n}", q)));
        }
        let module = FormalOModule::lubin_tate(tower.top(), q, n)?;
        Ok(CmSetting { q, n, m, base, tower, module })
    }

    pub fn top(&self) -> &Arc<LocalFieldSpec> {
        self.tower.top()
    }

    /// `Q = q^n`.
    pub fn big_q(&self) -> u64 {
        (self.q as u64).pow(self.n as u32)
    }

    /// `[F'_m : F'] = (Q - 1) Q^{m-1}`.
    pub fn degree(&self) -> u64 {
        (self.big_q() - 1) * self.big_q().pow(self.m as u32 - 1)
    }

    /// `(q - 1) q^{m-1}`.
    pub fn base_unit_count(&self) -> u64 {
        (self.q as u64 - 1) * (self.q as u64).pow(self.m as u32 - 1)
    }
}

/// `X[t^m]` with the o/t^m-basis `x^i λ'_m`, `x` a generator of `F_Q`.
pub fn cm_torsion(setting: &CmSetting) -> Result<TorsionModule> {
    let k = setting.top().residue();
    let x = k.generator();
    let lam = setting.tower.lambda(setting.m);
    let basis = (0..setting.n).map(|i| lam.scale(k.pow(x, i as u64))).collect();
    TorsionModule::from_basis(&setting.module, setting.m, basis, DEGREE_CAP)
}

/// Primitive torsion valuations at the CM point.
#[derive(Clone, Debug, Serialize)]
pub struct ValuationReport {
    pub q: u32,
    pub n: usize,
    pub m: usize,
    pub points: usize,
    pub primitive: usize,
    #[serde(with = "crate::algebra::rational_str")]
    pub expected: Rational,
    pub killed_checked: usize,
}

/// Checks `v(P) = 1/((Q-1)Q^{m-1})` for every primitive `P` in `X[t^m]`,
/// together with `[t^m]P = 0` and `[t^{m-1}]P != 0`.
pub fn verify_torsion_valuations(setting: &CmSetting) -> Result<ValuationReport> {
    let tm = cm_torsion(setting)?;
    let expected = Rational::new(1, setting.degree() as i64);
    let m = setting.m;
    let primitive = tm.primitive_indices();
    for &idx in &primitive {
        let p = &tm.points()[idx];
        let v = p.normalized_valuation();
        if v != Some(expected) {
            return Err(Error::ValuationMismatch(format!(
                "point {:?} has valuation {:?}, expected {}",
                tm.coords(idx),
                v.map(|r| format_rational(&r)),
                format_rational(&expected)
            )));
        }
        let orbit = setting.module.t_orbit(p, m + 1)?;
        if !orbit[m].is_zero() || orbit[m - 1].is_zero() {
            return Err(Error::StructureViolation(format!("point {:?} is not of exact level {m}", tm.coords(idx))));
        }
    }
    Ok(ValuationReport {
        q: setting.q,
        n: setting.n,
        m,
        points: tm.len(),
        killed_checked: primitive.len(),
        primitive: primitive.len(),
        expected,
    })
}

/// `μ_1, ..., μ_m` in `F'_m` with `tμ_1 + μ_1^q = 0`, `μ_1 != 0` and
/// `tμ_k + μ_k^q = μ_{k-1}`: a compatible system of primitive torsion of
/// the height-one module `tT + T^q` of `F`.
pub fn find_embedded_lt_point(setting: &CmSetting) -> Result<Vec<LocalFieldElement>> {
    let top = setting.top();
    let lt = FormalOModule::lubin_tate(top, setting.q, 1)?;
    let p = lt.t_action();
    let roots = solutions_in_field(p, &LocalFieldElement::zero(top))?;
    let first = roots
        .into_iter()
        .find(|r| !r.is_zero())
        .ok_or_else(|| Error::Invalid("no nonzero t-torsion of tT + T^q in the tower".into()))?;
    let mut chain = vec![first];
    for k in 2..=setting.m {
        let below = chain.last().unwrap();
        let next = find_solution(p, below)?
            .ok_or_else(|| Error::Invalid(format!("level {k} torsion of tT + T^q is not in the tower")))?;
        chain.push(next);
    }
    Ok(chain)
}

/// Free orbits of `(o/t^m)^×` on primitive torsion and the product of one
/// point per orbit.
#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    pub q: u32,
    pub n: usize,
    pub m: usize,
    pub representatives: usize,
    pub expected_representatives: u64,
    pub orbit_size: usize,
    #[serde(with = "crate::algebra::rational_str")]
    pub valuation_sum: Rational,
    #[serde(with = "crate::algebra::rational_str")]
    pub expected_sum: Rational,
    /// Valuation of `prod φ(α) / μ_m`.
    pub quotient_valuation: i64,
}

/// Checks that units of `o/t^m` act freely on primitive coordinate vectors,
/// that there are `(Q-1)Q^{m-1} / ((q-1)q^{m-1})` orbits, that the orbit
/// representatives have total valuation `1/((q-1)q^{m-1})`, and that their
/// product is `μ_m` times a unit.
pub fn verify_product_formula(setting: &CmSetting) -> Result<ProductReport> {
    let tm = cm_torsion(setting)?;
    let ring = tm.ring().clone();
    let units = ring.units();
    let mut seen: HashSet<usize> = HashSet::new();
    let mut reps = Vec::new();
    for idx in tm.primitive_indices() {
        if seen.contains(&idx) {
            continue;
        }
        let c = tm.coords(idx);
        let orbit: HashSet<usize> = units
            .iter()
            .map(|u| tm.index(&c.iter().map(|ci| ring.mul(u, ci)).collect::<Vec<TruncElem>>()))
            .collect();
        if orbit.len() != units.len() {
            return Err(Error::OrbitNotFree(format!("orbit of {c:?} has {} elements, units {}", orbit.len(), units.len())));
        }
        seen.extend(orbit);
        reps.push(idx);
    }
    let expected_reps = setting.degree() / setting.base_unit_count();
    if reps.len() as u64 != expected_reps {
        return Err(Error::OrbitNotFree(format!("{} orbits, expected {expected_reps}", reps.len())));
    }
    let top = setting.top();
    let mut sum = Rational::from_integer(0);
    let mut product = LocalFieldElement::one(top);
    for &idx in &reps {
        let p = &tm.points()[idx];
        sum += p.normalized_valuation().ok_or_else(|| Error::PrecisionExhausted("torsion point vanished".into()))?;
        product = product.mul(p)?;
    }
    let expected_sum = Rational::new(1, setting.base_unit_count() as i64);
    if sum != expected_sum {
        return Err(Error::ValuationMismatch(format!(
            "valuations sum to {}, expected {}",
            format_rational(&sum),
            format_rational(&expected_sum)
        )));
    }
    let mu = find_embedded_lt_point(setting)?.pop().unwrap();
    let quotient = product.div(&mu)?;
    let qv = quotient.exact_valuation().ok_or_else(|| Error::PrecisionExhausted("quotient vanished".into()))?;
    if qv != 0 {
        return Err(Error::ValuationMismatch(format!("product / μ_m has valuation {qv}")));
    }
    Ok(ProductReport {
        q: setting.q,
        n: setting.n,
        m: setting.m,
        representatives: reps.len(),
        expected_representatives: expected_reps,
        orbit_size: units.len(),
        valuation_sum: sum,
        expected_sum,
        quotient_valuation: qv,
    })
}

/// `σ_a(μ_m) = [N(a)](μ_m)` for one unit `a` of `o'/t^m`.
#[derive(Clone, Debug, Serialize)]
pub struct DeterminantCase {
    pub a: TruncElem,
    /// `N(a)` as `F_Q` codes (all lying in `F_q`).
    pub norm: TruncElem,
    /// Terms beyond the valuation of `t` to which both sides agree.
    pub agreement: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeterminantWitness {
    pub q: u32,
    pub n: usize,
    pub m: usize,
    pub degree: u64,
    #[serde(skip)]
    pub tower: LubinTateTower,
    #[serde(skip)]
    pub mu: LocalFieldElement,
    #[serde(skip)]
    pub mu_chain: Vec<LocalFieldElement>,
    pub cases: Vec<DeterminantCase>,
    pub min_agreement: i64,
}

/// Norm `o'/t^m -> o/t^m`, coefficientwise product of the `q`-power
/// Frobenius conjugates.
pub fn norm(setting: &CmSetting, a: &[u8]) -> TruncElem {
    let ring = setting.tower.ring(setting.m);
    let f = setting.base.residue().f() as i64;
    (0..setting.n).fold(ring.one(), |acc, i| ring.mul(&acc, &ring.frobenius(a, f * i as i64)))
}

/// For every unit `a` of `o'/t^m`, checks that the Lubin–Tate automorphism
/// `σ_a` of `F'_m` acts on the embedded `μ_m` through `N(a)`.
pub fn verify_determinant_character(setting: &CmSetting) -> Result<DeterminantWitness> {
    let m = setting.m;
    let top = setting.top();
    let k = top.residue();
    let f = setting.base.residue().f() as i64;
    let chain = find_embedded_lt_point(setting)?;
    let mu = chain[m - 1].clone();
    let vt = top.absolute_ramification();
    let mut cases = Vec::new();
    for a in setting.tower.ring(m).units() {
        let na = norm(setting, &a);
        if na.iter().any(|&c| k.frobenius(c, f) != c) {
            return Err(Error::DeterminantMismatch(format!("N({a:?}) = {na:?} is not over F_q")));
        }
        let sigma = setting.tower.automorphism(&a, m)?;
        let lhs = apply_automorphism(&sigma, &mu)?;
        let mut rhs = LocalFieldElement::zero(top);
        for (j, &c) in na.iter().enumerate() {
            if c != 0 {
                rhs = rhs.add(&chain[m - 1 - j].scale(c))?;
            }
        }
        let agreement = lhs
            .agreement(&rhs)?
            .ok_or_else(|| Error::DeterminantMismatch(format!("σ_a(μ) != [N(a)](μ) at a = {a:?}, N(a) = {na:?}")))?;
        cases.push(DeterminantCase { a, norm: na, agreement: agreement - vt });
    }
    let min_agreement = cases.iter().map(|c| c.agreement).min().unwrap_or(0);
    Ok(DeterminantWitness {
        q: setting.q,
        n: setting.n,
        m,
        degree: setting.degree(),
        tower: setting.tower.clone(),
        mu,
        mu_chain: chain,
        cases,
        min_agreement,
    })
}
