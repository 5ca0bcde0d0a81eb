//! Lubin–Tate towers `F_1 ⊂ ... ⊂ F_m` for `[t](T) = tT + T^Q`, the
//! Galois character `χ_m`, and the checks made at the CM point.

mod cache;
mod cm;

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{FieldSpec, LocalFieldElement, LocalFieldSpec, Series, TruncElem, TruncRing};
use crate::error::{Error, Result};
use crate::formalmod::{FormalOModule, TorsionModule, DEGREE_CAP};
use crate::tower::{apply_automorphism, embed, ramified_extension_by_relation, ramified_extension_from_image, FieldAutomorphism};

pub use cache::{RelationRepr, TowerCache, TowerDocument, TowerKey};
pub use cm::{
    cm_torsion, find_embedded_lt_point, verify_determinant_character, verify_product_formula, verify_torsion_valuations,
    norm, CmSetting, DeterminantCase, DeterminantWitness, ProductReport, ValuationReport,
};

/// Torsion tower of the height-one module `tT + T^Q` over `base`, where
/// `Q` is the residue cardinality of `base`.
#[derive(Clone, Debug)]
pub struct LubinTateTower {
    base: Arc<LocalFieldSpec>,
    module: FormalOModule,
    levels: Vec<Arc<LocalFieldSpec>>,
    precision: i64,
}

impl LubinTateTower {
    pub fn base(&self) -> &Arc<LocalFieldSpec> {
        &self.base
    }

    /// `tT + T^Q` over the base.
    pub fn module(&self) -> &FormalOModule {
        &self.module
    }

    /// `Q`.
    pub fn q(&self) -> u32 {
        self.base.residue().q()
    }

    pub fn m(&self) -> usize {
        self.levels.len()
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    /// `F_k`, with `F_0` the base.
    pub fn field(&self, k: usize) -> &Arc<LocalFieldSpec> {
        if k == 0 {
            &self.base
        } else {
            &self.levels[k - 1]
        }
    }

    pub fn top(&self) -> &Arc<LocalFieldSpec> {
        self.field(self.m())
    }

    /// `[F_k : base]`.
    pub fn degree(&self, k: usize) -> i64 {
        self.field(k).absolute_degree() / self.base.absolute_degree()
    }

    /// `λ_{k-1}` (or `t` for `k = 1`) as a series in `λ_k`.
    pub fn relation(&self, k: usize) -> &Series {
        &self.field(k).base().expect("level above the base").embedding.image_of_base_uniformizer
    }

    /// `λ_k` in `F_k`; `λ_0 = 0`.
    pub fn lambda(&self, k: usize) -> LocalFieldElement {
        if k == 0 {
            LocalFieldElement::zero(&self.base)
        } else {
            LocalFieldElement::uniformizer(self.field(k))
        }
    }

    /// `λ_k` pushed into `target`.
    pub fn lambda_in(&self, k: usize, target: &Arc<LocalFieldSpec>) -> Result<LocalFieldElement> {
        if k == 0 {
            return Ok(LocalFieldElement::zero(target));
        }
        embed(&self.lambda(k), target)
    }

    /// `o/t^k` over `F_Q` in its standard presentation.
    pub fn ring(&self, k: usize) -> TruncRing {
        TruncRing::new(self.module.scalars(), k)
    }

    /// `[a](λ_k) = sum_j a_j λ_{k-j}` in `F_k`.
    pub fn torsion_point(&self, a: &[u8], k: usize) -> Result<LocalFieldElement> {
        let target = self.field(k);
        let mut acc = LocalFieldElement::zero(target);
        for (j, &c) in a.iter().enumerate().take(k) {
            if c != 0 {
                acc = acc.add(&self.lambda_in(k - j, target)?.scale(self.module.scalar(c)))?;
            }
        }
        Ok(acc)
    }

    /// `σ_a : λ_k -> [a](λ_k)` on `F_k`.
    pub fn automorphism(&self, a: &[u8], k: usize) -> Result<FieldAutomorphism> {
        FieldAutomorphism::new(self.torsion_point(a, k)?, 0)
    }

    /// `X[t^k]` for `X = tT + T^Q`, with basis `λ_k`.
    pub fn torsion_module(&self, k: usize) -> Result<TorsionModule> {
        let module = self.module.embed(self.field(k))?;
        let basis = if k == 0 { Vec::new() } else { vec![self.lambda(k)] };
        TorsionModule::from_basis(&module, k, basis, DEGREE_CAP)
    }

    /// Rebuilds a tower from stored relation series.
    pub fn from_relations(base: &Arc<LocalFieldSpec>, relations: Vec<Series>, precision: i64) -> Result<Self> {
        let q = base.residue().q();
        let module = FormalOModule::lubin_tate(base, q, 1)?;
        let mut levels: Vec<Arc<LocalFieldSpec>> = Vec::new();
        for (i, rel) in relations.into_iter().enumerate() {
            let e = if i == 0 { q - 1 } else { q };
            let below = levels.last().cloned().unwrap_or_else(|| base.clone());
            let field = ramified_extension_from_image(&below, e, &format!("l{}", i + 1), rel)?;
            let e_total = (q as i64 - 1) * (q as i64).pow(i as u32);
            levels.push(field.with_default_precision(precision + 2 * e_total));
        }
        Ok(LubinTateTower { base: base.clone(), module, levels, precision })
    }
}

/// Builds `F_1 ⊂ ... ⊂ F_m` from `t = -λ_1^{Q-1}` and
/// `λ_{k-1} = tλ_k + λ_k^Q`. Relations and the working precision of `F_k`
/// extend `precision` terms past twice the valuation of `t` in `F_k`, so that
/// one division by `t` still leaves `precision` significant terms.
pub fn build_tower(base: &Arc<LocalFieldSpec>, m: usize, precision: i64) -> Result<LubinTateTower> {
    let q = base.residue().q();
    let k = base.residue().clone();
    let degree = (q as u64 - 1) * (q as u64).checked_pow(m.saturating_sub(1) as u32).unwrap_or(u64::MAX);
    if m > 0 && degree > DEGREE_CAP {
        return Err(Error::CapExceeded { what: "tower degree", value: degree, cap: DEGREE_CAP });
    }
    let module = FormalOModule::lubin_tate(base, q, 1)?;
    let mut levels: Vec<Arc<LocalFieldSpec>> = Vec::new();
    let mut e_total: i64 = 1;
    for level in 1..=m {
        let below = levels.last().cloned().unwrap_or_else(|| base.clone());
        let name = format!("l{level}");
        let field = if level == 1 {
            e_total = q as i64 - 1;
            ramified_extension_from_image(&below, q - 1, &name, Series::monomial(k.neg(1), q as i64 - 1))?
        } else {
            e_total *= q as i64;
            let prec = precision + 2 * e_total;
            let t_below = embed(&LocalFieldElement::uniformizer(base), &below)?.series().clone();
            let kk = k.clone();
            let lam_q = Series::monomial(1, q as i64);
            ramified_extension_by_relation(&below, q, &name, prec, lam_q.clone(), move |y| {
                Ok(lam_q.add(&t_below.compose(y, &kk, prec)?.shift(1), &kk))
            })?
        };
        levels.push(field.with_default_precision(precision + 2 * e_total));
    }
    Ok(LubinTateTower { base: base.clone(), module, levels, precision })
}

/// One row of `χ_m`: the automorphism `λ_m -> image` has character value `a`.
#[derive(Clone, Debug, Serialize)]
pub struct CharacterEntry {
    pub a: TruncElem,
    #[serde(skip)]
    pub image: LocalFieldElement,
    /// Terms beyond the valuation of `t` to which `σ_a(t) = t` was checked.
    pub base_agreement: i64,
}

/// `χ_m : Gal(F_m/F) -> (o/t^m)^×` as a verified table.
#[derive(Clone, Debug, Serialize)]
pub struct CharacterTable {
    pub q: u32,
    pub m: usize,
    pub degree: i64,
    pub entries: Vec<CharacterEntry>,
    pub min_base_agreement: i64,
    pub products_checked: usize,
    pub restrictions_checked: usize,
}

impl CharacterTable {
    pub fn order(&self) -> usize {
        self.entries.len()
    }
}

/// Verifies that `a -> (λ_m -> [a](λ_m))` is an isomorphism
/// `(o/t^m)^× -> Gal(F_m/F)`: each substitution fixes `t`, the images are
/// distinct and as many as `[F_m : F]`, `σ_a ∘ σ_b = σ_{ab}`, and `σ_a`
/// restricted to `F_{m-1}` is `σ_{a mod t^{m-1}}`.
pub fn verify_character(tower: &LubinTateTower, m: usize) -> Result<CharacterTable> {
    if m > tower.m() {
        return Err(Error::Invalid(format!("tower has {} levels, asked for {m}", tower.m())));
    }
    let fm = tower.field(m).clone();
    let ring = tower.ring(m);
    let units = ring.units();
    let t = embed(&LocalFieldElement::uniformizer(tower.base()), &fm)?;
    let vt = t.exact_valuation().unwrap_or(0);
    let mut entries = Vec::with_capacity(units.len());
    let mut sigmas = Vec::with_capacity(units.len());
    for a in &units {
        let sigma = tower.automorphism(a, m)?;
        let moved = apply_automorphism(&sigma, &t)?;
        let agreement = moved.agreement(&t)?.ok_or_else(|| {
            Error::CharacterViolation(format!("a = {a:?}: σ_a(t) - t = {:?}", moved.sub(&t).map(|d| d.series().clone())))
        })?;
        entries.push(CharacterEntry { a: a.clone(), image: sigma.image_of_uniformizer().clone(), base_agreement: agreement - vt });
        sigmas.push(sigma);
    }
    let degree = tower.degree(m);
    if units.len() as i64 != degree {
        return Err(Error::CharacterViolation(format!("{} units but [F_m : F] = {degree}", units.len())));
    }
    let prec = entries.iter().map(|e| e.image.precision()).min().unwrap_or(0);
    let mut seen: HashMap<(i64, Vec<u8>), usize> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        if let Some(j) = seen.insert(crate::formalmod::point_key(&e.image, prec), i) {
            return Err(Error::CharacterViolation(format!("a = {:?} and a = {:?} give the same automorphism", entries[j].a, e.a)));
        }
    }
    let index: HashMap<&TruncElem, usize> = units.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mut products = 0;
    for (i, a) in units.iter().enumerate() {
        for (j, b) in units.iter().enumerate() {
            let ab = ring.mul(a, b);
            let lhs = apply_automorphism(&sigmas[i], &entries[j].image)?;
            let rhs = &entries[index[&ab]].image;
            if !lhs.agrees_with(rhs)? {
                return Err(Error::CharacterViolation(format!("σ_a σ_b != σ_ab at a = {a:?}, b = {b:?}")));
            }
            products += 1;
        }
    }
    let mut restrictions = 0;
    if m >= 2 {
        let lower = tower.field(m - 1).clone();
        let lam = tower.lambda_in(m - 1, &fm)?;
        for (i, a) in units.iter().enumerate() {
            let lhs = apply_automorphism(&sigmas[i], &lam)?;
            let rhs = embed(&tower.torsion_point(&a[..m - 1], m - 1)?, &fm)?;
            if !lhs.agrees_with(&rhs)? {
                return Err(Error::CharacterViolation(format!("restriction of σ_a to F_{} is not σ_(a mod t^{}) at a = {a:?}", m - 1, m - 1)));
            }
            debug_assert!(Arc::ptr_eq(rhs.field(), &fm) && !Arc::ptr_eq(&lower, &fm));
            restrictions += 1;
        }
    }
    let min_base_agreement = entries.iter().map(|e| e.base_agreement).min().unwrap_or(0);
    Ok(CharacterTable { q: tower.q(), m, degree, entries, min_base_agreement, products_checked: products, restrictions_checked: restrictions })
}

/// `F_q((t))` with the standard residue field of size `q`.
pub fn laurent_field(q: u32) -> Result<Arc<LocalFieldSpec>> {
    Ok(LocalFieldSpec::laurent(&FieldSpec::of_size(q)?, "t"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q3_level_one_closed_form() {
        let tower = build_tower(&laurent_field(3).unwrap(), 1, 40).unwrap();
        assert_eq!(tower.degree(1), 2);
        let rel = tower.relation(1);
        assert!(rel.is_exact());
        assert_eq!((rel.leading_exponent(), rel.coeffs()), (2, &[2u8][..]));
    }

    #[test]
    fn q2_degrees() {
        let f = laurent_field(2).unwrap();
        assert_eq!(build_tower(&f, 1, 40).unwrap().degree(1), 1);
        let t3 = build_tower(&f, 3, 40).unwrap();
        assert_eq!((t3.degree(1), t3.degree(2), t3.degree(3)), (1, 2, 4));
    }

    #[test]
    fn q2_level_two_relation_is_geometric() {
        // λ_1 = λ_2^2 / (1 - λ_2)
        let tower = build_tower(&laurent_field(2).unwrap(), 2, 40).unwrap();
        let rel = tower.relation(2);
        assert!(rel.precision() >= 40);
        for i in 2..rel.precision() {
            assert_eq!(rel.coeff(i), Some(1));
        }
    }

    #[test]
    fn torsion_relation_holds() {
        let tower = build_tower(&laurent_field(3).unwrap(), 2, 40).unwrap();
        let f2 = tower.top().clone();
        let x = tower.module().embed(&f2).unwrap();
        let l1 = tower.lambda_in(1, &f2).unwrap();
        let image = x.t_action().eval(&tower.lambda(2)).unwrap();
        let d = image.sub(&l1).unwrap();
        assert!(d.is_zero() && d.precision() >= 40);
        let tm = tower.torsion_module(2).unwrap();
        assert_eq!(tm.omodule_structure_check(None).unwrap().points, 9);
    }

    #[test]
    fn character_q3_m1() {
        let tower = build_tower(&laurent_field(3).unwrap(), 1, 40).unwrap();
        let table = verify_character(&tower, 1).unwrap();
        assert_eq!(table.order(), 2);
        assert!(table.min_base_agreement >= 40);
    }

    #[test]
    fn character_q2_m3_cyclic() {
        let tower = build_tower(&laurent_field(2).unwrap(), 3, 40).unwrap();
        let table = verify_character(&tower, 3).unwrap();
        assert_eq!(table.order(), 4);
        assert_eq!(table.products_checked, 16);
        assert_eq!(table.restrictions_checked, 4);
        let ring = tower.ring(3);
        let g = ring.from_coeffs(&[1, 1]);
        assert_ne!(ring.pow(&g, 2), ring.one());
        assert_eq!(ring.pow(&g, 4), ring.one());
    }

    #[test]
    fn cached_relations_rebuild_the_same_tower() {
        let f = laurent_field(3).unwrap();
        let tower = build_tower(&f, 2, 30).unwrap();
        let rels = (1..=2).map(|k| tower.relation(k).clone()).collect();
        let again = LubinTateTower::from_relations(&f, rels, 30).unwrap();
        assert_eq!(again.relation(2), tower.relation(2));
        assert_eq!(verify_character(&again, 2).unwrap().order(), 6);
    }
}
