use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{format_rational, LocalFieldElement, LocalFieldSpec, Rational, Series, EXACT};
use crate::error::{Error, Result};
use crate::formalmod::{count_level_structures, gl_order, kernel_rank, torsion_points, FormalOModule, LevelStructure, Specialization, DEGREE_CAP};
use crate::lubintate::{
    cm_torsion, verify_character, verify_determinant_character, verify_product_formula, verify_torsion_valuations, CmSetting,
    LubinTateTower, TowerCache, TowerKey,
};
use crate::pi0::{h0_decomposition, pi0_action_table_on, Pi0Action};
use crate::tower::ramified_extension_by_relation;

use super::{Parameters, RunConfig, Source, Status, VerificationReport};

/// A selectable group of checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Character,
    Valuations,
    Product,
    Determinant,
    LevelCount,
    KernelHeight,
    Pi0,
    H0,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Character,
        Suite::Valuations,
        Suite::Product,
        Suite::Determinant,
        Suite::LevelCount,
        Suite::KernelHeight,
        Suite::Pi0,
        Suite::H0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Character => "character",
            Suite::Valuations => "valuations",
            Suite::Product => "product",
            Suite::Determinant => "determinant",
            Suite::LevelCount => "level-count",
            Suite::KernelHeight => "kernel-height",
            Suite::Pi0 => "pi0",
            Suite::H0 => "h0",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown suite {s:?}; expected one of {}", Suite::ALL.map(Suite::name).join(", "))))
    }
}

const CLAIM_CHARACTER: &str = "λ_m ↦ [a](λ_m) identifies (o/t^m)^× with Gal(F_m/F)";
const CLAIM_VALUATIONS: &str = "primitive t^m-torsion at the CM point has valuation 1/((q^n-1)q^{n(m-1)})";
const CLAIM_PRODUCT: &str = "the product of primitive torsion over unit orbits is μ_m times a unit";
const CLAIM_DETERMINANT: &str = "Galois acts on the CM torsion through the determinant: σ_a(μ_m) = [N(a)](μ_m)";
const CLAIM_LEVEL: &str = "Drinfeld level structures on X[t^m] number |GL_n(o/t^m)|";
const CLAIM_KERNEL: &str = "the kernel of the universal level structure is free of rank the connected height";
const CLAIM_COMPONENTS: &str = "π_0 has (q-1)q^{m-1} components";
const CLAIM_ACTION: &str = "(g, b, τ) acts on π_0 by det(g) Nrd(b)^{-1} χ(τ)^{-1}";
const CLAIM_H0: &str = "H^0 is the sum over characters ω of ω∘det ⊗ ω∘Nrd^{-1} ⊗ ω∘rec";

struct Ctx<'a> {
    config: &'a RunConfig,
    params: Parameters,
    out: Vec<VerificationReport>,
}

impl Ctx<'_> {
    fn push(&mut self, check: &str, claim: &str, computed: Value, expected: Value, source: Source, ok: bool, witness: Option<Value>) {
        let status = if ok { Status::Pass } else { Status::Fail };
        let witness = match (status, witness) {
            (Status::Fail, None) => Some(json!({ "computed": computed.clone() })),
            (_, w) => w,
        };
        self.out.push(VerificationReport {
            check: check.into(),
            claim: claim.into(),
            parameters: self.params.clone(),
            computed,
            expected,
            source,
            status,
            witness,
        });
    }

    fn error(&mut self, check: &str, claim: &str, expected: Value, source: Source, e: &Error) {
        self.push(check, claim, Value::Null, expected, source, false, Some(json!({ "error": e.to_string() })));
    }

    fn skip(&mut self, check: &str, claim: &str, why: &str) {
        self.out.push(VerificationReport {
            check: check.into(),
            claim: claim.into(),
            parameters: self.params.clone(),
            computed: Value::Null,
            expected: Value::Null,
            source: Source::Trivial,
            status: Status::Skipped,
            witness: Some(json!({ "reason": why })),
        });
    }

    /// Lubin–Tate tower of `F_{q^n}((t))` to level `m`, through the cache
    /// when one is configured.
    fn tower(&self, n: u32, m: u32) -> Result<LubinTateTower> {
        let c = self.config;
        let key = TowerKey::new(c.p, c.f, n, m, c.precision)?;
        match &c.cache_dir {
            Some(dir) => Ok(TowerCache::new(dir).tower(&key)?.0),
            None => key.build(),
        }
    }

    fn cm(&self) -> Result<CmSetting> {
        let c = self.config;
        CmSetting::from_tower(c.q(), c.n as usize, self.tower(c.n, c.m)?)
    }
}

/// Agreement depth, or `"exact"` when the two sides agree identically.
fn agreement_value(a: i64) -> Value {
    if a >= EXACT / 2 {
        json!("exact")
    } else {
        json!(a)
    }
}

/// Runs one suite; failures of the underlying computation become failing
/// reports carrying the error as witness.
pub fn run_suite(suite: Suite, config: &RunConfig) -> Result<Vec<VerificationReport>> {
    config.validate()?;
    let mut ctx = Ctx { config, params: config.parameters(), out: Vec::new() };
    let (q, n, m) = (config.q() as u64, config.n as u64, config.m as u64);
    let units = if m == 0 { 1 } else { (q - 1) * q.pow(m as u32 - 1) };
    let big_q = q.pow(n as u32);
    match suite {
        Suite::Character => {
            let expected = json!({ "order": units, "min_agreement": config.precision });
            if m == 0 {
                ctx.skip("character", CLAIM_CHARACTER, "level 0 has trivial Galois group");
            } else {
                match ctx.tower(1, config.m).and_then(|t| verify_character(&t, m as usize)) {
                    Ok(t) => {
                        let computed = json!({
                            "order": t.order(),
                            "degree": t.degree,
                            "min_agreement": agreement_value(t.min_base_agreement),
                            "products_checked": t.products_checked,
                            "restrictions_checked": t.restrictions_checked,
                        });
                        let ok = t.order() as u64 == units && t.degree as u64 == units && t.min_base_agreement >= config.precision;
                        ctx.push("character", CLAIM_CHARACTER, computed, expected, Source::ClosedForm, ok, None);
                    }
                    Err(e) => ctx.error("character", CLAIM_CHARACTER, expected, Source::ClosedForm, &e),
                }
            }
        }
        Suite::Valuations => {
            let expected_v = format_rational(&Rational::new(1, ((big_q - 1) * big_q.pow(m.saturating_sub(1) as u32)) as i64));
            if m == 0 {
                ctx.skip("valuations", CLAIM_VALUATIONS, "level 0 has no primitive torsion");
            } else {
                match ctx.cm().and_then(|s| verify_torsion_valuations(&s)) {
                    Ok(r) => {
                        let computed = json!({ "valuation": format_rational(&r.expected), "primitive": r.primitive });
                        let ok = r.primitive as u64 == big_q.pow(m as u32) - big_q.pow(m as u32 - 1);
                        let expected = json!({ "valuation": expected_v, "primitive": big_q.pow(m as u32) - big_q.pow(m as u32 - 1) });
                        ctx.push("valuations", CLAIM_VALUATIONS, computed, expected, Source::ClosedForm, ok, None);
                    }
                    Err(e) => ctx.error("valuations", CLAIM_VALUATIONS, json!({ "valuation": expected_v }), Source::ClosedForm, &e),
                }
            }
        }
        Suite::Product => {
            let reps = if m == 0 { 0 } else { (big_q - 1) * big_q.pow(m as u32 - 1) / units };
            let expected = json!({ "representatives": reps, "valuation_sum": format_rational(&Rational::new(1, units as i64)), "quotient_valuation": 0 });
            if m == 0 {
                ctx.skip("product", CLAIM_PRODUCT, "level 0 has no primitive torsion");
            } else {
                match ctx.cm().and_then(|s| verify_product_formula(&s)) {
                    Ok(r) => {
                        let computed = json!({
                            "representatives": r.representatives,
                            "valuation_sum": format_rational(&r.valuation_sum),
                            "quotient_valuation": r.quotient_valuation,
                        });
                        let ok = computed == expected;
                        ctx.push("product", CLAIM_PRODUCT, computed, expected, Source::ClosedForm, ok, None);
                    }
                    Err(e) => ctx.error("product", CLAIM_PRODUCT, expected, Source::ClosedForm, &e),
                }
            }
        }
        Suite::Determinant => {
            let cases = if m == 0 { 0 } else { (big_q - 1) * big_q.pow(m as u32 - 1) };
            let expected = json!({ "cases": cases, "passed": cases, "min_agreement": config.precision });
            if m == 0 {
                ctx.skip("determinant", CLAIM_DETERMINANT, "level 0 has trivial Galois group");
            } else {
                match ctx.cm().and_then(|s| verify_determinant_character(&s)) {
                    Ok(w) => {
                        let computed = json!({ "cases": w.cases.len(), "passed": w.cases.len(), "min_agreement": agreement_value(w.min_agreement) });
                        let ok = w.cases.len() as u64 == cases && w.min_agreement >= config.precision;
                        ctx.push("determinant", CLAIM_DETERMINANT, computed, expected, Source::Derived, ok, None);
                    }
                    Err(e) => ctx.error("determinant", CLAIM_DETERMINANT, expected, Source::Derived, &e),
                }
            }
        }
        Suite::LevelCount => {
            let expected = json!(gl_order(q, n as u32, m as u32));
            if m == 0 {
                ctx.skip("level-count", CLAIM_LEVEL, "level 0 carries only the empty level structure");
            } else {
                match ctx.cm().and_then(|s| cm_torsion(&s)).and_then(|tm| count_level_structures(&Arc::new(tm))) {
                    Ok(c) => {
                        let ok = json!(c.level_structures) == expected;
                        ctx.push("level-count", CLAIM_LEVEL, json!(c.level_structures), expected, Source::ClosedForm, ok, None);
                    }
                    Err(e) => ctx.error("level-count", CLAIM_LEVEL, expected, Source::ClosedForm, &e),
                }
            }
        }
        Suite::KernelHeight => kernel_height(&mut ctx),
        Suite::Pi0 | Suite::H0 => {
            if m == 0 {
                ctx.skip(suite.name(), CLAIM_COMPONENTS, "level 0 has a single component");
            } else {
                match ctx.tower(1, config.m + 1).and_then(|t| pi0_action_table_on(t, n as usize, m as usize, config.seed)) {
                    Ok(action) if suite == Suite::Pi0 => pi0_reports(&mut ctx, &action, units),
                    Ok(action) => h0_reports(&mut ctx, &action, units),
                    Err(e) => ctx.error(suite.name(), if suite == Suite::Pi0 { CLAIM_ACTION } else { CLAIM_H0 }, json!(units), Source::ClosedForm, &e),
                }
            }
        }
    }
    Ok(ctx.out)
}

fn pi0_reports(ctx: &mut Ctx, action: &Pi0Action, units: u64) {
    let g = &action.group;
    let tower_degree = action.tower.degree(action.m) as u64;
    let computed = json!({ "order": g.order(), "invariant_factors": g.invariant_factors(), "tower_degree": tower_degree });
    let ok = g.order() == units && tower_degree == units;
    ctx.push("pi0.components", CLAIM_COMPONENTS, computed, json!({ "order": units, "tower_degree": units }), Source::ClosedForm, ok, None);
    let c = &action.checks;
    let computed = serde_json::to_value(c).unwrap();
    let ok = c.det_random_pairs >= 200
        && c.nrd_random_pairs >= 200
        && c.galois_pairs >= 200
        && c.nrd_image_size as u64 == units
        && c.sl_trivial > 0
        && c.norm_one_trivial > 0
        && c.deep_galois_trivial as u64 == action.q as u64;
    let expected = json!({ "random_pairs_min": 200, "nrd_image_size": units, "deep_galois_trivial": action.q });
    ctx.push("pi0.action", CLAIM_ACTION, computed, expected, Source::Derived, ok, None);
}

fn h0_reports(ctx: &mut Ctx, action: &Pi0Action, units: u64) {
    match h0_decomposition(action) {
        Ok(h) => {
            let computed = json!({
                "characters": h.summands.len(),
                "invariant_factors": h.invariant_factors,
                "on_galois": h.summands.iter().map(|s| s.on_galois.clone()).collect::<Vec<_>>(),
            });
            let ok = h.summands.len() as u64 == units;
            ctx.push("h0", CLAIM_H0, computed, json!({ "characters": units }), Source::Derived, ok, None);
        }
        Err(e) => ctx.error("h0", CLAIM_H0, json!({ "characters": units }), Source::Derived, &e),
    }
}

fn kernel_height(ctx: &mut Ctx) {
    let c = ctx.config;
    let n = c.n as usize;
    if c.m == 0 {
        ctx.skip("kernel-height", CLAIM_KERNEL, "level 0 has no torsion");
        return;
    }
    let cm = ctx.cm().and_then(|s| cm_torsion(&s).map(|tm| (s, tm)));
    for (check, fibre, expected) in
        [("kernel-height.etale", Specialization::GenericFibre, 0), ("kernel-height.closed", Specialization::ClosedFibre, n)]
    {
        let res = cm.as_ref().map_err(Clone::clone).and_then(|(s, tm)| {
            let h = s.module.connected_height(fibre);
            kernel_rank(&LevelStructure::identity(&Arc::new(tm.clone())), fibre).map(|r| (h, r))
        });
        match res {
            Ok((h, r)) => {
                let ok = r.rank == h && h == expected;
                ctx.push(check, CLAIM_KERNEL, json!({ "rank": r.rank, "height": h }), json!({ "rank": expected, "height": expected }), Source::Trivial, ok, None);
            }
            Err(e) => ctx.error(check, CLAIM_KERNEL, json!({ "rank": expected }), Source::Trivial, &e),
        }
    }
    if (c.q(), c.n, c.m) != (2, 2, 1) {
        ctx.skip("kernel-height.unit-u1", CLAIM_KERNEL, "the unit-u_1 model is tabulated for q = 2, n = 2, m = 1");
        return;
    }
    match unit_u1_kernel(c.precision) {
        Ok((h, r)) => {
            let ok = r == h && h == 1;
            ctx.push("kernel-height.unit-u1", CLAIM_KERNEL, json!({ "rank": r, "height": h }), json!({ "rank": 1, "height": 1 }), Source::Trivial, ok, None);
        }
        Err(e) => ctx.error("kernel-height.unit-u1", CLAIM_KERNEL, json!({ "rank": 1 }), Source::Trivial, &e),
    }
}

/// `F_2((t))(π)` with `t = π^2 + π^3`, which holds all roots of
/// `tT + T^2 + T^4`.
fn wild_quadratic(base: &Arc<LocalFieldSpec>, precision: i64) -> Result<Arc<LocalFieldSpec>> {
    let image = Series::from_terms(2, vec![1, 1], EXACT);
    ramified_extension_by_relation(base, 2, "pi", precision + 4, image.clone(), move |_| Ok(image.clone()))
}

/// Connected height and closed-fibre kernel rank of `tT + T^2 + T^4`.
fn unit_u1_kernel(precision: i64) -> Result<(usize, usize)> {
    let base = crate::lubintate::laurent_field(2)?;
    let x = FormalOModule::with_parameters(&base, 2, &[LocalFieldElement::one(&base)])?;
    let tm = torsion_points(&x, 1, &wild_quadratic(&base, precision)?, DEGREE_CAP)?;
    let r = kernel_rank(&LevelStructure::identity(&Arc::new(tm)), Specialization::ClosedFibre)?;
    Ok((x.connected_height(Specialization::ClosedFibre), r.rank))
}

/// Runs the given suites in order, concatenating their reports.
pub fn run_suites(suites: &[Suite], config: &RunConfig) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for &s in suites {
        out.extend(run_suite(s, config)?);
    }
    Ok(out)
}

/// What `tower` prints.
#[derive(Clone, Debug, Serialize)]
pub struct TowerSummary {
    pub q: u32,
    pub n: u32,
    pub m: u32,
    pub cm: bool,
    /// `[F_k : base]` for `k = 1..m`.
    pub degrees: Vec<i64>,
    /// Image of the previous uniformizer in each level.
    pub relations: Vec<String>,
    /// Per level: number of torsion points and valuation of a primitive one.
    pub torsion: Vec<TorsionRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorsionRow {
    pub level: usize,
    pub points: usize,
    pub primitive_valuation: Option<String>,
}

fn format_series(s: &Series, var: &str, terms: usize) -> String {
    let mut parts = Vec::new();
    let mut shown = 0;
    let mut i = s.leading_exponent();
    while i < s.precision() && shown < terms {
        if let Some(c) = s.coeff(i).filter(|&c| c != 0) {
            parts.push(if c == 1 { format!("{var}^{i}") } else { format!("{c}*{var}^{i}") });
            shown += 1;
        }
        if s.is_exact() && i >= s.leading_exponent() + s.coeffs().len() as i64 {
            break;
        }
        i += 1;
    }
    if parts.is_empty() {
        parts.push("0".into());
    }
    if !s.is_exact() {
        parts.push(format!("O({var}^{})", s.precision()));
    }
    parts.join(" + ")
}

/// Builds the tower for `config` (over `F_{q^n}((t))` when `cm`, else over
/// `F_q((t))`) and tabulates degrees, relations and torsion.
pub fn tower_summary(config: &RunConfig, cm: bool) -> Result<TowerSummary> {
    config.validate()?;
    let ctx = Ctx { config, params: config.parameters(), out: Vec::new() };
    let n = if cm { config.n } else { 1 };
    let tower = ctx.tower(n, config.m)?;
    let mut relations = Vec::new();
    let mut torsion = Vec::new();
    for k in 1..=tower.m() {
        let below = if k == 1 { "t".to_string() } else { format!("l{}", k - 1) };
        relations.push(format!("{below} = {}", format_series(tower.relation(k), &format!("l{k}"), 8)));
        let tm = tower.torsion_module(k)?;
        let v = tm.primitive_indices().first().and_then(|&i| tm.points()[i].normalized_valuation());
        torsion.push(TorsionRow { level: k, points: tm.len(), primitive_valuation: v.map(|r| format_rational(&r)) });
    }
    Ok(TowerSummary {
        q: config.q(),
        n,
        m: config.m,
        cm,
        degrees: (1..=tower.m()).map(|k| tower.degree(k)).collect(),
        relations,
        torsion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(p: u32, f: u32, n: u32, m: u32) -> RunConfig {
        RunConfig { p, f, n, m, precision: 40, degree_cap: 4096, cache_dir: None, seed: 7 }
    }

    #[test]
    fn tower_degrees() {
        assert_eq!(tower_summary(&config(3, 1, 1, 2), false).unwrap().degrees, vec![2, 6]);
        assert_eq!(tower_summary(&config(2, 1, 1, 1), false).unwrap().degrees, vec![1]);
        let cm = tower_summary(&config(2, 1, 2, 2), true).unwrap();
        assert_eq!(cm.degrees, vec![3, 12]);
        assert_eq!(cm.torsion[1].primitive_valuation.as_deref(), Some("1/12"));
    }

    #[test]
    fn every_suite_passes_at_q2_n2_m1() {
        let reports = run_suites(&Suite::ALL, &config(2, 1, 2, 1)).unwrap();
        for r in &reports {
            assert_ne!(r.status, Status::Fail, "{r:?}");
        }
        assert!(reports.iter().any(|r| r.check == "kernel-height.unit-u1" && r.status == Status::Pass));
    }

    #[test]
    fn series_formatting() {
        assert_eq!(format_series(&Series::from_terms(2, vec![1, 0, 2], EXACT), "x", 8), "x^2 + 2*x^4");
        assert_eq!(format_series(&Series::from_terms(1, vec![1, 1], 5), "x", 8), "x^1 + x^2 + O(x^5)");
    }
}
