//! Towers of local fields presented by declared uniformizers.
//!
//! A field above its base records the base uniformizer as a series in its
//! own uniformizer together with a residue-field embedding. Embedding an
//! element is then substitution, and automorphisms act by substitution plus
//! a Frobenius twist of the coefficients.

mod roots;

use std::sync::Arc;

use crate::algebra::{FieldSpec, LocalFieldElement, LocalFieldSpec, Series};
use crate::algebra::local::BaseEmbedding;
use crate::error::{Error, Result};

pub use roots::{additive_roots_in_field, find_solution, solutions_in_field};

/// `F'` = the unramified extension of degree `k` of `base`, with the same
/// uniformizer.
pub fn unramified_extension(base: &Arc<LocalFieldSpec>, k: u32) -> Result<Arc<LocalFieldSpec>> {
    if k == 0 {
        return Err(Error::Invalid("extension degree must be positive".into()));
    }
    let small = base.residue();
    let residue = FieldSpec::standard(small.p(), small.f() * k)?;
    let residue_map = small.embedding_into(&residue)?;
    let embedding = BaseEmbedding { image_of_base_uniformizer: Series::monomial(1, 1), residue_map };
    Ok(LocalFieldSpec::over(base, &residue, base.name(), embedding, 1, k))
}

/// Builds a totally ramified extension of degree `e` of `base` whose
/// uniformizer `name` satisfies `base uniformizer = y`, where `y` is the
/// fixed point of `relation` (a map on series in the new uniformizer).
///
/// Iteration starts from `seed`, keeps `precision` terms, and fails if the
/// correction does not gain valuation at every step or after
/// `precision + 8` iterations.
pub fn ramified_extension_by_relation<R>(
    base: &Arc<LocalFieldSpec>,
    e: u32,
    name: &str,
    precision: i64,
    seed: Series,
    relation: R,
) -> Result<Arc<LocalFieldSpec>>
where
    R: Fn(&Series) -> Result<Series>,
{
    let image = solve_relation(e, precision, seed, relation)?;
    ramified_extension_from_image(base, e, name, image)
}

/// Totally ramified extension from an already known image of the base
/// uniformizer (as stored in a tower cache).
pub fn ramified_extension_from_image(
    base: &Arc<LocalFieldSpec>,
    e: u32,
    name: &str,
    image: Series,
) -> Result<Arc<LocalFieldSpec>> {
    if image.valuation() != Some(e as i64) {
        return Err(Error::Invalid(format!("image of the base uniformizer must have valuation {e}")));
    }
    let identity: Vec<u8> = base.residue().elements().collect();
    let embedding = BaseEmbedding { image_of_base_uniformizer: image, residue_map: identity };
    Ok(LocalFieldSpec::over(base, base.residue(), name, embedding, e, 1))
}

/// Fixed-point solve used by [`ramified_extension_by_relation`].
pub fn solve_relation<R>(e: u32, precision: i64, seed: Series, relation: R) -> Result<Series>
where
    R: Fn(&Series) -> Result<Series>,
{
    let cap = (precision + 8).max(1) as usize;
    let mut y = seed.truncate(precision);
    let mut last_gain = i64::MIN;
    let mut converged = false;
    for _ in 0..cap {
        let next = relation(&y)?.truncate(precision);
        let correction = next.sub_checked(&y);
        y = next;
        match correction {
            None => {
                converged = true;
                break;
            }
            Some(v) => {
                if v <= last_gain {
                    return Err(Error::NoConvergence { iterations: cap });
                }
                last_gain = v;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: cap });
    }
    match y.valuation() {
        Some(v) if v == e as i64 => Ok(y),
        Some(v) => Err(Error::Invalid(format!("relation gives valuation {v}, expected {e}"))),
        None => Err(Error::PrecisionExhausted("relation solution vanished".into())),
    }
}

trait SubChecked {
    fn sub_checked(&self, other: &Series) -> Option<i64>;
}

impl SubChecked for Series {
    /// Valuation of `self - other` as an exact value, `None` if it vanishes
    /// modulo the joint precision. The residue field is irrelevant for this
    /// test, so the comparison is made coefficientwise.
    fn sub_checked(&self, other: &Series) -> Option<i64> {
        let prec = self.precision().min(other.precision());
        let lo = self.leading_exponent().min(other.leading_exponent());
        (lo..prec).find(|&i| self.coeff(i) != other.coeff(i))
    }
}

/// Image of `x` in `target`, which must lie above `x`'s field.
pub fn embed(x: &LocalFieldElement, target: &Arc<LocalFieldSpec>) -> Result<LocalFieldElement> {
    let chain = target.chain();
    let pos = chain.iter().position(|f| Arc::ptr_eq(f, x.field())).ok_or(Error::NotInTower)?;
    let mut series = x.series().clone();
    // walk from x's field up to the target
    for i in (0..pos).rev() {
        let child = &chain[i];
        let link = child.base().expect("non-root field has a base");
        series = series.map_coeffs(&link.embedding.residue_map);
        let image = &link.embedding.image_of_base_uniformizer;
        if !(image.is_exact() && image.coeffs() == [1] && image.leading_exponent() == 1) {
            series = series.compose(image, child.residue(), child.default_precision())?;
        }
    }
    Ok(LocalFieldElement::from_series(target, series))
}

/// Image of the root field's uniformizer in `field`.
pub fn root_uniformizer_image(field: &Arc<LocalFieldSpec>) -> Result<LocalFieldElement> {
    let root = field.root();
    embed(&LocalFieldElement::uniformizer(&root), field)
}

/// Image of the root residue field inside `field`'s residue field.
pub fn root_residue_map(field: &Arc<LocalFieldSpec>) -> Vec<u8> {
    let chain = field.chain();
    let root = chain.last().unwrap();
    let mut table: Vec<u8> = root.residue().elements().collect();
    for f in chain[..chain.len() - 1].iter().rev() {
        let map = &f.base().unwrap().embedding.residue_map;
        table = table.iter().map(|&c| map[c as usize]).collect();
    }
    table
}

/// A field automorphism given by the image of the uniformizer and a power
/// of Frobenius on the residue field.
#[derive(Clone, Debug)]
pub struct FieldAutomorphism {
    field: Arc<LocalFieldSpec>,
    image_of_uniformizer: LocalFieldElement,
    residue_frobenius_power: i64,
}

impl FieldAutomorphism {
    pub fn new(image_of_uniformizer: LocalFieldElement, residue_frobenius_power: i64) -> Result<Self> {
        if image_of_uniformizer.exact_valuation() != Some(1) {
            return Err(Error::Invalid("automorphism must send the uniformizer to a uniformizer".into()));
        }
        Ok(FieldAutomorphism {
            field: image_of_uniformizer.field().clone(),
            image_of_uniformizer,
            residue_frobenius_power,
        })
    }

    pub fn identity(field: &Arc<LocalFieldSpec>) -> Self {
        FieldAutomorphism {
            field: field.clone(),
            image_of_uniformizer: LocalFieldElement::uniformizer(field),
            residue_frobenius_power: 0,
        }
    }

    pub fn field(&self) -> &Arc<LocalFieldSpec> {
        &self.field
    }

    pub fn image_of_uniformizer(&self) -> &LocalFieldElement {
        &self.image_of_uniformizer
    }

    pub fn residue_frobenius_power(&self) -> i64 {
        self.residue_frobenius_power
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let image = apply_automorphism(self, &other.image_of_uniformizer)?;
        Self::new(image, self.residue_frobenius_power + other.residue_frobenius_power)
    }

    /// Checks that the root uniformizer and root residue field are fixed,
    /// returning the precision of agreement on the uniformizer.
    pub fn fixes_root(&self) -> Result<Option<i64>> {
        let k = self.field.residue();
        let map = root_residue_map(&self.field);
        if map.iter().any(|&c| k.frobenius(c, self.residue_frobenius_power) != c) {
            return Ok(None);
        }
        let t = root_uniformizer_image(&self.field)?;
        apply_automorphism(self, &t)?.agreement(&t)
    }
}

/// `σ(x)`.
pub fn apply_automorphism(sigma: &FieldAutomorphism, x: &LocalFieldElement) -> Result<LocalFieldElement> {
    if !Arc::ptr_eq(&sigma.field, x.field()) {
        return Err(Error::MixedFields);
    }
    let k = sigma.field.residue();
    let twisted = if sigma.residue_frobenius_power == 0 {
        x.series().clone()
    } else {
        x.series().frobenius_coeffs(sigma.residue_frobenius_power, k)
    };
    let image = sigma.image_of_uniformizer.series();
    if image.is_exact() && image.coeffs() == [1] && image.leading_exponent() == 1 {
        return Ok(LocalFieldElement::from_series(&sigma.field, twisted));
    }
    let out = twisted.compose(image, k, sigma.field.default_precision())?;
    if out.is_zero() && !x.is_zero() {
        return Err(Error::PrecisionExhausted("substitution lost every significant term".into()));
    }
    Ok(LocalFieldElement::from_series(&sigma.field, out))
}
