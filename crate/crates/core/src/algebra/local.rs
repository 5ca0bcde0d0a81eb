//! Local fields `F_Q((u))` presented by a uniformizer, and their elements.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::fq::{FieldSpec, FieldSpecRepr};
use crate::algebra::series::{Series, EXACT};
use crate::algebra::Rational;
use crate::error::{Error, Result};

/// Default number of uniformizer-adic terms kept when an exact quantity
/// has to be expanded (e.g. the inverse of an exact non-monomial).
pub const DEFAULT_PRECISION: i64 = 64;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// How a field sits over its base: the image of the base uniformizer as a
/// series in this field's uniformizer, and the residue-field embedding.
#[derive(Clone, Debug)]
pub struct BaseEmbedding {
    pub image_of_base_uniformizer: Series,
    /// Image of every code of the base residue field.
    pub residue_map: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct BaseLink {
    pub field: Arc<LocalFieldSpec>,
    pub embedding: BaseEmbedding,
}

/// A local field `F_Q((name))`, possibly declared over a base field.
pub struct LocalFieldSpec {
    id: u64,
    name: String,
    residue: Arc<FieldSpec>,
    base: Option<BaseLink>,
    ramification_index: u32,
    residue_degree: u32,
    default_precision: i64,
}

impl fmt::Debug for LocalFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}(({}))", self.residue.q(), self.name)?;
        if let Some(b) = &self.base {
            write!(f, " over {:?} [e={}, f={}]", b.field, self.ramification_index, self.residue_degree)?;
        }
        Ok(())
    }
}

impl LocalFieldSpec {
    /// The root field `F_Q((name))`.
    pub fn laurent(residue: &Arc<FieldSpec>, name: &str) -> Arc<Self> {
        Arc::new(LocalFieldSpec {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            name: name.to_string(),
            residue: residue.clone(),
            base: None,
            ramification_index: 1,
            residue_degree: 1,
            default_precision: DEFAULT_PRECISION,
        })
    }

    pub(crate) fn over(
        base: &Arc<LocalFieldSpec>,
        residue: &Arc<FieldSpec>,
        name: &str,
        embedding: BaseEmbedding,
        ramification_index: u32,
        residue_degree: u32,
    ) -> Arc<Self> {
        Arc::new(LocalFieldSpec {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            name: name.to_string(),
            residue: residue.clone(),
            base: Some(BaseLink { field: base.clone(), embedding }),
            ramification_index,
            residue_degree,
            default_precision: base.default_precision,
        })
    }

    /// Same field structure with another working precision; the copy is a
    /// distinct field.
    pub(crate) fn with_default_precision(&self, precision: i64) -> Arc<Self> {
        Arc::new(LocalFieldSpec {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            name: self.name.clone(),
            residue: self.residue.clone(),
            base: self.base.clone(),
            ramification_index: self.ramification_index,
            residue_degree: self.residue_degree,
            default_precision: precision,
        })
    }

    /// Root field with a non-default working precision.
    pub fn laurent_with_precision(residue: &Arc<FieldSpec>, name: &str, precision: i64) -> Arc<Self> {
        Arc::new(LocalFieldSpec {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            name: name.to_string(),
            residue: residue.clone(),
            base: None,
            ramification_index: 1,
            residue_degree: 1,
            default_precision: precision,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn residue(&self) -> &Arc<FieldSpec> {
        &self.residue
    }

    pub fn base(&self) -> Option<&BaseLink> {
        self.base.as_ref()
    }

    /// Ramification index relative to the base (1 for a root field).
    pub fn ramification_index(&self) -> u32 {
        self.ramification_index
    }

    pub fn residue_degree(&self) -> u32 {
        self.residue_degree
    }

    pub fn default_precision(&self) -> i64 {
        self.default_precision
    }

    /// Ramification index over the root of the chain.
    pub fn absolute_ramification(&self) -> i64 {
        let mut e = self.ramification_index as i64;
        let mut cur = self.base.as_ref().map(|b| b.field.clone());
        while let Some(f) = cur {
            e *= f.ramification_index as i64;
            cur = f.base.as_ref().map(|b| b.field.clone());
        }
        e
    }

    /// Degree over the root of the chain.
    pub fn absolute_degree(&self) -> i64 {
        let mut d = (self.ramification_index * self.residue_degree) as i64;
        let mut cur = self.base.as_ref().map(|b| b.field.clone());
        while let Some(f) = cur {
            d *= (f.ramification_index * f.residue_degree) as i64;
            cur = f.base.as_ref().map(|b| b.field.clone());
        }
        d
    }

    /// Chain of fields from `self` down to the root, `self` first.
    pub fn chain(self: &Arc<Self>) -> Vec<Arc<LocalFieldSpec>> {
        let mut out = vec![self.clone()];
        while let Some(b) = out.last().unwrap().base.as_ref() {
            let next = b.field.clone();
            out.push(next);
        }
        out
    }

    pub fn root(self: &Arc<Self>) -> Arc<LocalFieldSpec> {
        self.chain().pop().unwrap()
    }
}

/// Valuation information for a possibly inexact element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Exact(i64),
    /// The element is zero modulo `u^N`; only `v >= N` is known.
    AtLeast(i64),
    Infinite,
}

/// An element of a [`LocalFieldSpec`], known modulo `u^precision`.
#[derive(Clone)]
pub struct LocalFieldElement {
    field: Arc<LocalFieldSpec>,
    series: Series,
}

impl fmt::Debug for LocalFieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.field.residue();
        let mut first = true;
        for (i, &c) in self.series.coeffs().iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{:?}*{}^{}", k.coeffs(c), self.field.name, self.series.leading_exponent() + i as i64)?;
        }
        if first {
            write!(f, "0")?;
        }
        if !self.series.is_exact() {
            write!(f, " + O({}^{})", self.field.name, self.series.precision())?;
        }
        Ok(())
    }
}

impl LocalFieldElement {
    pub fn from_series(field: &Arc<LocalFieldSpec>, series: Series) -> Self {
        LocalFieldElement { field: field.clone(), series }
    }

    pub fn zero(field: &Arc<LocalFieldSpec>) -> Self {
        Self::from_series(field, Series::exact_zero())
    }

    pub fn one(field: &Arc<LocalFieldSpec>) -> Self {
        Self::from_series(field, Series::one())
    }

    /// The declared uniformizer.
    pub fn uniformizer(field: &Arc<LocalFieldSpec>) -> Self {
        Self::from_series(field, Series::monomial(1, 1))
    }

    /// Exact constant with residue code `c`.
    pub fn constant(field: &Arc<LocalFieldSpec>, c: u8) -> Self {
        Self::from_series(field, Series::constant(c))
    }

    pub fn monomial(field: &Arc<LocalFieldSpec>, c: u8, k: i64) -> Self {
        Self::from_series(field, Series::monomial(c, k))
    }

    pub fn field(&self) -> &Arc<LocalFieldSpec> {
        &self.field
    }

    pub fn series(&self) -> &Series {
        &self.series
    }

    pub fn precision(&self) -> i64 {
        self.series.precision()
    }

    pub fn is_zero(&self) -> bool {
        self.series.is_zero()
    }

    pub fn is_exact(&self) -> bool {
        self.series.is_exact()
    }

    pub fn valuation(&self) -> Valuation {
        match self.series.valuation() {
            Some(v) => Valuation::Exact(v),
            None if self.series.is_exact() => Valuation::Infinite,
            None => Valuation::AtLeast(self.series.precision()),
        }
    }

    /// Valuation in units of the uniformizer, when known exactly.
    pub fn exact_valuation(&self) -> Option<i64> {
        self.series.valuation()
    }

    /// Valuation normalized so that the root uniformizer has valuation 1.
    pub fn normalized_valuation(&self) -> Option<Rational> {
        self.series
            .valuation()
            .map(|v| Rational::new(v, self.field.absolute_ramification()))
    }

    fn check(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.field, &other.field) {
            Ok(())
        } else {
            Err(Error::MixedFields)
        }
    }

    fn wrap(&self, series: Series) -> Self {
        LocalFieldElement { field: self.field.clone(), series }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.wrap(self.series.add(&other.series, self.field.residue())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.wrap(self.series.sub(&other.series, self.field.residue())))
    }

    pub fn neg(&self) -> Self {
        self.wrap(self.series.neg(self.field.residue()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.wrap(self.series.mul(&other.series, self.field.residue())))
    }

    pub fn inv(&self) -> Result<Self> {
        Ok(self.wrap(self.series.inv(self.field.residue(), self.field.default_precision())?))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.wrap(self.series.div(&other.series, self.field.residue(), self.field.default_precision())?))
    }

    pub fn pow(&self, e: u64) -> Self {
        self.wrap(self.series.pow(e, self.field.residue()))
    }

    /// `self^{p^j}`.
    pub fn pow_p(&self, j: u32) -> Self {
        self.wrap(self.series.pow_p(j, self.field.residue()))
    }

    /// Multiplies by the residue constant with code `c`.
    pub fn scale(&self, c: u8) -> Self {
        self.wrap(self.series.scale(c, self.field.residue()))
    }

    pub fn truncate(&self, n: i64) -> Self {
        self.wrap(self.series.truncate(n))
    }

    /// True when the difference is zero modulo its precision.
    pub fn agrees_with(&self, other: &Self) -> Result<bool> {
        Ok(self.sub(other)?.is_zero())
    }

    /// Precision (absolute) to which `self` and `other` are known to agree,
    /// or `None` if they differ at a known term.
    pub fn agreement(&self, other: &Self) -> Result<Option<i64>> {
        let d = self.sub(other)?;
        Ok(if d.is_zero() { Some(d.precision()) } else { None })
    }
}

/// Canonical JSON form of a [`LocalFieldElement`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalFieldElementRepr {
    pub field: String,
    pub residue: FieldSpecRepr,
    pub leading_exponent: Option<i64>,
    pub coeffs: Vec<Vec<u32>>,
    /// `null` for exactly known elements.
    pub precision: Option<i64>,
}

impl LocalFieldElement {
    pub fn repr(&self) -> LocalFieldElementRepr {
        let k = self.field.residue();
        LocalFieldElementRepr {
            field: self.field.name().to_string(),
            residue: k.repr(),
            leading_exponent: self.series.valuation(),
            coeffs: self.series.coeffs().iter().map(|&c| k.coeffs(c)).collect(),
            precision: if self.series.is_exact() { None } else { Some(self.series.precision()) },
        }
    }

    pub fn from_repr(field: &Arc<LocalFieldSpec>, repr: &LocalFieldElementRepr) -> Result<Self> {
        let k = field.residue();
        if repr.residue != k.repr() {
            return Err(Error::MixedFields);
        }
        let coeffs = repr.coeffs.iter().map(|c| k.from_coeffs(c)).collect::<Result<Vec<u8>>>()?;
        let prec = repr.precision.unwrap_or(EXACT);
        let val = repr.leading_exponent.unwrap_or(prec);
        Ok(Self::from_series(field, Series::from_terms(val, coeffs, prec)))
    }
}

impl Serialize for LocalFieldElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.repr().serialize(s)
    }
}
