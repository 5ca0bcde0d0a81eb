use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{LocalFieldElement, LocalFieldSpec, TruncElem, TruncRing};
use crate::error::{Error, Result};
use crate::tower::additive_roots_in_field;

use super::module::{combine, FormalOModule};

/// Finite-level torsion `X[t^m]` in a field, with coordinates over `o/t^m`.
///
/// Points are stored in lexicographic order of their coordinate vectors
/// `(c_1, ..., c_h)`; the point with coordinates `c` is `sum_i [c_i](b_i)`.
#[derive(Clone, Debug)]
pub struct TorsionModule {
    module: FormalOModule,
    m: usize,
    ring: TruncRing,
    basis: Vec<LocalFieldElement>,
    points: Vec<LocalFieldElement>,
}

/// Summary of a successful structure check.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub level: usize,
    pub rank: usize,
    pub points: usize,
    pub additions_checked: usize,
    pub actions_checked: usize,
    pub matched_reference: bool,
}

/// Hash key of `x` modulo `u^prec`.
pub(crate) fn point_key(x: &LocalFieldElement, prec: i64) -> (i64, Vec<u8>) {
    let s = x.truncate(prec);
    (s.series().leading_exponent(), s.series().coeffs().to_vec())
}

fn common_precision<'a>(xs: impl IntoIterator<Item = &'a LocalFieldElement>) -> i64 {
    xs.into_iter().map(|x| x.precision()).min().unwrap_or(0)
}

impl TorsionModule {
    /// Table of all `sum_i [c_i](b_i)` for `c in (o/t^m)^h`.
    pub fn from_basis(module: &FormalOModule, m: usize, basis: Vec<LocalFieldElement>, cap: u64) -> Result<Self> {
        let ring = TruncRing::new(module.scalars(), m);
        let count = ring.size().checked_pow(basis.len() as u32).unwrap_or(u64::MAX);
        if count > cap {
            return Err(Error::CapExceeded { what: "torsion points", value: count, cap });
        }
        let orbits = basis.iter().map(|b| module.t_orbit(b, m)).collect::<Result<Vec<_>>>()?;
        let mut tm = TorsionModule { module: module.clone(), m, ring, basis, points: Vec::new() };
        let mut points = Vec::with_capacity(count as usize);
        for idx in 0..count as usize {
            let coords = tm.coords(idx);
            let mut acc = LocalFieldElement::zero(module.field());
            for (c, orbit) in coords.iter().zip(&orbits) {
                acc = acc.add(&combine(module, c, orbit)?)?;
            }
            points.push(acc);
        }
        tm.points = points;
        Ok(tm)
    }

    /// A table given point by point, without any check. Used to test the
    /// structure check itself.
    pub fn from_table(module: &FormalOModule, m: usize, basis: Vec<LocalFieldElement>, points: Vec<LocalFieldElement>) -> Self {
        TorsionModule { module: module.clone(), m, ring: TruncRing::new(module.scalars(), m), basis, points }
    }

    pub fn module(&self) -> &FormalOModule {
        &self.module
    }

    pub fn field(&self) -> &Arc<LocalFieldSpec> {
        self.module.field()
    }

    pub fn level(&self) -> usize {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn ring(&self) -> &TruncRing {
        &self.ring
    }

    pub fn basis(&self) -> &[LocalFieldElement] {
        &self.basis
    }

    pub fn points(&self) -> &[LocalFieldElement] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinate vector of the point at `idx`.
    pub fn coords(&self, mut idx: usize) -> Vec<TruncElem> {
        let q = self.ring.field().q() as usize;
        let h = self.rank();
        let mut digits = vec![0u8; h * self.m];
        for d in digits.iter_mut().rev() {
            *d = (idx % q) as u8;
            idx /= q;
        }
        digits.chunks(self.m.max(1)).take(h).map(|c| c[..self.m].to_vec()).collect()
    }

    pub fn index(&self, coords: &[TruncElem]) -> usize {
        let q = self.ring.field().q() as usize;
        coords.iter().flatten().fold(0, |acc, &d| acc * q + d as usize)
    }

    pub fn point(&self, coords: &[TruncElem]) -> &LocalFieldElement {
        &self.points[self.index(coords)]
    }

    /// Smallest `k` with `t^k c = 0`.
    pub fn exact_level(&self, coords: &[TruncElem]) -> usize {
        let order = coords.iter().map(|c| self.ring.order(c)).min().unwrap_or(self.m);
        self.m - order
    }

    /// Indices of points of exact level `k`.
    pub fn level_indices(&self, k: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.exact_level(&self.coords(i)) == k).collect()
    }

    /// Indices of points not killed by `t^{m-1}`.
    pub fn primitive_indices(&self) -> Vec<usize> {
        self.level_indices(self.m)
    }

    /// `t^j c`.
    pub fn shift_coords(&self, coords: &[TruncElem], j: usize) -> Vec<TruncElem> {
        let tj = self.ring.pow(&self.ring.uniformizer(), j as u64);
        coords.iter().map(|c| self.ring.mul(c, &tj)).collect()
    }

    /// Checks that the table is an `o/t^m`-module isomorphic to
    /// `(o/t^m)^h` under coordinates: distinct points, additivity,
    /// compatibility with `[t]` and with `F_q` scalars, and, when given,
    /// equality with a reference point set.
    pub fn omodule_structure_check(&self, reference: Option<&[LocalFieldElement]>) -> Result<StructureReport> {
        let n = self.len();
        let expected = self.ring.size().pow(self.rank() as u32) as usize;
        if n != expected {
            return Err(Error::StructureViolation(format!("{n} points, expected {expected}")));
        }
        let prec = common_precision(self.points.iter().chain(reference.into_iter().flatten()));
        let mut seen: HashMap<(i64, Vec<u8>), usize> = HashMap::new();
        for (i, x) in self.points.iter().enumerate() {
            if let Some(j) = seen.insert(point_key(x, prec), i) {
                return Err(Error::StructureViolation(format!(
                    "coordinates {:?} and {:?} give the same point",
                    self.coords(j),
                    self.coords(i)
                )));
            }
        }
        let mut additions = 0;
        let all_pairs = n <= 256;
        let generators: Vec<usize> = (0..self.rank())
            .flat_map(|i| {
                (0..self.m).map(move |j| {
                    let mut c = vec![vec![0u8; self.m]; self.rank()];
                    c[i][j] = 1;
                    c
                })
            })
            .map(|c| self.index(&c))
            .collect();
        for a in 0..n {
            let partners: Vec<usize> = if all_pairs { (a..n).collect() } else { generators.clone() };
            let ca = self.coords(a);
            for b in partners {
                let cb = self.coords(b);
                let sum: Vec<TruncElem> = ca.iter().zip(&cb).map(|(x, y)| self.ring.add(x, y)).collect();
                let lhs = self.points[a].add(&self.points[b])?;
                if !lhs.agrees_with(self.point(&sum))? {
                    return Err(Error::StructureViolation(format!("P({ca:?}) + P({cb:?}) != P({sum:?})")));
                }
                additions += 1;
            }
        }
        let mut actions = 0;
        for a in 0..n {
            let ca = self.coords(a);
            let image = self.module.t_action().eval(&self.points[a])?;
            let ct = self.shift_coords(&ca, 1);
            if !image.agrees_with(self.point(&ct))? {
                return Err(Error::StructureViolation(format!("[t]P({ca:?}) != P({ct:?})")));
            }
            actions += 1;
            for s in self.module.scalars().elements().skip(2) {
                let cs: Vec<TruncElem> = ca.iter().map(|c| self.ring.mul(c, &self.ring.scalar(s))).collect();
                if !self.points[a].scale(self.module.scalar(s)).agrees_with(self.point(&cs))? {
                    return Err(Error::StructureViolation(format!("[{s}]P({ca:?}) != P({cs:?})")));
                }
                actions += 1;
            }
        }
        if let Some(reference) = reference {
            if reference.len() != n {
                return Err(Error::StructureViolation(format!("{} reference points, {n} in the table", reference.len())));
            }
            for r in reference {
                if !seen.contains_key(&point_key(r, prec)) {
                    return Err(Error::StructureViolation(format!("reference point {:?} missing from the table", r.series())));
                }
            }
        }
        Ok(StructureReport {
            level: self.m,
            rank: self.rank(),
            points: n,
            additions_checked: additions,
            actions_checked: actions,
            matched_reference: reference.is_some(),
        })
    }
}

/// `X[t^m]` inside `field`, found as the roots of `[t^m](T)`, with an
/// `o/t^m`-basis extracted from them. All roots must lie in `field`.
pub fn torsion_points(x: &FormalOModule, m: usize, field: &Arc<LocalFieldSpec>, degree_cap: u64) -> Result<TorsionModule> {
    let module = x.embed(field)?;
    if m == 0 {
        return Ok(TorsionModule::from_table(&module, 0, Vec::new(), vec![LocalFieldElement::zero(field)]));
    }
    let mut tm_poly = vec![0u8; m + 1];
    tm_poly[m] = 1;
    let p = x.multiply_by(&tm_poly, degree_cap)?;
    let roots = additive_roots_in_field(&p, &LocalFieldElement::zero(x.field()), field)?;
    let basis = extract_basis(&module, m, &roots)?;
    let tm = TorsionModule::from_basis(&module, m, basis, degree_cap)?;
    tm.omodule_structure_check(Some(&roots))?;
    Ok(tm)
}

/// Greedy basis: points whose `[t^{m-1}]`-images are independent over `F_q`.
fn extract_basis(module: &FormalOModule, m: usize, roots: &[LocalFieldElement]) -> Result<Vec<LocalFieldElement>> {
    let q = module.q() as usize;
    let mut h = 0;
    while q.pow((h * m) as u32) < roots.len() {
        h += 1;
    }
    if q.pow((h * m) as u32) != roots.len() {
        return Err(Error::StructureViolation(format!("{} points is not a power of q^m", roots.len())));
    }
    let scalars: Vec<u8> = module.scalars().elements().map(|c| module.scalar(c)).collect();
    let mut span = vec![LocalFieldElement::zero(module.field())];
    let mut basis = Vec::new();
    for r in roots {
        if basis.len() == h {
            break;
        }
        let s = module.t_orbit(r, m)?.pop().unwrap();
        let mut inside = false;
        for x in &span {
            if x.agrees_with(&s)? {
                inside = true;
                break;
            }
        }
        if inside {
            continue;
        }
        let mut grown = Vec::with_capacity(span.len() * q);
        for x in &span {
            for &c in &scalars {
                grown.push(x.add(&s.scale(c))?);
            }
        }
        span = grown;
        basis.push(r.clone());
    }
    if basis.len() != h {
        return Err(Error::StructureViolation(format!("found {} independent points, expected {h}", basis.len())));
    }
    Ok(basis)
}
