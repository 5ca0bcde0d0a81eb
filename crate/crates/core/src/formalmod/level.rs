use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{FieldSpec, LocalFieldElement, TruncElem};
use crate::error::{Error, Result};

use super::module::Specialization;
use super::torsion::TorsionModule;

/// Largest number of matrices `count_level_structures` will enumerate.
pub const ENUMERATION_CAP: u64 = 1 << 16;

/// An o-linear map `(t^{-m}o/o)^n -> X[t^m]`, identified with
/// `(o/t^m)^n -> X[t^m]` by multiplication by `t^m`. Column `j` of
/// `matrix` holds the coordinates of the image of the `j`-th basis vector.
#[derive(Clone, Debug)]
pub struct LevelStructure {
    torsion: Arc<TorsionModule>,
    matrix: Vec<Vec<TruncElem>>,
}

/// Outcome of the Drinfeld divisibility test.
#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub fibre: Specialization,
    /// Degree of `prod (T - φ(a))` over the level-1 vectors.
    pub degree: usize,
    pub divisible: bool,
    /// The product equals `[t](T)` coefficientwise.
    pub equal: bool,
    /// Precision to which the remainder vanishes (generic fibre only).
    pub remainder_precision: Option<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelCount {
    pub matrices: u64,
    pub bijective: u64,
    pub level_structures: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub fibre: Specialization,
    pub kernel_size: usize,
    pub rank: usize,
}

impl LevelStructure {
    pub fn new(torsion: &Arc<TorsionModule>, matrix: Vec<Vec<TruncElem>>) -> Result<Self> {
        let n = torsion.rank();
        let m = torsion.level();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n || row.iter().any(|c| c.len() != m)) {
            return Err(Error::Invalid(format!("level structure needs an {n}x{n} matrix over o/t^{m}")));
        }
        Ok(LevelStructure { torsion: torsion.clone(), matrix })
    }

    pub fn identity(torsion: &Arc<TorsionModule>) -> Self {
        let ring = torsion.ring();
        let n = torsion.rank();
        let matrix = (0..n).map(|i| (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect()).collect();
        LevelStructure { torsion: torsion.clone(), matrix }
    }

    pub fn zero(torsion: &Arc<TorsionModule>) -> Self {
        let n = torsion.rank();
        LevelStructure { torsion: torsion.clone(), matrix: vec![vec![torsion.ring().zero(); n]; n] }
    }

    pub fn torsion(&self) -> &Arc<TorsionModule> {
        &self.torsion
    }

    pub fn matrix(&self) -> &[Vec<TruncElem>] {
        &self.matrix
    }

    /// Coordinates of `φ(v)`.
    pub fn apply_coords(&self, v: &[TruncElem]) -> Vec<TruncElem> {
        let ring = self.torsion.ring();
        self.matrix
            .iter()
            .map(|row| row.iter().zip(v).fold(ring.zero(), |acc, (a, b)| ring.add(&acc, &ring.mul(a, b))))
            .collect()
    }

    pub fn apply(&self, v: &[TruncElem]) -> &LocalFieldElement {
        self.torsion.point(&self.apply_coords(v))
    }

    /// Table indices of `φ(v)` for every `v`, in coordinate order.
    pub fn image_indices(&self) -> Vec<usize> {
        (0..self.torsion.len()).map(|i| self.torsion.index(&self.apply_coords(&self.torsion.coords(i)))).collect()
    }

    /// Indices of `φ(a)` for `a` in the level-1 part `t^{m-1}(o/t^m)^n`.
    fn level_one_images(&self) -> Vec<usize> {
        let tm = &self.torsion;
        let mut out: Vec<usize> = tm
            .level_indices(1)
            .into_iter()
            .chain(std::iter::once(0))
            .map(|i| tm.index(&self.apply_coords(&tm.coords(i))))
            .collect();
        out.sort_unstable();
        out
    }

    /// Drinfeld condition: `prod_{a level 1} (T - φ(a))` divides `[t](T)`,
    /// exactly on the generic fibre or modulo the maximal ideal on the
    /// closed fibre.
    pub fn verify(&self, fibre: Specialization) -> Result<LevelReport> {
        verify_images(&self.torsion, &self.level_one_images(), fibre)
    }
}

fn verify_images(tm: &TorsionModule, images: &[usize], fibre: Specialization) -> Result<LevelReport> {
    let field = tm.field();
    let roots: Vec<&LocalFieldElement> = images.iter().map(|&i| &tm.points()[i]).collect();
    let target = dense_t_action(tm);
    match fibre {
        Specialization::GenericFibre => {
            let mut prod = vec![LocalFieldElement::one(field)];
            for r in &roots {
                prod = mul_linear(&prod, r)?;
            }
            let rem = remainder_monic(&target, &prod)?;
            let divisible = rem.iter().all(|c| c.is_zero());
            let remainder_precision = rem.iter().map(|c| c.precision()).min();
            let equal = prod.len() == target.len() && {
                let mut eq = true;
                for (a, b) in prod.iter().zip(&target) {
                    eq &= a.agrees_with(b)?;
                }
                eq
            };
            Ok(LevelReport { fibre, degree: roots.len(), divisible, equal, remainder_precision })
        }
        Specialization::ClosedFibre => {
            let k = field.residue();
            let reduced_roots = roots.iter().map(|r| residue(r)).collect::<Result<Vec<_>>>()?;
            let reduced_target = target.iter().map(residue).collect::<Result<Vec<_>>>()?;
            let mut prod = vec![1u8];
            for &r in &reduced_roots {
                let mut next = vec![0u8; prod.len() + 1];
                for (i, &c) in prod.iter().enumerate() {
                    next[i + 1] = k.add(next[i + 1], c);
                    next[i] = k.sub(next[i], k.mul(c, r));
                }
                prod = next;
            }
            let rem = remainder_monic_fq(k, &reduced_target, &prod);
            let divisible = rem.iter().all(|&c| c == 0);
            let equal = prod == reduced_target;
            Ok(LevelReport { fibre, degree: roots.len(), divisible, equal, remainder_precision: None })
        }
    }
}

/// Residue class of an integral element.
fn residue(x: &LocalFieldElement) -> Result<u8> {
    match x.exact_valuation() {
        Some(v) if v < 0 => Err(Error::Invalid("element is not integral".into())),
        Some(0) => Ok(x.series().leading_coeff().unwrap()),
        Some(_) => Ok(0),
        None if x.precision() > 0 => Ok(0),
        None => Err(Error::PrecisionExhausted("residue of an element known only modulo u^0".into())),
    }
}

/// Dense coefficients of `[t](T)`, constant term first.
fn dense_t_action(tm: &TorsionModule) -> Vec<LocalFieldElement> {
    let p = tm.module().t_action();
    let field = tm.field();
    let mut out = vec![LocalFieldElement::zero(field); p.degree() as usize + 1];
    let q = p.q() as usize;
    for (i, c) in p.coeffs().iter().enumerate() {
        out[q.pow(i as u32)] = c.clone();
    }
    out
}

/// `f(T) * (T - r)`.
fn mul_linear(f: &[LocalFieldElement], r: &LocalFieldElement) -> Result<Vec<LocalFieldElement>> {
    let field = r.field();
    let mut out = vec![LocalFieldElement::zero(field); f.len() + 1];
    for (i, c) in f.iter().enumerate() {
        out[i + 1] = out[i + 1].add(c)?;
        out[i] = out[i].sub(&c.mul(r)?)?;
    }
    Ok(out)
}

/// Remainder of `a` modulo the monic `b`.
fn remainder_monic(a: &[LocalFieldElement], b: &[LocalFieldElement]) -> Result<Vec<LocalFieldElement>> {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    while rem.len() > db {
        let lead = rem.pop().unwrap();
        let shift = rem.len() - db;
        for (i, c) in b[..db].iter().enumerate() {
            rem[shift + i] = rem[shift + i].sub(&lead.mul(c)?)?;
        }
    }
    Ok(rem)
}

fn remainder_monic_fq(k: &FieldSpec, a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    while rem.len() > db {
        let lead = rem.pop().unwrap();
        let shift = rem.len() - db;
        for (i, &c) in b[..db].iter().enumerate() {
            rem[shift + i] = k.sub(rem[shift + i], k.mul(lead, c));
        }
    }
    rem
}

/// Number of level-`m` structures on the generic fibre, by enumerating
/// every `n x n` matrix over `o/t^m` and testing the Drinfeld condition.
/// Also reports how many matrices give bijections.
pub fn count_level_structures(tm: &Arc<TorsionModule>) -> Result<LevelCount> {
    let ring = tm.ring();
    let n = tm.rank();
    let total = ring.size().checked_pow((n * n) as u32).unwrap_or(u64::MAX);
    if total > ENUMERATION_CAP {
        return Err(Error::CapExceeded { what: "matrices over o/t^m", value: total, cap: ENUMERATION_CAP });
    }
    let elements = ring.elements();
    let mut memo: HashMap<Vec<usize>, bool> = HashMap::new();
    let mut bijective = 0;
    let mut level_structures = 0;
    for idx in 0..total {
        let mut rest = idx;
        let mut matrix = vec![vec![ring.zero(); n]; n];
        for row in matrix.iter_mut().rev() {
            for entry in row.iter_mut().rev() {
                *entry = elements[(rest % ring.size()) as usize].clone();
                rest /= ring.size();
            }
        }
        let phi = LevelStructure { torsion: tm.clone(), matrix };
        let image: BTreeSet<usize> = phi.image_indices().into_iter().collect();
        if image.len() == tm.len() {
            bijective += 1;
        }
        let key = phi.level_one_images();
        let ok = match memo.get(&key) {
            Some(&ok) => ok,
            None => {
                let ok = verify_images(tm, &key, Specialization::GenericFibre)?.divisible;
                memo.insert(key, ok);
                ok
            }
        };
        if ok {
            level_structures += 1;
        }
    }
    Ok(LevelCount { matrices: total, bijective, level_structures })
}

/// `|GL_n(o/t^m)| = q^{n^2(m-1)} prod_{i<n} (q^n - q^i)`.
pub fn gl_order(q: u64, n: u32, m: u32) -> u64 {
    if m == 0 {
        return 1;
    }
    let qn = q.pow(n);
    q.pow(n * n * (m - 1)) * (0..n).map(|i| qn - q.pow(i)).product::<u64>()
}

/// Rank of `{v : φ(v) in the maximal ideal at fibre}`, checked to be a
/// direct summand of `(o/t^m)^n`.
pub fn kernel_rank(phi: &LevelStructure, fibre: Specialization) -> Result<KernelReport> {
    let tm = &phi.torsion;
    let ring = tm.ring();
    let m = tm.level();
    let kernel: BTreeSet<usize> =
        (0..tm.len()).filter(|&i| fibre.is_topologically_nilpotent(phi.apply(&tm.coords(i)))).collect();
    for &a in &kernel {
        let ca = tm.coords(a);
        for &b in &kernel {
            let cb = tm.coords(b);
            let sum: Vec<TruncElem> = ca.iter().zip(&cb).map(|(x, y)| ring.add(x, y)).collect();
            if !kernel.contains(&tm.index(&sum)) {
                return Err(Error::NotASummand(format!("kernel not closed under addition at {ca:?} + {cb:?}")));
            }
        }
        for s in tm.module().scalars().elements() {
            for j in 0..m.max(1) {
                let c: Vec<TruncElem> = tm.shift_coords(&ca, j).iter().map(|x| ring.mul(x, &ring.scalar(s))).collect();
                if !kernel.contains(&tm.index(&c)) {
                    return Err(Error::NotASummand(format!("kernel not an o-submodule at {ca:?}")));
                }
            }
        }
    }
    let qm = ring.size() as usize;
    let mut rank = 0;
    while qm.pow(rank as u32) < kernel.len() {
        rank += 1;
    }
    if m > 0 && qm.pow(rank as u32) != kernel.len() {
        return Err(Error::NotASummand(format!("kernel of size {} is not free over o/t^{m}", kernel.len())));
    }
    // purity: K ∩ t^j M = t^j K
    for j in 1..m {
        let tjk: BTreeSet<usize> = kernel.iter().map(|&i| tm.index(&tm.shift_coords(&tm.coords(i), j))).collect();
        for &i in &kernel {
            if tm.coords(i).iter().all(|c| ring.order(c) >= j) && !tjk.contains(&i) {
                return Err(Error::NotASummand(format!("{:?} lies in t^{j}M but not in t^{j}K", tm.coords(i))));
            }
        }
    }
    Ok(KernelReport { fibre, kernel_size: kernel.len(), rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{FieldSpec, LocalFieldSpec, Series};
    use crate::formalmod::{torsion_points, FormalOModule};
    use crate::tower::ramified_extension_by_relation;

    fn cm_level_one() -> Arc<TorsionModule> {
        let k4 = LocalFieldSpec::laurent(&FieldSpec::standard(2, 2).unwrap(), "t");
        let cubic = ramified_extension_by_relation(&k4, 3, "pi", 60, Series::monomial(1, 3), |_| Ok(Series::monomial(1, 3))).unwrap();
        let x = FormalOModule::lubin_tate(&k4, 2, 2).unwrap();
        Arc::new(torsion_points(&x, 1, &cubic, 4096).unwrap())
    }

    #[test]
    fn gl_orders() {
        assert_eq!(gl_order(2, 2, 1), 6);
        assert_eq!(gl_order(3, 1, 1), 2);
        assert_eq!(gl_order(2, 2, 2), 96);
        assert_eq!(gl_order(3, 1, 2), 6);
    }

    #[test]
    fn bijective_product_is_t_action() {
        let tm = cm_level_one();
        let r = LevelStructure::identity(&tm).verify(Specialization::GenericFibre).unwrap();
        assert!(r.divisible && r.equal);
        assert_eq!(r.degree, 4);
        assert!(r.remainder_precision.unwrap() >= 40);
    }

    #[test]
    fn zero_map_on_closed_fibre() {
        let tm = cm_level_one();
        let zero = LevelStructure::zero(&tm);
        let closed = zero.verify(Specialization::ClosedFibre).unwrap();
        assert!(closed.divisible && closed.equal);
        assert!(!zero.verify(Specialization::GenericFibre).unwrap().divisible);
    }

    #[test]
    fn repeated_basis_vector_fails() {
        let tm = cm_level_one();
        let one = tm.ring().one();
        let zero = tm.ring().zero();
        let phi = LevelStructure::new(&tm, vec![vec![one.clone(), one], vec![zero.clone(), zero]]).unwrap();
        assert!(!phi.verify(Specialization::GenericFibre).unwrap().divisible);
    }

    #[test]
    fn count_cm_level_one() {
        let tm = cm_level_one();
        let c = count_level_structures(&tm).unwrap();
        assert_eq!(c.matrices, 16);
        assert_eq!(c.level_structures, 6);
        assert_eq!(c.bijective, 6);
    }

    #[test]
    fn kernel_ranks_of_cm_model() {
        let tm = cm_level_one();
        let phi = LevelStructure::identity(&tm);
        assert_eq!(kernel_rank(&phi, Specialization::GenericFibre).unwrap().rank, 0);
        assert_eq!(kernel_rank(&phi, Specialization::ClosedFibre).unwrap().rank, 2);
    }
}
