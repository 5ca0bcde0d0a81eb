use std::collections::HashMap;
use std::sync::Arc;

use num_integer::Integer;
use serde::Serialize;

use crate::algebra::{FieldSpec, TruncElem, TruncRing};
use crate::error::{Error, Result};
use crate::formalmod::ENUMERATION_CAP;

/// `(o/t^m)^×` for `o = F_q[[t]]`, enumerated in lexicographic order of
/// coefficient sequences, with a basis adapted to its invariant factors.
#[derive(Clone, Debug)]
pub struct UnitGroup {
    q: u32,
    m: usize,
    ring: TruncRing,
    elements: Vec<TruncElem>,
    index: HashMap<TruncElem, usize>,
    /// `d_1 | d_2 | ...`, all greater than one.
    invariant_factors: Vec<u64>,
    /// `generators[i]` has order `invariant_factors[i]`.
    generators: Vec<TruncElem>,
    /// Exponents of each element on `generators`.
    logs: Vec<Vec<u64>>,
}

/// `(q-1) q^{m-1}` checked against the enumeration cap.
fn unit_count(q: u32, m: usize) -> Result<u64> {
    if m == 0 {
        return Ok(1);
    }
    let count = (q as u64 - 1).saturating_mul((q as u64).checked_pow(m as u32 - 1).unwrap_or(u64::MAX));
    if count > ENUMERATION_CAP {
        return Err(Error::CapExceeded { what: "unit group order", value: count, cap: ENUMERATION_CAP });
    }
    Ok(count)
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl UnitGroup {
    pub fn new(q: u32, m: usize) -> Result<Self> {
        let expected = unit_count(q, m)?;
        let ring = TruncRing::new(&FieldSpec::of_size(q)?, m);
        let elements = if m == 0 { vec![ring.one()] } else { ring.units() };
        if elements.len() as u64 != expected {
            return Err(Error::StructureViolation(format!("{} units, expected {expected}", elements.len())));
        }
        let index = elements.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut g = UnitGroup {
            q,
            m,
            ring,
            elements,
            index,
            invariant_factors: Vec::new(),
            generators: Vec::new(),
            logs: Vec::new(),
        };
        g.decompose()?;
        Ok(g)
    }

    fn decompose(&mut self) -> Result<()> {
        let order = self.order();
        // primary parts: per prime, (generator, order) in decreasing order
        let mut primary: Vec<Vec<(TruncElem, u64)>> = Vec::new();
        for p in prime_factors(order) {
            let mut part = order;
            while part.is_multiple_of(p) {
                part /= p;
            }
            // Sylow p-subgroup = (order / p-part)-th powers
            let sylow: Vec<TruncElem> = {
                let mut s: Vec<TruncElem> = self.elements.iter().map(|x| self.ring.pow(x, part)).collect();
                s.sort();
                s.dedup();
                s
            };
            primary.push(self.p_basis(&sylow, p)?);
        }
        let rank = primary.iter().map(Vec::len).max().unwrap_or(0);
        let mut gens = Vec::new();
        let mut factors = Vec::new();
        // invariant factor i (from the largest) multiplies the i-th largest cyclic factor of each prime
        for i in 0..rank {
            let mut g = self.ring.one();
            let mut d = 1;
            for part in &primary {
                if let Some((x, o)) = part.get(i) {
                    g = self.ring.mul(&g, x);
                    d *= o;
                }
            }
            gens.push(g);
            factors.push(d);
        }
        gens.reverse();
        factors.reverse();
        let mut logs = vec![Vec::new(); self.elements.len()];
        let mut filled = 0;
        let mut exps = vec![0u64; factors.len()];
        loop {
            let mut x = self.ring.one();
            for (g, &e) in gens.iter().zip(&exps) {
                x = self.ring.mul(&x, &self.ring.pow(g, e));
            }
            let i = self.index[&x];
            if !logs[i].is_empty() || (factors.is_empty() && filled > 0) {
                return Err(Error::StructureViolation("invariant-factor basis is not independent".into()));
            }
            logs[i] = exps.clone();
            filled += 1;
            let mut j = 0;
            while j < exps.len() {
                exps[j] += 1;
                if exps[j] < factors[j] {
                    break;
                }
                exps[j] = 0;
                j += 1;
            }
            if j == exps.len() {
                break;
            }
        }
        if filled != self.elements.len() {
            return Err(Error::StructureViolation("invariant-factor basis does not generate".into()));
        }
        self.generators = gens;
        self.invariant_factors = factors;
        self.logs = logs;
        Ok(())
    }

    /// Basis of an abelian `p`-group, largest cyclic factor first. Each step
    /// takes an element of maximal order modulo the span found so far and
    /// corrects it into a complement.
    fn p_basis(&self, sylow: &[TruncElem], p: u64) -> Result<Vec<(TruncElem, u64)>> {
        let r = &self.ring;
        let mut basis: Vec<(TruncElem, u64)> = Vec::new();
        let mut span: HashMap<TruncElem, Vec<u64>> = HashMap::from([(r.one(), Vec::new())]);
        while span.len() < sylow.len() {
            let quotient_order = |x: &TruncElem| {
                let mut y = x.clone();
                let mut o = 1;
                while !span.contains_key(&y) {
                    y = r.pow(&y, p);
                    o *= p;
                }
                (o, y)
            };
            let (x, (o, h)) = sylow
                .iter()
                .map(|x| (x, quotient_order(x)))
                .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then_with(|| b.0.cmp(a.0)))
                .unwrap();
            let mut g = x.clone();
            for ((b, bo), &e) in basis.iter().zip(&span[&h]) {
                if e % o != 0 {
                    return Err(Error::StructureViolation(format!("p-basis step failed at order {o} (factor {bo})")));
                }
                let inv = r.inv(&r.pow(b, e / o))?;
                g = r.mul(&g, &inv);
            }
            if r.pow(&g, o) != r.one() {
                return Err(Error::StructureViolation("corrected element has the wrong order".into()));
            }
            let mut next = HashMap::with_capacity(span.len() * o as usize);
            let mut gk = r.one();
            for k in 0..o {
                for (y, log) in &span {
                    let mut l = log.clone();
                    l.push(k);
                    next.insert(r.mul(y, &gk), l);
                }
                gk = r.mul(&gk, &g);
            }
            basis.push((g, o));
            span = next;
        }
        Ok(basis)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ring(&self) -> &TruncRing {
        &self.ring
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn elements(&self) -> &[TruncElem] {
        &self.elements
    }

    pub fn index_of(&self, x: &[u8]) -> Result<usize> {
        self.index.get(x).copied().ok_or(Error::NotAUnit)
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariant_factors
    }

    pub fn generators(&self) -> &[TruncElem] {
        &self.generators
    }

    pub fn is_cyclic(&self) -> bool {
        self.invariant_factors.len() <= 1
    }

    /// Least common multiple of element orders.
    pub fn exponent(&self) -> u64 {
        self.invariant_factors.iter().fold(1, |a, &d| a.lcm(&d))
    }

    pub fn element_order(&self, x: &[u8]) -> Result<u64> {
        let log = &self.logs[self.index_of(x)?];
        Ok(log.iter().zip(&self.invariant_factors).fold(1, |a, (&e, &d)| a.lcm(&(d / e.gcd(&d)))))
    }

    /// Exponents of `x` on the invariant-factor generators.
    pub fn log(&self, x: &[u8]) -> Result<&[u64]> {
        Ok(&self.logs[self.index_of(x)?])
    }

    pub fn mul(&self, a: &[u8], b: &[u8]) -> TruncElem {
        self.ring.mul(a, b)
    }

    pub fn inv(&self, a: &[u8]) -> Result<TruncElem> {
        self.ring.inv(a)
    }

    /// All characters, ordered lexicographically by their values on the
    /// generators.
    pub fn characters(self: &Arc<Self>) -> Vec<Character> {
        let e = self.exponent();
        let mut out = Vec::with_capacity(self.elements.len());
        let mut c = vec![0u64; self.invariant_factors.len()];
        loop {
            let on_generators: Vec<u64> = c.iter().zip(&self.invariant_factors).map(|(&ci, &d)| ci * (e / d)).collect();
            out.push(Character { group: self.clone(), exponent: e, on_generators });
            let mut j = c.len();
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                c[j] += 1;
                if c[j] < self.invariant_factors[j] {
                    break;
                }
                c[j] = 0;
            }
        }
    }
}

/// `ω : G -> Z/E`, `E` the exponent of `G`, written additively.
#[derive(Clone, Debug, Serialize)]
pub struct Character {
    #[serde(skip)]
    group: Arc<UnitGroup>,
    pub exponent: u64,
    /// `ω` on the invariant-factor generators.
    pub on_generators: Vec<u64>,
}

impl Character {
    pub fn group(&self) -> &Arc<UnitGroup> {
        &self.group
    }

    pub fn eval(&self, x: &[u8]) -> Result<u64> {
        let log = self.group.log(x)?;
        Ok(log.iter().zip(&self.on_generators).fold(0, |acc, (&l, &w)| (acc + l * w) % self.exponent))
    }

    /// Values on all group elements in enumeration order.
    pub fn values(&self) -> Vec<u64> {
        self.group.elements().iter().map(|x| self.eval(x).expect("group element")).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.on_generators.iter().all(|&v| v == 0)
    }
}
