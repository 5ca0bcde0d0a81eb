use std::collections::HashSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::TruncElem;
use crate::error::{Error, Result};
use crate::lubintate::{build_tower, laurent_field, verify_character, CharacterTable, LubinTateTower};
use crate::tower::apply_automorphism;

use super::division::{DivisionAlgebraOrder, OrderElem};
use super::group::{Character, UnitGroup};
use super::matrix::{determinant, gl_generators, mat_mul, random_gl, random_sl, Matrix};

/// Which factor of `GL_n(o) × o_B^× × Gal` a generator comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factor {
    Gl,
    Division,
    Galois,
}

/// One generator with the unit by which it multiplies components.
#[derive(Clone, Debug, Serialize)]
pub struct ActionRow {
    pub factor: Factor,
    pub label: String,
    pub multiplier: TruncElem,
    /// `c -> multiplier · c` on component indices.
    pub permutation: Vec<usize>,
}

/// Counts from the verification of the action.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ActionChecks {
    pub det_generator_pairs: usize,
    pub det_random_pairs: usize,
    pub nrd_generator_pairs: usize,
    pub nrd_random_pairs: usize,
    pub galois_pairs: usize,
    pub action_triples: usize,
    pub sl_trivial: usize,
    pub norm_one_trivial: usize,
    pub deep_galois_trivial: usize,
    pub nrd_equals_norm: usize,
    pub nrd_image_size: usize,
}

/// `(g, b, τ) · c = det(g) Nrd(b)^{-1} χ(τ)^{-1} c` on `π_0 = (o/t^m)^×`.
#[derive(Clone, Debug)]
pub struct Pi0Action {
    pub q: u32,
    pub n: usize,
    pub m: usize,
    pub group: Arc<UnitGroup>,
    pub order: DivisionAlgebraOrder,
    pub gl_generators: Vec<(String, Matrix)>,
    pub division_generators: Vec<(String, OrderElem)>,
    /// `χ_m` on `Gal(F_m/F)`; a Galois element is named by its character value.
    pub galois: CharacterTable,
    pub tower: LubinTateTower,
    pub table: Vec<ActionRow>,
    pub checks: ActionChecks,
}

impl Pi0Action {
    pub fn det(&self, g: &Matrix) -> Result<TruncElem> {
        determinant(self.group.ring(), g)
    }

    /// `Nrd(b)^{-1}`.
    pub fn nrd_inv(&self, b: &OrderElem) -> Result<TruncElem> {
        self.group.inv(&self.order.reduced_norm(b)?)
    }

    /// `χ(τ)^{-1}` for `τ = σ_a`.
    pub fn galois_inv(&self, a: &[u8]) -> Result<TruncElem> {
        self.group.inv(a)
    }

    /// Image of `(g, b, σ_a)` in the unit group.
    pub fn multiplier(&self, g: &Matrix, b: &OrderElem, a: &[u8]) -> Result<TruncElem> {
        let r = self.group.ring();
        Ok(r.mul(&r.mul(&self.det(g)?, &self.nrd_inv(b)?), &self.galois_inv(a)?))
    }

    pub fn act(&self, g: &Matrix, b: &OrderElem, a: &[u8], c: &[u8]) -> Result<TruncElem> {
        Ok(self.group.mul(&self.multiplier(g, b, a)?, c))
    }
}

/// Random samples drawn for each homomorphism check.
pub const RANDOM_PAIRS: usize = 200;

fn check_eq(what: &str, lhs: &[u8], rhs: &[u8]) -> Result<()> {
    if lhs == rhs {
        Ok(())
    } else {
        Err(Error::CharacterViolation(format!("{what}: {lhs:?} != {rhs:?}")))
    }
}

/// Builds and verifies the action of `GL_n(o/t^m) × (o_B/t^m)^× × Gal(F_m/F)`
/// on the components, and tabulates the generators.
pub fn pi0_action_table(q: u32, n: usize, m: usize, seed: u64, precision: i64) -> Result<Pi0Action> {
    pi0_action_table_on(build_tower(&laurent_field(q)?, m + 1, precision)?, n, m, seed)
}

/// As [`pi0_action_table`], with the Galois side read off a Lubin–Tate
/// tower of `F_q((t))` having at least `m + 1` levels.
pub fn pi0_action_table_on(tower: LubinTateTower, n: usize, m: usize, seed: u64) -> Result<Pi0Action> {
    if m == 0 {
        return Err(Error::Invalid("level must be positive".into()));
    }
    if tower.m() < m + 1 || tower.base().base().is_some() {
        return Err(Error::Invalid(format!("need a tower of F_q((t)) with {} levels", m + 1)));
    }
    let q = tower.q();
    let group = Arc::new(UnitGroup::new(q, m)?);
    let ring = group.ring().clone();
    let order = DivisionAlgebraOrder::new(q, n, m)?;
    let galois = verify_character(&tower, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = ActionChecks::default();

    let gl_gens = gl_generators(&ring, n, group.generators());
    let cr = order.coefficient_ring().clone();
    let mut division_gens: Vec<(String, OrderElem)> = cr
        .units()
        .into_iter()
        .filter(|a| a.iter().skip(1).all(|&c| c == 0) || a[0] == 1)
        .map(|a| (format!("{a:?}"), order.from_unramified(&a)))
        .collect();
    division_gens.push(("1+Π".into(), order.add(&order.one(), &order.pi())));

    let det = |g: &Matrix| determinant(&ring, g);
    let nrd = {
        let order = order.clone();
        move |b: &OrderElem| order.reduced_norm(b)
    };

    // determinant
    let mut gl_pairs: Vec<(Matrix, Matrix)> = Vec::new();
    for (_, g) in &gl_gens {
        for (_, h) in &gl_gens {
            gl_pairs.push((g.clone(), h.clone()));
        }
    }
    checks.det_generator_pairs = gl_pairs.len();
    for _ in 0..RANDOM_PAIRS {
        gl_pairs.push((random_gl(&ring, n, &mut rng), random_gl(&ring, n, &mut rng)));
    }
    checks.det_random_pairs = RANDOM_PAIRS;
    for (g, h) in &gl_pairs {
        check_eq("det(gh) = det(g) det(h)", &det(&mat_mul(&ring, g, h))?, &ring.mul(&det(g)?, &det(h)?))?;
    }

    // reduced norm
    let mut b_pairs: Vec<(OrderElem, OrderElem)> = Vec::new();
    for (_, a) in &division_gens {
        for (_, b) in &division_gens {
            b_pairs.push((a.clone(), b.clone()));
        }
    }
    checks.nrd_generator_pairs = b_pairs.len();
    for _ in 0..RANDOM_PAIRS {
        b_pairs.push((order.random_unit(&mut rng), order.random_unit(&mut rng)));
    }
    checks.nrd_random_pairs = RANDOM_PAIRS;
    for (a, b) in &b_pairs {
        check_eq("Nrd(ab) = Nrd(a) Nrd(b)", &nrd(&order.mul(a, b))?, &ring.mul(&nrd(a)?, &nrd(b)?))?;
    }
    let mut image = HashSet::new();
    for a in cr.units() {
        let na = order.norm(&a)?;
        check_eq("Nrd(a) = N(a) on o'", &nrd(&order.from_unramified(&a))?, &na)?;
        image.insert(na);
        checks.nrd_equals_norm += 1;
    }
    checks.nrd_image_size = image.len();
    if image.len() as u64 != group.order() {
        return Err(Error::CharacterViolation(format!("Nrd(o'^×) has {} elements, expected {}", image.len(), group.order())));
    }

    // Galois: compose automorphisms and read the product back off the table
    let index = |img: &crate::algebra::LocalFieldElement| -> Result<usize> {
        for (i, e) in galois.entries.iter().enumerate() {
            if e.image.agrees_with(img)? {
                return Ok(i);
            }
        }
        Err(Error::CharacterViolation("composite is not in the character table".into()))
    };
    let units = group.elements();
    let mut galois_pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..units.len() {
        for j in 0..units.len() {
            galois_pairs.push((i, j));
        }
    }
    if galois_pairs.len() < RANDOM_PAIRS {
        use rand::Rng;
        for _ in 0..RANDOM_PAIRS {
            galois_pairs.push((rng.gen_range(0..units.len()), rng.gen_range(0..units.len())));
        }
    }
    for &(i, j) in &galois_pairs {
        let (ea, eb) = (&galois.entries[i], &galois.entries[j]);
        let sigma = tower.automorphism(&ea.a, m)?;
        let composite = apply_automorphism(&sigma, &eb.image)?;
        let ab = &galois.entries[index(&composite)?].a;
        check_eq("χ(στ) = χ(σ)χ(τ)", ab, &ring.mul(&ea.a, &eb.a))?;
        check_eq(
            "(χ(σ)χ(τ))^{-1} = χ(σ)^{-1}χ(τ)^{-1}",
            &group.inv(ab)?,
            &ring.mul(&group.inv(&ea.a)?, &group.inv(&eb.a)?),
        )?;
    }
    checks.galois_pairs = galois_pairs.len();

    // Gal(F_{m+1}/F_m) acts trivially: σ_a with a = 1 mod t^m fixes λ_m
    let lam_m = tower.lambda_in(m, tower.field(m + 1))?;
    for a in tower.ring(m + 1).units() {
        if a[..m] != ring.one()[..] {
            continue;
        }
        let sigma = tower.automorphism(&a, m + 1)?;
        if !apply_automorphism(&sigma, &lam_m)?.agrees_with(&lam_m)? {
            return Err(Error::CharacterViolation(format!("σ_{a:?} moves λ_m")));
        }
        checks.deep_galois_trivial += 1;
    }

    let mut action = Pi0Action {
        q,
        n,
        m,
        group: group.clone(),
        order,
        gl_generators: gl_gens,
        division_generators: division_gens,
        galois,
        tower,
        table: Vec::new(),
        checks,
    };
    let one_g = super::matrix::identity(&ring, n);
    let one_b = action.order.one();
    let one_a = ring.one();

    // action axioms on sampled triples
    for _ in 0..RANDOM_PAIRS {
        let (g1, g2) = (random_gl(&ring, n, &mut rng), random_gl(&ring, n, &mut rng));
        let (b1, b2) = (action.order.random_unit(&mut rng), action.order.random_unit(&mut rng));
        use rand::Rng;
        let a1 = units[rng.gen_range(0..units.len())].clone();
        let a2 = units[rng.gen_range(0..units.len())].clone();
        let c = units[rng.gen_range(0..units.len())].clone();
        let inner = action.act(&g2, &b2, &a2, &c)?;
        let lhs = action.act(&g1, &b1, &a1, &inner)?;
        let g = mat_mul(&ring, &g1, &g2);
        let b = action.order.mul(&b1, &b2);
        let a = ring.mul(&a1, &a2);
        check_eq("action composes", &lhs, &action.act(&g, &b, &a, &c)?)?;
        check_eq("identity acts trivially", &action.act(&one_g, &one_b, &one_a, &c)?, &c)?;
        action.checks.action_triples += 1;
    }

    // SL_n and reduced-norm-one units act trivially
    let mut sl: Vec<Matrix> = action.gl_generators.iter().filter(|(_, g)| det(g).ok() == Some(ring.one())).map(|(_, g)| g.clone()).collect();
    for _ in 0..RANDOM_PAIRS {
        sl.push(random_sl(&ring, n, &mut rng)?);
    }
    for g in &sl {
        for c in units {
            check_eq("SL_n acts trivially", &action.act(g, &one_b, &one_a, c)?, c)?;
        }
        action.checks.sl_trivial += 1;
    }
    let mut norm_one: Vec<OrderElem> =
        cr.units().into_iter().map(|a| action.order.from_unramified(&a)).filter(|b| nrd(b).ok() == Some(ring.one())).collect();
    for _ in 0..RANDOM_PAIRS * 4 {
        let b = action.order.random_unit(&mut rng);
        if nrd(&b)? == ring.one() {
            norm_one.push(b);
        }
    }
    for b in &norm_one {
        for c in units {
            check_eq("Nrd = 1 acts trivially", &action.act(&one_g, b, &one_a, c)?, c)?;
        }
        action.checks.norm_one_trivial += 1;
    }

    // generator table
    let mut table = Vec::new();
    let perm = |u: &TruncElem| -> Result<Vec<usize>> { units.iter().map(|c| group.index_of(&ring.mul(u, c))).collect() };
    for (label, g) in &action.gl_generators {
        let u = det(g)?;
        table.push(ActionRow { factor: Factor::Gl, label: label.clone(), permutation: perm(&u)?, multiplier: u });
    }
    for (label, b) in &action.division_generators {
        let u = action.nrd_inv(b)?;
        table.push(ActionRow { factor: Factor::Division, label: label.clone(), permutation: perm(&u)?, multiplier: u });
    }
    for g in group.generators() {
        let u = action.galois_inv(g)?;
        table.push(ActionRow { factor: Factor::Galois, label: format!("σ_{g:?}"), permutation: perm(&u)?, multiplier: u });
    }
    action.table = table;
    Ok(action)
}

/// One summand `ω∘det ⊗ ω∘Nrd^{-1} ⊗ ω∘rec` of `H^0`, evaluated on the
/// generators of each factor.
#[derive(Clone, Debug, Serialize)]
pub struct H0Summand {
    pub character: Character,
    pub on_gl: Vec<u64>,
    pub on_division: Vec<u64>,
    /// `ω(rec(τ)) = ω(χ(τ)^{-1})` on Galois generators `σ_g`.
    pub on_galois: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct H0Decomposition {
    pub q: u32,
    pub n: usize,
    pub m: usize,
    pub group_order: u64,
    pub invariant_factors: Vec<u64>,
    pub summands: Vec<H0Summand>,
}

/// Enumerates all characters of the component group and their pullbacks,
/// checking that distinct characters stay distinct on the generators.
pub fn h0_decomposition(action: &Pi0Action) -> Result<H0Decomposition> {
    let g = &action.group;
    let mut summands = Vec::new();
    for w in g.characters() {
        let on_gl = action.gl_generators.iter().map(|(_, x)| w.eval(&action.det(x)?)).collect::<Result<Vec<_>>>()?;
        let on_division =
            action.division_generators.iter().map(|(_, b)| w.eval(&action.nrd_inv(b)?)).collect::<Result<Vec<_>>>()?;
        let on_galois = g.generators().iter().map(|a| w.eval(&action.galois_inv(a)?)).collect::<Result<Vec<_>>>()?;
        summands.push(H0Summand { character: w, on_gl, on_division, on_galois });
    }
    if summands.len() as u64 != g.order() {
        return Err(Error::CharacterViolation(format!("{} characters for a group of order {}", summands.len(), g.order())));
    }
    let separated: HashSet<(&[u64], &[u64], &[u64])> =
        summands.iter().map(|s| (&s.on_gl[..], &s.on_division[..], &s.on_galois[..])).collect();
    if separated.len() != summands.len() {
        return Err(Error::CharacterViolation("two characters agree on every generator".into()));
    }
    Ok(H0Decomposition {
        q: action.q,
        n: action.n,
        m: action.m,
        group_order: g.order(),
        invariant_factors: g.invariant_factors().to_vec(),
        summands,
    })
}
