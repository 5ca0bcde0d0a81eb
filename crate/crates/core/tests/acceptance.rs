use std::collections::BTreeSet;
use std::time::Instant;

use omodule::algebra::{LocalFieldElement, NewtonPolygon, Rational, DEFAULT_PRECISION};
use omodule::formalmod::DEGREE_CAP;
use omodule::lubintate::{
    build_tower, laurent_field, verify_character, verify_determinant_character, verify_product_formula,
    verify_torsion_valuations, CmSetting,
};
use omodule::pi0::{h0_decomposition, pi0_action_table, unit_group};
use omodule::report::{run_suites, RunConfig, Status, Suite, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn pow(q: u64, e: usize) -> u64 {
    q.pow(e as u32)
}

/// Units of F_q[t]/t^m counted from the constant term.
fn unit_count_by_enumeration(q: u64, m: usize) -> u64 {
    (0..pow(q, m)).filter(|x| x % q != 0).count() as u64
}

fn config(q: u32, n: u32, m: u32, precision: i64) -> RunConfig {
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
    let f = (q as f64).log(p as f64).round() as u32;
    RunConfig { p, f, n, m, precision, degree_cap: DEGREE_CAP, cache_dir: None, seed: 0 }
}

fn criterion_1() -> Outcome {
    let mut seen = Vec::new();
    for (q, m) in [(2u32, 1usize), (2, 2), (2, 3), (3, 1), (3, 2), (4, 2)] {
        let expected = (q as u64 - 1) * pow(q as u64, m - 1);
        let group = unit_group(q, m).map_err(|e| e.to_string())?;
        let tower = build_tower(&laurent_field(q).map_err(|e| e.to_string())?, m, DEFAULT_PRECISION)
            .map_err(|e| e.to_string())?;
        ensure(group.order() == expected, format!("(q,m)=({q},{m}): |units| {} != {expected}", group.order()))?;
        ensure(unit_count_by_enumeration(q as u64, m) == expected, format!("({q},{m}): enumeration"))?;
        ensure(tower.degree(m) as u64 == expected, format!("({q},{m}): [F_m:F] = {}", tower.degree(m)))?;
        seen.push(format!("({q},{m})={expected}"));
    }
    Ok(seen.join(" "))
}

const CM_SETS: [(u32, usize, usize); 4] = [(2, 2, 1), (2, 2, 2), (3, 2, 1), (2, 3, 1)];

fn criterion_2() -> Outcome {
    let mut seen = Vec::new();
    for (q, n, m) in CM_SETS {
        let big_q = pow(q as u64, n) as i64;
        let expected = Rational::new(1, (big_q - 1) * big_q.pow(m as u32 - 1));
        let setting = CmSetting::new(q, n, m, DEFAULT_PRECISION).map_err(|e| e.to_string())?;
        let r = verify_torsion_valuations(&setting).map_err(|e| format!("({q},{n},{m}): {e}"))?;
        ensure(r.expected == expected, format!("({q},{n},{m}): {} != {expected}", r.expected))?;
        let primitive = (big_q.pow(m as u32) - big_q.pow(m as u32 - 1)) as usize;
        ensure(r.primitive == primitive, format!("({q},{n},{m}): {} primitive points", r.primitive))?;
        seen.push(format!("({q},{n},{m})={expected}x{primitive}"));
    }
    Ok(seen.join(" "))
}

fn criterion_3() -> Outcome {
    let mut seen = Vec::new();
    for (q, n, m) in CM_SETS {
        let (q64, big_q) = (q as u64, pow(q as u64, n));
        let reps = (big_q - 1) * pow(big_q, m - 1) / ((q64 - 1) * pow(q64, m - 1));
        let sum = Rational::new(1, ((q64 - 1) * pow(q64, m - 1)) as i64);
        let setting = CmSetting::new(q, n, m, DEFAULT_PRECISION).map_err(|e| e.to_string())?;
        let r = verify_product_formula(&setting).map_err(|e| format!("({q},{n},{m}): {e}"))?;
        ensure(r.representatives as u64 == reps, format!("({q},{n},{m}): |R| = {}", r.representatives))?;
        ensure(r.valuation_sum == sum, format!("({q},{n},{m}): sum {}", r.valuation_sum))?;
        ensure(r.quotient_valuation == 0, format!("({q},{n},{m}): quotient {}", r.quotient_valuation))?;
        seen.push(format!("({q},{n},{m}):|R|={reps},sum={sum}"));
    }
    Ok(seen.join(" "))
}

fn criterion_4() -> Outcome {
    let mut seen = Vec::new();
    for (q, m) in [(3u32, 1usize), (3, 2), (2, 2), (2, 3)] {
        let tower = build_tower(&laurent_field(q).map_err(|e| e.to_string())?, m, DEFAULT_PRECISION)
            .map_err(|e| e.to_string())?;
        let table = verify_character(&tower, m).map_err(|e| format!("({q},{m}): {e}"))?;
        let order = ((q as u64 - 1) * pow(q as u64, m - 1)) as usize;
        ensure(table.order() == order, format!("({q},{m}): order {}", table.order()))?;
        ensure(table.products_checked == order * order, format!("({q},{m}): products {}", table.products_checked))?;
        if m > 1 {
            ensure(table.restrictions_checked == order, format!("({q},{m}): restrictions"))?;
        }
        ensure(table.min_base_agreement >= 40, format!("({q},{m}): agreement {}", table.min_base_agreement))?;
        let images: BTreeSet<String> = table.entries.iter().map(|e| format!("{:?}", e.image.series())).collect();
        ensure(images.len() == order, format!("({q},{m}): images not distinct"))?;
        seen.push(format!("({q},{m}):{order}"));
    }
    Ok(seen.join(" "))
}

fn criterion_5() -> Outcome {
    let mut seen = Vec::new();
    for (q, n, m, cases) in [(2u32, 2usize, 2usize, 12usize), (3, 2, 1, 8)] {
        let setting = CmSetting::new(q, n, m, DEFAULT_PRECISION).map_err(|e| e.to_string())?;
        let w = verify_determinant_character(&setting).map_err(|e| format!("({q},{n},{m}): {e}"))?;
        ensure(w.cases.len() == cases, format!("({q},{n},{m}): {} cases", w.cases.len()))?;
        ensure(w.min_agreement >= 40, format!("({q},{n},{m}): agreement {}", w.min_agreement))?;
        // N is onto the base units with equal fibres
        let base = (q as usize - 1) * pow(q as u64, m - 1) as usize;
        let norms: BTreeSet<_> = w.cases.iter().map(|c| c.norm.clone()).collect();
        ensure(norms.len() == base, format!("({q},{n},{m}): norm image {}", norms.len()))?;
        for v in &norms {
            let fibre = w.cases.iter().filter(|c| &c.norm == v).count();
            ensure(fibre * base == cases, format!("({q},{n},{m}): fibre {fibre}"))?;
        }
        seen.push(format!("({q},{n},{m}):{cases}@{}", w.min_agreement));
    }
    Ok(seen.join(" "))
}

/// |GL_n(F_p[t]/t^m)| for n <= 2 by enumerating matrices.
fn gl_order_by_enumeration(p: u64, n: usize, m: usize) -> u64 {
    let size = pow(p, m);
    let digits = |x: u64| (0..m).map(|i| (x / pow(p, i)) % p).collect::<Vec<_>>();
    let mul = |a: &[u64], b: &[u64]| {
        let mut c = vec![0; m];
        for i in 0..m {
            for j in 0..m - i {
                c[i + j] = (c[i + j] + a[i] * b[j]) % p;
            }
        }
        c
    };
    match n {
        1 => (0..size).filter(|&x| digits(x)[0] != 0).count() as u64,
        2 => {
            let mut count = 0;
            for a in 0..size {
                for b in 0..size {
                    for c in 0..size {
                        for d in 0..size {
                            let ad = mul(&digits(a), &digits(d))[0];
                            let bc = mul(&digits(b), &digits(c))[0];
                            count += u64::from(!(ad + p - bc).is_multiple_of(p));
                        }
                    }
                }
            }
            count
        }
        _ => unreachable!(),
    }
}

fn suite_reports(suite: Suite, q: u32, n: u32, m: u32) -> Result<Vec<VerificationReport>, String> {
    run_suites(&[suite], &config(q, n, m, DEFAULT_PRECISION)).map_err(|e| e.to_string())
}

fn all_pass(reports: &[VerificationReport]) -> Result<(), String> {
    match reports.iter().find(|r| r.status != Status::Pass) {
        Some(r) => Err(format!("{} at {}: {:?}", r.check, r.parameters.label(), r.status)),
        None => Ok(()),
    }
}

fn criterion_6() -> Outcome {
    let mut seen = Vec::new();
    for (n, q, m, expected) in [(2u32, 2u32, 1u32, 6u64), (1, 3, 2, 6), (2, 2, 2, 96)] {
        let oracle = gl_order_by_enumeration(q as u64, n as usize, m as usize);
        ensure(oracle == expected, format!("oracle |GL_{n}| = {oracle}"))?;
        let reports = suite_reports(Suite::LevelCount, q, n, m)?;
        all_pass(&reports)?;
        let computed = reports[0].computed.as_u64();
        ensure(computed == Some(expected), format!("(n,q,m)=({n},{q},{m}): {computed:?}"))?;
        seen.push(format!("({n},{q},{m})={expected}"));
    }
    Ok(seen.join(" "))
}

fn criterion_7() -> Outcome {
    let reports = suite_reports(Suite::KernelHeight, 2, 2, 1)?;
    all_pass(&reports)?;
    let mut heights = Vec::new();
    for r in &reports {
        let (rank, height) = (r.computed["rank"].as_u64(), r.computed["height"].as_u64());
        ensure(rank.is_some() && rank == height, format!("{}: rank {rank:?} height {height:?}", r.check))?;
        heights.push(height.unwrap());
    }
    heights.sort();
    ensure(heights == [0, 1, 2], format!("heights {heights:?}"))?;
    Ok(reports.iter().map(|r| format!("{}={}", r.check, r.computed["rank"])).collect::<Vec<_>>().join(" "))
}

fn criterion_8() -> Outcome {
    let mut seen = Vec::new();
    for (q, n, m) in [(2u32, 2usize, 2usize), (3, 2, 1)] {
        let action = pi0_action_table(q, n, m, 0, DEFAULT_PRECISION).map_err(|e| e.to_string())?;
        let c = &action.checks;
        let order = (q as u64 - 1) * pow(q as u64, m - 1);
        let big_order = (pow(q as u64, n) - 1) * pow(pow(q as u64, n), m - 1);
        ensure(c.det_random_pairs >= 200 && c.nrd_random_pairs >= 200, "fewer than 200 random pairs")?;
        ensure(c.det_generator_pairs > 0 && c.nrd_generator_pairs > 0 && c.galois_pairs > 0, "no generator pairs")?;
        ensure(c.sl_trivial > 0 && c.norm_one_trivial > 0, "kernels not exercised")?;
        ensure(c.nrd_equals_norm as u64 == big_order, format!("Nrd = N on {} units", c.nrd_equals_norm))?;
        ensure(c.nrd_image_size as u64 == order, format!("Nrd image {}", c.nrd_image_size))?;
        let h0 = h0_decomposition(&action).map_err(|e| e.to_string())?;
        ensure(h0.summands.len() as u64 == order, format!("{} summands", h0.summands.len()))?;
        let tables: BTreeSet<Vec<u64>> = h0.summands.iter().map(|s| s.character.values()).collect();
        ensure(tables.len() == h0.summands.len(), "characters not distinct")?;
        for s in &h0.summands {
            ensure(s.on_gl.iter().chain(&s.on_division).chain(&s.on_galois).all(|&v| v < s.character.exponent), "value out of range")?;
        }
        seen.push(format!("({q},{n},{m}):{}chars", h0.summands.len()));
    }
    Ok(seen.join(" "))
}

/// Roots are a random F_q-subspace of a ramified field; the polynomial is their product.
fn newton_oracle(rng: &mut ChaCha8Rng, trials: usize) -> Result<usize, String> {
    let fields = [(2u32, 3usize, 3usize), (3, 2, 2), (4, 1, 2)];
    let towers = fields
        .iter()
        .map(|&(q, m, _)| build_tower(&laurent_field(q).unwrap(), m, DEFAULT_PRECISION).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut done = 0;
    while done < trials {
        let k = done % fields.len();
        let (q, _, max_rank) = fields[k];
        let field = towers[k].top();
        let e = field.absolute_ramification();
        let rank = rng.gen_range(1..=max_rank);
        let basis: Vec<LocalFieldElement> = (0..rank)
            .map(|_| {
                let v = rng.gen_range(1..3 * e);
                let mut x = LocalFieldElement::monomial(field, rng.gen_range(1..q) as u8, v);
                for j in 1..6 {
                    let c = rng.gen_range(0..q) as u8;
                    x = x.add(&LocalFieldElement::monomial(field, c, v + j)).unwrap();
                }
                x
            })
            .collect();
        let mut span = vec![LocalFieldElement::zero(field)];
        for b in &basis {
            let mut next = Vec::new();
            for c in 0..q as u8 {
                for s in &span {
                    next.push(s.add(&b.scale(c)).unwrap());
                }
            }
            span = next;
        }
        let distinct = span.iter().enumerate().all(|(i, a)| span[..i].iter().all(|b| !a.sub(b).unwrap().is_zero()));
        if !distinct {
            continue;
        }
        let mut poly = vec![LocalFieldElement::one(field)];
        for r in &span {
            let mut next = vec![LocalFieldElement::zero(field); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i + 1] = next[i + 1].add(c).unwrap();
                next[i] = next[i].sub(&c.mul(r).unwrap()).unwrap();
            }
            poly = next;
        }
        let powers: Vec<usize> = (0..=rank).map(|i| pow(q as u64, i) as usize).collect();
        for (d, c) in poly.iter().enumerate() {
            if !powers.contains(&d) && !c.is_zero() {
                return Err(format!("q={q}: coefficient of T^{d} is nonzero"));
            }
        }
        let points: Vec<(i64, Option<Rational>)> =
            powers.iter().map(|&d| (d as i64, poly[d].normalized_valuation())).collect();
        let predicted = NewtonPolygon::new(&points).map_err(|e| e.to_string())?.root_valuation_multiset();
        let mut actual: Vec<Rational> = span.iter().filter_map(|r| r.normalized_valuation()).collect();
        actual.sort();
        ensure(predicted == actual, format!("q={q}: polygon {predicted:?} != roots {actual:?}"))?;
        done += 1;
    }
    Ok(done)
}

/// Reports at two precisions agree on every check, ignoring agreement depths.
fn precision_soundness() -> Result<usize, String> {
    let mut compared = 0;
    for (q, n, m) in [(2u32, 2u32, 1u32), (2, 2, 2), (3, 2, 1), (3, 1, 2)] {
        let low = run_suites(&Suite::ALL, &config(q, n, m, 40)).map_err(|e| e.to_string())?;
        let high = run_suites(&Suite::ALL, &config(q, n, m, 80)).map_err(|e| e.to_string())?;
        ensure(low.len() == high.len(), "report counts differ")?;
        for (a, b) in low.iter().zip(&high) {
            let strip = |r: &VerificationReport| {
                let mut v = r.computed.clone();
                if let Some(o) = v.as_object_mut() {
                    o.remove("min_agreement");
                }
                v
            };
            ensure(a.check == b.check && a.status == b.status, format!("{} at ({q},{n},{m})", a.check))?;
            ensure(strip(a) == strip(b), format!("{} computed differs at ({q},{n},{m})", a.check))?;
            compared += 1;
        }
        let base = laurent_field(q).map_err(|e| e.to_string())?;
        let (t40, t80) = (build_tower(&base, m as usize, 40), build_tower(&base, m as usize, 80));
        let (t40, t80) = (t40.map_err(|e| e.to_string())?, t80.map_err(|e| e.to_string())?);
        let k = base.residue();
        for level in 1..=m as usize {
            ensure(t40.relation(level).agrees_with(t80.relation(level), k), format!("relation {level} at q={q}"))?;
            let (a, b) = (t40.lambda(level), t80.lambda(level));
            ensure(a.series().agrees_with(b.series(), k), format!("lambda {level} at q={q}"))?;
            ensure(a.precision() >= 40, format!("lambda {level} precision {}", a.precision()))?;
            compared += 1;
        }
    }
    Ok(compared)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let polys = newton_oracle(&mut rng, 120)?;
    let compared = precision_soundness()?;
    Ok(format!("{polys} polynomials, {compared} precision comparisons"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("component count", criterion_1),
        ("torsion valuations", criterion_2),
        ("product formula", criterion_3),
        ("character law", criterion_4),
        ("determinant at the CM point", criterion_5),
        ("level structure count", criterion_6),
        ("kernel rank and height", criterion_7),
        ("pi0 action and H0", criterion_8),
        ("oracle suites", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match &outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL {name} ({secs:.2}s) {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
