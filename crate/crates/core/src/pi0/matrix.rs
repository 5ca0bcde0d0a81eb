use rand::Rng;

use crate::algebra::{TruncElem, TruncRing};
use crate::error::{Error, Result};

/// Square matrix over a truncated ring, row-major.
pub type Matrix = Vec<Vec<TruncElem>>;

pub fn identity(ring: &TruncRing, n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect()).collect()
}

pub fn mat_mul(ring: &TruncRing, a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(ring.zero(), |acc, k| ring.add(&acc, &ring.mul(&a[i][k], &b[k][j]))))
                .collect()
        })
        .collect()
}

/// Laplace expansion along the first row.
pub fn det(ring: &TruncRing, g: &Matrix) -> TruncElem {
    let n = g.len();
    match n {
        0 => ring.one(),
        1 => g[0][0].clone(),
        _ => {
            let mut acc = ring.zero();
            for j in 0..n {
                if ring.is_zero(&g[0][j]) {
                    continue;
                }
                let minor: Matrix =
                    g[1..].iter().map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, x)| x.clone()).collect()).collect();
                let term = ring.mul(&g[0][j], &det(ring, &minor));
                acc = if j % 2 == 0 { ring.add(&acc, &term) } else { ring.sub(&acc, &term) };
            }
            acc
        }
    }
}

/// `det(g)` as a unit of `o/t^m`.
pub fn determinant(ring: &TruncRing, g: &Matrix) -> Result<TruncElem> {
    if g.iter().any(|row| row.len() != g.len()) {
        return Err(Error::Invalid("matrix is not square".into()));
    }
    let d = det(ring, g);
    if ring.is_unit(&d) {
        Ok(d)
    } else {
        Err(Error::NotInvertible)
    }
}

/// `1 + c E_{ij}`.
pub fn elementary(ring: &TruncRing, n: usize, i: usize, j: usize, c: &[u8]) -> Matrix {
    let mut g = identity(ring, n);
    g[i][j] = c.to_vec();
    g
}

/// `diag(u, 1, ..., 1)`.
pub fn diagonal(ring: &TruncRing, n: usize, u: &[u8]) -> Matrix {
    let mut g = identity(ring, n);
    g[0][0] = u.to_vec();
    g
}

/// Elementary matrices `1 + c E_{ij}` for `c` running over `F_p`-basis
/// multiples `x^k t^l`, and `diag(u, 1, ..., 1)` for the given units.
/// Together they generate `GL_n(o/t^m)` when `units` generates `(o/t^m)^×`.
pub fn gl_generators(ring: &TruncRing, n: usize, units: &[TruncElem]) -> Vec<(String, Matrix)> {
    let k = ring.field();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for l in 0..ring.m() {
                for b in 0..k.f() {
                    let mut c = ring.zero();
                    c[l] = k.pow(k.generator(), b as u64);
                    out.push((format!("E{}{}(x^{b} t^{l})", i + 1, j + 1), elementary(ring, n, i, j, &c)));
                }
            }
        }
    }
    for u in units {
        out.push((format!("diag({u:?})"), diagonal(ring, n, u)));
    }
    out
}

pub fn random_matrix(ring: &TruncRing, n: usize, rng: &mut impl Rng) -> Matrix {
    let q = ring.field().q();
    (0..n).map(|_| (0..n).map(|_| (0..ring.m()).map(|_| rng.gen_range(0..q) as u8).collect()).collect()).collect()
}

pub fn random_gl(ring: &TruncRing, n: usize, rng: &mut impl Rng) -> Matrix {
    loop {
        let g = random_matrix(ring, n, rng);
        if ring.is_unit(&det(ring, &g)) {
            return g;
        }
    }
}

/// Random element of `SL_n`: a random invertible matrix with its first
/// row scaled by the inverse determinant.
pub fn random_sl(ring: &TruncRing, n: usize, rng: &mut impl Rng) -> Result<Matrix> {
    let mut g = random_gl(ring, n, rng);
    let d = ring.inv(&det(ring, &g))?;
    for x in g[0].iter_mut() {
        *x = ring.mul(x, &d);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FieldSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples() {
        let r = TruncRing::new(&FieldSpec::of_size(2).unwrap(), 2);
        assert_eq!(determinant(&r, &identity(&r, 3)).unwrap(), r.one());
        let u = r.from_coeffs(&[1, 1]);
        assert_eq!(determinant(&r, &diagonal(&r, 2, &u)).unwrap(), u);
        let g = vec![vec![r.one(), r.uniformizer()], vec![r.one(), r.one()]];
        assert_eq!(determinant(&r, &g).unwrap(), r.from_coeffs(&[1, 1]));
        let singular = vec![vec![r.one(), r.one()], vec![r.one(), r.one()]];
        assert!(matches!(determinant(&r, &singular), Err(Error::NotInvertible)));
    }

    #[test]
    fn det_matches_permutation_sum() {
        // independent Leibniz sum over all permutations of three indices
        let r = TruncRing::new(&FieldSpec::of_size(3).unwrap(), 2);
        let perms: [([usize; 3], bool); 6] =
            [([0, 1, 2], true), ([0, 2, 1], false), ([1, 0, 2], false), ([1, 2, 0], true), ([2, 0, 1], true), ([2, 1, 0], false)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = random_matrix(&r, 3, &mut rng);
            let mut sum = r.zero();
            for (p, even) in perms {
                let t = (0..3).fold(r.one(), |acc, i| r.mul(&acc, &g[i][p[i]]));
                sum = if even { r.add(&sum, &t) } else { r.sub(&sum, &t) };
            }
            assert_eq!(det(&r, &g), sum);
        }
    }

    #[test]
    fn sl_has_unit_determinant() {
        let r = TruncRing::new(&FieldSpec::of_size(4).unwrap(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            assert_eq!(det(&r, &random_sl(&r, 2, &mut rng).unwrap()), r.one());
        }
    }
}
