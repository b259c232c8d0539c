//! Factorization in F_q[t]: square-free decomposition, distinct-degree
//! splitting, then Cantor-Zassenhaus equal-degree splitting (q odd).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fq::FqElem;
use crate::poly::Poly;

/// `unit * prod(f_i^e_i)` with monic irreducible, pairwise distinct `f_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub unit: FqElem,
    pub factors: Vec<(Poly, u32)>,
}

impl Factorization {
    /// Multiply the factorization back out.
    pub fn expand(&self, like: &Poly) -> Poly {
        let f = like.field();
        self.factors
            .iter()
            .fold(Poly::constant(f, self.unit), |acc, (g, e)| {
                acc.mul_ref(&g.pow(*e as u64))
            })
    }

    pub fn multiplicity(&self, g: &Poly) -> u32 {
        self.factors
            .iter()
            .find(|(h, _)| h == g)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }
}

/// Factor a nonzero polynomial.
///
/// # Panics
/// On the zero polynomial.
pub fn factorize(f: &Poly) -> Factorization {
    assert!(!f.is_zero(), "cannot factor the zero polynomial");
    let unit = f.lead();
    let monic = f.monic();
    let mut out: Vec<(Poly, u32)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
    for (sqf, mult) in squarefree(&monic) {
        for (d, g) in distinct_degree(&sqf) {
            let mut pieces = Vec::new();
            equal_degree(&g, d, &mut rng, &mut pieces);
            for piece in pieces {
                match out.iter_mut().find(|(h, _)| *h == piece) {
                    Some(slot) => slot.1 += mult,
                    None => out.push((piece, mult)),
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.canonical_cmp(&b.0));
    Factorization { unit, factors: out }
}

/// Square-free decomposition of a monic polynomial into `(g_i, i)` pairs,
/// each `g_i` square-free and monic.
pub fn squarefree(f: &Poly) -> Vec<(Poly, u32)> {
    let field = f.field();
    let p = field.characteristic();
    let mut out = Vec::new();
    if f.degree().unwrap_or(0) == 0 {
        return out;
    }
    let df = f.derivative();
    if df.is_zero() {
        for (g, m) in squarefree(&f.pth_root()) {
            out.push((g, m * p));
        }
        return out;
    }
    let mut c = f.gcd(&df);
    let mut w = f.div_exact(&c);
    let mut i = 1u32;
    while !w.is_one() {
        let y = w.gcd(&c);
        let fac = w.div_exact(&y);
        if fac.degree().unwrap_or(0) > 0 {
            out.push((fac, i));
        }
        i += 1;
        w = y;
        c = c.div_exact(&w);
    }
    if c.degree().unwrap_or(0) > 0 {
        for (g, m) in squarefree(&c.pth_root()) {
            out.push((g, m * p));
        }
    }
    out
}

/// Distinct-degree factorization of a square-free monic polynomial.
pub fn distinct_degree(f: &Poly) -> Vec<(usize, Poly)> {
    let field = f.field();
    let q = field.order() as u64;
    let x = Poly::t(field);
    let mut out = Vec::new();
    let mut rest = f.clone();
    let mut h = x.rem(&rest);
    let mut d = 0;
    while rest.degree().unwrap_or(0) >= 2 * (d + 1) {
        d += 1;
        h = h.powmod(q, &rest);
        let g = h.sub_ref(&x).gcd(&rest);
        if !g.is_one() {
            rest = rest.div_exact(&g);
            h = h.rem(&rest);
            out.push((d, g));
        }
    }
    if rest.degree().unwrap_or(0) > 0 {
        let deg = rest.degree().unwrap();
        out.push((deg, rest));
    }
    out
}

/// Split a product of distinct monic irreducibles of degree `d`.
fn equal_degree(f: &Poly, d: usize, rng: &mut ChaCha8Rng, out: &mut Vec<Poly>) {
    let n = f.degree().unwrap_or(0);
    if n == 0 {
        return;
    }
    if n == d {
        out.push(f.monic());
        return;
    }
    let field = f.field();
    let q = field.order() as u64;
    loop {
        let a = Poly::random(field, n - 1, rng);
        if a.degree().unwrap_or(0) == 0 {
            continue;
        }
        // a^((q^d - 1)/2) = (a * a^q * ... * a^(q^(d-1)))^((q - 1)/2)
        let mut norm = a.rem(f);
        let mut cur = norm.clone();
        for _ in 1..d {
            cur = cur.powmod(q, f);
            norm = norm.mulmod(&cur, f);
        }
        let b = norm.powmod((q - 1) / 2, f);
        let g = b.sub_ref(&Poly::one(field)).gcd(f);
        let gd = g.degree().unwrap_or(0);
        if gd > 0 && gd < n {
            let h = f.div_exact(&g);
            equal_degree(&g, d, rng, out);
            equal_degree(&h, d, rng, out);
            return;
        }
    }
}

/// Roots in F_q of a nonzero polynomial, sorted by encoding.
pub fn roots(f: &Poly) -> Vec<FqElem> {
    let fac = factorize(f);
    let field = f.field();
    let mut r: Vec<FqElem> = fac
        .factors
        .iter()
        .filter(|(g, _)| g.degree() == Some(1))
        .map(|(g, _)| field.neg(g.coeff(0)))
        .collect();
    r.sort();
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::{FieldSpec, Fq};
    use rand::SeedableRng;

    #[test]
    fn difference_of_squares() {
        let f = Fq::prime(3).unwrap();
        let fac = factorize(&Poly::from_ints(&f, &[-1, 0, 1]));
        assert_eq!(
            fac.factors,
            vec![
                (Poly::from_ints(&f, &[1, 1]), 1),
                (Poly::from_ints(&f, &[-1, 1]), 1)
            ]
        );
    }

    #[test]
    fn irreducible_quadratic_has_no_roots() {
        let f = Fq::prime(3).unwrap();
        let g = Poly::from_ints(&f, &[-1, -1, 1]);
        // root-check oracle: no element of F_3 is a root
        assert!(f.elements().all(|x| !g.eval(x).is_zero()));
        let fac = factorize(&g);
        assert_eq!(fac.factors, vec![(g, 1)]);
    }

    #[test]
    fn inseparable_powers() {
        let f = Fq::prime(3).unwrap();
        let g = Poly::from_ints(&f, &[1, 1])
            .pow(9)
            .mul_ref(&Poly::from_ints(&f, &[0, 1]).pow(4));
        let fac = factorize(&g);
        assert_eq!(fac.factors.len(), 2);
        assert_eq!(fac.multiplicity(&Poly::from_ints(&f, &[1, 1])), 9);
        assert_eq!(fac.multiplicity(&Poly::from_ints(&f, &[0, 1])), 4);
    }

    #[test]
    fn reconstruction_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f9 = Fq::new(&FieldSpec::extension(3, vec![1, 0, 1])).unwrap();
        for field in [Fq::prime(3).unwrap(), Fq::prime(5).unwrap(), f9] {
            for deg in [1usize, 5, 12, 30] {
                let mut g = Poly::random(&field, deg, &mut rng);
                if g.is_zero() {
                    continue;
                }
                // force some repeated factors
                g = g.mul_ref(&Poly::random(&field, 2, &mut rng).pow(3));
                if g.is_zero() {
                    continue;
                }
                let fac = factorize(&g);
                assert_eq!(fac.expand(&g), g);
                for (h, _) in &fac.factors {
                    assert!(h.is_monic() && h.is_irreducible());
                }
            }
        }
    }
}
