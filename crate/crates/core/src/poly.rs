//! Dense univariate polynomials over F_q in the variable `t`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::fq::{Fq, FqElem};
use crate::render::{monomial, render_terms};

/// A polynomial in `F_q[t]`. Coefficients are stored low to high with no
/// trailing zeros, so the zero polynomial has an empty coefficient vector.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    field: Fq,
    coeffs: Vec<FqElem>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({})", self)
    }
}

impl std::hash::Hash for Poly {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl Poly {
    pub fn new(field: &Fq, mut coeffs: Vec<FqElem>) -> Poly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly {
            field: field.clone(),
            coeffs,
        }
    }

    pub fn from_ints(field: &Fq, coeffs: &[i64]) -> Poly {
        Poly::new(field, coeffs.iter().map(|&c| field.from_i64(c)).collect())
    }

    pub fn zero(field: &Fq) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: &Fq) -> Poly {
        Poly::constant(field, field.one())
    }

    pub fn constant(field: &Fq, c: FqElem) -> Poly {
        Poly::new(field, vec![c])
    }

    /// The variable `t`.
    pub fn t(field: &Fq) -> Poly {
        Poly::monomial(field, field.one(), 1)
    }

    pub fn monomial(field: &Fq, c: FqElem, deg: usize) -> Poly {
        let mut v = vec![FqElem::ZERO; deg + 1];
        v[deg] = c;
        Poly::new(field, v)
    }

    #[inline]
    pub fn field(&self) -> &Fq {
        &self.field
    }

    #[inline]
    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == FqElem::ONE
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree, or `None` for the zero polynomial.
    #[inline]
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree as a signed integer with `deg 0 = -1`.
    pub fn deg(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, i: usize) -> FqElem {
        self.coeffs.get(i).copied().unwrap_or(FqElem::ZERO)
    }

    pub fn lead(&self) -> FqElem {
        self.coeffs.last().copied().unwrap_or(FqElem::ZERO)
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == FqElem::ONE
    }

    /// Number of leading zero coefficients, i.e. `ord_t`.
    pub fn low_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() || self.is_monic() {
            return self.clone();
        }
        let inv = self.field.inv(self.lead()).expect("nonzero lead");
        self.scale(inv)
    }

    pub fn scale(&self, c: FqElem) -> Poly {
        let f = &self.field;
        Poly::new(f, self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = vec![FqElem::ZERO; k];
        v.extend_from_slice(&self.coeffs);
        Poly {
            field: self.field.clone(),
            coeffs: v,
        }
    }

    /// Keep only terms of degree `< k`.
    pub fn truncate(&self, k: usize) -> Poly {
        Poly::new(&self.field, self.coeffs.iter().take(k).copied().collect())
    }

    pub fn add_ref(&self, other: &Poly) -> Poly {
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let v = (0..n)
            .map(|i| f.add(self.coeff(i), other.coeff(i)))
            .collect();
        Poly::new(f, v)
    }

    pub fn sub_ref(&self, other: &Poly) -> Poly {
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let v = (0..n)
            .map(|i| f.sub(self.coeff(i), other.coeff(i)))
            .collect();
        Poly::new(f, v)
    }

    pub fn neg_ref(&self) -> Poly {
        let f = &self.field;
        Poly::new(f, self.coeffs.iter().map(|&c| f.neg(c)).collect())
    }

    pub fn mul_ref(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(&self.field);
        }
        Poly::new(
            &self.field,
            mul_coeffs(&self.field, &self.coeffs, &other.coeffs),
        )
    }

    pub fn square(&self) -> Poly {
        self.mul_ref(self)
    }

    pub fn pow(&self, mut e: u64) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one(&self.field);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }

    /// Division with remainder. Panics on division by zero.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let f = &self.field;
        if self.coeffs.len() < d.coeffs.len() {
            return (Poly::zero(f), self.clone());
        }
        let dl = d.coeffs.len();
        let inv = f.inv(d.lead()).expect("nonzero lead");
        let mut r = self.coeffs.clone();
        let mut q = vec![FqElem::ZERO; r.len() - dl + 1];
        for k in (0..q.len()).rev() {
            let c = f.mul(r[k + dl - 1], inv);
            if c.is_zero() {
                continue;
            }
            q[k] = c;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                r[k + j] = f.sub(r[k + j], f.mul(c, dc));
            }
        }
        r.truncate(dl - 1);
        (Poly::new(f, q), Poly::new(f, r))
    }

    pub fn rem(&self, d: &Poly) -> Poly {
        self.divrem(d).1
    }

    /// Exact quotient; debug-asserts that the remainder vanishes.
    pub fn div_exact(&self, d: &Poly) -> Poly {
        let (q, r) = self.divrem(d);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn divides(&self, other: &Poly) -> bool {
        other.rem(self).is_zero()
    }

    /// Monic greatest common divisor (zero only if both inputs are zero).
    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended gcd: returns `(g, s, t)` with `s*self + t*other = g`, `g` monic.
    pub fn xgcd(&self, other: &Poly) -> (Poly, Poly, Poly) {
        let f = &self.field;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (Poly::one(f), Poly::zero(f));
        let (mut t0, mut t1) = (Poly::zero(f), Poly::one(f));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            r0 = r1;
            r1 = r;
            let s = s0.sub_ref(&q.mul_ref(&s1));
            s0 = s1;
            s1 = s;
            let t = t0.sub_ref(&q.mul_ref(&t1));
            t0 = t1;
            t1 = t;
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let inv = f.inv(r0.lead()).unwrap();
        (r0.scale(inv), s0.scale(inv), t0.scale(inv))
    }

    pub fn mulmod(&self, other: &Poly, m: &Poly) -> Poly {
        self.mul_ref(other).rem(m)
    }

    pub fn powmod(&self, mut e: u64, m: &Poly) -> Poly {
        let mut base = self.rem(m);
        let mut acc = Poly::one(&self.field).rem(m);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mulmod(&base, m);
            }
            e >>= 1;
            if e > 0 {
                base = base.mulmod(&base, m);
            }
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        let f = &self.field;
        let v = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| f.mul(c, f.from_i64(i as i64)))
            .collect();
        Poly::new(f, v)
    }

    pub fn eval(&self, x: FqElem) -> FqElem {
        let f = &self.field;
        self.coeffs
            .iter()
            .rev()
            .fold(FqElem::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
    }

    /// `self(g)`.
    pub fn compose(&self, g: &Poly) -> Poly {
        let f = &self.field;
        let mut acc = Poly::zero(f);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul_ref(g).add_ref(&Poly::constant(f, c));
        }
        acc
    }

    /// Apply `c -> c^(p^k)` to each coefficient.
    pub fn frobenius_coeffs(&self, k: u32) -> Poly {
        let f = &self.field;
        Poly::new(f, self.coeffs.iter().map(|&c| f.frobenius(c, k)).collect())
    }

    /// For a polynomial in `t^p`, return its p-th root.
    pub fn pth_root(&self) -> Poly {
        let f = &self.field;
        let p = f.characteristic() as usize;
        let v = self
            .coeffs
            .iter()
            .step_by(p)
            .map(|&c| f.pth_root(c))
            .collect();
        Poly::new(f, v)
    }

    /// `t^(q^k) mod self`, computed by repeated q-th powering.
    pub(crate) fn t_frobenius_powers(&self, k: usize) -> Vec<Poly> {
        let f = &self.field;
        let q = f.order() as u64;
        let mut out = Vec::with_capacity(k + 1);
        let mut cur = Poly::t(f).rem(self);
        out.push(cur.clone());
        for _ in 0..k {
            cur = cur.powmod(q, self);
            out.push(cur.clone());
        }
        out
    }

    /// Rabin's irreducibility test.
    pub fn is_irreducible(&self) -> bool {
        let n = match self.degree() {
            None | Some(0) => return false,
            Some(1) => return true,
            Some(n) => n,
        };
        let f = self.monic();
        let x = Poly::t(&self.field);
        let pows = f.t_frobenius_powers(n);
        if !pows[n].sub_ref(&x).rem(&f).is_zero() {
            return false;
        }
        let mut m = n;
        let mut r = 2;
        let mut primes = Vec::new();
        while r * r <= m {
            if m % r == 0 {
                primes.push(r);
                while m % r == 0 {
                    m /= r;
                }
            }
            r += 1;
        }
        if m > 1 {
            primes.push(m);
        }
        primes
            .iter()
            .all(|&r| pows[n / r].sub_ref(&x).gcd(&f).is_one())
    }

    /// Canonical ordering: by degree, then coefficients from the top.
    pub fn canonical_cmp(&self, other: &Poly) -> Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }

    pub fn random<R: rand::Rng + ?Sized>(field: &Fq, max_deg: usize, rng: &mut R) -> Poly {
        Poly::new(field, (0..=max_deg).map(|_| field.random(rng)).collect())
    }

    /// Number of terms, used to decide on parentheses when rendering.
    pub(crate) fn term_count(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    /// Render in the expression grammar, with the variable named `var`.
    pub fn render_with(&self, var: &str) -> String {
        let monos: Vec<String> = (0..self.coeffs.len())
            .map(|i| monomial(var, i as i64))
            .collect();
        render_terms(
            &self.field,
            self.coeffs
                .iter()
                .zip(&monos)
                .rev()
                .map(|(&c, m)| (c, m.as_str())),
        )
    }
}

/// Schoolbook product with delayed reduction in the prime-field case.
pub(crate) fn mul_coeffs(f: &Fq, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    mul_coeffs_trunc(f, a, b, a.len() + b.len() - 1)
}

/// First `limit` coefficients of the product.
pub(crate) fn mul_coeffs_trunc(f: &Fq, a: &[FqElem], b: &[FqElem], limit: usize) -> Vec<FqElem> {
    if a.is_empty() || b.is_empty() || limit == 0 {
        return Vec::new();
    }
    let n = (a.len() + b.len() - 1).min(limit);
    let a = &a[..a.len().min(n)];
    if f.is_prime_field() {
        let p = f.characteristic() as u64;
        let mut acc = vec![0u64; n];
        if p < (1 << 16) {
            // products fit in 32 bits, so 2^32 of them fit in a u64
            for (i, &x) in a.iter().enumerate() {
                if x.0 == 0 {
                    continue;
                }
                let x = x.0 as u64;
                for (slot, &y) in acc[i..].iter_mut().zip(b) {
                    *slot += x * y.0 as u64;
                }
            }
        } else {
            for (i, &x) in a.iter().enumerate() {
                let x = x.0 as u64;
                for (slot, &y) in acc[i..].iter_mut().zip(b) {
                    *slot = (*slot + x * y.0 as u64) % p;
                }
            }
        }
        acc.into_iter().map(|v| FqElem((v % p) as u32)).collect()
    } else {
        let mut out = vec![FqElem::ZERO; n];
        for (i, &x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(n - i) {
                out[i + j] = f.add(out[i + j], f.mul(x, y));
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with("t"))
    }
}

macro_rules! poly_binop {
    ($tr:ident, $m:ident, $imp:ident) => {
        impl<'a> $tr<&'a Poly> for &'a Poly {
            type Output = Poly;
            fn $m(self, rhs: &'a Poly) -> Poly {
                self.$imp(rhs)
            }
        }
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$imp(&rhs)
            }
        }
    };
}

poly_binop!(Add, add, add_ref);
poly_binop!(Sub, sub, sub_ref);
poly_binop!(Mul, mul, mul_ref);

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.neg_ref()
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.neg_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Fq {
        Fq::prime(3).unwrap()
    }

    #[test]
    fn divrem_reconstructs() {
        let f = f3();
        let a = Poly::from_ints(&f, &[1, 2, 0, 1, 1, 2]);
        let b = Poly::from_ints(&f, &[2, 1, 1]);
        let (q, r) = a.divrem(&b);
        assert_eq!(&(&q * &b) + &r, a);
        assert!(r.deg() < b.deg());
    }

    #[test]
    fn gcd_of_shared_factor() {
        let f = f3();
        let g = Poly::from_ints(&f, &[-1, -1, 1]); // t^2 - t - 1
        let a = &g * &Poly::from_ints(&f, &[1, 1]);
        let b = &g * &Poly::from_ints(&f, &[-1, 1]);
        assert_eq!(a.gcd(&b), g);
        let (d, s, t) = a.xgcd(&b);
        assert_eq!(&(&s * &a) + &(&t * &b), d);
    }

    #[test]
    fn irreducibility() {
        let f = f3();
        assert!(Poly::from_ints(&f, &[-1, -1, 1]).is_irreducible());
        assert!(!Poly::from_ints(&f, &[-1, 0, 1]).is_irreducible());
        assert!(Poly::from_ints(&f, &[1, 0, 1]).is_irreducible());
        // t^3 - t + 1 is the Artin-Schreier irreducible cubic over F_3
        assert!(Poly::from_ints(&f, &[1, -1, 0, 1]).is_irreducible());
        assert!(!Poly::from_ints(&f, &[0, 0, 1]).is_irreducible());
    }

    #[test]
    fn rendering() {
        let f = f3();
        assert_eq!(Poly::from_ints(&f, &[-1, -1, 1]).to_string(), "t^2 - t - 1");
        assert_eq!(Poly::from_ints(&f, &[0, 2]).to_string(), "-t");
        assert_eq!(Poly::zero(&f).to_string(), "0");
        let f5 = Fq::prime(5).unwrap();
        assert_eq!(Poly::from_ints(&f5, &[3, 2]).to_string(), "2*t - 2");
    }
}
