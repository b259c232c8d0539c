//! Finite fields F_q with q = p^n, p an odd prime.
//!
//! Elements are stored as integers in `[0, q)`. For the prime field the
//! integer is the residue itself; for extensions it is the base-p encoding
//! `d_0 + d_1 p + ... + d_{n-1} p^{n-1}` of the reduced polynomial
//! `d_0 + d_1 a + ... + d_{n-1} a^{n-1}` modulo the defining modulus.
//! Multiplication in extensions goes through exp/log tables.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

/// Largest field size for which extension tables are built.
pub const MAX_FIELD_SIZE: u64 = 1 << 20;

/// User-facing description of F_q.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub n: u32,
    /// Monic irreducible modulus over F_p, coefficients low to high.
    /// Absent exactly when `n == 1`.
    pub modulus: Option<Vec<u32>>,
}

impl FieldSpec {
    pub fn prime(p: u32) -> Self {
        FieldSpec {
            p,
            n: 1,
            modulus: None,
        }
    }

    pub fn extension(p: u32, modulus: Vec<u32>) -> Self {
        let n = modulus.len().saturating_sub(1) as u32;
        FieldSpec {
            p,
            n,
            modulus: Some(modulus),
        }
    }
}

/// An element of F_q. Only meaningful together with its [`Fq`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FqElem(pub(crate) u32);

impl FqElem {
    pub const ZERO: FqElem = FqElem(0);
    pub const ONE: FqElem = FqElem(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

struct Tables {
    exp: Vec<u32>,
    log: Vec<u32>,
}

struct FqInner {
    p: u32,
    n: u32,
    q: u32,
    modulus: Vec<u32>,
    tables: Option<Tables>,
}

/// Handle to a finite field. Cloning is cheap.
#[derive(Clone)]
pub struct Fq(Arc<FqInner>);

impl PartialEq for Fq {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.modulus == other.0.modulus)
    }
}

impl Eq for Fq {}

impl fmt::Debug for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.n == 1 {
            write!(f, "F_{}", self.0.p)
        } else {
            write!(f, "F_{}^{}[{:?}]", self.0.p, self.0.n, self.0.modulus)
        }
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
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

impl Fq {
    /// The prime field F_p.
    pub fn prime(p: u32) -> Result<Fq> {
        Fq::new(&FieldSpec::prime(p))
    }

    pub fn new(spec: &FieldSpec) -> Result<Fq> {
        let p = spec.p;
        if !is_prime(p as u64) || p < 3 {
            return Err(Error::InvalidField(format!("p = {p} must be an odd prime")));
        }
        if p >= 1 << 30 {
            return Err(Error::InvalidField(format!("p = {p} too large")));
        }
        match (&spec.modulus, spec.n) {
            (None, 1) => Ok(Fq(Arc::new(FqInner {
                p,
                n: 1,
                q: p,
                modulus: vec![0, 1],
                tables: None,
            }))),
            (None, n) => Err(Error::InvalidField(format!(
                "degree {n} extension needs an explicit irreducible modulus"
            ))),
            (Some(m), n) => {
                if m.len() as u32 != n + 1 || n == 0 {
                    return Err(Error::InvalidField(format!(
                        "modulus length {} does not match n = {n}",
                        m.len()
                    )));
                }
                if m.iter().any(|&c| c >= p) || m[n as usize] != 1 {
                    return Err(Error::InvalidField("modulus must be monic over F_p".into()));
                }
                if n == 1 {
                    return Fq::prime(p);
                }
                let q = (p as u64).checked_pow(n).unwrap_or(u64::MAX);
                if q > MAX_FIELD_SIZE {
                    return Err(Error::InvalidField(format!(
                        "field of size {q} exceeds supported maximum {MAX_FIELD_SIZE}"
                    )));
                }
                let base = Fq::prime(p)?;
                let mpoly = Poly::new(&base, m.iter().map(|&c| FqElem(c)).collect());
                if !mpoly.is_irreducible() {
                    return Err(Error::InvalidField(format!(
                        "modulus {mpoly} is reducible over F_{p}"
                    )));
                }
                Ok(Fq::build_extension(p, n, q as u32, m.clone()))
            }
        }
    }

    fn build_extension(p: u32, n: u32, q: u32, modulus: Vec<u32>) -> Fq {
        let mut inner = FqInner {
            p,
            n,
            q,
            modulus,
            tables: None,
        };
        let order = (q - 1) as u64;
        let factors = prime_factors(order);
        let mut found = None;
        for cand in 2..q {
            let is_gen = factors
                .iter()
                .all(|&r| raw_pow(&inner, cand, order / r) != 1);
            if is_gen {
                found = Some(cand);
                break;
            }
        }
        let g = found.expect("multiplicative group of a finite field is cyclic");
        let mut exp = Vec::with_capacity(q as usize - 1);
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..(q - 1) {
            exp.push(x);
            log[x as usize] = i;
            x = raw_mul(&inner, x, g);
        }
        inner.tables = Some(Tables { exp, log });
        Fq(Arc::new(inner))
    }

    pub fn spec(&self) -> FieldSpec {
        if self.0.n == 1 {
            FieldSpec::prime(self.0.p)
        } else {
            FieldSpec::extension(self.0.p, self.0.modulus.clone())
        }
    }

    #[inline]
    pub fn characteristic(&self) -> u32 {
        self.0.p
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.0.n
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.0.q
    }

    #[inline]
    pub fn is_prime_field(&self) -> bool {
        self.0.n == 1
    }

    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    #[inline]
    pub fn zero(&self) -> FqElem {
        FqElem(0)
    }

    #[inline]
    pub fn one(&self) -> FqElem {
        FqElem(1)
    }

    /// Element from its integer encoding; `None` when out of range.
    pub fn elem(&self, v: u32) -> Option<FqElem> {
        (v < self.0.q).then_some(FqElem(v))
    }

    /// The class of the integer `n` in the prime subfield.
    pub fn from_i64(&self, n: i64) -> FqElem {
        FqElem(n.rem_euclid(self.0.p as i64) as u32)
    }

    /// The generator `a` of F_q over F_p (class of X modulo the modulus).
    pub fn generator(&self) -> FqElem {
        if self.0.n == 1 {
            FqElem(0)
        } else {
            FqElem(self.0.p)
        }
    }

    /// Base-p digits of the encoding (coefficients of `a^i`).
    pub fn digits(&self, x: FqElem) -> Vec<u32> {
        let mut v = x.0;
        let mut out = Vec::with_capacity(self.0.n as usize);
        for _ in 0..self.0.n {
            out.push(v % self.0.p);
            v /= self.0.p;
        }
        out
    }

    pub fn from_digits(&self, d: &[u32]) -> FqElem {
        let mut v = 0u32;
        for &c in d.iter().rev() {
            v = v * self.0.p + c % self.0.p;
        }
        FqElem(v)
    }

    #[inline]
    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        let p = self.0.p;
        if self.0.n == 1 {
            let s = a.0 + b.0;
            FqElem(if s >= p { s - p } else { s })
        } else {
            let (mut x, mut y) = (a.0, b.0);
            let mut out = 0u32;
            let mut scale = 1u32;
            for _ in 0..self.0.n {
                let s = (x % p + y % p) % p;
                out += s * scale;
                x /= p;
                y /= p;
                scale = scale.wrapping_mul(p);
            }
            FqElem(out)
        }
    }

    #[inline]
    pub fn neg(&self, a: FqElem) -> FqElem {
        let p = self.0.p;
        if self.0.n == 1 {
            FqElem(if a.0 == 0 { 0 } else { p - a.0 })
        } else {
            let mut x = a.0;
            let mut out = 0u32;
            let mut scale = 1u32;
            for _ in 0..self.0.n {
                let d = x % p;
                out += ((p - d) % p) * scale;
                x /= p;
                scale = scale.wrapping_mul(p);
            }
            FqElem(out)
        }
    }

    #[inline]
    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        if self.0.n == 1 {
            let p = self.0.p;
            FqElem(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + p - b.0 })
        } else {
            self.add(a, self.neg(b))
        }
    }

    #[inline]
    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        if self.0.n == 1 {
            FqElem(((a.0 as u64 * b.0 as u64) % self.0.p as u64) as u32)
        } else {
            if a.0 == 0 || b.0 == 0 {
                return FqElem(0);
            }
            let t = self.0.tables.as_ref().expect("extension tables");
            let e =
                (t.log[a.0 as usize] as u64 + t.log[b.0 as usize] as u64) % (self.0.q as u64 - 1);
            FqElem(t.exp[e as usize])
        }
    }

    pub fn inv(&self, a: FqElem) -> Option<FqElem> {
        if a.0 == 0 {
            return None;
        }
        if self.0.n == 1 {
            Some(self.pow(a, (self.0.p - 2) as u64))
        } else {
            let t = self.0.tables.as_ref().expect("extension tables");
            let l = t.log[a.0 as usize];
            let e = if l == 0 { 0 } else { self.0.q - 1 - l };
            Some(FqElem(t.exp[e as usize]))
        }
    }

    pub fn div(&self, a: FqElem, b: FqElem) -> Option<FqElem> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: FqElem, mut e: u64) -> FqElem {
        if self.0.n > 1 {
            if a.0 == 0 {
                return if e == 0 { FqElem(1) } else { FqElem(0) };
            }
            let t = self.0.tables.as_ref().expect("extension tables");
            let m = self.0.q as u64 - 1;
            let l = (t.log[a.0 as usize] as u64 * (e % m)) % m;
            return FqElem(t.exp[l as usize]);
        }
        let mut base = a;
        let mut acc = FqElem(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `a^(p^k)`.
    pub fn frobenius(&self, a: FqElem, k: u32) -> FqElem {
        if self.0.n == 1 {
            return a;
        }
        let k = k % self.0.n;
        let mut x = a;
        for _ in 0..k {
            x = self.pow(x, self.0.p as u64);
        }
        x
    }

    /// Inverse Frobenius: the unique `b` with `b^p = a`.
    pub fn pth_root(&self, a: FqElem) -> FqElem {
        self.frobenius(a, self.0.n - 1)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FqElem {
        FqElem(rng.gen_range(0..self.0.q))
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FqElem {
        FqElem(rng.gen_range(1..self.0.q))
    }

    pub fn elements(&self) -> impl Iterator<Item = FqElem> {
        (0..self.0.q).map(FqElem)
    }

    /// Symmetric integer representative for prime-field elements.
    pub fn signed(&self, a: FqElem) -> i64 {
        let p = self.0.p as i64;
        let v = a.0 as i64;
        if v > p / 2 {
            v - p
        } else {
            v
        }
    }

    /// Render an element in the input grammar. Prime-field elements use
    /// symmetric representatives; extension elements are polynomials in `a`.
    pub fn render(&self, a: FqElem) -> String {
        if self.0.n == 1 {
            return self.signed(a).to_string();
        }
        let prime = PrimeView(self.0.p);
        let d = self.digits(a);
        let mut out = String::new();
        for (i, &c) in d.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let s = prime.signed(c);
            let mag = s.unsigned_abs();
            let mono = match i {
                0 => String::new(),
                1 => "a".to_string(),
                _ => format!("a^{i}"),
            };
            let term = if i == 0 {
                mag.to_string()
            } else if mag == 1 {
                mono
            } else {
                format!("{mag}*{mono}")
            };
            if out.is_empty() {
                if s < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if s < 0 { " - " } else { " + " });
            }
            out.push_str(&term);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    /// True when `render` produces a single signed integer.
    pub fn renders_atomic(&self, a: FqElem) -> bool {
        self.0.n == 1 || self.digits(a).iter().skip(1).all(|&d| d == 0)
    }
}

struct PrimeView(u32);

impl PrimeView {
    fn signed(&self, v: u32) -> i64 {
        let p = self.0 as i64;
        let v = v as i64;
        if v > p / 2 {
            v - p
        } else {
            v
        }
    }
}

fn raw_mul(f: &FqInner, a: u32, b: u32) -> u32 {
    let p = f.p as u64;
    let n = f.n as usize;
    let da: Vec<u64> = digits_raw(a, f.p, n);
    let db: Vec<u64> = digits_raw(b, f.p, n);
    let mut prod = vec![0u64; 2 * n];
    for i in 0..n {
        for j in 0..n {
            prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
        }
    }
    for k in (n..2 * n).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for (i, &m) in f.modulus.iter().enumerate().take(n) {
            let idx = k - n + i;
            prod[idx] = (prod[idx] + p * p - c * m as u64) % p;
        }
    }
    let mut v = 0u64;
    for k in (0..n).rev() {
        v = v * p + prod[k];
    }
    v as u32
}

fn digits_raw(mut v: u32, p: u32, n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push((v % p) as u64);
        v /= p;
    }
    out
}

fn raw_pow(f: &FqInner, a: u32, mut e: u64) -> u32 {
    let mut base = a;
    let mut acc = 1u32;
    while e > 0 {
        if e & 1 == 1 {
            acc = raw_mul(f, acc, base);
        }
        base = raw_mul(f, base, base);
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f9() -> Fq {
        // x^2 + 1 is irreducible over F_3
        Fq::new(&FieldSpec::extension(3, vec![1, 0, 1])).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Fq::prime(2).is_err());
        assert!(Fq::prime(9).is_err());
        assert!(Fq::new(&FieldSpec {
            p: 3,
            n: 2,
            modulus: None
        })
        .is_err());
        // x^2 - 1 = (x - 1)(x + 1)
        assert!(Fq::new(&FieldSpec::extension(3, vec![2, 0, 1])).is_err());
    }

    #[test]
    fn prime_field_basics() {
        let f = Fq::prime(5).unwrap();
        let a = f.from_i64(3);
        assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
        assert_eq!(f.add(a, f.from_i64(2)), f.zero());
        assert_eq!(f.render(f.from_i64(4)), "-1");
        assert_eq!(f.render(f.from_i64(2)), "2");
    }

    #[test]
    fn f9_generator_squares_to_minus_one() {
        let f = f9();
        let a = f.generator();
        assert_eq!(f.mul(a, a), f.from_i64(-1));
        assert_eq!(f.render(f.add(a, f.one())), "a + 1");
        assert_eq!(f.frobenius(a, 1), f.neg(a));
    }

    #[test]
    fn field_axioms_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in [Fq::prime(3).unwrap(), Fq::prime(7).unwrap(), f9()] {
            for _ in 0..500 {
                let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
                assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                assert_eq!(f.add(a, f.neg(a)), f.zero());
                assert_eq!(f.sub(a, b), f.add(a, f.neg(b)));
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
                }
                assert_eq!(f.pth_root(f.pow(a, f.characteristic() as u64)), a);
            }
        }
    }
}
