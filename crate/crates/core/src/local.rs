//! Completions `k_v = F_v((π_v))` realized as truncated Laurent series over
//! the residue field, with explicit absolute precision.
//!
//! An element is stored as `π^val * (c_0 + c_1 π + ...)` with `c_0 != 0`
//! and is known modulo `π^prec`. Trailing zero coefficients below `prec`
//! are not stored. The zero-to-precision element has no coefficients and
//! `val == prec`.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::factor::roots;
use crate::fq::{FieldSpec, Fq, FqElem, MAX_FIELD_SIZE};
use crate::place::{Place, PlaceKind, Valuation};
use crate::poly::{mul_coeffs_trunc, Poly};
use crate::ratfunc::RatFunc;
use crate::render::{monomial, render_terms};

/// How F_q sits inside the residue field.
#[derive(Debug)]
enum Embedding {
    Identity,
    /// Image of the generator `a` of F_q.
    Generator(FqElem),
}

#[derive(Debug)]
struct Inner {
    place: Place,
    base: Fq,
    residue: Fq,
    embedding: Embedding,
    /// Image of `t` in `F_v[[π]]` (finite places), extended on demand.
    t_image: Mutex<Vec<FqElem>>,
}

/// The completion of `F_q(t)` at a place.
#[derive(Clone, Debug)]
pub struct LocalField(Arc<Inner>);

impl PartialEq for LocalField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.place == other.0.place && self.0.base == other.0.base)
    }
}

impl Eq for LocalField {}

impl LocalField {
    pub fn new(place: &Place, base: &Fq) -> Result<LocalField> {
        let (residue, embedding, theta) = match place.kind() {
            PlaceKind::Infinity => (base.clone(), Embedding::Identity, None),
            PlaceKind::Finite(pi) => {
                let d = pi.degree().unwrap() as u32;
                let size = (base.order() as u64).checked_pow(d).unwrap_or(u64::MAX);
                if size > MAX_FIELD_SIZE {
                    return Err(Error::InvalidInput(format!(
                        "residue field of size {size} at {pi} exceeds supported maximum"
                    )));
                }
                if d == 1 {
                    (
                        base.clone(),
                        Embedding::Identity,
                        Some(base.neg(pi.coeff(0))),
                    )
                } else if base.is_prime_field() {
                    let m: Vec<u32> = pi.coeffs().iter().map(|c| c.value()).collect();
                    let res = Fq::new(&FieldSpec::extension(base.characteristic(), m))?;
                    let g = res.generator();
                    (res, Embedding::Identity, Some(g))
                } else {
                    let (res, gen_image) = residue_extension(base, d)?;
                    let embedding = Embedding::Generator(gen_image);
                    let lifted = Poly::new(
                        &res,
                        pi.coeffs()
                            .iter()
                            .map(|&c| embed_with(base, &res, &embedding, c))
                            .collect(),
                    );
                    let theta = *roots(&lifted).first().ok_or_else(|| {
                        Error::Internal(format!(
                            "place polynomial {pi} has no root in residue field"
                        ))
                    })?;
                    (res, embedding, Some(theta))
                }
            }
        };
        let t_image = match theta {
            Some(th) => vec![th],
            None => Vec::new(),
        };
        Ok(LocalField(Arc::new(Inner {
            place: place.clone(),
            base: base.clone(),
            residue,
            embedding,
            t_image: Mutex::new(t_image),
        })))
    }

    pub fn place(&self) -> &Place {
        &self.0.place
    }

    /// The constant field F_q of the global field.
    pub fn base(&self) -> &Fq {
        &self.0.base
    }

    pub fn residue(&self) -> &Fq {
        &self.0.residue
    }

    pub fn characteristic(&self) -> u32 {
        self.0.base.characteristic()
    }

    /// Image of a constant of F_q in the residue field.
    pub fn embed(&self, c: FqElem) -> FqElem {
        embed_with(&self.0.base, &self.0.residue, &self.0.embedding, c)
    }

    /// Variable name used when rendering expansions.
    pub fn variable(&self) -> &'static str {
        match self.0.place.kind() {
            PlaceKind::Infinity => "t",
            PlaceKind::Finite(p) if p.degree() == Some(1) && p.coeff(0).is_zero() => "t",
            PlaceKind::Finite(_) => "u",
        }
    }

    pub fn zero(&self, prec: i64) -> LocalElement {
        LocalElement {
            field: self.clone(),
            val: prec,
            coeffs: Vec::new(),
            prec,
        }
    }

    pub fn constant(&self, c: FqElem, prec: i64) -> LocalElement {
        LocalElement::normalized(self.clone(), 0, vec![c], prec)
    }

    pub fn one(&self, prec: i64) -> LocalElement {
        self.constant(self.0.residue.one(), prec)
    }

    /// `π^k` known modulo `π^prec`.
    pub fn uniformizer_power(&self, k: i64, prec: i64) -> LocalElement {
        LocalElement::normalized(self.clone(), k, vec![self.0.residue.one()], prec)
    }

    /// Build from explicit coefficients: `Σ coeffs[i] π^(val+i) + O(π^prec)`.
    pub fn from_coeffs(&self, val: i64, coeffs: Vec<FqElem>, prec: i64) -> LocalElement {
        LocalElement::normalized(self.clone(), val, coeffs, prec)
    }

    /// Coefficients of the image of `t` in `F_v[[π]]` modulo `π^n`.
    fn t_image(&self, n: usize) -> Vec<FqElem> {
        let pi = self.0.place.poly().expect("finite place");
        let mut cache = self.0.t_image.lock().unwrap_or_else(|e| e.into_inner());
        if pi.degree() == Some(1) {
            let mut v = vec![cache[0], self.0.residue.one()];
            v.truncate(n);
            return v;
        }
        if cache.len() < n {
            *cache = self.newton_t_image(pi, cache[0], n);
        }
        cache[..n].to_vec()
    }

    /// Solve `π_v(T) = π` with `T(0) = θ` by Newton iteration.
    fn newton_t_image(&self, pi: &Poly, theta: FqElem, n: usize) -> Vec<FqElem> {
        let res = &self.0.residue;
        let coeffs: Vec<FqElem> = pi.coeffs().iter().map(|&c| self.embed(c)).collect();
        let dcoeffs: Vec<FqElem> = pi
            .derivative()
            .coeffs()
            .iter()
            .map(|&c| self.embed(c))
            .collect();
        let mut t = vec![theta];
        let mut have = 1usize;
        while have < n {
            let target = (2 * have).min(n);
            let mut tt = t.clone();
            tt.resize(target, res.zero());
            let mut val = horner(res, &coeffs, &tt, target);
            // subtract π
            if target > 1 {
                val[1] = res.sub(val[1], res.one());
            }
            let der = horner(res, &dcoeffs, &tt, target);
            let step = mul_coeffs_trunc(res, &val, &series_inverse(res, &der, target), target);
            for (i, s) in step.into_iter().enumerate() {
                tt[i] = res.sub(tt[i], s);
            }
            t = tt;
            have = target;
        }
        t
    }

    /// Expansion of a polynomial known modulo `π^abs_prec`.
    fn expand_poly(&self, f: &Poly, abs_prec: i64) -> LocalElement {
        let res = &self.0.residue;
        match self.0.place.kind() {
            PlaceKind::Infinity => {
                let deg = f.deg();
                let coeffs: Vec<FqElem> = f.coeffs().iter().rev().map(|&c| self.embed(c)).collect();
                LocalElement::normalized(self.clone(), -deg, coeffs, abs_prec)
            }
            PlaceKind::Finite(pi) => {
                if abs_prec <= 0 || f.is_zero() {
                    return self.zero(abs_prec.max(0));
                }
                let n = abs_prec as usize;
                let tser = self.t_image(n);
                let mut out = vec![res.zero(); n];
                let mut rest = f.clone();
                let mut j = 0usize;
                // π_v-adic digits r_j with deg r_j < d; r_j(T) contributes at π^j
                while j < n && !rest.is_zero() {
                    let (q, r) = rest.divrem(pi);
                    if !r.is_zero() {
                        let rc: Vec<FqElem> = r.coeffs().iter().map(|&c| self.embed(c)).collect();
                        let img = horner(res, &rc, &tser, n - j);
                        for (i, c) in img.into_iter().enumerate() {
                            out[i + j] = res.add(out[i + j], c);
                        }
                    }
                    rest = q;
                    j += 1;
                }
                LocalElement::normalized(self.clone(), 0, out, abs_prec)
            }
        }
    }

    /// Laurent expansion of `x` with `rel_prec` correct coefficients past the
    /// leading term: the result is exact modulo `π^(ord_v(x) + rel_prec)`.
    pub fn expand(&self, x: &RatFunc, rel_prec: i64) -> LocalElement {
        if x.is_zero() {
            return self.zero(rel_prec);
        }
        let place = &self.0.place;
        let vn = place.ord(&RatFunc::from_poly(x.num().clone())).unwrap();
        let vd = place.ord(&RatFunc::from_poly(x.den().clone())).unwrap();
        let num = self.expand_poly(x.num(), vn + rel_prec);
        if x.den().is_one() {
            return num;
        }
        let den = self.expand_poly(x.den(), vd + rel_prec);
        num.mul(&den.inv().expect("nonzero denominator"))
    }

    /// Expansion of `x` known modulo `π^abs_prec`.
    pub fn expand_abs(&self, x: &RatFunc, abs_prec: i64) -> LocalElement {
        match self.0.place.ord(x) {
            Valuation::PlusInfinity => self.zero(abs_prec),
            Valuation::Finite(v) if v >= abs_prec => self.zero(abs_prec),
            Valuation::Finite(v) => self.expand(x, abs_prec - v).with_prec(abs_prec),
        }
    }
}

fn embed_with(base: &Fq, res: &Fq, emb: &Embedding, c: FqElem) -> FqElem {
    match emb {
        Embedding::Identity => c,
        Embedding::Generator(g) => {
            let mut acc = res.zero();
            for &d in base.digits(c).iter().rev() {
                acc = res.add(res.mul(acc, *g), res.from_i64(d as i64));
            }
            acc
        }
    }
}

/// A field of degree `n*d` over F_p together with the image of the generator
/// of F_q (degree `n`).
fn residue_extension(base: &Fq, d: u32) -> Result<(Fq, FqElem)> {
    let p = base.characteristic();
    let deg = (base.degree() * d) as usize;
    let prime = Fq::prime(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xface_d00d ^ deg as u64);
    let modulus = loop {
        let mut cand = Poly::random(&prime, deg - 1, &mut rng);
        cand = cand.add_ref(&Poly::monomial(&prime, prime.one(), deg));
        if cand.is_irreducible() {
            break cand;
        }
    };
    let res = Fq::new(&FieldSpec::extension(
        p,
        modulus.coeffs().iter().map(|c| c.value()).collect(),
    ))?;
    let m = Poly::new(
        &res,
        base.modulus()
            .iter()
            .map(|&c| res.from_i64(c as i64))
            .collect(),
    );
    let r = *roots(&m)
        .first()
        .ok_or_else(|| Error::Internal("no embedding of the constant field".into()))?;
    Ok((res, r))
}

/// `f(T) mod π^n` for `f` given by coefficients in the residue field.
fn horner(res: &Fq, f: &[FqElem], t: &[FqElem], n: usize) -> Vec<FqElem> {
    let mut acc: Vec<FqElem> = Vec::new();
    for &c in f.iter().rev() {
        acc = mul_coeffs_trunc(res, &acc, t, n);
        if acc.is_empty() {
            acc.push(res.zero());
        }
        acc[0] = res.add(acc[0], c);
    }
    acc.resize(n, res.zero());
    acc
}

/// Inverse of a power series with unit constant term, modulo `π^n`.
fn series_inverse(res: &Fq, a: &[FqElem], n: usize) -> Vec<FqElem> {
    let inv0 = res.inv(a[0]).expect("unit constant term");
    let mut b = vec![inv0];
    let mut have = 1usize;
    while have < n {
        let target = (2 * have).min(n);
        // b <- b (2 - a b)
        let ab = mul_coeffs_trunc(res, &a[..a.len().min(target)], &b, target);
        let mut corr: Vec<FqElem> = ab.iter().map(|&c| res.neg(c)).collect();
        corr.resize(target, res.zero());
        corr[0] = res.add(corr[0], res.from_i64(2));
        b = mul_coeffs_trunc(res, &b, &corr, target);
        have = target;
    }
    b.truncate(n);
    b
}

/// An element of `k_v` known modulo `π^prec`.
#[derive(Clone)]
pub struct LocalElement {
    field: LocalField,
    val: i64,
    coeffs: Vec<FqElem>,
    prec: i64,
}

impl PartialEq for LocalElement {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.val == other.val
            && self.prec == other.prec
            && self.coeffs == other.coeffs
    }
}

impl Eq for LocalElement {}

impl fmt::Debug for LocalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalElement({})", self.render())
    }
}

impl fmt::Display for LocalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl LocalElement {
    fn normalized(
        field: LocalField,
        mut val: i64,
        mut coeffs: Vec<FqElem>,
        prec: i64,
    ) -> LocalElement {
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            Some(k) if val + (k as i64) < prec => {
                coeffs.drain(..k);
                val += k as i64;
                coeffs.truncate((prec - val) as usize);
                while coeffs.last().is_some_and(|c| c.is_zero()) {
                    coeffs.pop();
                }
                LocalElement {
                    field,
                    val,
                    coeffs,
                    prec,
                }
            }
            _ => LocalElement {
                field,
                val: prec,
                coeffs: Vec::new(),
                prec,
            },
        }
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn place(&self) -> &Place {
        self.field.place()
    }

    /// Absolute precision: the element is known modulo `π^prec`.
    pub fn prec(&self) -> i64 {
        self.prec
    }

    /// Number of known coefficients past the leading one.
    pub fn relative_prec(&self) -> i64 {
        self.prec - self.val
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn valuation(&self) -> Valuation {
        if self.is_zero() {
            Valuation::PlusInfinity
        } else {
            Valuation::Finite(self.val)
        }
    }

    /// Leading exponent; equals `prec` for the zero-to-precision element.
    pub fn lead_exponent(&self) -> i64 {
        self.val
    }

    pub fn lead(&self) -> Option<FqElem> {
        self.coeffs.first().copied()
    }

    /// Coefficient of `π^e` (zero outside the stored range).
    pub fn coeff(&self, e: i64) -> FqElem {
        let i = e - self.val;
        if i < 0 || i as usize >= self.coeffs.len() {
            self.field.residue().zero()
        } else {
            self.coeffs[i as usize]
        }
    }

    /// Nonzero terms `(exponent, coefficient)` in increasing order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, FqElem)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, &c)| (self.val + i as i64, c))
    }

    pub fn with_prec(&self, prec: i64) -> LocalElement {
        if prec >= self.prec {
            return self.clone();
        }
        LocalElement::normalized(self.field.clone(), self.val, self.coeffs.clone(), prec)
    }

    pub fn zero_like(&self) -> LocalElement {
        self.field.zero(self.prec)
    }

    /// The integer `n` at this element's precision.
    pub fn int_like(&self, n: i64) -> LocalElement {
        let f = self.field.residue();
        self.field.constant(f.from_i64(n), self.prec)
    }

    pub fn add(&self, o: &LocalElement) -> LocalElement {
        let prec = self.prec.min(o.prec);
        let val = self.val.min(o.val);
        if val >= prec {
            return self.field.zero(prec);
        }
        let f = self.field.residue();
        let len = (prec - val) as usize;
        let mut c = vec![f.zero(); len];
        for x in [self, o] {
            let off = (x.val - val) as usize;
            for (i, &a) in x.coeffs.iter().enumerate() {
                if off + i >= len {
                    break;
                }
                c[off + i] = f.add(c[off + i], a);
            }
        }
        LocalElement::normalized(self.field.clone(), val, c, prec)
    }

    pub fn neg(&self) -> LocalElement {
        let f = self.field.residue();
        LocalElement {
            field: self.field.clone(),
            val: self.val,
            coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &LocalElement) -> LocalElement {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &LocalElement) -> LocalElement {
        let prec = (self.val + o.prec).min(o.val + self.prec);
        if self.is_zero() || o.is_zero() {
            return self.field.zero(prec);
        }
        let val = self.val + o.val;
        if val >= prec {
            return self.field.zero(prec);
        }
        let c = mul_coeffs_trunc(
            self.field.residue(),
            &self.coeffs,
            &o.coeffs,
            (prec - val) as usize,
        );
        LocalElement::normalized(self.field.clone(), val, c, prec)
    }

    /// Multiply by a residue-field constant.
    pub fn scale(&self, c: FqElem) -> LocalElement {
        let f = self.field.residue();
        let coeffs = self.coeffs.iter().map(|&a| f.mul(a, c)).collect();
        LocalElement::normalized(self.field.clone(), self.val, coeffs, self.prec)
    }

    /// Multiply by `π^k`.
    pub fn shift(&self, k: i64) -> LocalElement {
        LocalElement {
            field: self.field.clone(),
            val: self.val + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec + k,
        }
    }

    /// Inverse; `None` for the zero-to-precision element.
    pub fn inv(&self) -> Option<LocalElement> {
        if self.is_zero() {
            return None;
        }
        let n = (self.prec - self.val) as usize;
        let c = series_inverse(self.field.residue(), &self.coeffs, n);
        Some(LocalElement::normalized(
            self.field.clone(),
            -self.val,
            c,
            self.prec - 2 * self.val,
        ))
    }

    pub fn div(&self, o: &LocalElement) -> Result<LocalElement> {
        Ok(self.mul(&o.inv().ok_or(Error::DivisionByZero)?))
    }

    /// `x -> x^(p^k)`: coefficients raised to `p^k`, exponents multiplied by `p^k`.
    pub fn frobenius(&self, k: u32) -> LocalElement {
        if k == 0 {
            return self.clone();
        }
        let f = self.field.residue();
        let q = (f.characteristic() as i64).pow(k);
        if self.is_zero() {
            return self.field.zero(self.prec * q);
        }
        let mut coeffs = vec![f.zero(); (self.coeffs.len() - 1) * q as usize + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i * q as usize] = f.frobenius(c, k);
        }
        LocalElement {
            field: self.field.clone(),
            val: self.val * q,
            coeffs,
            prec: self.prec * q,
        }
    }

    /// `x^e` for any integer `e`, using base-p digits and Frobenius.
    ///
    /// # Panics
    /// On a negative power of the zero-to-precision element.
    pub fn pow(&self, e: i64) -> LocalElement {
        if e < 0 {
            return self.inv().expect("negative power of zero").pow(-e);
        }
        let p = self.field.characteristic() as u64;
        let mut e = e as u64;
        let mut acc = self.field.one(i64::MAX / 4);
        let mut base = self.clone();
        let mut k = 0u32;
        while e > 0 {
            let d = e % p;
            if d > 0 {
                let fb = base.frobenius(k);
                let mut term = fb.clone();
                for _ in 1..d {
                    term = term.mul(&fb);
                }
                acc = acc.mul(&term);
            }
            e /= p;
            k += 1;
            if e > 0 && k >= 8 {
                base = base.frobenius(k);
                k = 0;
            }
        }
        if acc.prec >= i64::MAX / 8 {
            // x^0: inherit this element's relative precision
            return self.field.one(self.prec - self.val);
        }
        acc
    }

    /// True when `val == 0` and the constant coefficient is 1.
    pub fn is_one_unit(&self) -> bool {
        self.val == 0
            && self
                .coeffs
                .first()
                .is_some_and(|c| *c == self.field.residue().one())
    }

    /// Equality modulo the joint precision.
    pub fn agrees_with(&self, o: &LocalElement) -> bool {
        self.sub(o).is_zero()
    }

    /// Text rendering, e.g. `1 - t^3 + O(t^48)`. At the infinite place the
    /// series is printed in descending powers of `t = π^-1`.
    pub fn render(&self) -> String {
        let f = self.field.residue();
        let var = self.field.variable();
        let inf = self.field.place().is_infinite();
        let sign = if inf { -1 } else { 1 };
        let terms: Vec<(FqElem, String)> = self
            .terms()
            .map(|(e, c)| (c, monomial(var, sign * e)))
            .collect();
        let big_o = format!(
            "O({})",
            if sign * self.prec == 0 {
                "1".to_string()
            } else {
                monomial(var, sign * self.prec)
            }
        );
        if terms.is_empty() {
            return big_o;
        }
        let body = render_terms(f, terms.iter().map(|(c, m)| (*c, m.as_str())));
        format!("{body} + {big_o}")
    }
}

/// The positive part `π^exponent · unit` of a nonzero element, with
/// `unit` a 1-unit.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PositivePart {
    pub exponent: Ratio<i64>,
    pub unit: LocalElement,
}

impl PositivePart {
    pub fn one(field: &LocalField, prec: i64) -> PositivePart {
        PositivePart {
            exponent: Ratio::from_integer(0),
            unit: field.one(prec),
        }
    }

    pub fn place(&self) -> &Place {
        self.unit.place()
    }

    pub fn mul(&self, o: &PositivePart) -> PositivePart {
        PositivePart {
            exponent: self.exponent + o.exponent,
            unit: self.unit.mul(&o.unit),
        }
    }

    pub fn inv(&self) -> PositivePart {
        PositivePart {
            exponent: -self.exponent,
            unit: self.unit.inv().expect("1-unit"),
        }
    }

    pub fn pow(&self, e: i64) -> PositivePart {
        PositivePart {
            exponent: self.exponent * e,
            unit: self.unit.pow(e),
        }
    }

    /// Rational power with exponent denominator prime to p.
    pub fn zp_power(&self, a: Ratio<i64>) -> Result<PositivePart> {
        Ok(PositivePart {
            exponent: self.exponent * a,
            unit: zp_power(&self.unit, a)?,
        })
    }

    pub fn agrees_with(&self, o: &PositivePart) -> bool {
        self.exponent == o.exponent && self.unit.agrees_with(&o.unit)
    }

    /// Render as `π^e · u`. Integral exponents are folded into the series.
    pub fn render(&self) -> String {
        if self.exponent.is_integer() {
            return self.unit.shift(*self.exponent.numer()).render();
        }
        let var = self.unit.field().variable();
        let e = if self.place().is_infinite() {
            -self.exponent
        } else {
            self.exponent
        };
        format!("{var}^({e}) * ({})", self.unit.render())
    }
}

impl fmt::Display for PositivePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Strip the leading residue-field coefficient.
pub fn positive_part(x: &LocalElement) -> Result<PositivePart> {
    let lead = x.lead().ok_or_else(|| {
        Error::Precision("positive part of an element that is zero to precision".into())
    })?;
    let inv = x.field.residue().inv(lead).expect("nonzero lead");
    let unit = x.scale(inv).shift(-x.val);
    Ok(PositivePart {
        exponent: Ratio::from_integer(x.val),
        unit,
    })
}

/// `u^a` for a 1-unit `u` and a rational `a` whose denominator is prime to p,
/// via the p-adic digits of `a`: `u^a = Π Frob^i(u)^(a_i)`.
pub fn zp_power(u: &LocalElement, a: Ratio<i64>) -> Result<LocalElement> {
    if !u.is_one_unit() {
        return Err(Error::Precondition("zp_power needs a 1-unit".into()));
    }
    let p = u.field.characteristic() as i128;
    if *a.denom() as i128 % p == 0 {
        return Err(Error::Precondition(format!(
            "denominator of exponent {a} divisible by p = {p}"
        )));
    }
    let n = u.prec;
    if a.is_integer() && *a.numer() >= 0 && *a.numer() < p as i64 {
        return Ok(u.pow(*a.numer()));
    }
    // p^m >= n, so digits beyond m only touch exponents >= n
    let mut m = 0u32;
    let mut pm: i128 = 1;
    while pm < n as i128 {
        pm *= p;
        m += 1;
    }
    let den = (*a.denom() as i128).rem_euclid(pm);
    let den_inv = mod_inverse(den, pm).expect("denominator prime to p");
    let mut r = ((*a.numer() as i128).rem_euclid(pm) * den_inv).rem_euclid(pm);
    let mut acc = u.field.one(n);
    for i in 0..m {
        let d = (r % p) as i64;
        r /= p;
        if d == 0 {
            continue;
        }
        let fb = u.frobenius(i).with_prec(n);
        let mut term = fb.clone();
        for _ in 1..d {
            term = term.mul(&fb);
        }
        acc = acc.mul(&term);
    }
    Ok(acc.with_prec(n))
}

fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    let (mut old_r, mut r) = (a, m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m))
}

/// Whether the 1-unit `u` is a `p^n`-th power of a 1-unit, to its precision.
///
/// Returns `Ok(false)` as soon as a known nonzero exponent is not divisible
/// by `p^n`, `Ok(true)` when all known exponents are divisible and the
/// precision exceeds `p^n` times the first nonzero offset (or `u` is 1 to
/// its precision), and a precision error otherwise.
pub fn pth_power_test(u: &LocalElement, n: u32) -> Result<bool> {
    if !u.is_one_unit() {
        return Err(Error::Precondition("power test needs a 1-unit".into()));
    }
    let m = (u.field.characteristic() as i64).pow(n);
    let mut first = None;
    for (e, _) in u.terms().skip(1) {
        if e % m != 0 {
            return Ok(false);
        }
        first.get_or_insert(e);
    }
    match first {
        None => Ok(true),
        Some(j0) if u.prec > m * j0 => Ok(true),
        Some(j0) => Err(Error::Precision(format!(
            "power test with p^N = {m} needs precision > {} (have {})",
            m * j0,
            u.prec
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_ratfunc;

    fn f3() -> Fq {
        Fq::prime(3).unwrap()
    }

    fn at_t(f: &Fq) -> LocalField {
        LocalField::new(&Place::t(f), f).unwrap()
    }

    #[test]
    fn geometric_series() {
        let f = f3();
        let k = at_t(&f);
        let x = k.expand(&parse_ratfunc("1/(1-t)", &f).unwrap(), 4);
        assert_eq!(x.render(), "1 + t + t^2 + t^3 + O(t^4)");
    }

    #[test]
    fn expansions_at_infinity_and_t() {
        let f = f3();
        let x = parse_ratfunc("t^2 - 1", &f).unwrap();
        let inf = LocalField::new(&Place::infinity(), &f).unwrap();
        let e = inf.expand(&x, 5);
        assert_eq!(e.lead_exponent(), -2);
        assert_eq!(
            e.terms().collect::<Vec<_>>(),
            vec![(-2, f.one()), (0, f.from_i64(-1))]
        );
        assert_eq!(e.prec(), 3);
        let e = at_t(&f).expand(&x, 5);
        assert_eq!(e.render(), "-1 + t^2 + O(t^5)");
    }

    #[test]
    fn degree_two_place_roundtrip() {
        let f = f3();
        let v = Place::parse("t^2 - t - 1", &f).unwrap();
        let k = LocalField::new(&v, &f).unwrap();
        assert_eq!(k.residue().order(), 9);
        // π_v itself expands to exactly π
        let e = k.expand(&parse_ratfunc("t^2 - t - 1", &f).unwrap(), 10);
        assert_eq!(e.terms().collect::<Vec<_>>(), vec![(1, f.one())]);
        let a = parse_ratfunc("(t+1)/(t^3 - t - 1)", &f).unwrap();
        let b = parse_ratfunc("t^5 + t", &f).unwrap();
        let ea = k.expand(&a, 12);
        let eb = k.expand(&b, 12);
        assert!(ea.mul(&eb).agrees_with(&k.expand(&a.mul_ref(&b), 12)));
        assert!(ea.add(&eb).agrees_with(&k.expand(&a.add_ref(&b), 12)));
    }

    #[test]
    fn extension_constant_field_place() {
        let f9 = Fq::new(&FieldSpec::extension(3, vec![1, 0, 1])).unwrap();
        // a + 1 has order 8 in F_9^x, so it is not a square
        let v = Place::parse("t^2 - a - 1", &f9).unwrap();
        let k = LocalField::new(&v, &f9).unwrap();
        assert_eq!(k.residue().order(), 81);
        let x = parse_ratfunc("a*t + 1", &f9).unwrap();
        let y = parse_ratfunc("t^3 - a*t^2 + 2", &f9).unwrap();
        let prod = k.expand(&x, 8).mul(&k.expand(&y, 8));
        assert!(prod.agrees_with(&k.expand(&x.mul_ref(&y), 8)));
        let e = k.expand(&parse_ratfunc("t^2 - a - 1", &f9).unwrap(), 6);
        assert_eq!(e.terms().collect::<Vec<_>>(), vec![(1, k.residue().one())]);
    }

    #[test]
    fn positive_part_strips_lead() {
        let f = f3();
        let k = at_t(&f);
        let x = k.expand(&parse_ratfunc("2*t^3 + 2*t^4", &f).unwrap(), 10);
        let pp = positive_part(&x).unwrap();
        assert_eq!(pp.exponent, Ratio::from_integer(3));
        assert_eq!(pp.unit.render(), "1 + t + O(t^10)");
        let c = positive_part(&k.constant(f.from_i64(2), 5)).unwrap();
        assert_eq!(c.exponent, Ratio::from_integer(0));
        assert_eq!(c.unit.render(), "1 + O(t^5)");
    }

    #[test]
    fn zp_power_examples() {
        let f = f3();
        let k = at_t(&f);
        let u = k.expand(&parse_ratfunc("1 + t", &f).unwrap(), 20);
        assert_eq!(zp_power(&u, Ratio::from_integer(1)).unwrap(), u);
        let sq = u.mul(&u);
        assert!(zp_power(&sq, Ratio::new(1, 2)).unwrap().agrees_with(&u));
        let r = zp_power(&u, Ratio::new(1, 2)).unwrap();
        assert!(r.mul(&r).agrees_with(&u));
        assert_eq!(r.prec(), 20);
        assert!(zp_power(&u, Ratio::new(1, 3)).is_err());
    }

    /// Lucas-theorem oracle: `(1+x)^a = Σ C(a,k) x^k` with `C(a,k) mod p`
    /// the product of digitwise binomials.
    fn lucas_power(k: &LocalField, x: &LocalElement, a_digits: &[u64], n: i64) -> LocalElement {
        let f = k.residue();
        let p = f.characteristic() as u64;
        let binom_small = |a: u64, b: u64| -> u64 {
            if b > a {
                return 0;
            }
            let mut r = 1u64;
            for i in 0..b {
                r = r * (a - i) / (i + 1);
            }
            r % p
        };
        let mut acc = k.zero(n);
        let mut xk = k.one(n);
        for kk in 0..n as u64 {
            let mut c = 1u64;
            let mut kd = kk;
            for &ad in a_digits {
                c = c * binom_small(ad, kd % p) % p;
                kd /= p;
            }
            if kd > 0 {
                c = 0;
            }
            acc = acc.add(&xk.scale(f.from_i64(c as i64)));
            xk = xk.mul(x).with_prec(n);
        }
        acc
    }

    #[test]
    fn zp_power_matches_lucas_oracle() {
        let f = f3();
        let k = at_t(&f);
        let x = k
            .expand(&parse_ratfunc("t + t^2 - t^5", &f).unwrap(), 30)
            .with_prec(27);
        let u = k.one(27).add(&x);
        // a = -1/2 in Z_3: 1/2 = ...1112 (base 3), so -1/2 = 1 + 3 + 9 + ... = digits all 1
        let digits = vec![1u64; 3];
        let expect = lucas_power(&k, &x, &digits, 27);
        assert!(zp_power(&u, Ratio::new(-1, 2))
            .unwrap()
            .agrees_with(&expect));
    }

    #[test]
    fn power_test_cases() {
        let f = f3();
        let k = at_t(&f);
        assert!(pth_power_test(&k.one(10), 5).unwrap());
        let u = k.expand(&parse_ratfunc("1 + t", &f).unwrap(), 10);
        assert!(!pth_power_test(&u, 1).unwrap());
        let c = k.expand(&parse_ratfunc("1 + t^3", &f).unwrap(), 4);
        assert!(matches!(pth_power_test(&c, 1), Err(Error::Precision(_))));
        let c = k.expand(&parse_ratfunc("1 + t^3", &f).unwrap(), 20);
        assert!(pth_power_test(&c, 1).unwrap());
        assert!(!pth_power_test(&c, 2).unwrap());
    }

    #[test]
    fn frobenius_and_pow() {
        let f = f3();
        let k = at_t(&f);
        let x = k.expand(&parse_ratfunc("(1 + t)/(1 - t^2)", &f).unwrap(), 10);
        let cube = x.mul(&x).mul(&x);
        assert_eq!(x.frobenius(1).prec(), 30);
        assert!(x.frobenius(1).agrees_with(&cube));
        let y = x.pow(7);
        let mut z = x.clone();
        for _ in 1..7 {
            z = z.mul(&x);
        }
        assert!(y.agrees_with(&z));
        assert!(x.pow(-2).mul(&x.pow(2)).agrees_with(&k.one(10)));
    }

    #[test]
    fn infinity_rendering() {
        let f = f3();
        let inf = LocalField::new(&Place::infinity(), &f).unwrap();
        let x = inf.expand(&parse_ratfunc("t^12 - t^11 + t^10", &f).unwrap(), 8);
        assert_eq!(x.render(), "t^12 - t^11 + t^10 + O(t^4)");
    }
}
