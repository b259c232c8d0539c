//! Truncated Laurent series in the formal parameter `z` over a coefficient
//! domain: exact rational functions or elements of a completion.

use std::fmt;

use crate::error::{Error, Result};
use crate::local::LocalElement;
use crate::ratfunc::RatFunc;

/// Coefficient domains for [`TruncSeries`].
///
/// Constructors ending in `_like` produce values in the same domain as
/// `self` (same field, and for local elements the same precision).
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn int_like(&self, n: i64) -> Self;
    /// True for zero (zero to precision in the local domain).
    fn vanishes(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn inverse(&self) -> Option<Self>;
    /// `c -> c^(p^k)`.
    fn frob(&self, k: u32) -> Self;
    fn characteristic(&self) -> u32;
}

impl Coeff for RatFunc {
    fn zero_like(&self) -> Self {
        RatFunc::zero(self.field())
    }
    fn one_like(&self) -> Self {
        RatFunc::one(self.field())
    }
    fn int_like(&self, n: i64) -> Self {
        RatFunc::from_i64(self.field(), n)
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn plus(&self, o: &Self) -> Self {
        self.add_ref(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub_ref(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul_ref(o)
    }
    fn negate(&self) -> Self {
        self.neg_ref()
    }
    fn inverse(&self) -> Option<Self> {
        self.inv()
    }
    fn frob(&self, k: u32) -> Self {
        self.frobenius(k)
    }
    fn characteristic(&self) -> u32 {
        self.field().characteristic()
    }
}

impl Coeff for LocalElement {
    fn zero_like(&self) -> Self {
        LocalElement::zero_like(self)
    }
    fn one_like(&self) -> Self {
        self.field().one(self.prec())
    }
    fn int_like(&self, n: i64) -> Self {
        LocalElement::int_like(self, n)
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn negate(&self) -> Self {
        self.neg()
    }
    fn inverse(&self) -> Option<Self> {
        self.inv()
    }
    fn frob(&self, k: u32) -> Self {
        // Frobenius gains precision; keep vectors short by capping at the
        // input precision, which is all any other operand carries anyway
        self.frobenius(k).with_prec(self.prec())
    }
    fn characteristic(&self) -> u32 {
        self.field().characteristic()
    }
}

/// Precision used for series that are exact (polynomials in `z`).
pub const EXACT: i64 = i64::MAX / 8;

fn cap(x: i64) -> i64 {
    x.min(EXACT)
}

/// `Σ coeffs[i] z^(val+i) + O(z^prec)`. The leading stored coefficient is
/// nonzero; the zero series has no coefficients and `val == prec`.
#[derive(Clone, PartialEq)]
pub struct TruncSeries<C: Coeff> {
    zero: C,
    val: i64,
    coeffs: Vec<C>,
    prec: i64,
}

impl<C: Coeff> fmt::Debug for TruncSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TruncSeries(val={}, prec={}, {:?})",
            self.val, self.prec, self.coeffs
        )
    }
}

impl<C: Coeff> TruncSeries<C> {
    /// `Σ coeffs[i] z^(val+i) + O(z^prec)`; `template` fixes the domain.
    pub fn new(template: &C, val: i64, coeffs: Vec<C>, prec: i64) -> Self {
        let mut s = TruncSeries {
            zero: template.zero_like(),
            val,
            coeffs,
            prec: cap(prec),
        };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let k = self.coeffs.iter().position(|c| !c.vanishes());
        match k {
            Some(k) if self.val + (k as i64) < self.prec => {
                self.coeffs.drain(..k);
                self.val += k as i64;
                let len = (self.prec - self.val).min(self.coeffs.len() as i64) as usize;
                self.coeffs.truncate(len);
                while self.coeffs.last().is_some_and(|c| c.vanishes()) {
                    self.coeffs.pop();
                }
            }
            _ => {
                self.coeffs.clear();
                self.val = self.prec;
            }
        }
    }

    pub fn zero(template: &C, prec: i64) -> Self {
        TruncSeries::new(template, prec, Vec::new(), prec)
    }

    /// The constant `c` (exact in `z`).
    pub fn constant(c: C) -> Self {
        let z = c.zero_like();
        TruncSeries::new(&z, 0, vec![c], EXACT)
    }

    pub fn one(template: &C) -> Self {
        TruncSeries::constant(template.one_like())
    }

    /// `c z^e` (exact in `z`).
    pub fn monomial(c: C, e: i64) -> Self {
        let z = c.zero_like();
        TruncSeries::new(&z, e, vec![c], EXACT)
    }

    /// The parameter `z` itself.
    pub fn var(template: &C) -> Self {
        TruncSeries::monomial(template.one_like(), 1)
    }

    /// Build from `(exponent, coefficient)` pairs.
    pub fn from_terms(template: &C, terms: &[(i64, C)], prec: i64) -> Self {
        if terms.is_empty() {
            return TruncSeries::zero(template, prec);
        }
        let lo = terms.iter().map(|(e, _)| *e).min().unwrap();
        let hi = terms.iter().map(|(e, _)| *e).max().unwrap();
        let mut coeffs = vec![template.zero_like(); (hi - lo + 1) as usize];
        for (e, c) in terms {
            let i = (e - lo) as usize;
            coeffs[i] = coeffs[i].plus(c);
        }
        TruncSeries::new(template, lo, coeffs, prec)
    }

    pub fn template(&self) -> &C {
        &self.zero
    }

    /// Leading exponent (`prec` for the zero series).
    pub fn val(&self) -> i64 {
        self.val
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lead(&self) -> Option<&C> {
        self.coeffs.first()
    }

    pub fn coeff(&self, e: i64) -> C {
        let i = e - self.val;
        if i < 0 || i as usize >= self.coeffs.len() {
            self.zero.clone()
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    /// Nonzero terms in increasing order of exponent.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.vanishes())
            .map(move |(i, c)| (self.val + i as i64, c))
    }

    /// Lower the precision to `prec` (no-op if already lower).
    pub fn with_prec(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        TruncSeries::new(&self.zero, self.val, self.coeffs.clone(), prec)
    }

    /// Claim precision `prec` with all unknown coefficients taken as zero.
    /// Used to seed Newton iterations.
    pub fn with_claimed_prec(&self, prec: i64) -> Self {
        let mut s = self.clone();
        if s.is_zero() {
            s.val = prec;
        }
        s.prec = cap(prec);
        s.normalize();
        s
    }

    /// Apply a coefficient map that preserves exponents.
    pub fn map_coeffs<D: Coeff>(&self, zero: &D, f: impl Fn(&C) -> D) -> TruncSeries<D> {
        TruncSeries::new(
            zero,
            self.val,
            self.coeffs.iter().map(f).collect(),
            self.prec,
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        let prec = self.prec.min(o.prec);
        let val = self.val.min(o.val);
        if val >= prec {
            return TruncSeries::zero(&self.zero, prec);
        }
        let end = |s: &Self| {
            if s.is_zero() {
                i64::MIN
            } else {
                s.val + s.coeffs.len() as i64
            }
        };
        let hi = end(self).max(end(o)).min(prec);
        let len = (hi - val).max(0) as usize;
        let mut c = vec![self.zero.clone(); len];
        for s in [self, o] {
            let off = (s.val - val) as usize;
            for (i, a) in s.coeffs.iter().enumerate() {
                if off + i >= len {
                    break;
                }
                c[off + i] = c[off + i].plus(a);
            }
        }
        TruncSeries::new(&self.zero, val, c, prec)
    }

    pub fn neg(&self) -> Self {
        TruncSeries {
            zero: self.zero.clone(),
            val: self.val,
            coeffs: self.coeffs.iter().map(|c| c.negate()).collect(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let prec = cap((self.val.saturating_add(o.prec)).min(o.val.saturating_add(self.prec)));
        if self.is_zero() || o.is_zero() {
            return TruncSeries::zero(&self.zero, prec);
        }
        let val = self.val + o.val;
        if val >= prec {
            return TruncSeries::zero(&self.zero, prec);
        }
        let n = ((prec - val) as usize).min(self.coeffs.len() + o.coeffs.len() - 1);
        let mut c = vec![self.zero.clone(); n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            if a.vanishes() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n - i) {
                if b.vanishes() {
                    continue;
                }
                c[i + j] = c[i + j].plus(&a.times(b));
            }
        }
        TruncSeries::new(&self.zero, val, c, prec)
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    /// Multiply every coefficient by `c`.
    pub fn scale(&self, c: &C) -> Self {
        TruncSeries::new(
            &self.zero,
            self.val,
            self.coeffs.iter().map(|a| a.times(c)).collect(),
            self.prec,
        )
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        TruncSeries {
            zero: self.zero.clone(),
            val: self.val + k,
            coeffs: self.coeffs.clone(),
            prec: cap(self.prec.saturating_add(k)),
        }
    }

    /// Multiplicative inverse; the leading coefficient must be invertible.
    pub fn inverse(&self) -> Result<Self> {
        let lead = self.lead().ok_or(Error::DivisionByZero)?;
        let inv0 = lead.inverse().ok_or_else(|| {
            Error::Precondition("series leading coefficient is not invertible".into())
        })?;
        if self.prec >= EXACT && self.coeffs.len() > 1 {
            return Err(Error::Precondition(
                "inverse of an exact series needs a precision".into(),
            ));
        }
        let prec = if self.prec >= EXACT {
            EXACT
        } else {
            self.prec - 2 * self.val
        };
        let n = if self.prec >= EXACT {
            1
        } else {
            (self.prec - self.val) as usize
        };
        // b_0 = 1/a_0, b_k = -b_0 Σ_{i=1..k} a_i b_{k-i}
        let mut b: Vec<C> = Vec::with_capacity(n);
        b.push(inv0.clone());
        for k in 1..n {
            let mut acc = self.zero.clone();
            for i in 1..=k.min(self.coeffs.len() - 1) {
                let a = &self.coeffs[i];
                if a.vanishes() || b[k - i].vanishes() {
                    continue;
                }
                acc = acc.plus(&a.times(&b[k - i]));
            }
            b.push(acc.times(&inv0).negate());
        }
        Ok(TruncSeries::new(&self.zero, -self.val, b, prec))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inverse()?))
    }

    /// `self^e` for any integer `e` (negative powers need an invertible lead).
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inverse()?.pow(-e);
        }
        let mut acc = TruncSeries::one(&self.zero);
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        Ok(acc)
    }

    /// Coefficientwise `c -> c^(p^k)`.
    pub fn frobenius_twist(&self, k: u32) -> Self {
        if k == 0 {
            return self.clone();
        }
        TruncSeries::new(
            &self.zero,
            self.val,
            self.coeffs.iter().map(|c| c.frob(k)).collect(),
            self.prec,
        )
    }

    /// Substitute `z -> z^m`.
    pub fn expand_exponents(&self, m: i64) -> Self {
        assert!(m >= 1);
        if m == 1 || self.is_zero() {
            return TruncSeries::zero(&self.zero, cap(self.prec.saturating_mul(m))).add(self);
        }
        let mut c = vec![self.zero.clone(); (self.coeffs.len() - 1) * m as usize + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            c[i * m as usize] = a.clone();
        }
        TruncSeries::new(
            &self.zero,
            self.val * m,
            c,
            cap(self.prec.saturating_mul(m)),
        )
    }

    /// `self^(p^k)` in characteristic p: twist then expand exponents.
    pub fn frobenius_power(&self, k: u32) -> Self {
        let q = (self.zero.characteristic() as i64).pow(k);
        self.frobenius_twist(k).expand_exponents(q)
    }

    /// Write `self = g(z^(p^n))` and return `g`.
    pub fn descend(&self, n: u32) -> Result<Self> {
        let m = (self.zero.characteristic() as i64).pow(n);
        for (e, _) in self.terms() {
            if e.rem_euclid(m) != 0 {
                return Err(Error::Precondition(format!(
                    "exponent {e} is not divisible by {m}"
                )));
            }
        }
        if self.is_zero() {
            return Ok(TruncSeries::zero(&self.zero, div_ceil(self.prec, m)));
        }
        let c: Vec<C> = self.coeffs.iter().step_by(m as usize).cloned().collect();
        let prec = if self.prec >= EXACT {
            EXACT
        } else {
            div_ceil(self.prec, m)
        };
        Ok(TruncSeries::new(&self.zero, self.val / m, c, prec))
    }

    /// Formal derivative `d/dz`.
    pub fn derivative(&self) -> Self {
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a.times(&a.int_like(self.val + i as i64)))
            .collect();
        TruncSeries::new(
            &self.zero,
            self.val - 1,
            c,
            cap(self.prec.saturating_sub(1)),
        )
    }

    /// `self(g)` for `g` with positive valuation. Negative exponents of
    /// `self` require an invertible leading coefficient of `g`.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if g.val <= 0 {
            return Err(Error::Precondition(
                "composition needs an inner series of positive valuation".into(),
            ));
        }
        if self.is_zero() {
            return Ok(TruncSeries::zero(
                &self.zero,
                cap(self.prec.saturating_mul(g.val)),
            ));
        }
        // self = z^val * h(z), h a power series known mod z^(prec - val)
        let hlen = (self.prec - self.val).min(EXACT);
        let target = if hlen >= EXACT {
            EXACT
        } else {
            cap(hlen * g.val)
        };
        let inner = g.with_prec(target);
        let mut acc = TruncSeries::zero(&self.zero, EXACT);
        for c in self.coeffs.iter().rev() {
            acc = acc
                .mul(&inner)
                .with_prec(target)
                .add(&TruncSeries::constant(c.clone()));
        }
        let acc = acc.with_prec(target);
        let outer = g.pow(self.val)?;
        Ok(acc.mul(&outer))
    }

    /// Compositional inverse of a series `c z + ...` with `c` invertible,
    /// computed by Newton iteration: `h <- h - (g(h) - z) / g'(h)`.
    pub fn compositional_inverse(&self) -> Result<Self> {
        if self.val != 1 {
            return Err(Error::Precondition(
                "compositional inverse needs valuation 1".into(),
            ));
        }
        let c = self.lead().unwrap();
        let cinv = c
            .inverse()
            .ok_or_else(|| Error::Precondition("leading coefficient is not a unit".into()))?;
        let target = self.prec;
        let z = TruncSeries::var(&self.zero);
        let dg = self.derivative();
        let mut h = TruncSeries::monomial(cinv, 1).with_prec(2.min(target));
        let mut have = 2.min(target);
        while have < target {
            let next = if target >= EXACT {
                return Err(Error::Precondition(
                    "inverse of an exact series needs a precision".into(),
                ));
            } else {
                (2 * have).min(target)
            };
            let hk = h.with_claimed_prec(next);
            let resid = self.with_prec(next).compose(&hk)?.sub(&z).with_prec(next);
            let slope = dg.compose(&hk)?.with_prec(next - 1);
            let step = resid.div(&slope)?;
            h = hk.sub(&step).with_prec(next);
            have = next;
        }
        Ok(h)
    }

    /// Only odd exponents occur.
    pub fn is_odd(&self) -> bool {
        self.terms().all(|(e, _)| e.rem_euclid(2) == 1)
    }
}

fn div_ceil(a: i64, m: i64) -> i64 {
    (a + m - 1).div_euclid(m)
}

impl TruncSeries<RatFunc> {
    /// Re-expand every coefficient in a completion, at absolute precision
    /// `abs_prec`.
    pub fn localize(
        &self,
        field: &crate::local::LocalField,
        abs_prec: i64,
    ) -> TruncSeries<LocalElement> {
        let zero = field.zero(abs_prec);
        self.map_coeffs(&zero, |c| field.expand_abs(c, abs_prec))
    }

    /// Text rendering with coefficients in the expression grammar:
    /// `z - (t^2 - 1)*z^3 + ... + O(z^9)`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (e, c) in self.terms() {
            let mono = match e {
                0 => String::new(),
                1 => "z".to_string(),
                _ => format!("z^{e}"),
            };
            let (neg, body) = render_ratfunc_term(c);
            let term = match (body.as_str(), mono.is_empty()) {
                ("1", false) => mono,
                (_, true) => body,
                _ => format!("{body}*{mono}"),
            };
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&term);
        }
        if self.prec < EXACT {
            let o = match self.prec {
                0 => "O(1)".to_string(),
                1 => "O(z)".to_string(),
                n => format!("O(z^{n})"),
            };
            if out.is_empty() {
                out = o;
            } else {
                out.push_str(" + ");
                out.push_str(&o);
            }
        } else if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Split a coefficient into (negated?, body) so that sums read
/// `a - b*z^k` rather than `a + (-b)*z^k`.
fn render_ratfunc_term(c: &RatFunc) -> (bool, String) {
    let neg = c.neg_ref();
    let plain = c.to_string();
    let flipped = neg.to_string();
    let leads_neg = |s: &str| s.starts_with('-') || s.starts_with("(-");
    let (is_neg, shown, value) = if leads_neg(&plain) && !leads_neg(&flipped) {
        (true, flipped, neg)
    } else {
        (false, plain, c.clone())
    };
    let atomic = value.is_polynomial() && value.num().term_count() <= 1 && !shown.contains('*');
    let body = if atomic || !value.is_polynomial() && value.num().term_count() <= 1 {
        shown
    } else {
        format!("({shown})")
    };
    (is_neg, body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::Fq;
    use crate::parse::parse_ratfunc;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s, &Fq::prime(3).unwrap()).unwrap()
    }

    fn series(terms: &[(i64, &str)], prec: i64) -> TruncSeries<RatFunc> {
        let t: Vec<(i64, RatFunc)> = terms.iter().map(|(e, s)| (*e, rf(s))).collect();
        TruncSeries::from_terms(&rf("0"), &t, prec)
    }

    #[test]
    fn inverse_and_mul() {
        let s = series(&[(0, "1"), (1, "t"), (3, "1/(t+1)")], 10);
        let inv = s.inverse().unwrap();
        let one = s.mul(&inv);
        assert_eq!(one.terms().count(), 1);
        assert_eq!(one.prec(), 10);
        let lau = series(&[(-2, "t"), (0, "1")], 6);
        let li = lau.inverse().unwrap();
        assert_eq!(li.val(), 2);
        assert_eq!(li.prec(), 10);
        assert!(lau.mul(&li).sub(&TruncSeries::one(&rf("0"))).is_zero());
    }

    #[test]
    fn descend_cases() {
        let s = series(&[(3, "t"), (6, "1"), (-3, "2")], 13);
        let d = s.descend(1).unwrap();
        assert_eq!(d.val(), -1);
        assert_eq!(d.coeff(1), rf("t"));
        assert_eq!(d.coeff(2), rf("1"));
        assert_eq!(d.prec(), 5);
        assert_eq!(d.expand_exponents(3).with_prec(13), s);
        let bad = series(&[(1, "1"), (2, "1")], 10);
        match bad.descend(1) {
            Err(Error::Precondition(m)) => assert!(m.contains("exponent 1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn compositional_inverse_linear_and_general() {
        let g = series(&[(1, "t")], 12);
        let h = g.compositional_inverse().unwrap();
        assert_eq!(h.terms().count(), 1);
        assert_eq!(h.coeff(1), rf("1/t"));
        let g = series(&[(1, "t^2 - 1"), (2, "t"), (4, "1"), (5, "t^3")], 12);
        let h = g.compositional_inverse().unwrap();
        let id = g.compose(&h).unwrap();
        assert_eq!(id.with_prec(12), TruncSeries::var(&rf("0")).with_prec(12));
        // Lagrange: h = z/c - (g2/c^3) z^2 + ...
        assert_eq!(h.coeff(1), rf("1/(t^2-1)"));
        assert_eq!(h.coeff(2), rf("-t/(t^2-1)^3"));
    }

    #[test]
    fn frobenius_power_is_pth_power() {
        let s = series(&[(0, "1"), (1, "t"), (2, "1/(t-1)")], 8);
        let cube = s.mul(&s).mul(&s);
        let fp = s.frobenius_power(1);
        assert_eq!(fp.prec(), 24);
        assert_eq!(fp.with_prec(8), cube);
    }

    #[test]
    fn render_style() {
        let s = series(
            &[
                (1, "1"),
                (3, "-(t^2-1)"),
                (5, "(t-1)^2*(t^2-t-1)^2/(t^2-1)"),
                (7, "-(t^11+t^9+t^5-t^2-1)/(t+1)^6"),
            ],
            9,
        );
        let text = s.render();
        assert!(text.starts_with("z - (t^2 - 1)*z^3 + "), "{text}");
        assert!(text.ends_with(" + O(z^9)"), "{text}");
        assert_eq!(
            TruncSeries::var(&rf("0")).with_prec(2).render(),
            "z + O(z^2)"
        );
    }
}
