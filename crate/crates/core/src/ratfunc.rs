//! Rational functions in `F_q(t)`, always kept reduced with monic denominator.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::fq::{Fq, FqElem};
use crate::poly::Poly;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFunc({})", self)
    }
}

impl RatFunc {
    /// `num/den` in lowest terms. Fails if `den` is zero.
    pub fn new(num: Poly, den: Poly) -> Result<RatFunc> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RatFunc::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> RatFunc {
        if num.is_zero() {
            let f = den.field().clone();
            return RatFunc {
                num,
                den: Poly::one(&f),
            };
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g), den.div_exact(&g))
        };
        if !den.is_monic() {
            let inv = den.field().inv(den.lead()).expect("nonzero");
            num = num.scale(inv);
            den = den.scale(inv);
        }
        RatFunc { num, den }
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        let one = Poly::one(p.field());
        RatFunc { num: p, den: one }
    }

    pub fn zero(field: &Fq) -> RatFunc {
        RatFunc::from_poly(Poly::zero(field))
    }

    pub fn one(field: &Fq) -> RatFunc {
        RatFunc::from_poly(Poly::one(field))
    }

    pub fn constant(field: &Fq, c: FqElem) -> RatFunc {
        RatFunc::from_poly(Poly::constant(field, c))
    }

    pub fn from_i64(field: &Fq, n: i64) -> RatFunc {
        RatFunc::constant(field, field.from_i64(n))
    }

    pub fn t(field: &Fq) -> RatFunc {
        RatFunc::from_poly(Poly::t(field))
    }

    /// `t^k` for any integer `k`.
    pub fn t_pow(field: &Fq, k: i64) -> RatFunc {
        let m = Poly::monomial(field, field.one(), k.unsigned_abs() as usize);
        if k >= 0 {
            RatFunc::from_poly(m)
        } else {
            RatFunc {
                num: Poly::one(field),
                den: m,
            }
        }
    }

    #[inline]
    pub fn num(&self) -> &Poly {
        &self.num
    }

    #[inline]
    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn field(&self) -> &Fq {
        self.num.field()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.is_polynomial() && self.num.is_constant()
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        self.is_polynomial().then_some(&self.num)
    }

    /// `deg(num) - deg(den)`, i.e. `-ord_inf`; `None` for zero.
    pub fn degree(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.num.deg() - self.den.deg())
    }

    pub fn add_ref(&self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::reduce(self.num.add_ref(&o.num), self.den.clone());
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        let num = self.num.mul_ref(&o.den).add_ref(&o.num.mul_ref(&self.den));
        RatFunc::reduce(num, self.den.mul_ref(&o.den))
    }

    pub fn sub_ref(&self, o: &RatFunc) -> RatFunc {
        self.add_ref(&o.neg_ref())
    }

    pub fn neg_ref(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg_ref(),
            den: self.den.clone(),
        }
    }

    pub fn mul_ref(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero(self.field());
        }
        // cross-cancel first to keep the gcds small
        let g1 = self.num.gcd(&o.den);
        let g2 = o.num.gcd(&self.den);
        let n1 = if g1.is_one() {
            self.num.clone()
        } else {
            self.num.div_exact(&g1)
        };
        let d2 = if g1.is_one() {
            o.den.clone()
        } else {
            o.den.div_exact(&g1)
        };
        let n2 = if g2.is_one() {
            o.num.clone()
        } else {
            o.num.div_exact(&g2)
        };
        let d1 = if g2.is_one() {
            self.den.clone()
        } else {
            self.den.div_exact(&g2)
        };
        let num = n1.mul_ref(&n2);
        let den = d1.mul_ref(&d2);
        if den.is_monic() {
            RatFunc { num, den }
        } else {
            RatFunc::reduce(num, den)
        }
    }

    pub fn inv(&self) -> Option<RatFunc> {
        if self.is_zero() {
            return None;
        }
        Some(RatFunc::reduce(self.den.clone(), self.num.clone()))
    }

    pub fn div_ref(&self, o: &RatFunc) -> Result<RatFunc> {
        let inv = o.inv().ok_or(Error::DivisionByZero)?;
        Ok(self.mul_ref(&inv))
    }

    pub fn scale(&self, c: FqElem) -> RatFunc {
        if c.is_zero() {
            return RatFunc::zero(self.field());
        }
        RatFunc {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn pow(&self, e: i64) -> RatFunc {
        if e < 0 {
            let inv = self.inv().expect("negative power of zero");
            return inv.pow(-e);
        }
        RatFunc {
            num: self.num.pow(e as u64),
            den: self.den.pow(e as u64),
        }
    }

    /// Coefficientwise `c -> c^(p^k)` applied to numerator and denominator,
    /// then `t -> t^(p^k)`: this is `x -> x^(p^k)`.
    pub fn frobenius(&self, k: u32) -> RatFunc {
        if k == 0 {
            return self.clone();
        }
        let p = self.field().characteristic() as u64;
        let e = p.pow(k);
        RatFunc {
            num: self.num.pow(e),
            den: self.den.pow(e),
        }
    }

    /// Evaluate at `t = c`; `None` at a pole.
    pub fn eval(&self, c: FqElem) -> Option<FqElem> {
        let f = self.field();
        let d = self.den.eval(c);
        f.div(self.num.eval(c), d)
    }

    /// Render in the input grammar.
    pub fn render_with(&self, var: &str) -> String {
        if self.den.is_one() {
            return self.num.render_with(var);
        }
        format!("{}/{}", paren(&self.num, var), paren(&self.den, var))
    }
}

fn paren(p: &Poly, var: &str) -> String {
    let s = p.render_with(var);
    if p.term_count() <= 1 && !s.starts_with('-') && !s.contains('*') {
        s
    } else {
        format!("({s})")
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with("t"))
    }
}

macro_rules! rf_binop {
    ($tr:ident, $m:ident, $imp:ident) => {
        impl<'a> $tr<&'a RatFunc> for &'a RatFunc {
            type Output = RatFunc;
            fn $m(self, rhs: &'a RatFunc) -> RatFunc {
                self.$imp(rhs)
            }
        }
        impl $tr<RatFunc> for RatFunc {
            type Output = RatFunc;
            fn $m(self, rhs: RatFunc) -> RatFunc {
                (&self).$imp(&rhs)
            }
        }
    };
}

rf_binop!(Add, add, add_ref);
rf_binop!(Sub, sub, sub_ref);
rf_binop!(Mul, mul, mul_ref);

impl<'a> Div<&'a RatFunc> for &'a RatFunc {
    type Output = RatFunc;
    /// # Panics
    /// On division by zero; use [`RatFunc::div_ref`] for a checked version.
    fn div(self, rhs: &'a RatFunc) -> RatFunc {
        self.div_ref(rhs)
            .expect("division by zero rational function")
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        self.neg_ref()
    }
}

impl From<Poly> for RatFunc {
    fn from(p: Poly) -> RatFunc {
        RatFunc::from_poly(p)
    }
}
