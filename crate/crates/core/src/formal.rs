//! The formal group of a Weierstrass model at `O` in the parameter
//! `z = -x/y`, multiplication-by-`m` series and division polynomials.
//!
//! Everything is generic over the coefficient domain so the same code runs
//! with exact coefficients in `F_q(t)` and with coefficients in a completion.

use std::collections::HashMap;

use crate::curve::WeierstrassModel;
use crate::error::{Error, Result};
use crate::local::{LocalElement, LocalField};
use crate::ratfunc::RatFunc;
use crate::series::{Coeff, TruncSeries, EXACT};

type S<C> = TruncSeries<C>;

/// `b2, b4, b6, b8` from `a1..a6` in any coefficient domain.
pub fn b_invariants<C: Coeff>(a: &[C; 5]) -> [C; 4] {
    let [a1, a2, a3, a4, a6] = a;
    let n = |k: i64| a1.int_like(k);
    let b2 = a1.times(a1).plus(&n(4).times(a2));
    let b4 = n(2).times(a4).plus(&a1.times(a3));
    let b6 = a3.times(a3).plus(&n(4).times(a6));
    let b8 = a1
        .times(a1)
        .times(a6)
        .plus(&n(4).times(a2).times(a6))
        .minus(&a1.times(a3).times(a4))
        .plus(&a2.times(a3).times(a3))
        .minus(&a4.times(a4));
    [b2, b4, b6, b8]
}

/// Hasse invariant from the b-invariants (see
/// [`WeierstrassModel::hasse_invariant`]).
pub fn hasse_from_b<C: Coeff>(b: &[C; 4]) -> C {
    let p = b[0].characteristic() as usize;
    let inv = |k: i64| b[0].int_like(k).inverse().expect("p odd");
    let cubic = [
        b[2].times(&inv(4)),
        b[1].times(&inv(2)),
        b[0].times(&inv(4)),
        b[0].one_like(),
    ];
    let mut acc = vec![b[0].one_like()];
    for _ in 0..(p - 1) / 2 {
        let mut next = vec![b[0].zero_like(); acc.len() + 3];
        for (i, x) in acc.iter().enumerate() {
            for (j, y) in cubic.iter().enumerate() {
                next[i + j] = next[i + j].plus(&x.times(y));
            }
        }
        acc = next;
    }
    acc[p - 1].clone()
}

/// A point of the formal group with coefficients in a series ring:
/// `(z, w)` with `w = -1/y`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalPoint<C: Coeff> {
    pub z: S<C>,
    pub w: S<C>,
}

/// The formal expansions `w(z)`, `x(z) = z/w`, `y(z) = -1/w`.
#[derive(Clone, Debug)]
pub struct FormalExpansion<C: Coeff> {
    pub w: S<C>,
    pub x: S<C>,
    pub y: S<C>,
    /// `(ω/dz)(O)`, always 1 for `z = -x/y`.
    pub beta: C,
}

/// The formal group of `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Debug)]
pub struct FormalGroup<C: Coeff> {
    a: [C; 5],
    b: [C; 4],
}

impl FormalGroup<RatFunc> {
    pub fn from_model(e: &WeierstrassModel) -> Self {
        FormalGroup::new(e.a_invariants().clone())
    }

    /// Re-expand the coefficients in a completion at absolute precision `prec`.
    pub fn localize(&self, field: &LocalField, prec: i64) -> FormalGroup<LocalElement> {
        FormalGroup::new(self.a.clone().map(|c| field.expand_abs(&c, prec)))
    }
}

impl<C: Coeff> FormalGroup<C> {
    pub fn new(a: [C; 5]) -> Self {
        let b = b_invariants(&a);
        FormalGroup { a, b }
    }

    pub fn a_invariants(&self) -> &[C; 5] {
        &self.a
    }

    pub fn b_invariants(&self) -> &[C; 4] {
        &self.b
    }

    pub fn characteristic(&self) -> u32 {
        self.a[0].characteristic()
    }

    fn zero(&self) -> C {
        self.a[0].zero_like()
    }

    fn c(&self, k: i64) -> C {
        self.a[0].int_like(k)
    }

    pub fn hasse_invariant(&self) -> C {
        hasse_from_b(&self.b)
    }

    /// The series `z` truncated at `prec`.
    pub fn parameter(&self, prec: i64) -> S<C> {
        S::var(&self.zero()).with_prec(prec)
    }

    /// `G(z, w) = z^3 + a1 zw + a2 z^2 w + a3 w^2 + a4 zw^2 + a6 w^3 - w`.
    fn g(&self, z: &S<C>, w: &S<C>) -> S<C> {
        let [a1, a2, a3, a4, a6] = &self.a;
        let zw = z.mul(w);
        let ww = w.square();
        z.square()
            .mul(z)
            .add(&zw.scale(a1))
            .add(&zw.mul(z).scale(a2))
            .add(&ww.scale(a3))
            .add(&ww.mul(z).scale(a4))
            .add(&ww.mul(w).scale(a6))
            .sub(w)
    }

    /// `∂G/∂w`, a unit near `O`.
    fn g_w(&self, z: &S<C>, w: &S<C>) -> S<C> {
        let [a1, a2, a3, a4, a6] = &self.a;
        let zw = z.mul(w);
        z.scale(a1)
            .add(&z.square().scale(a2))
            .add(&w.scale(&self.c(2).times(a3)))
            .add(&zw.scale(&self.c(2).times(a4)))
            .add(&w.square().scale(&self.c(3).times(a6)))
            .sub(&S::one(&self.zero()))
    }

    /// `∂G/∂z`.
    fn g_z(&self, z: &S<C>, w: &S<C>) -> S<C> {
        let [a1, a2, _, a4, _] = &self.a;
        z.square()
            .scale(&self.c(3))
            .add(&w.scale(a1))
            .add(&z.mul(w).scale(&self.c(2).times(a2)))
            .add(&w.square().scale(a4))
    }

    /// `w(z1)` for a series `z1` of positive valuation, truncated at `prec`
    /// (and at the precision `z1` supports).
    pub fn w_at(&self, z1: &S<C>, prec: i64) -> Result<S<C>> {
        if z1.val() <= 0 {
            return Err(Error::Precondition(
                "formal point must have positive valuation".into(),
            ));
        }
        if z1.is_zero() {
            return Ok(S::zero(&self.zero(), prec.min(z1.prec())));
        }
        let z1 = z1.with_prec(prec);
        let mut w = z1
            .square()
            .mul(&z1)
            .with_claimed_prec(prec.min(4 * z1.val()));
        for _ in 0..64 {
            let next_prec = prec.min(w.prec().saturating_mul(2));
            let wk = w.with_claimed_prec(next_prec);
            let step = self.g(&z1, &wk).div(&self.g_w(&z1, &wk))?;
            let next = wk.sub(&step).with_prec(prec);
            if next == w {
                return Ok(w);
            }
            w = next;
        }
        Err(Error::Internal(
            "Newton iteration for w(z) did not converge".into(),
        ))
    }

    pub fn point(&self, z1: &S<C>, prec: i64) -> Result<FormalPoint<C>> {
        Ok(FormalPoint {
            z: z1.with_prec(prec),
            w: self.w_at(z1, prec)?,
        })
    }

    /// Expansions of `w, x, y` at `O` to `w` precision `prec`.
    pub fn expansion(&self, prec: i64) -> Result<FormalExpansion<C>> {
        let z = self.parameter(prec);
        let w = self.w_at(&z, prec)?;
        let winv = w.inverse()?;
        Ok(FormalExpansion {
            x: z.mul(&winv),
            y: winv.neg(),
            w,
            beta: self.a[0].one_like(),
        })
    }

    /// `-P`.
    pub fn negate(&self, p: &FormalPoint<C>) -> Result<FormalPoint<C>> {
        let [a1, _, a3, _, _] = &self.a;
        let d =
            p.z.scale(a1)
                .add(&p.w.scale(a3))
                .sub(&S::one(&self.zero()))
                .inverse()?;
        Ok(FormalPoint {
            z: p.z.mul(&d),
            w: p.w.mul(&d),
        })
    }

    /// Third intersection of the line `w = λz + ν` through `P1, P2`, negated.
    fn finish_add(
        &self,
        p1: &FormalPoint<C>,
        p2: &FormalPoint<C>,
        lambda: &S<C>,
    ) -> Result<FormalPoint<C>> {
        let [a1, a2, a3, a4, a6] = &self.a;
        let nu = p1.w.sub(&lambda.mul(&p1.z));
        let l2 = lambda.square();
        let a = S::one(&self.zero())
            .add(&lambda.scale(a2))
            .add(&l2.scale(a4))
            .add(&l2.mul(lambda).scale(a6));
        let ln = lambda.mul(&nu);
        // z1 + z2 + z3 = -(a1 λ + a3 λ^2 + a2 ν + 2 a4 λν + 3 a6 λ^2 ν) / A
        let num = lambda
            .scale(a1)
            .add(&l2.scale(a3))
            .add(&nu.scale(a2))
            .add(&ln.scale(&self.c(2).times(a4)))
            .add(&ln.mul(lambda).scale(&self.c(3).times(a6)));
        let z3 = num.div(&a)?.neg().sub(&p1.z).sub(&p2.z);
        let w3 = lambda.mul(&z3).add(&nu);
        self.negate(&FormalPoint { z: z3, w: w3 })
    }

    /// `P + P`: the slope is `dw/dz = -G_z/G_w`.
    pub fn double(&self, p: &FormalPoint<C>) -> Result<FormalPoint<C>> {
        if p.z.is_zero() {
            return Ok(p.clone());
        }
        let lambda = self.g_z(&p.z, &p.w).div(&self.g_w(&p.z, &p.w))?.neg();
        self.finish_add(p, p, &lambda)
    }

    /// `P1 + P2`.
    pub fn add(&self, p1: &FormalPoint<C>, p2: &FormalPoint<C>) -> Result<FormalPoint<C>> {
        if p1.z.is_zero() {
            return Ok(FormalPoint {
                z: p2.z.with_prec(p1.z.prec()),
                w: p2.w.with_prec(p1.w.prec()),
            });
        }
        if p2.z.is_zero() {
            return self.add(p2, p1);
        }
        let dz = p2.z.sub(&p1.z);
        let vmin = p1.z.val().min(p2.z.val());
        let lambda = if dz.is_zero() {
            return self.double(p1);
        } else if !dz.is_zero() && dz.val() == vmin {
            p2.w.sub(&p1.w).div(&dz)?
        } else {
            self.divided_difference(&p1.z, &p2.z)?
        };
        self.finish_add(p1, p2, &lambda)
    }

    /// `(w(z2) - w(z1)) / (z2 - z1)` as `Σ c_k Σ_{i+j=k-1} z1^i z2^j`,
    /// free of cancellation.
    fn divided_difference(&self, z1: &S<C>, z2: &S<C>) -> Result<S<C>> {
        let prec = z1.prec().min(z2.prec());
        let v = z1.val().min(z2.val());
        // terms with (k-1) v >= prec vanish
        let kmax = if v >= prec { 1 } else { (prec + v - 1) / v + 1 };
        let w = self.w_at(&self.parameter(kmax + 1), kmax + 1)?;
        let mut h = S::one(&self.zero());
        let mut z1pow = S::one(&self.zero());
        let mut acc = S::zero(&self.zero(), prec);
        for k in 1..=kmax {
            if k > 1 {
                z1pow = z1pow.mul(z1).with_prec(prec);
                h = h.mul(z2).add(&z1pow).with_prec(prec);
            }
            let ck = w.coeff(k);
            if !ck.vanishes() {
                acc = acc.add(&h.scale(&ck));
            }
        }
        Ok(acc.with_prec(prec))
    }

    /// `[m](P)` by double-and-add.
    pub fn multiply(&self, m: i64, p: &FormalPoint<C>) -> Result<FormalPoint<C>> {
        if m < 0 {
            return self.negate(&self.multiply(-m, p)?);
        }
        let zero = S::zero(&self.zero(), p.z.prec());
        let mut acc = FormalPoint {
            z: zero.clone(),
            w: zero,
        };
        // left to right over the bits of m
        let bits = 64 - (m as u64).leading_zeros();
        for i in (0..bits).rev() {
            acc = self.double(&acc)?;
            if (m >> i) & 1 == 1 {
                acc = self.add(&acc, p)?;
            }
        }
        Ok(acc)
    }

    /// `[m](z) mod z^prec`.
    pub fn mult_by(&self, m: i64, prec: i64) -> Result<S<C>> {
        self.with_margin(prec, |work| {
            let z = self.point(&self.parameter(work), work)?;
            Ok(self.multiply(m, &z)?.z)
        })
    }

    /// `[p](z) mod z^prec`, via `[k+1] = [k] + z` for `k < p` (no leading
    /// cancellation), with the leading coefficient checked against the Hasse
    /// invariant.
    pub fn mult_by_p(&self, prec: i64) -> Result<S<C>> {
        let p = self.characteristic() as i64;
        let s = self.with_margin(prec, |work| {
            let z = self.point(&self.parameter(work), work)?;
            let mut acc = self.double(&z)?;
            for _ in 2..p {
                acc = self.add(&acc, &z)?;
            }
            Ok(acc.z)
        })?;
        let alpha = self.hasse_invariant();
        if alpha.vanishes() {
            return Err(Error::Supersingular(
                "the working place (Hasse invariant vanishes)".into(),
            ));
        }
        if prec > p && (s.val() != p || s.lead().map_or(true, |l| !l.minus(&alpha).vanishes())) {
            return Err(Error::Internal(
                "leading term of [p](z) differs from the Hasse invariant".into(),
            ));
        }
        s.descend(1)?;
        Ok(s)
    }

    /// Run `f` at increasing working precision until the result reaches `prec`.
    fn with_margin(&self, prec: i64, f: impl Fn(i64) -> Result<S<C>>) -> Result<S<C>> {
        let mut work = prec + 2;
        for _ in 0..16 {
            let s = f(work)?;
            if s.prec() >= prec {
                return Ok(s.with_prec(prec));
            }
            work += (prec - s.prec()).max(2);
        }
        Err(Error::Precision(format!(
            "could not reach z-precision {prec}"
        )))
    }

    /// `g_1` with `[p](z) = g_1(z^p)`, modulo `w^prec`.
    pub fn g1(&self, prec: i64) -> Result<S<C>> {
        let p = self.characteristic() as i64;
        self.mult_by_p(prec * p)?.descend(1)
    }

    /// `g_1, ..., g_count` with `[p^n](z) = g_n(z^(p^n))`, from
    /// `g_n = g_1 ∘ g_{n-1}^(p)`, each modulo `w^prec`.
    pub fn g_chain(&self, g1: &S<C>, count: usize) -> Result<Vec<S<C>>> {
        let mut out = vec![g1.clone()];
        while out.len() < count {
            let prev = out.last().unwrap().frobenius_twist(1);
            out.push(g1.compose(&prev)?.with_prec(g1.prec()));
        }
        Ok(out)
    }

    /// `f_m` with its expansion in `z`, relative precision `rel` beyond the
    /// leading term.
    pub fn division_series(&self, f: &DivisionPoly<C>, rel: i64) -> Result<S<C>> {
        let lead = f.lead_exponent();
        let deg = f.x_degree() as i64;
        let mut work = rel + 2 * deg + 4;
        for _ in 0..16 {
            let fe = self.expansion(work + 3)?;
            let s = f.eval_series(&fe)?;
            if s.prec() >= lead + rel {
                return Ok(s.with_prec(lead + rel));
            }
            work += (lead + rel - s.prec()).max(2);
        }
        Err(Error::Precision(format!(
            "could not expand f_{} to relative precision {rel}",
            f.m()
        )))
    }

    /// The bivariate formal group law `F(z1, z2)` to total degree `< deg`.
    pub fn group_law(&self, deg: usize) -> Result<BiSeries<C>> {
        let z1 = BiSeries::var(&self.zero(), 0, deg);
        let z2 = BiSeries::var(&self.zero(), 1, deg);
        let w = self.w_at(&self.parameter(deg as i64 + 1), deg as i64 + 1)?;
        let w_of = |z: &BiSeries<C>| -> BiSeries<C> {
            let mut acc = BiSeries::zero(&self.zero(), deg);
            for k in (0..=deg as i64).rev() {
                acc = acc.mul(z).add(&BiSeries::constant(&w.coeff(k), deg));
            }
            acc
        };
        let w1 = w_of(&z1);
        // λ = Σ c_k h_k(z1, z2)
        let mut h = BiSeries::constant(&self.a[0].one_like(), deg);
        let mut z1pow = h.clone();
        let mut lambda = BiSeries::zero(&self.zero(), deg);
        for k in 1..=deg as i64 {
            if k > 1 {
                z1pow = z1pow.mul(&z1);
                h = h.mul(&z2).add(&z1pow);
            }
            lambda = lambda.add(&h.scale(&w.coeff(k)));
        }
        let [a1, a2, a3, a4, a6] = &self.a;
        let nu = w1.sub(&lambda.mul(&z1));
        let l2 = lambda.mul(&lambda);
        let one = BiSeries::constant(&self.a[0].one_like(), deg);
        let a = one
            .add(&lambda.scale(a2))
            .add(&l2.scale(a4))
            .add(&l2.mul(&lambda).scale(a6));
        let ln = lambda.mul(&nu);
        let num = lambda
            .scale(a1)
            .add(&l2.scale(a3))
            .add(&nu.scale(a2))
            .add(&ln.scale(&self.c(2).times(a4)))
            .add(&ln.mul(&lambda).scale(&self.c(3).times(a6)));
        let z3 = num.mul(&a.inverse()?).scale(&self.c(-1)).sub(&z1).sub(&z2);
        let w3 = lambda.mul(&z3).add(&nu);
        let d = z3.scale(a1).add(&w3.scale(a3)).sub(&one).inverse()?;
        Ok(z3.mul(&d))
    }

    /// The formal inverse `i(z)` modulo `z^prec`.
    pub fn inverse_series(&self, prec: i64) -> Result<S<C>> {
        Ok(self.negate(&self.point(&self.parameter(prec), prec)?)?.z)
    }

    /// Whether `f_(p^2)(z) = f_p([p](z)) · f_p(z)^(p^2)` holds to relative
    /// `z`-precision `rel` beyond the leading term `z^(p^2 - p^4)`.
    pub fn check_p_squared_recursion(&self, rel: i64) -> Result<bool> {
        let p = self.characteristic() as i64;
        let fp = DivisionPoly::new(self, p)?;
        let fp2 = DivisionPoly::new(self, p * p)?;
        // division_series counts from the nominal lead z^(1 - p^4)
        let lhs = self.division_series(&fp2, rel + p * p - 1)?;
        // f_p([p] z) loses p - p^2 orders of z to the pole of f_p
        let extra = p * p + 2 * p;
        let sp = self.division_series(&fp, rel + extra)?;
        let mp = self.mult_by_p(rel + extra)?;
        let rhs = sp.compose(&mp)?.mul(&sp.frobenius_power(2));
        if rhs.prec() < lhs.prec() {
            return Err(Error::Precision(format!(
                "right side of the f_(p^2) recursion known to z^{} only",
                rhs.prec()
            )));
        }
        Ok(rhs
            .with_prec(lhs.prec())
            .sub(&lhs)
            .terms()
            .all(|(_, c)| c.vanishes()))
    }
}

/// Bivariate power series in `z1, z2` truncated by total degree.
#[derive(Clone, Debug, PartialEq)]
pub struct BiSeries<C: Coeff> {
    zero: C,
    deg: usize,
    /// `coeffs[i][j]` is the coefficient of `z1^i z2^j`, `i + j < deg`.
    coeffs: Vec<Vec<C>>,
}

impl<C: Coeff> BiSeries<C> {
    pub fn zero(template: &C, deg: usize) -> Self {
        let z = template.zero_like();
        let coeffs = (0..deg).map(|i| vec![z.clone(); deg - i]).collect();
        BiSeries {
            zero: z,
            deg,
            coeffs,
        }
    }

    pub fn constant(c: &C, deg: usize) -> Self {
        let mut s = BiSeries::zero(c, deg);
        if deg > 0 {
            s.coeffs[0][0] = c.clone();
        }
        s
    }

    /// `z1` (`which = 0`) or `z2` (`which = 1`).
    pub fn var(template: &C, which: usize, deg: usize) -> Self {
        let mut s = BiSeries::zero(template, deg);
        if deg > 1 {
            let (i, j) = if which == 0 { (1, 0) } else { (0, 1) };
            s.coeffs[i][j] = template.one_like();
        }
        s
    }

    pub fn degree_bound(&self) -> usize {
        self.deg
    }

    pub fn coeff(&self, i: usize, j: usize) -> C {
        if i + j < self.deg {
            self.coeffs[i][j].clone()
        } else {
            self.zero.clone()
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(&C, &C) -> C) -> Self {
        let mut s = self.clone();
        for i in 0..self.deg {
            for j in 0..self.deg - i {
                s.coeffs[i][j] = f(&self.coeffs[i][j], &o.coeffs[i][j]);
            }
        }
        s
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.plus(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.minus(b))
    }

    pub fn scale(&self, c: &C) -> Self {
        self.zip(self, |a, _| a.times(c))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut s = BiSeries::zero(&self.zero, self.deg);
        for i in 0..self.deg {
            for j in 0..self.deg - i {
                let a = &self.coeffs[i][j];
                if a.vanishes() {
                    continue;
                }
                for k in 0..self.deg - i - j {
                    for l in 0..self.deg - i - j - k {
                        let b = &o.coeffs[k][l];
                        if !b.vanishes() {
                            s.coeffs[i + k][j + l] = s.coeffs[i + k][j + l].plus(&a.times(b));
                        }
                    }
                }
            }
        }
        s
    }

    /// Inverse of a series with invertible constant term.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.coeffs[0][0]
            .inverse()
            .ok_or_else(|| Error::Precondition("constant term is not invertible".into()))?;
        // 1/(c0 (1 - u)) = c0^{-1} Σ u^k
        let one = BiSeries::constant(&self.zero.one_like(), self.deg);
        let u = one.sub(&self.scale(&c0));
        let mut acc = one.clone();
        for _ in 0..self.deg {
            acc = one.add(&u.mul(&acc));
        }
        Ok(acc.scale(&c0))
    }

    /// `F(z, 0)` as a univariate series.
    pub fn restrict_second_zero(&self) -> TruncSeries<C> {
        let c: Vec<C> = (0..self.deg).map(|i| self.coeffs[i][0].clone()).collect();
        TruncSeries::new(&self.zero, 0, c, self.deg as i64)
    }

    /// `F(s(z), t(z))` for univariate series of positive valuation.
    pub fn substitute(&self, s: &TruncSeries<C>, t: &TruncSeries<C>) -> TruncSeries<C> {
        let prec = self.deg as i64;
        let mut spow = vec![TruncSeries::one(&self.zero)];
        let mut tpow = vec![TruncSeries::one(&self.zero)];
        for k in 1..self.deg {
            spow.push(spow[k - 1].mul(s).with_prec(prec));
            tpow.push(tpow[k - 1].mul(t).with_prec(prec));
        }
        let mut acc = TruncSeries::zero(&self.zero, prec);
        for i in 0..self.deg {
            for j in 0..self.deg - i {
                let c = &self.coeffs[i][j];
                if !c.vanishes() {
                    acc = acc.add(&spow[i].mul(&tpow[j]).scale(c));
                }
            }
        }
        acc.with_prec(prec)
    }
}

/// The division polynomial `f_m`, normalized so its `z`-expansion starts
/// `m z^(1-m^2)` (or `α z^(p-p^2)` for `m = p`):
/// `f_m = sign * ψ2^e * F(x)` with `ψ2 = 2y + a1 x + a3`, `e ∈ {0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivisionPoly<C: Coeff> {
    m: i64,
    sign: i64,
    has_psi2: bool,
    /// `F(x)`, coefficients low to high.
    x_part: Vec<C>,
    a: [C; 5],
}

fn trim<C: Coeff>(mut v: Vec<C>) -> Vec<C> {
    while v.last().is_some_and(|c| c.vanishes()) {
        v.pop();
    }
    v
}

fn padd<C: Coeff>(a: &[C], b: &[C], zero: &C) -> Vec<C> {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_else(|| zero.clone());
                match b.get(i) {
                    Some(y) => x.plus(y),
                    None => x,
                }
            })
            .collect(),
    )
}

fn pneg<C: Coeff>(a: &[C]) -> Vec<C> {
    a.iter().map(|c| c.negate()).collect()
}

fn pmul<C: Coeff>(a: &[C], b: &[C], zero: &C) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![zero.clone(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.vanishes() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.vanishes() {
                out[i + j] = out[i + j].plus(&x.times(y));
            }
        }
    }
    trim(out)
}

fn ppow<C: Coeff>(a: &[C], e: u32, zero: &C) -> Vec<C> {
    let mut acc = vec![zero.one_like()];
    for _ in 0..e {
        acc = pmul(&acc, a, zero);
    }
    acc
}

/// Reduced division polynomials `F_n(x)` (`ψ_n` for odd `n`, `ψ_n/ψ_2` for
/// even `n`), memoized.
struct Reduced<'a, C: Coeff> {
    b: &'a [C; 4],
    big_b_sq: Vec<C>,
    memo: HashMap<i64, Vec<C>>,
}

impl<C: Coeff> Reduced<'_, C> {
    fn get(&mut self, n: i64) -> Vec<C> {
        if let Some(v) = self.memo.get(&n) {
            return v.clone();
        }
        let z = self.b[0].zero_like();
        let r = if n % 2 == 1 {
            let m = (n - 1) / 2;
            let (fm2, fm, fm1, fp1) = (
                self.get(m + 2),
                self.get(m),
                self.get(m - 1),
                self.get(m + 1),
            );
            let t1 = pmul(&fm2, &ppow(&fm, 3, &z), &z);
            let t2 = pmul(&fm1, &ppow(&fp1, 3, &z), &z);
            if m % 2 == 0 {
                padd(&pmul(&self.big_b_sq, &t1, &z), &pneg(&t2), &z)
            } else {
                padd(&t1, &pneg(&pmul(&self.big_b_sq, &t2, &z)), &z)
            }
        } else {
            let m = n / 2;
            let (fm, fm2, fm1, fmm2, fp1) = (
                self.get(m),
                self.get(m + 2),
                self.get(m - 1),
                self.get(m - 2),
                self.get(m + 1),
            );
            let inner = padd(
                &pmul(&fm2, &ppow(&fm1, 2, &z), &z),
                &pneg(&pmul(&fmm2, &ppow(&fp1, 2, &z), &z)),
                &z,
            );
            pmul(&fm, &inner, &z)
        };
        self.memo.insert(n, r.clone());
        r
    }
}

impl<C: Coeff> DivisionPoly<C> {
    /// `f_m` for `m != 0`.
    pub fn new(fg: &FormalGroup<C>, m: i64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("f_0 is not defined".into()));
        }
        let n = m.abs();
        let [b2, b4, b6, b8] = fg.b_invariants();
        let c = |k: i64| b2.int_like(k);
        let z = b2.zero_like();
        let big_b = vec![b6.clone(), c(2).times(b4), b2.clone(), c(4)];
        let f3 = vec![b8.clone(), c(3).times(b6), c(3).times(b4), b2.clone(), c(3)];
        let f4 = vec![
            b4.times(b8).minus(&b6.times(b6)),
            b2.times(b8).minus(&b4.times(b6)),
            c(10).times(b8),
            c(10).times(b6),
            c(5).times(b4),
            b2.clone(),
            c(2),
        ];
        let mut red = Reduced {
            b: fg.b_invariants(),
            big_b_sq: pmul(&big_b, &big_b, &z),
            memo: HashMap::new(),
        };
        red.memo.insert(0, Vec::new());
        red.memo.insert(1, vec![z.one_like()]);
        red.memo.insert(2, vec![z.one_like()]);
        red.memo.insert(3, trim(f3));
        red.memo.insert(4, trim(f4));
        let x_part = red.get(n);
        // f_n = (-1)^(n+1) ψ_n, f_{-n} = -f_n
        let mut sign = if n % 2 == 1 { 1 } else { -1 };
        if m < 0 {
            sign = -sign;
        }
        Ok(DivisionPoly {
            m,
            sign,
            has_psi2: n % 2 == 0,
            x_part,
            a: fg.a_invariants().clone(),
        })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn x_degree(&self) -> usize {
        self.x_part.len().saturating_sub(1)
    }

    /// Expected leading exponent `1 - m^2` of the `z`-expansion.
    pub fn lead_exponent(&self) -> i64 {
        1 - self.m * self.m
    }

    /// Coefficients of `F(x)`, low to high.
    pub fn x_coeffs(&self) -> &[C] {
        &self.x_part
    }

    pub fn includes_psi2(&self) -> bool {
        self.has_psi2
    }

    pub fn sign(&self) -> i64 {
        self.sign
    }

    /// Value at a point with coordinates in the coefficient domain.
    pub fn eval_point(&self, x: &C, y: &C) -> C {
        let mut acc = x.zero_like();
        for c in self.x_part.iter().rev() {
            acc = acc.times(x).plus(c);
        }
        if self.has_psi2 {
            let [a1, _, a3, _, _] = &self.a;
            acc = acc.times(&x.int_like(2).times(y).plus(&a1.times(x)).plus(a3));
        }
        if self.sign < 0 {
            acc = acc.negate();
        }
        acc
    }

    /// `f_m(z)` from the expansions of `x` and `y`.
    pub fn eval_series(&self, fe: &FormalExpansion<C>) -> Result<S<C>> {
        let zero = fe.beta.zero_like();
        let mut acc = S::zero(&zero, EXACT);
        for c in self.x_part.iter().rev() {
            acc = acc.mul(&fe.x).add(&S::constant(c.clone()));
        }
        if self.has_psi2 {
            let [a1, _, a3, _, _] = &self.a;
            let psi2 =
                fe.y.scale(&zero.int_like(2))
                    .add(&fe.x.scale(a1))
                    .add(&S::constant(a3.clone()));
            acc = acc.mul(&psi2);
        }
        if self.sign < 0 {
            acc = acc.neg();
        }
        Ok(acc)
    }

    /// Check the leading term of the expansion: `m z^(1-m^2)` when `p ∤ m`,
    /// `α z^(p-p^2)` when `m = ±p`.
    pub fn check_normalization(&self, fg: &FormalGroup<C>, series: &S<C>) -> Result<()> {
        let p = fg.characteristic() as i64;
        let n = self.m.abs();
        let (e, c) = if n % p != 0 {
            (1 - n * n, series.template().int_like(self.m))
        } else if n == p {
            let alpha = fg.hasse_invariant();
            (p - p * p, if self.m < 0 { alpha.negate() } else { alpha })
        } else {
            return Ok(());
        };
        if series.val() != e || series.lead().map_or(true, |l| !l.minus(&c).vanishes()) {
            return Err(Error::Internal(format!(
                "f_{} expansion does not start with the normalized term at z^{e}",
                self.m
            )));
        }
        Ok(())
    }
}

impl DivisionPoly<RatFunc> {
    /// Re-expand coefficients in a completion.
    pub fn localize(&self, field: &LocalField, prec: i64) -> DivisionPoly<LocalElement> {
        DivisionPoly {
            m: self.m,
            sign: self.sign,
            has_psi2: self.has_psi2,
            x_part: self
                .x_part
                .iter()
                .map(|c| field.expand_abs(c, prec))
                .collect(),
            a: self.a.clone().map(|c| field.expand_abs(&c, prec)),
        }
    }

    /// Debug rendering as a polynomial in `x, y`.
    pub fn render(&self) -> String {
        let mut terms = Vec::new();
        for (i, c) in self.x_part.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            };
            let cs = c.to_string();
            terms.push(match (mono.is_empty(), cs.as_str()) {
                (true, _) => format!("({cs})"),
                (false, "1") => mono,
                _ => format!("({cs})*{mono}"),
            });
        }
        let mut body = terms.join(" + ");
        if body.is_empty() {
            body = "0".into();
        }
        if self.has_psi2 {
            let [a1, _, a3, _, _] = &self.a;
            body = format!("(2*y + ({a1})*x + ({a3}))*({body})");
        }
        if self.sign < 0 {
            format!("-{body}")
        } else {
            body
        }
    }
}
