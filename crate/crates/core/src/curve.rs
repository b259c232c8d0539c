//! Weierstrass models over `F_q(t)`, the group law, reduction data and
//! Néron-Tate heights.

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::factor::factorize;
use crate::fq::Fq;
use crate::place::{Place, Valuation};
use crate::poly::Poly;
use crate::ratfunc::RatFunc;

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WeierstrassModel {
    field: Fq,
    a: [RatFunc; 5],
    b2: RatFunc,
    b4: RatFunc,
    b6: RatFunc,
    b8: RatFunc,
    c4: RatFunc,
    c6: RatFunc,
    disc: RatFunc,
}

/// A point of `E(k)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CurvePoint {
    Infinity,
    Affine { x: RatFunc, y: RatFunc },
}

impl CurvePoint {
    pub fn affine(x: RatFunc, y: RatFunc) -> CurvePoint {
        CurvePoint::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }

    pub fn x(&self) -> Option<&RatFunc> {
        match self {
            CurvePoint::Affine { x, .. } => Some(x),
            CurvePoint::Infinity => None,
        }
    }

    pub fn y(&self) -> Option<&RatFunc> {
        match self {
            CurvePoint::Affine { y, .. } => Some(y),
            CurvePoint::Infinity => None,
        }
    }

    /// `z = -x/y`; `None` at O or when `y = 0`.
    pub fn z(&self) -> Option<RatFunc> {
        match self {
            CurvePoint::Affine { x, y } => Some(x.neg_ref().div_ref(y).ok()?),
            CurvePoint::Infinity => None,
        }
    }
}

impl fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvePoint::Infinity => f.write_str("O"),
            CurvePoint::Affine { x, y } => write!(f, "({x}, {y})"),
        }
    }
}

/// The change of variables `x = u^2 x' + r`, `y = u^3 y' + s u^2 x' + w`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModelIso {
    pub u: RatFunc,
    pub r: RatFunc,
    pub s: RatFunc,
    pub w_shift: RatFunc,
}

impl ModelIso {
    pub fn identity(field: &Fq) -> ModelIso {
        ModelIso::scaling(RatFunc::one(field))
    }

    /// `(x, y) = (u^2 x', u^3 y')`.
    pub fn scaling(u: RatFunc) -> ModelIso {
        let z = RatFunc::zero(u.field());
        ModelIso {
            u,
            r: z.clone(),
            s: z.clone(),
            w_shift: z,
        }
    }

    /// Apply `self` first, then `other`: the iso from the source model of
    /// `self` to the target model of `other`.
    pub fn then(&self, other: &ModelIso) -> ModelIso {
        // x = u1^2 x1 + r1, x1 = u2^2 x2 + r2, and likewise for y
        let u1 = &self.u;
        let u1sq = u1.mul_ref(u1);
        ModelIso {
            u: u1.mul_ref(&other.u),
            r: self.r.add_ref(&u1sq.mul_ref(&other.r)),
            s: self.s.add_ref(&u1.mul_ref(&other.s)),
            w_shift: self
                .w_shift
                .add_ref(&u1sq.mul_ref(&self.s).mul_ref(&other.r))
                .add_ref(&u1sq.mul_ref(u1).mul_ref(&other.w_shift)),
        }
    }

    pub fn inverse(&self) -> ModelIso {
        let ui = self.u.inv().expect("nonzero u");
        let ui2 = ui.mul_ref(&ui);
        let ui3 = ui2.mul_ref(&ui);
        ModelIso {
            u: ui.clone(),
            r: self.r.neg_ref().mul_ref(&ui2),
            s: self.s.neg_ref().mul_ref(&ui),
            w_shift: self.r.mul_ref(&self.s).sub_ref(&self.w_shift).mul_ref(&ui3),
        }
    }

    /// Image of a point of the source model on the target model.
    pub fn map_point(&self, p: &CurvePoint) -> CurvePoint {
        match p {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => {
                let u2 = self.u.mul_ref(&self.u);
                let u3 = u2.mul_ref(&self.u);
                let xr = x.sub_ref(&self.r);
                let x1 = xr.div_ref(&u2).expect("nonzero u");
                let y1 = y
                    .sub_ref(&self.s.mul_ref(&xr))
                    .sub_ref(&self.w_shift)
                    .div_ref(&u3)
                    .expect("nonzero u");
                CurvePoint::Affine { x: x1, y: y1 }
            }
        }
    }
}

/// Reduction type at a place.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ReductionType {
    Good,
    Multiplicative,
    Additive,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ReductionInfo {
    pub place: Place,
    pub kind: ReductionType,
    pub ordinary: bool,
    pub ord_disc: i64,
    pub ord_c4: Option<i64>,
}

fn ord(x: &RatFunc, v: &Place) -> Valuation {
    v.ord(x)
}

impl WeierstrassModel {
    /// Model from `[a1, a2, a3, a4, a6]`. Fails on a singular equation.
    pub fn new(a: [RatFunc; 5]) -> Result<WeierstrassModel> {
        let field = a[0].field().clone();
        let [a1, a2, a3, a4, a6] = &a;
        let c = |n: i64| RatFunc::from_i64(&field, n);
        let b2 = a1.mul_ref(a1).add_ref(&c(4).mul_ref(a2));
        let b4 = c(2).mul_ref(a4).add_ref(&a1.mul_ref(a3));
        let b6 = a3.mul_ref(a3).add_ref(&c(4).mul_ref(a6));
        let b8 = a1
            .mul_ref(a1)
            .mul_ref(a6)
            .add_ref(&c(4).mul_ref(a2).mul_ref(a6))
            .sub_ref(&a1.mul_ref(a3).mul_ref(a4))
            .add_ref(&a2.mul_ref(a3).mul_ref(a3))
            .sub_ref(&a4.mul_ref(a4));
        let c4 = b2.mul_ref(&b2).sub_ref(&c(24).mul_ref(&b4));
        let c6 = b2
            .pow(3)
            .neg_ref()
            .add_ref(&c(36).mul_ref(&b2).mul_ref(&b4))
            .sub_ref(&c(216).mul_ref(&b6));
        let disc = b2
            .mul_ref(&b2)
            .mul_ref(&b8)
            .neg_ref()
            .sub_ref(&c(8).mul_ref(&b4.pow(3)))
            .sub_ref(&c(27).mul_ref(&b6.mul_ref(&b6)))
            .add_ref(&c(9).mul_ref(&b2).mul_ref(&b4).mul_ref(&b6));
        if disc.is_zero() {
            return Err(Error::InvalidInput(
                "singular Weierstrass equation (discriminant 0)".into(),
            ));
        }
        Ok(WeierstrassModel {
            field,
            a,
            b2,
            b4,
            b6,
            b8,
            c4,
            c6,
            disc,
        })
    }

    pub fn field(&self) -> &Fq {
        &self.field
    }

    pub fn a_invariants(&self) -> &[RatFunc; 5] {
        &self.a
    }

    pub fn a1(&self) -> &RatFunc {
        &self.a[0]
    }
    pub fn a2(&self) -> &RatFunc {
        &self.a[1]
    }
    pub fn a3(&self) -> &RatFunc {
        &self.a[2]
    }
    pub fn a4(&self) -> &RatFunc {
        &self.a[3]
    }
    pub fn a6(&self) -> &RatFunc {
        &self.a[4]
    }
    pub fn b2(&self) -> &RatFunc {
        &self.b2
    }
    pub fn b4(&self) -> &RatFunc {
        &self.b4
    }
    pub fn b6(&self) -> &RatFunc {
        &self.b6
    }
    pub fn b8(&self) -> &RatFunc {
        &self.b8
    }
    pub fn c4(&self) -> &RatFunc {
        &self.c4
    }
    pub fn c6(&self) -> &RatFunc {
        &self.c6
    }
    pub fn discriminant(&self) -> &RatFunc {
        &self.disc
    }

    pub fn characteristic(&self) -> u32 {
        self.field.characteristic()
    }

    /// All `a_i` lie in `F_q[t]`.
    pub fn is_polynomial(&self) -> bool {
        self.a.iter().all(|c| c.is_polynomial())
    }

    pub fn is_integral_at(&self, v: &Place) -> bool {
        self.a.iter().all(|c| ord(c, v) >= Valuation::Finite(0))
    }

    /// `F(x, y) = y^2 + a1 xy + a3 y - x^3 - a2 x^2 - a4 x - a6`.
    pub fn equation_residual(&self, x: &RatFunc, y: &RatFunc) -> RatFunc {
        let [a1, a2, a3, a4, a6] = &self.a;
        let lhs = y
            .mul_ref(y)
            .add_ref(&a1.mul_ref(x).mul_ref(y))
            .add_ref(&a3.mul_ref(y));
        let rhs = x
            .pow(3)
            .add_ref(&a2.mul_ref(&x.mul_ref(x)))
            .add_ref(&a4.mul_ref(x))
            .add_ref(a6);
        lhs.sub_ref(&rhs)
    }

    pub fn contains(&self, p: &CurvePoint) -> bool {
        match p {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { x, y } => self.equation_residual(x, y).is_zero(),
        }
    }

    /// Check and wrap a point.
    pub fn point(&self, x: RatFunc, y: RatFunc) -> Result<CurvePoint> {
        if !self.equation_residual(&x, &y).is_zero() {
            return Err(Error::InvalidInput(format!(
                "point ({x}, {y}) is not on the curve"
            )));
        }
        Ok(CurvePoint::Affine { x, y })
    }

    /// The model obtained by the change of variables `iso`.
    pub fn transform(&self, iso: &ModelIso) -> Result<WeierstrassModel> {
        let ModelIso {
            u,
            r,
            s,
            w_shift: w,
        } = iso;
        let [a1, a2, a3, a4, a6] = &self.a;
        let f = &self.field;
        let c = |n: i64| RatFunc::from_i64(f, n);
        let ui = u.inv().ok_or(Error::DivisionByZero)?;
        let up = |k: i64| ui.pow(k);
        let na1 = a1.add_ref(&c(2).mul_ref(s)).mul_ref(&up(1));
        let na2 = a2
            .sub_ref(&s.mul_ref(a1))
            .add_ref(&c(3).mul_ref(r))
            .sub_ref(&s.mul_ref(s))
            .mul_ref(&up(2));
        let na3 = a3
            .add_ref(&r.mul_ref(a1))
            .add_ref(&c(2).mul_ref(w))
            .mul_ref(&up(3));
        let na4 = a4
            .sub_ref(&s.mul_ref(a3))
            .add_ref(&c(2).mul_ref(r).mul_ref(a2))
            .sub_ref(&w.add_ref(&r.mul_ref(s)).mul_ref(a1))
            .add_ref(&c(3).mul_ref(r).mul_ref(r))
            .sub_ref(&c(2).mul_ref(s).mul_ref(w))
            .mul_ref(&up(4));
        let na6 = a6
            .add_ref(&r.mul_ref(a4))
            .add_ref(&r.mul_ref(r).mul_ref(a2))
            .add_ref(&r.pow(3))
            .sub_ref(&w.mul_ref(a3))
            .sub_ref(&w.mul_ref(w))
            .sub_ref(&r.mul_ref(w).mul_ref(a1))
            .mul_ref(&up(6));
        WeierstrassModel::new([na1, na2, na3, na4, na6])
    }

    pub fn neg(&self, p: &CurvePoint) -> CurvePoint {
        match p {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::Affine {
                x: x.clone(),
                y: y.neg_ref()
                    .sub_ref(&self.a1().mul_ref(x))
                    .sub_ref(self.a3()),
            },
        }
    }

    /// Chord-tangent addition.
    pub fn add_points(&self, p: &CurvePoint, q: &CurvePoint) -> CurvePoint {
        let (x1, y1, x2, y2) = match (p, q) {
            (CurvePoint::Infinity, _) => return q.clone(),
            (_, CurvePoint::Infinity) => return p.clone(),
            (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => {
                (x1, y1, x2, y2)
            }
        };
        let [a1, a2, a3, a4, a6] = &self.a;
        let f = &self.field;
        let c = |n: i64| RatFunc::from_i64(f, n);
        let (lambda, nu) = if x1 != x2 {
            let dx = x2.sub_ref(x1);
            let lambda = y2.sub_ref(y1).div_ref(&dx).unwrap();
            let nu = y1
                .mul_ref(x2)
                .sub_ref(&y2.mul_ref(x1))
                .div_ref(&dx)
                .unwrap();
            (lambda, nu)
        } else {
            let denom = c(2).mul_ref(y1).add_ref(&a1.mul_ref(x1)).add_ref(a3);
            if denom.is_zero() || y1 != y2 {
                // vertical line: q = -p
                return CurvePoint::Infinity;
            }
            let x1sq = x1.mul_ref(x1);
            let lambda = c(3)
                .mul_ref(&x1sq)
                .add_ref(&c(2).mul_ref(a2).mul_ref(x1))
                .add_ref(a4)
                .sub_ref(&a1.mul_ref(y1))
                .div_ref(&denom)
                .unwrap();
            let nu = x1sq
                .mul_ref(x1)
                .neg_ref()
                .add_ref(&a4.mul_ref(x1))
                .add_ref(&c(2).mul_ref(a6))
                .sub_ref(&a3.mul_ref(y1))
                .div_ref(&denom)
                .unwrap();
            (lambda, nu)
        };
        let x3 = lambda
            .mul_ref(&lambda)
            .add_ref(&a1.mul_ref(&lambda))
            .sub_ref(a2)
            .sub_ref(x1)
            .sub_ref(x2);
        let y3 = lambda
            .add_ref(a1)
            .mul_ref(&x3)
            .neg_ref()
            .sub_ref(&nu)
            .sub_ref(a3);
        CurvePoint::Affine { x: x3, y: y3 }
    }

    pub fn sub_points(&self, p: &CurvePoint, q: &CurvePoint) -> CurvePoint {
        self.add_points(p, &self.neg(q))
    }

    /// `m P` by double-and-add.
    pub fn mul_point(&self, m: i64, p: &CurvePoint) -> CurvePoint {
        if m < 0 {
            return self.mul_point(-m, &self.neg(p));
        }
        let mut acc = CurvePoint::Infinity;
        let mut base = p.clone();
        let mut k = m as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add_points(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.add_points(&base, &base);
            }
        }
        acc
    }

    /// Hasse invariant: the coefficient of `x^(p-1)` in `f(x)^((p-1)/2)`
    /// where `y^2 = f(x)` is the completed-square form.
    pub fn hasse_invariant(&self) -> RatFunc {
        let f = &self.field;
        let p = f.characteristic() as usize;
        let inv = |n: i64| RatFunc::from_i64(f, n).inv().unwrap();
        // f = x^3 + b2/4 x^2 + b4/2 x + b6/4, coefficients low to high
        let cubic = vec![
            self.b6.mul_ref(&inv(4)),
            self.b4.mul_ref(&inv(2)),
            self.b2.mul_ref(&inv(4)),
            RatFunc::one(f),
        ];
        let mut acc = vec![RatFunc::one(f)];
        for _ in 0..(p - 1) / 2 {
            let mut next = vec![RatFunc::zero(f); acc.len() + 3];
            for (i, a) in acc.iter().enumerate() {
                for (j, b) in cubic.iter().enumerate() {
                    next[i + j] = next[i + j].add_ref(&a.mul_ref(b));
                }
            }
            acc = next;
        }
        acc[p - 1].clone()
    }

    /// Reduction type on this (assumed minimal) model.
    pub fn reduction_info(&self, v: &Place) -> Result<ReductionInfo> {
        if !self.is_integral_at(v) {
            return Err(Error::NotIntegral(v.to_string()));
        }
        let od = ord(&self.disc, v).unwrap();
        let oc4 = ord(&self.c4, v).finite();
        let kind = if od == 0 {
            ReductionType::Good
        } else if oc4 == Some(0) {
            ReductionType::Multiplicative
        } else {
            ReductionType::Additive
        };
        let ordinary = match kind {
            ReductionType::Good => ord(&self.hasse_invariant(), v) == Valuation::Finite(0),
            ReductionType::Multiplicative => true,
            ReductionType::Additive => false,
        };
        Ok(ReductionInfo {
            place: v.clone(),
            kind,
            ordinary,
            ord_disc: od,
            ord_c4: oc4,
        })
    }

    /// Finite places of bad reduction with `ord_v(Δ)`.
    pub fn bad_places(&self) -> Vec<(Place, i64)> {
        let mut out = Vec::new();
        for part in [self.disc.num(), self.disc.den()] {
            if part.degree().unwrap_or(0) == 0 {
                continue;
            }
            for (g, _) in factorize(part).factors {
                let v = Place::finite(g).expect("irreducible factor");
                let o = ord(&self.disc, &v).unwrap();
                out.push((v, o));
            }
        }
        out
    }

    /// Certificate that an integral model is minimal at every finite
    /// place: `ord_v(Δ) < 12` at each bad place, unless `attested`.
    pub fn check_finite_minimality(&self, attested: bool) -> Result<()> {
        if !self.is_polynomial() {
            return Err(Error::NotIntegral(
                "some finite place (coefficients must lie in F_q[t])".into(),
            ));
        }
        if attested {
            return Ok(());
        }
        for (v, o) in self.bad_places() {
            if o >= 12 {
                return Err(Error::NotMinimal(format!(
                    "ord_{v}(Δ) = {o} >= 12; pass the minimality attestation if the model is minimal"
                )));
            }
        }
        Ok(())
    }

    /// The model minimal at infinity obtained by `(x, y) = (u^2 x', u^3 y')`
    /// with `u = t^r`, `r = max ceil(deg a_i / i)`.
    pub fn infinity_minimal_model(&self) -> Result<(WeierstrassModel, ModelIso)> {
        if !self.is_polynomial() {
            return Err(Error::NotIntegral(
                "some finite place (coefficients must lie in F_q[t])".into(),
            ));
        }
        let weights = [1i64, 2, 3, 4, 6];
        let mut r = 0i64;
        for (c, w) in self.a.iter().zip(weights) {
            if let Some(d) = c.degree() {
                r = r.max((d + w - 1).div_euclid(w));
            }
        }
        let iso = ModelIso::scaling(RatFunc::t_pow(&self.field, r));
        let model = self.transform(&iso)?;
        let o = ord(model.discriminant(), &Place::infinity()).unwrap();
        if o >= 12 {
            return Err(Error::NotMinimal(format!(
                "ord_inf(Δ') = {o} >= 12 after scaling by t^{r}"
            )));
        }
        Ok((model, iso))
    }

    /// Whether `P` reduces to a nonsingular point at `v` (model integral at `v`).
    pub fn in_identity_component(&self, p: &CurvePoint, v: &Place) -> bool {
        let (x, y) = match p {
            CurvePoint::Infinity => return true,
            CurvePoint::Affine { x, y } => (x, y),
        };
        if ord(&self.disc, v) == Valuation::Finite(0) || ord(x, v) < Valuation::Finite(0) {
            return true;
        }
        let [a1, a2, a3, a4, _] = &self.a;
        let f = &self.field;
        let c = |n: i64| RatFunc::from_i64(f, n);
        let fx = a1
            .mul_ref(y)
            .sub_ref(&c(3).mul_ref(&x.mul_ref(x)))
            .sub_ref(&c(2).mul_ref(a2).mul_ref(x))
            .sub_ref(a4);
        let fy = c(2).mul_ref(y).add_ref(&a1.mul_ref(x)).add_ref(a3);
        !(ord(&fx, v) > Valuation::Finite(0) && ord(&fy, v) > Valuation::Finite(0))
    }

    /// `P` lies in the formal group at `v`: `ord_v x(P) <= -2`.
    pub fn in_formal_group(&self, p: &CurvePoint, v: &Place) -> bool {
        match p {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { x, .. } => ord(x, v) < Valuation::Finite(0),
        }
    }
}

/// A curve over `F_q(t)` with an integral model minimal at the finite places
/// and its companion model minimal at infinity.
#[derive(Clone, Debug)]
pub struct Curve {
    pub model: WeierstrassModel,
    pub inf_model: WeierstrassModel,
    pub inf_iso: ModelIso,
    /// Exponent `r` with `u = t^r`.
    pub inf_scale: i64,
}

impl Curve {
    /// Validate minimality (see [`WeierstrassModel::check_finite_minimality`])
    /// and build the model at infinity.
    pub fn new(model: WeierstrassModel, minimal_attested: bool) -> Result<Curve> {
        model.check_finite_minimality(minimal_attested)?;
        let (inf_model, inf_iso) = model.infinity_minimal_model()?;
        let inf_scale = inf_iso.u.degree().unwrap_or(0);
        Ok(Curve {
            model,
            inf_model,
            inf_iso,
            inf_scale,
        })
    }

    pub fn field(&self) -> &Fq {
        self.model.field()
    }

    /// The model used at `v`, and the point moved onto it.
    pub fn model_at(&self, v: &Place) -> &WeierstrassModel {
        if v.is_infinite() {
            &self.inf_model
        } else {
            &self.model
        }
    }

    pub fn point_at(&self, p: &CurvePoint, v: &Place) -> CurvePoint {
        if v.is_infinite() {
            self.inf_iso.map_point(p)
        } else {
            p.clone()
        }
    }

    /// Places where the `E^0` condition is not automatic: bad finite places
    /// and infinity when the model there has bad reduction.
    pub fn bad_places(&self) -> Vec<Place> {
        let mut out: Vec<Place> = self
            .model
            .bad_places()
            .into_iter()
            .map(|(v, _)| v)
            .collect();
        if ord(self.inf_model.discriminant(), &Place::infinity()) != Valuation::Finite(0) {
            out.push(Place::infinity());
        }
        out
    }

    /// `P` reduces into the identity component at every place.
    pub fn in_e0_everywhere(&self, p: &CurvePoint) -> bool {
        self.bad_places().iter().all(|v| {
            self.model_at(v)
                .in_identity_component(&self.point_at(p, v), v)
        })
    }

    /// `λ_w(P) = max(-ord_w x(P), 0)` on the model minimal at `w`.
    pub fn local_height(&self, p: &CurvePoint, w: &Place) -> Result<i64> {
        let model = self.model_at(w);
        let pw = self.point_at(p, w);
        if !model.in_identity_component(&pw, w) {
            return Err(Error::SingularReduction(w.to_string()));
        }
        Ok(match pw.x() {
            None => 0,
            Some(x) => match ord(x, w) {
                Valuation::Finite(o) => (-o).max(0),
                Valuation::PlusInfinity => 0,
            },
        })
    }

    /// `Σ_w [F_w:F_q] λ_w(P)` for `P` in `E^0` everywhere. The finite part
    /// is `deg den(x(P))`.
    pub fn lambda_sum(&self, p: &CurvePoint) -> Result<i64> {
        let x = match p.x() {
            None => return Ok(0),
            Some(x) => x,
        };
        for v in self.model.bad_places().into_iter().map(|(v, _)| v) {
            if !self.model.in_identity_component(p, &v) {
                return Err(Error::SingularReduction(v.to_string()));
            }
        }
        Ok(x.den().deg() + self.local_height(p, &Place::infinity())?)
    }

    /// `Σ_w [F_w:F_q] ord_w(Δ_min)`, i.e. `12 χ`.
    pub fn minimal_discriminant_degree(&self) -> i64 {
        self.model.discriminant().num().deg()
            + ord(self.inf_model.discriminant(), &Place::infinity()).unwrap()
    }

    /// Smallest `n >= 1` such that `n P` satisfies `pred`, searching up to `cap`.
    fn first_multiple(
        &self,
        p: &CurvePoint,
        cap: u64,
        pred: impl Fn(&CurvePoint) -> bool,
    ) -> Result<(u64, CurvePoint)> {
        let mut q = p.clone();
        for n in 1..=cap {
            if pred(&q) {
                return Ok((n, q));
            }
            q = self.model.add_points(&q, p);
        }
        Err(Error::CapExceeded(cap))
    }

    /// Smallest `n` with `n P` in `E^0` at every place.
    pub fn e0_multiple(&self, p: &CurvePoint, cap: u64) -> Result<(u64, CurvePoint)> {
        self.first_multiple(p, cap, |q| self.in_e0_everywhere(q))
    }

    /// Smallest `n` with `n P` in `E^0` at every place and in the formal
    /// group at `v`.
    pub fn minimal_multiple_in(&self, p: &CurvePoint, v: &Place, cap: u64) -> Result<u64> {
        Ok(self.minimal_multiple_point(p, v, cap)?.0)
    }

    pub fn minimal_multiple_point(
        &self,
        p: &CurvePoint,
        v: &Place,
        cap: u64,
    ) -> Result<(u64, CurvePoint)> {
        self.first_multiple(p, cap, |q| {
            self.in_e0_everywhere(q) && self.model_at(v).in_formal_group(&self.point_at(q, v), v)
        })
    }

    /// `mP = O` for some `m <= bound`.
    pub fn torsion_order(&self, p: &CurvePoint, bound: u64) -> Option<u64> {
        let mut q = p.clone();
        for m in 1..=bound {
            if q.is_infinity() {
                return Some(m);
            }
            q = self.model.add_points(&q, p);
        }
        None
    }

    /// Néron-Tate height `ĥ(P)`, normalized so that `2ĥ = ⟨P,P⟩`.
    ///
    /// With `nP` in `E^0` at every place,
    /// `ĥ(P) = (Σ_w deg_w λ_w(nP) / 2 + Σ_w deg_w ord_w(Δ_min) / 12) / n^2`.
    pub fn neron_tate(&self, p: &CurvePoint, cap: u64) -> Result<Ratio<i64>> {
        let (n, q) = self.e0_multiple(p, cap)?;
        if q.is_infinity() {
            return Ok(Ratio::from_integer(0));
        }
        let lam = self.lambda_sum(&q)?;
        let h = Ratio::new(lam, 2) + Ratio::new(self.minimal_discriminant_degree(), 12);
        let n2 = (n * n) as i64;
        // torsion points in E^0 everywhere have λ-sum 0 and χ = 0, or are caught here
        Ok(h / n2)
    }

    /// Whether `P` has finite order: zero height confirmed by an explicit
    /// search for `mP = O`.
    pub fn is_torsion(&self, p: &CurvePoint, cap: u64) -> Result<bool> {
        if p.is_infinity() {
            return Ok(true);
        }
        let h = self.neron_tate(p, cap)?;
        if h != Ratio::from_integer(0) {
            return Ok(false);
        }
        Ok(self.torsion_order(p, cap).is_some())
    }
}

/// Discriminant factorization helper for reports.
pub fn factor_discriminant(model: &WeierstrassModel) -> Vec<(Poly, u32)> {
    match model.discriminant().as_poly() {
        Some(d) => factorize(d).factors,
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_ratfunc;

    fn ex9() -> (WeierstrassModel, CurvePoint, CurvePoint) {
        let f = Fq::prime(3).unwrap();
        let p = |s: &str| parse_ratfunc(s, &f).unwrap();
        let e = WeierstrassModel::new([
            p("0"),
            p("t^2 - 1"),
            p("0"),
            p("0"),
            p("(t-1)^2*(t^2-t-1)^2"),
        ])
        .unwrap();
        let pt = e.point(p("0"), p("(t-1)*(t^2-t-1)")).unwrap();
        let qt = e.point(p("t^2 - t"), p("t^2 - 1")).unwrap();
        (e, pt, qt)
    }

    #[test]
    fn invariants_of_example() {
        let (e, _, _) = ex9();
        let f = e.field().clone();
        let p = |s: &str| parse_ratfunc(s, &f).unwrap();
        // equal up to the unit -1
        assert_eq!(e.discriminant(), &p("-(t+1)^3*(t-1)^5*(t^2-t-1)^2"));
        let fac = factor_discriminant(&e);
        let rendered: Vec<String> = fac.iter().map(|(g, m)| format!("({g})^{m}")).collect();
        assert_eq!(rendered, ["(t + 1)^3", "(t - 1)^5", "(t^2 - t - 1)^2"]);
        assert_eq!(e.hasse_invariant(), p("t^2 - 1"));
        assert_eq!(e.c4(), &p("(t^2-1)^2"));
        let tp = e.reduction_info(&Place::t(&f)).unwrap();
        assert_eq!(tp.kind, ReductionType::Good);
        assert!(tp.ordinary);
        let t1 = e.reduction_info(&Place::parse("t-1", &f).unwrap()).unwrap();
        assert_eq!(
            (t1.kind, t1.ord_disc, t1.ord_c4),
            (ReductionType::Additive, 5, Some(2))
        );
    }

    #[test]
    fn infinity_model_of_example() {
        let (e, _, _) = ex9();
        let f = e.field().clone();
        let (m, iso) = e.infinity_minimal_model().unwrap();
        assert_eq!(iso.u, RatFunc::t(&f));
        assert_eq!(m.a2(), &parse_ratfunc("(t^2-1)/t^2", &f).unwrap());
        assert_eq!(m.a6().degree(), Some(0));
        assert_eq!(
            Place::infinity().ord(m.discriminant()),
            Valuation::Finite(0)
        );
        let info = m.reduction_info(&Place::infinity()).unwrap();
        assert_eq!(info.kind, ReductionType::Good);
        assert!(info.ordinary);
        // α' = α u^{-(p-1)}
        assert_eq!(
            m.hasse_invariant(),
            e.hasse_invariant().mul_ref(&RatFunc::t_pow(&f, -2))
        );
    }

    #[test]
    fn iso_roundtrip() {
        let (e, pt, _) = ex9();
        let f = e.field().clone();
        let p = |s: &str| parse_ratfunc(s, &f).unwrap();
        let iso = ModelIso {
            u: p("t+1"),
            r: p("t"),
            s: p("2"),
            w_shift: p("t^2"),
        };
        let e2 = e.transform(&iso).unwrap();
        let p2 = iso.map_point(&pt);
        assert!(e2.contains(&p2));
        let back = e2.transform(&iso.inverse()).unwrap();
        assert_eq!(back, e);
        assert_eq!(iso.inverse().map_point(&p2), pt);
        let iso2 = ModelIso {
            u: p("2"),
            r: p("1"),
            s: p("t"),
            w_shift: p("0"),
        };
        let e3 = e2.transform(&iso2).unwrap();
        assert_eq!(e.transform(&iso.then(&iso2)).unwrap(), e3);
        assert_eq!(iso.then(&iso2).map_point(&pt), iso2.map_point(&p2));
    }

    /// Doubling via `x(2P) = (x^4 - b4 x^2 - 2 b6 x - b8) / (4x^3 + b2 x^2 + 2 b4 x + b6)`.
    fn double_oracle(e: &WeierstrassModel, p: &CurvePoint) -> CurvePoint {
        let (x, y) = (p.x().unwrap(), p.y().unwrap());
        let f = e.field();
        let c = |n: i64| RatFunc::from_i64(f, n);
        let num = x
            .pow(4)
            .sub_ref(&e.b4().mul_ref(&x.pow(2)))
            .sub_ref(&c(2).mul_ref(e.b6()).mul_ref(x))
            .sub_ref(e.b8());
        let den = c(4)
            .mul_ref(&x.pow(3))
            .add_ref(&e.b2().mul_ref(&x.pow(2)))
            .add_ref(&c(2).mul_ref(e.b4()).mul_ref(x))
            .add_ref(e.b6());
        let x2 = num.div_ref(&den).unwrap();
        // tangent slope from implicit differentiation
        let slope = c(3)
            .mul_ref(&x.pow(2))
            .add_ref(&c(2).mul_ref(e.a2()).mul_ref(x))
            .add_ref(e.a4())
            .sub_ref(&e.a1().mul_ref(y))
            .div_ref(&c(2).mul_ref(y).add_ref(&e.a1().mul_ref(x)).add_ref(e.a3()))
            .unwrap();
        let y_on_line = y.add_ref(&slope.mul_ref(&x2.sub_ref(x)));
        let y2 = y_on_line
            .neg_ref()
            .sub_ref(&e.a1().mul_ref(&x2))
            .sub_ref(e.a3());
        CurvePoint::affine(x2, y2)
    }

    #[test]
    fn doubling_matches_oracle() {
        let (e, pt, qt) = ex9();
        for base in [pt.clone(), qt.clone(), e.add_points(&pt, &qt)] {
            let d = e.add_points(&base, &base);
            assert!(e.contains(&d));
            assert_eq!(d, double_oracle(&e, &base));
        }
    }

    #[test]
    fn group_law_basics() {
        let (e, pt, qt) = ex9();
        assert_eq!(e.add_points(&pt, &CurvePoint::Infinity), pt);
        assert!(e.add_points(&pt, &e.neg(&pt)).is_infinity());
        assert_eq!(e.add_points(&pt, &qt), e.add_points(&qt, &pt));
        let r = e.add_points(&pt, &pt);
        assert_eq!(
            e.add_points(&e.add_points(&pt, &qt), &r),
            e.add_points(&pt, &e.add_points(&qt, &r))
        );
        assert_eq!(
            e.mul_point(5, &pt),
            e.add_points(&e.mul_point(2, &pt), &e.mul_point(3, &pt))
        );
        assert_eq!(e.mul_point(-3, &qt), e.neg(&e.mul_point(3, &qt)));
    }

    #[test]
    fn neron_tate_example() {
        let (e, pt, qt) = ex9();
        let c = Curve::new(e.clone(), false).unwrap();
        assert_eq!(c.inf_scale, 1);
        assert_eq!(c.minimal_discriminant_degree(), 12);
        let hp = c.neron_tate(&pt, 100).unwrap();
        let hq = c.neron_tate(&qt, 100).unwrap();
        assert_eq!(hp * 36, Ratio::from_integer(6));
        assert_eq!(hq * 36, Ratio::from_integer(15));
        let p6 = e.mul_point(6, &pt);
        assert_eq!(c.neron_tate(&p6, 100).unwrap(), Ratio::from_integer(6));
        for m in [2, 3, 5] {
            assert_eq!(
                c.neron_tate(&e.mul_point(m, &pt), 100).unwrap(),
                hp * (m * m)
            );
        }
        assert_eq!(c.neron_tate(&e.neg(&qt), 100).unwrap(), hq);
        assert_eq!(
            c.neron_tate(&CurvePoint::Infinity, 100).unwrap(),
            Ratio::from_integer(0)
        );
    }

    #[test]
    fn minimal_multiples_of_example() {
        let (e, pt, qt) = ex9();
        let f = e.field().clone();
        let c = Curve::new(e, false).unwrap();
        for pnt in [&pt, &qt] {
            let nt = c.minimal_multiple_in(pnt, &Place::t(&f), 100).unwrap();
            let ni = c.minimal_multiple_in(pnt, &Place::infinity(), 100).unwrap();
            assert_eq!(30 % nt, 0, "{nt}");
            assert_eq!(6 % ni, 0, "{ni}");
        }
        assert_eq!(
            c.minimal_multiple_in(&CurvePoint::Infinity, &Place::t(&f), 10)
                .unwrap(),
            1
        );
    }
}
