//! Random ordinary curves with rational points, shared by integration tests.

#![allow(dead_code)]

use charp_heights::height::MULTIPLE_CAP;
use charp_heights::sigma::check_local_hypotheses;
use charp_heights::{
    parse_ratfunc, Curve, CurvePoint, Fq, Place, Poly, RatFunc, Valuation, WeierstrassModel,
};
use num_rational::Ratio;
use rand::Rng;

pub fn ex9() -> (Curve, CurvePoint, CurvePoint) {
    let f = Fq::prime(3).unwrap();
    let r = |s: &str| parse_ratfunc(s, &f).unwrap();
    let e = WeierstrassModel::new([
        r("0"),
        r("t^2 - 1"),
        r("0"),
        r("0"),
        r("(t-1)^2*(t^2-t-1)^2"),
    ])
    .unwrap();
    let p = e.point(r("0"), r("(t-1)*(t^2-t-1)")).unwrap();
    let q = e.point(r("t^2 - t"), r("t^2 - 1")).unwrap();
    (Curve::new(e, false).unwrap(), p, q)
}

pub fn rpoly<R: Rng>(f: &Fq, deg: usize, rng: &mut R) -> RatFunc {
    RatFunc::from_poly(Poly::random(f, deg, rng))
}

/// A curve with two non-torsion points, ordinary at a degree-one place `v`
/// (and at infinity when asked), together with the least multiples of the
/// points landing in `E_v(k)` (and `E_∞(k)`).
pub struct TestCurve {
    pub curve: Curve,
    pub place: Place,
    pub points: [CurvePoint; 2],
    pub at_v: [CurvePoint; 2],
    pub at_inf: Option<[CurvePoint; 2]>,
}

/// `y^2 + a1 x y + a3 y = x^3 + a2 x^2 + a4 x + a6` through `(x1, y1)` and
/// `(x1 + c, y2)`, which keeps `a4` and `a6` polynomial. Degrees stay within
/// the weights so that `u = t` suffices at infinity.
pub fn random_test_curve<R: Rng>(
    f: &Fq,
    rng: &mut R,
    need_infinity: bool,
    max_multiple: u64,
) -> TestCurve {
    let cap = max_multiple.min(MULTIPLE_CAP);
    loop {
        let a1 = if rng.gen_bool(0.3) {
            rpoly(f, 0, rng)
        } else {
            RatFunc::zero(f)
        };
        let a3 = if rng.gen_bool(0.3) {
            rpoly(f, 1, rng)
        } else {
            RatFunc::zero(f)
        };
        let a2 = rpoly(f, 2, rng);
        let x1 = rpoly(f, 1, rng);
        let y1 = rpoly(f, 1, rng);
        let y2 = rpoly(f, 1, rng);
        let c = RatFunc::constant(f, f.random_nonzero(rng));
        let x2 = x1.add_ref(&c);
        let rhs = |x: &RatFunc, y: &RatFunc| {
            y.mul_ref(y)
                .add_ref(&a1.mul_ref(x).mul_ref(y))
                .add_ref(&a3.mul_ref(y))
                .sub_ref(&x.pow(3))
                .sub_ref(&a2.mul_ref(&x.mul_ref(x)))
        };
        let (r1, r2) = (rhs(&x1, &y1), rhs(&x2, &y2));
        let a4 = r1.sub_ref(&r2).div_ref(&x1.sub_ref(&x2)).unwrap();
        let a6 = r1.sub_ref(&a4.mul_ref(&x1));
        let Ok(model) = WeierstrassModel::new([a1, a2, a3, a4, a6]) else {
            continue;
        };
        let Ok(curve) = Curve::new(model, false) else {
            continue;
        };
        let Some(place) = f
            .elements()
            .map(|a| Place::finite(Poly::new(f, vec![f.neg(a), f.one()])).unwrap())
            .find(|v| {
                v.ord(curve.model.discriminant()) == Valuation::Finite(0)
                    && check_local_hypotheses(&curve.model, v).is_ok()
            })
        else {
            continue;
        };
        let inf = Place::infinity();
        if need_infinity && check_local_hypotheses(&curve.inf_model, &inf).is_err() {
            continue;
        }
        let p1 = curve.model.point(x1, y1).unwrap();
        let p2 = curve.model.point(x2, y2).unwrap();
        let zero = Ratio::from_integer(0);
        let nontorsion =
            |p: &CurvePoint| curve.neron_tate(p, cap).map(|h| h > zero).unwrap_or(false);
        if !nontorsion(&p1) || !nontorsion(&p2) || !nontorsion(&curve.model.add_points(&p1, &p2)) {
            continue;
        }
        if !nontorsion(&curve.model.sub_points(&p1, &p2)) {
            continue;
        }
        // the two multiples must not be dependent enough to sum or differ to O
        let land = |v: &Place| -> Option<[CurvePoint; 2]> {
            let a = curve.minimal_multiple_point(&p1, v, cap).ok()?.1;
            let b = curve.minimal_multiple_point(&p2, v, cap).ok()?.1;
            let m = &curve.model;
            (!m.add_points(&a, &b).is_infinity() && !m.sub_points(&a, &b).is_infinity())
                .then_some([a, b])
        };
        let Some(at_v) = land(&place) else { continue };
        let at_inf = if need_infinity {
            match land(&inf) {
                Some(x) => Some(x),
                None => continue,
            }
        } else {
            None
        };
        return TestCurve {
            curve,
            place,
            points: [p1, p2],
            at_v,
            at_inf,
        };
    }
}
