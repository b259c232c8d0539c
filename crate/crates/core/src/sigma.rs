//! The Mazur-Tate sigma function from its product formula, with exact and
//! local coefficients, and checks of its characterizing identities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::curve::{CurvePoint, WeierstrassModel};
use crate::error::{Error, Result};
use crate::formal::{DivisionPoly, FormalGroup};
use crate::local::{positive_part, pth_power_test, LocalElement, LocalField};
use crate::place::{Place, Valuation};
use crate::ratfunc::RatFunc;
use crate::series::{Coeff, TruncSeries};

type S<C> = TruncSeries<C>;

/// `σ(z) mod z^prec` with the number of product factors used.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSeries<C: Coeff> {
    pub series: S<C>,
    pub factors_used: usize,
}

impl SigmaSeries<RatFunc> {
    pub fn render(&self) -> String {
        self.series.render()
    }
}

fn cpow<C: Coeff>(c: &C, mut e: u64) -> C {
    let mut acc = c.one_like();
    let mut base = c.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.times(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.times(&base);
        }
    }
    acc
}

fn is_one<C: Coeff>(c: &C) -> bool {
    c.minus(&c.one_like()).vanishes()
}

/// `σ = z ∏_{n≥1} B_n^(p^(n-1))` with
/// `B_n = c_n z^(p-1) g_p^(p^(n-1))(h_n(z))`, where `f_p(z) = g_p(z^p)`,
/// `h_n = g_n^{-1}`, `[p^n](z) = g_n(z^(p^n))` and
/// `c_n = 1 / (α^(p^(n-1)) α_n^(p-1))`, `α_n = α^((p^n-1)/(p-1))`.
///
/// Factors are included while `p^(n-1) < prec - 1`; later ones are
/// `≡ 1 mod z^(prec-1)`.
pub fn sigma_product<C: Coeff>(fg: &FormalGroup<C>, prec: i64) -> Result<SigmaSeries<C>> {
    let zero = fg.a_invariants()[0].zero_like();
    let z = S::var(&zero);
    if prec <= 2 {
        return Ok(SigmaSeries {
            series: z.with_prec(prec.max(1)),
            factors_used: 0,
        });
    }
    let p = fg.characteristic() as i64;
    let alpha = fg.hasse_invariant();
    if alpha.vanishes() || alpha.inverse().is_none() {
        return Err(Error::Supersingular(
            "the working place (Hasse invariant vanishes)".into(),
        ));
    }
    let m1 = prec - 1;
    let mut count = 0usize;
    while p.pow(count as u32) < m1 {
        count += 1;
    }
    let r = |n: usize| -> i64 { (m1 + p.pow(n as u32 - 1) - 1) / p.pow(n as u32 - 1) };
    let r1 = r(1);

    let fp = DivisionPoly::new(fg, p)?;
    let fps = fg.division_series(&fp, p * r1)?;
    fp.check_normalization(fg, &fps)?;
    let gp = fps.descend(1)?;
    let g1 = fg.g1(r1 + 1)?;
    let chain = fg.g_chain(&g1, count)?;

    let mut prod = S::one(&zero).with_prec(m1);
    for n in 1..=count {
        let rn = r(n);
        let q = p.pow(n as u32 - 1) as u64;
        let big_g = gp.frobenius_twist(n as u32 - 1).with_prec(1 - p + rn);
        let hn = chain[n - 1].with_prec(rn + 1).compositional_inverse()?;
        let alpha_n = cpow(&alpha, (p.pow(n as u32) as u64 - 1) / (p as u64 - 1));
        let cn = cpow(&alpha, q)
            .times(&cpow(&alpha_n, p as u64 - 1))
            .inverse()
            .ok_or_else(|| Error::Supersingular("the working place".into()))?;
        let b = big_g.compose(&hn)?.shift(p - 1).scale(&cn).with_prec(rn);
        if b.val() != 0 || !b.lead().is_some_and(is_one) {
            return Err(Error::Internal(format!(
                "product factor {n} is not a 1-unit series"
            )));
        }
        prod = prod.mul(&b.frobenius_power(n as u32 - 1)).with_prec(m1);
    }
    Ok(SigmaSeries {
        series: prod.shift(1).with_prec(prec),
        factors_used: count,
    })
}

/// Stable textual key identifying a model.
pub fn model_key(e: &WeierstrassModel) -> String {
    let f = e.field();
    let a: Vec<String> = e.a_invariants().iter().map(|c| c.to_string()).collect();
    format!(
        "{}^{}:{:?}:{}",
        f.characteristic(),
        f.degree(),
        f.modulus(),
        a.join(",")
    )
}

type ExactCache = Mutex<HashMap<String, Arc<SigmaSeries<RatFunc>>>>;

fn exact_cache() -> &'static ExactCache {
    static CACHE: OnceLock<ExactCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `σ mod z^prec` with coefficients in `F_q(t)`, memoized per model.
pub fn sigma_series(e: &WeierstrassModel, prec: i64) -> Result<Arc<SigmaSeries<RatFunc>>> {
    let key = model_key(e);
    if let Some(s) = exact_cache().lock().unwrap().get(&key) {
        if s.series.prec() >= prec {
            return Ok(Arc::new(SigmaSeries {
                series: s.series.with_prec(prec),
                factors_used: s.factors_used,
            }));
        }
    }
    let s = Arc::new(sigma_product(&FormalGroup::from_model(e), prec)?);
    exact_cache().lock().unwrap().insert(key, s.clone());
    Ok(s)
}

/// `σ([-1] z) = -σ(z)` to `z`-precision `prec`. When `a1 = a3 = 0` the
/// formal inverse is `-z` and this says that `σ` is odd.
pub fn check_sigma_oddness(e: &WeierstrassModel, prec: i64) -> Result<bool> {
    let s = sigma_series(e, prec)?.series.clone();
    let inv = FormalGroup::from_model(e).inverse_series(prec)?;
    let sum = s.compose(&inv)?.add(&s);
    Ok(sum.prec() >= prec && sum.terms().all(|(_, c)| c.is_zero()))
}

/// Sigma of a model over the completion at a place, with coefficients known
/// to absolute precision `coeff_prec` and the series known mod `z^zprec`.
#[derive(Clone, Debug)]
pub struct LocalSigma {
    pub field: LocalField,
    pub group: FormalGroup<LocalElement>,
    pub series: S<LocalElement>,
    pub coeff_prec: i64,
}

impl LocalSigma {
    /// Requires the model integral at `v` with `α` a unit there, so all
    /// coefficients of σ are integral.
    pub fn new(e: &WeierstrassModel, v: &Place, zprec: i64, coeff_prec: i64) -> Result<LocalSigma> {
        check_local_hypotheses(e, v)?;
        let field = LocalField::new(v, e.field())?;
        let group = FormalGroup::from_model(e).localize(&field, coeff_prec);
        let series = sigma_product(&group, zprec)?.series;
        Ok(LocalSigma {
            field,
            group,
            series,
            coeff_prec,
        })
    }

    pub fn zprec(&self) -> i64 {
        self.series.prec()
    }

    /// `σ(z0)` for `ord z0 >= 1`; the tail beyond `zprec` is bounded by
    /// `zprec * ord z0` because the coefficients are integral.
    pub fn eval(&self, z0: &LocalElement) -> Result<LocalElement> {
        eval_integral_series(&self.series, z0)
    }
}

/// `Σ s_j z0^j` for a series with integral coefficients, with the truncated
/// tail folded into the precision.
pub fn eval_integral_series(s: &S<LocalElement>, z0: &LocalElement) -> Result<LocalElement> {
    let k = z0.lead_exponent();
    if s.val() < 0 {
        return Err(Error::Precondition("expected a power series".into()));
    }
    if k < 1 {
        return Err(Error::Precondition(
            "evaluation point must have positive valuation".into(),
        ));
    }
    let field = z0.field();
    let hi = s.prec() - 1;
    let mut acc = field.zero(z0.prec());
    for j in (0..=hi).rev() {
        acc = acc.mul(z0).add(&s.coeff(j));
    }
    let tail = s.prec().saturating_mul(k);
    Ok(acc.with_prec(acc.prec().min(tail)))
}

/// `v`-adic hypotheses for local sigma: integral model, `α` a unit.
pub fn check_local_hypotheses(e: &WeierstrassModel, v: &Place) -> Result<()> {
    if !e.is_integral_at(v) {
        return Err(Error::NotIntegral(v.to_string()));
    }
    match v.ord(&e.hasse_invariant()) {
        Valuation::Finite(0) => Ok(()),
        _ => Err(Error::Supersingular(format!(
            "{v} (Hasse invariant is not a unit there)"
        ))),
    }
}

type LocalCache = Mutex<HashMap<(String, String), Arc<LocalSigma>>>;

fn local_cache() -> &'static LocalCache {
    static CACHE: OnceLock<LocalCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// A cached [`LocalSigma`] meeting the requested precisions.
pub fn local_sigma(
    e: &WeierstrassModel,
    v: &Place,
    zprec: i64,
    coeff_prec: i64,
) -> Result<Arc<LocalSigma>> {
    let key = (model_key(e), v.to_string());
    if let Some(s) = local_cache().lock().unwrap().get(&key) {
        if s.zprec() >= zprec && s.coeff_prec >= coeff_prec {
            return Ok(s.clone());
        }
    }
    let s = Arc::new(LocalSigma::new(e, v, zprec, coeff_prec)?);
    local_cache().lock().unwrap().insert(key, s.clone());
    Ok(s)
}

/// Maximum `z`-precision of the adaptive evaluation.
pub const ZPREC_CAP: i64 = 4096;

/// `z(P) = -x/y` expanded at `v` to relative precision `rel`.
pub fn z_at(p: &CurvePoint, field: &LocalField, rel: i64) -> Result<LocalElement> {
    let z = p
        .z()
        .ok_or_else(|| Error::Precondition("point is not in the formal group".into()))?;
    Ok(field.expand(&z, rel))
}

/// `σ(P) ∈ k_v` to relative precision `vprec`, for `P` in the formal group
/// of the given model at `v`.
pub fn sigma_eval(
    e: &WeierstrassModel,
    p: &CurvePoint,
    v: &Place,
    vprec: i64,
) -> Result<LocalElement> {
    let z = p
        .z()
        .ok_or_else(|| Error::Precondition("point is not in the formal group".into()))?;
    let k = match v.ord(&z) {
        Valuation::Finite(k) if k >= 1 => k,
        _ => {
            return Err(Error::Precondition(format!(
                "point is not in the formal group at {v}"
            )))
        }
    };
    let mut zprec = 1 + (vprec + k - 1) / k + 1;
    loop {
        let sig = local_sigma(e, v, zprec, vprec + k)?;
        let z0 = sig.field.expand(&z, vprec + zprec);
        let val = sig.eval(&z0)?;
        if val.relative_prec() >= vprec {
            return Ok(val.with_prec(k + vprec));
        }
        if zprec >= ZPREC_CAP {
            return Err(Error::Precision(format!(
                "σ at {v}: reached relative precision {} of {vprec} at z-precision cap {ZPREC_CAP}",
                val.relative_prec()
            )));
        }
        zprec = (2 * zprec).min(ZPREC_CAP);
    }
}

/// `f_m(P)` at `v`, to relative precision `rel`.
pub fn division_value(
    e: &WeierstrassModel,
    m: i64,
    p: &CurvePoint,
    v: &Place,
    rel: i64,
) -> Result<LocalElement> {
    let (x, y) = match p {
        CurvePoint::Affine { x, y } => (x, y),
        CurvePoint::Infinity => return Err(Error::Precondition("f_m(O) is not defined".into())),
    };
    let fg = FormalGroup::from_model(e);
    let f = DivisionPoly::new(&fg, m)?;
    let field = LocalField::new(v, e.field())?;
    let mut extra = 4 + 2 * f.x_degree() as i64;
    for _ in 0..8 {
        let ox = v.ord(x).finite().unwrap_or(0);
        let oy = v.ord(y).finite().unwrap_or(0);
        let need = rel + extra - (ox.min(oy)).min(0) * (f.x_degree() as i64 + 1);
        let fl = f.localize(&field, need + 8);
        let val = fl.eval_point(&field.expand(x, need), &field.expand(y, need));
        if !val.is_zero() && val.relative_prec() >= rel {
            return Ok(val.with_prec(val.lead_exponent() + rel));
        }
        extra *= 2;
    }
    Err(Error::Precision(format!(
        "f_{m} at {v}: relative precision {rel} not reached"
    )))
}

/// Outcome of an identity check in `k_v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discrepancy {
    /// `ord_v(lhs/rhs - 1)`, or `None` when the two sides agree to the
    /// joint precision.
    pub disagreement_at: Option<i64>,
    /// Relative precision to which the comparison was made.
    pub precision: i64,
}

impl Discrepancy {
    pub fn holds(&self) -> bool {
        self.disagreement_at.is_none()
    }

    fn compare(lhs: &LocalElement, rhs: &LocalElement) -> Result<Discrepancy> {
        if lhs.is_zero() || rhs.is_zero() {
            return Err(Error::Precision(
                "identity side vanishes to working precision".into(),
            ));
        }
        let q = lhs.div(rhs)?;
        let one = q.field().one(q.prec());
        let d = q.sub(&one);
        let precision = q.relative_prec();
        let disagreement_at = if q.lead_exponent() != 0 {
            Some(q.lead_exponent().min(0))
        } else if d.is_zero() {
            None
        } else {
            Some(d.lead_exponent())
        };
        Ok(Discrepancy {
            disagreement_at,
            precision,
        })
    }
}

/// Which characterizing identity to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identity {
    /// `σ(P+Q) σ(P-Q) / (σ(P)^2 σ(Q)^2) = x(Q) - x(P)`.
    A,
    /// `σ(mQ) = σ(Q)^(m^2) f_m(Q)`.
    B(i64),
    /// `σ(pQ) = σ(Q)^(p^2) f_p(Q)`.
    C,
}

/// Evaluate both sides of an identity at `v` to relative precision `vprec`.
/// Points must lie in the formal group at `v` on the given model.
pub fn check_mt_identity(
    e: &WeierstrassModel,
    which: Identity,
    p: &CurvePoint,
    q: Option<&CurvePoint>,
    v: &Place,
    vprec: i64,
) -> Result<Discrepancy> {
    match which {
        Identity::A => {
            let q = q.ok_or_else(|| Error::InvalidInput("identity (a) needs two points".into()))?;
            let (xp, xq) = match (p.x(), q.x()) {
                (Some(a), Some(b)) => (a.clone(), b.clone()),
                _ => {
                    return Err(Error::Precondition(
                        "identity (a) needs affine points".into(),
                    ))
                }
            };
            let sum = e.add_points(p, q);
            let diff = e.sub_points(p, q);
            let field = LocalField::new(v, e.field())?;
            let sp = sigma_eval(e, p, v, vprec)?;
            let sq = sigma_eval(e, q, v, vprec)?;
            let num = sigma_eval(e, &sum, v, vprec)?.mul(&sigma_eval(e, &diff, v, vprec)?);
            let lhs = num.div(&sp.mul(&sp).mul(&sq).mul(&sq))?;
            let rhs = field.expand(&xq.sub_ref(&xp), vprec);
            Discrepancy::compare(&lhs, &rhs)
        }
        Identity::B(m) => {
            let mq = e.mul_point(m, p);
            let lhs = sigma_eval(e, &mq, v, vprec)?;
            let sq = sigma_eval(e, p, v, vprec)?;
            let rhs = sq.pow(m * m).mul(&division_value(e, m, p, v, vprec)?);
            Discrepancy::compare(&lhs, &rhs)
        }
        Identity::C => check_mt_identity(e, Identity::B(e.characteristic() as i64), p, q, v, vprec),
    }
}

/// `σ(P) ≡ f_(p^N)([p^N]^{-1}(z(P)))` modulo `p^N`-th powers in `k_v`.
///
/// With `f_p(z) = g_p(z^p)`, `[p^n](z) = g_n(z^(p^n))` and `w_n = g_n^{-1}(z(P))`,
/// the recursion `f_(p^n) = f_(p^(n-1))([p] z) · f_p(z)^(p^(2n-2))` gives
/// `f_(p^N)(ζ) = Π_n g_p^(σ^(n-1))(w_n)^(p^(n-1))` for `[p^N] ζ = z(P)`, so no
/// fractional exponents occur and only `f_p` is expanded.
pub fn check_sigma_congruence(
    e: &WeierstrassModel,
    p: &CurvePoint,
    v: &Place,
    n: u32,
    vprec: i64,
) -> Result<bool> {
    if n == 0 {
        return Ok(true);
    }
    let pr = e.characteristic() as i64;
    let q = pr.pow(n);
    let z = p
        .z()
        .ok_or_else(|| Error::Precondition("point is not in the formal group".into()))?;
    let k = match v.ord(&z) {
        Valuation::Finite(k) if k >= 1 => k,
        _ => {
            return Err(Error::Precondition(format!(
                "point is not in the formal group at {v}"
            )))
        }
    };
    check_local_hypotheses(e, v)?;
    let lhs = sigma_eval(e, p, v, vprec)?;

    // terms of g_p and h_n up to w^(vprec/k + 2) beyond the lead suffice
    let zp = vprec / k + 2;
    let field = LocalField::new(v, e.field())?;
    let fg = FormalGroup::from_model(e).localize(&field, vprec + (pr + 2) * k + 8);
    let f = DivisionPoly::new(&fg, pr)?;
    let gp = fg.division_series(&f, pr * (zp + 1))?.descend(1)?;
    let g1 = fg.g1(zp + 1)?;
    let z0 = field.expand(&z, vprec + zp);
    let mut rhs = field.one(vprec + k);
    for (i, gn) in fg.g_chain(&g1, n as usize)?.iter().enumerate() {
        let h = gn.with_prec(zp + 1).compositional_inverse()?;
        let wn = eval_integral_series(&h, &z0)?;
        let term = eval_laurent(&gp.frobenius_twist(i as u32), &wn)?;
        rhs = rhs.mul(&term.pow(pr.pow(i as u32)));
    }
    let ratio = lhs.div(&rhs)?;
    if ratio.lead_exponent().rem_euclid(q) != 0 {
        return Ok(false);
    }
    let unit = positive_part(&ratio)?.unit;
    pth_power_test(&unit, n)
}

/// `Σ g_j w0^j` for a Laurent series with integral coefficients.
fn eval_laurent(g: &S<LocalElement>, w0: &LocalElement) -> Result<LocalElement> {
    let lo = g.val();
    if lo >= 0 {
        return eval_integral_series(g, w0);
    }
    let pos = eval_integral_series(&g.shift(-lo), w0)?;
    pos.div(&w0.pow(-lo))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fq::Fq;
    use crate::parse::parse_ratfunc;

    pub(crate) fn ex9() -> (WeierstrassModel, CurvePoint, CurvePoint) {
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
    fn exact_sigma_of_example() {
        let (e, _, _) = ex9();
        let f = e.field().clone();
        let r = |s: &str| parse_ratfunc(s, &f).unwrap();
        let s = sigma_series(&e, 9).unwrap();
        let expect = S::from_terms(
            &r("0"),
            &[
                (1, r("1")),
                (3, r("-(t^2-1)")),
                (5, r("(t-1)^2*(t^2-t-1)^2/(t^2-1)")),
                (7, r("-(t^11+t^9+t^5-t^2-1)/(t+1)^6")),
            ],
            9,
        );
        assert_eq!(s.series, expect, "{}", s.render());
        assert!(s.series.is_odd());
    }

    #[test]
    fn identities_on_example() {
        let (e, pt, qt) = ex9();
        let t = Place::t(e.field());
        let p = e.mul_point(30, &pt);
        let q = e.mul_point(30, &qt);
        assert!(check_mt_identity(&e, Identity::A, &p, Some(&q), &t, 40)
            .unwrap()
            .holds());
        for m in [-1, 2, 3] {
            let d = check_mt_identity(&e, Identity::B(m), &q, None, &t, 40).unwrap();
            assert!(d.holds(), "m = {m}: {d:?}");
        }
        assert!(check_mt_identity(&e, Identity::C, &p, None, &t, 40)
            .unwrap()
            .holds());
    }

    #[test]
    fn congruence_on_example() {
        let (e, pt, qt) = ex9();
        let t = Place::t(e.field());
        let p = e.mul_point(30, &pt);
        for n in [1, 2] {
            assert!(
                check_sigma_congruence(&e, &p, &t, n, 250).unwrap(),
                "N = {n}"
            );
        }
        // the verdict for N = 2 needs the t^27 term squared into view
        let q = e.mul_point(30, &qt);
        assert!(matches!(
            check_sigma_congruence(&e, &q, &t, 2, 40),
            Err(Error::Precision(_))
        ));
    }

    #[test]
    fn exact_and_local_evaluation_agree() {
        let (e, pt, _) = ex9();
        let t = Place::t(e.field());
        let p = e.mul_point(30, &pt);
        let field = LocalField::new(&t, e.field()).unwrap();
        let z = field.expand(&p.z().unwrap(), 40);
        let exact = sigma_series(&e, 16).unwrap();
        let mut acc = field.zero(z.lead_exponent() * 16);
        for (j, c) in exact.series.terms() {
            acc = acc.add(&field.expand(c, 40).mul(&z.pow(j)));
        }
        let local = sigma_eval(&e, &p, &t, 40).unwrap();
        let joint = acc.prec().min(local.prec());
        assert!(acc.with_prec(joint).agrees_with(&local.with_prec(joint)));
        assert!(joint >= 40, "joint precision {joint}");
    }
}
