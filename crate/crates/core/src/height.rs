//! Canonical heights `Ĥ_v` with values in `π_v^Q · U^1`, the associated
//! pairing, the degree relation with the Néron-Tate height, and the
//! `p^N`-th power probe.
//!
//! A height is evaluated at a multiple `nP` landing in `E_v(k)`: the
//! identity component everywhere and the formal group at `v`. Only the
//! prime-to-`p` part of the `1/n^2` root is extracted inside `k_v`.

use std::fmt;
use std::ops::Not;

use num_integer::Integer;
use num_rational::Ratio;
use serde_json::{json, Value};

use crate::curve::{Curve, CurvePoint, ModelIso};
use crate::error::{Error, Result};
use crate::factor::factorize;
use crate::local::{positive_part, pth_power_test, LocalElement, LocalField, PositivePart};
use crate::place::Place;
use crate::poly::Poly;
use crate::ratfunc::RatFunc;
use crate::sigma::{check_local_hypotheses, sigma_eval};

/// Precision marking an exact value.
const EXACT: i64 = i64::MAX / 8;

/// Default search cap for the multiple landing a point in `E_v(k)`.
pub const MULTIPLE_CAP: u64 = 1000;

/// A canonical height value at one place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightValue {
    pub place: Place,
    /// `π_v^e · u` with `u` a 1-unit.
    pub value: PositivePart,
    /// The multiple `n` of the input point that was evaluated.
    pub multiple_used: u64,
    /// The exponent already extracted from `Ĥ_v(nP)`, namely `1/m^2` for
    /// the prime-to-`p` part `m` of `n`, or 1 when nothing was extracted.
    pub root_applied: Ratio<i64>,
}

impl HeightValue {
    /// The exact value 1, for `O` and torsion points.
    fn one(field: &LocalField, multiple_used: u64) -> HeightValue {
        HeightValue {
            place: field.place().clone(),
            value: PositivePart::one(field, EXACT),
            multiple_used,
            root_applied: Ratio::from_integer(1),
        }
    }

    /// Exponent in the display variable: `ord_v` at finite places and
    /// `-ord_∞` (a degree in `t`) at infinity.
    pub fn exponent(&self) -> Ratio<i64> {
        if self.place.is_infinite() {
            -self.value.exponent
        } else {
            self.value.exponent
        }
    }

    /// Relative precision of the unit part, `None` when exact.
    pub fn precision(&self) -> Option<i64> {
        self.is_exact().not().then(|| self.value.unit.prec())
    }

    /// The exact value 1 (height of a torsion point).
    pub fn is_exact(&self) -> bool {
        self.value.unit.prec() >= EXACT
    }

    /// The series, e.g. `1 - t^3 + O(t^30)`. An exact 1 prints as `1`.
    pub fn render(&self) -> String {
        if self.is_exact() {
            return "1".into();
        }
        self.value.render()
    }

    /// Machine-readable form. Offsets are powers of the uniformizer `π_v`
    /// inside the unit (`t^-1` at infinity).
    pub fn to_json(&self) -> Value {
        let res = self.value.unit.field().residue().clone();
        let coeffs: Vec<Value> = self
            .value
            .unit
            .terms()
            .map(|(e, c)| {
                let c = if res.is_prime_field() {
                    json!(res.signed(c))
                } else {
                    json!(res.render(c))
                };
                json!([e, c])
            })
            .collect();
        json!({
            "place": self.place.to_string(),
            "exponent": ratio_json(self.exponent()),
            "unit_coefficients": coeffs,
            "precision": self.precision(),
            "multiple_used": self.multiple_used,
            "root_applied": self.root_applied.to_string(),
        })
    }
}

impl fmt::Display for HeightValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn ratio_json(r: Ratio<i64>) -> Value {
    if r.is_integer() {
        json!(r.numer())
    } else {
        json!(r.to_string())
    }
}

/// Local data assembled from a point: the finite part of its idele from
/// `den(x)`, the `σ` value at `v`, and the change of model at infinity.
#[derive(Clone, Debug)]
pub struct IdeleSummary {
    /// Monic irreducible factors of `den(x(P))` with multiplicities.
    pub den_factorization: Vec<(Poly, u32)>,
    /// `λ_w(P)` at the finite places `w` dividing `den(x(P))`.
    pub lambdas: Vec<(Place, i64)>,
    /// `σ(P)` at the place of evaluation.
    pub sigma: (Place, LocalElement),
    pub inf_iso: ModelIso,
}

impl IdeleSummary {
    pub fn new(curve: &Curve, p: &CurvePoint, v: &Place, vprec: i64) -> Result<IdeleSummary> {
        let x = p
            .x()
            .ok_or_else(|| Error::Precondition("the idele of O is trivial".into()))?;
        let den_factorization = factorize(x.den()).factors;
        let mut lambdas = Vec::new();
        for (g, _) in &den_factorization {
            let w = Place::finite(g.clone())?;
            lambdas.push((w.clone(), curve.local_height(p, &w)?));
        }
        let sigma = sigma_eval(curve.model_at(v), &curve.point_at(p, v), v, vprec)?;
        Ok(IdeleSummary {
            den_factorization,
            lambdas,
            sigma: (v.clone(), sigma),
            inf_iso: curve.inf_iso.clone(),
        })
    }

    /// `ord_w(i(P)_w) = λ_w(P) / 2` at every finite place of `den(x)`.
    pub fn is_consistent(&self) -> bool {
        self.den_factorization
            .iter()
            .zip(&self.lambdas)
            .all(|((_, e), (_, lam))| *e % 2 == 0 && (*e / 2) as i64 * 2 == *lam)
    }
}

/// `⟨den(x(Q)) u^2 / σ(Q)^2⟩_v` for `Q` already in `E_v(k)`, with `u = 1`
/// at finite places.
fn height_of_point_in_ev(
    curve: &Curve,
    q: &CurvePoint,
    v: &Place,
    field: &LocalField,
    vprec: i64,
) -> Result<PositivePart> {
    let x = match q.x() {
        None => return Ok(PositivePart::one(field, EXACT)),
        Some(x) => x,
    };
    let model = curve.model_at(v);
    let qv = curve.point_at(q, v);
    let mut num = RatFunc::from_poly(x.den().monic());
    if v.is_infinite() {
        num = num.mul_ref(&curve.inf_iso.u.pow(2));
    }
    let sigma = sigma_eval(model, &qv, v, vprec)?;
    let value = field.expand(&num, vprec).div(&sigma.mul(&sigma))?;
    let pp = positive_part(&value)?;
    Ok(PositivePart {
        exponent: pp.exponent,
        unit: pp.unit.with_prec(vprec),
    })
}

fn ensure_ordinary(curve: &Curve, v: &Place) -> Result<()> {
    check_local_hypotheses(curve.model_at(v), v)
}

fn in_ev(curve: &Curve, q: &CurvePoint, v: &Place) -> bool {
    q.is_infinity()
        || (curve.in_e0_everywhere(q)
            && curve.model_at(v).in_formal_group(&curve.point_at(q, v), v))
}

/// `Ĥ_v(nP)` as a positive part, after checking `nP ∈ E_v(k)`.
fn height_at_multiple(
    curve: &Curve,
    p: &CurvePoint,
    n: u64,
    v: &Place,
    field: &LocalField,
    vprec: i64,
) -> Result<PositivePart> {
    let q = curve.model.mul_point(n as i64, p);
    if !in_ev(curve, &q, v) {
        return Err(Error::Precondition(format!(
            "{n}P does not lie in E_v(k) at {v}"
        )));
    }
    height_of_point_in_ev(curve, &q, v, field, vprec)
}

fn prime_to_p(mut n: u64, p: u64) -> u64 {
    while n % p == 0 {
        n /= p;
    }
    n
}

fn finish(
    curve: &Curve,
    value: PositivePart,
    v: &Place,
    n: u64,
    user_multiple: bool,
) -> Result<HeightValue> {
    let (value, root_applied) = if user_multiple || value.unit.prec() >= EXACT {
        (value, Ratio::from_integer(1))
    } else {
        let m = prime_to_p(n, curve.model.characteristic() as u64) as i64;
        let root = Ratio::new(1, m * m);
        (value.zp_power(root)?, root)
    };
    Ok(HeightValue {
        place: v.clone(),
        value,
        multiple_used: n,
        root_applied,
    })
}

/// `Ĥ_v(P)` at any place, to relative precision `vprec`.
///
/// With `multiple = Some(n)` the value `Ĥ_v(nP)` is returned unrooted and
/// `nP` must lie in `E_v(k)`. Otherwise the least such `n` is used and the
/// prime-to-`p` part of the `1/n^2` root is extracted.
pub fn height(
    curve: &Curve,
    p: &CurvePoint,
    v: &Place,
    vprec: i64,
    multiple: Option<u64>,
) -> Result<HeightValue> {
    if vprec < 1 {
        return Err(Error::InvalidInput("precision must be at least 1".into()));
    }
    ensure_ordinary(curve, v)?;
    let field = LocalField::new(v, curve.field())?;
    if p.is_infinity() {
        return Ok(HeightValue::one(&field, multiple.unwrap_or(1)));
    }
    let n = match multiple {
        Some(0) => return Err(Error::InvalidInput("multiple must be positive".into())),
        Some(n) => n,
        None => curve.minimal_multiple_in(p, v, MULTIPLE_CAP)?,
    };
    let value = height_at_multiple(curve, p, n, v, &field, vprec)?;
    finish(curve, value, v, n, multiple.is_some())
}

/// `Ĥ_v(P)` at a finite place `v`.
pub fn canonical_height(
    curve: &Curve,
    p: &CurvePoint,
    v: &Place,
    vprec: i64,
    multiple: Option<u64>,
) -> Result<HeightValue> {
    if v.is_infinite() {
        return Err(Error::InvalidInput(
            "use canonical_height_infinity for the infinite place".into(),
        ));
    }
    height(curve, p, v, vprec, multiple)
}

/// `Ĥ_∞(P)`, computed on the model minimal at infinity.
pub fn canonical_height_infinity(
    curve: &Curve,
    p: &CurvePoint,
    vprec: i64,
    multiple: Option<u64>,
) -> Result<HeightValue> {
    height(curve, p, &Place::infinity(), vprec, multiple)
}

/// `⟨P,Q⟩_v = (Ĥ_v(P+Q) / (Ĥ_v(P) Ĥ_v(Q)))^(1/2)`, evaluated on a common
/// multiple `n` and rooted by the prime-to-`p` part of `n^2` unless the
/// multiple is given.
pub fn pair(
    curve: &Curve,
    p: &CurvePoint,
    q: &CurvePoint,
    v: &Place,
    vprec: i64,
    multiple: Option<u64>,
) -> Result<HeightValue> {
    ensure_ordinary(curve, v)?;
    let field = LocalField::new(v, curve.field())?;
    if p.is_infinity() || q.is_infinity() {
        return Ok(HeightValue::one(&field, multiple.unwrap_or(1)));
    }
    let s = curve.model.add_points(p, q);
    let n = match multiple {
        Some(n) => n,
        None => {
            let mut n = 1u64;
            for pt in [p, q, &s] {
                if !pt.is_infinity() {
                    n = n.lcm(&curve.minimal_multiple_in(pt, v, MULTIPLE_CAP)?);
                }
            }
            n
        }
    };
    let hs = height_at_multiple(curve, &s, n, v, &field, vprec)?;
    let hp = height_at_multiple(curve, p, n, v, &field, vprec)?;
    let hq = height_at_multiple(curve, q, n, v, &field, vprec)?;
    let value = hs
        .mul(&hp.inv())
        .mul(&hq.inv())
        .zp_power(Ratio::new(1, 2))?;
    finish(curve, value, v, n, multiple.is_some())
}

/// `(deg Ĥ_∞(P), 2 ĥ(P))`, with the degree read off `Ĥ_∞(nP)` and divided
/// by `n^2`. Both are 0 for torsion points.
pub fn degree_relation(curve: &Curve, p: &CurvePoint) -> Result<(Ratio<i64>, Ratio<i64>)> {
    let zero = Ratio::from_integer(0);
    if curve.is_torsion(p, MULTIPLE_CAP)? {
        return Ok((zero, zero));
    }
    let inf = Place::infinity();
    ensure_ordinary(curve, &inf)?;
    let field = LocalField::new(&inf, curve.field())?;
    let n = curve.minimal_multiple_in(p, &inf, MULTIPLE_CAP)?;
    let h = height_at_multiple(curve, p, n, &inf, &field, 1)?;
    let deg = -h.exponent / (n * n) as i64;
    Ok((deg, curve.neron_tate(p, MULTIPLE_CAP)? * 2))
}

/// Result of the `p^N`-th power probe on `Ĥ_v(nP)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerProbe {
    pub multiple_used: u64,
    /// The unit part of `Ĥ_v(nP)` is a `p^N`-th power to precision.
    pub is_power: bool,
    /// `2 ĥ(nP)`.
    pub two_nt: Ratio<i64>,
    /// `p^N` divides `2 ĥ(nP)`.
    pub nt_divisible: bool,
}

/// Test whether `Ĥ_v(nP)` is a `p^N`-th power, alongside the divisibility
/// of `2 ĥ(nP)` by `p^N`. Heights are taken unrooted at the multiple used.
pub fn power_probe(
    curve: &Curve,
    p: &CurvePoint,
    v: &Place,
    n_exp: u32,
    vprec: i64,
    multiple: Option<u64>,
) -> Result<PowerProbe> {
    if v.is_infinite() {
        return Err(Error::InvalidInput(
            "the power probe is defined at finite places".into(),
        ));
    }
    let h = height(
        curve,
        p,
        v,
        vprec,
        Some(match multiple {
            Some(n) => n,
            None => curve.minimal_multiple_in(p, v, MULTIPLE_CAP)?,
        }),
    )?;
    let is_power = pth_power_test(&h.value.unit, n_exp)?;
    let n = h.multiple_used as i64;
    let two_nt = curve.neron_tate(p, MULTIPLE_CAP)? * 2 * (n * n);
    let pn = (curve.model.characteristic() as i64).pow(n_exp);
    let nt_divisible = two_nt.is_integer() && two_nt.numer() % pn == 0;
    Ok(PowerProbe {
        multiple_used: h.multiple_used,
        is_power,
        two_nt,
        nt_divisible,
    })
}
