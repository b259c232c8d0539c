//! Places of `k = F_q(t)` and their valuations.

use std::fmt;

use crate::error::{Error, Result};
use crate::factor::factorize;
use crate::fq::Fq;
use crate::parse::parse_ratfunc;
use crate::poly::Poly;
use crate::ratfunc::RatFunc;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum PlaceKind {
    /// A monic irreducible polynomial of `F_q[t]`.
    Finite(Poly),
    Infinity,
}

/// A place of `F_q(t)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Place {
    kind: PlaceKind,
}

/// Value of a valuation: an integer, or `+inf` for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    PlusInfinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::PlusInfinity => None,
        }
    }

    /// # Panics
    /// On `+inf`.
    pub fn unwrap(self) -> i64 {
        self.finite().expect("valuation of zero")
    }
}

impl Place {
    pub fn infinity() -> Place {
        Place {
            kind: PlaceKind::Infinity,
        }
    }

    /// Finite place for a monic irreducible polynomial.
    pub fn finite(pi: Poly) -> Result<Place> {
        if !pi.is_monic() || !pi.is_irreducible() {
            return Err(Error::InvalidInput(format!(
                "place polynomial {pi} must be monic irreducible"
            )));
        }
        Ok(Place {
            kind: PlaceKind::Finite(pi),
        })
    }

    /// The place `(t)`.
    pub fn t(field: &Fq) -> Place {
        Place {
            kind: PlaceKind::Finite(Poly::t(field)),
        }
    }

    /// Parse `"inf"` or a polynomial expression. Non-monic input is
    /// normalized by its leading coefficient.
    pub fn parse(spec: &str, field: &Fq) -> Result<Place> {
        let s = spec.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Place::infinity());
        }
        let r = parse_ratfunc(s, field)?;
        let p = r
            .as_poly()
            .ok_or_else(|| Error::InvalidInput(format!("place {s} is not a polynomial")))?;
        if p.degree().unwrap_or(0) == 0 {
            return Err(Error::InvalidInput(format!("place {s} is a constant")));
        }
        Place::finite(p.monic())
    }

    pub fn kind(&self) -> &PlaceKind {
        &self.kind
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.kind, PlaceKind::Infinity)
    }

    pub fn poly(&self) -> Option<&Poly> {
        match &self.kind {
            PlaceKind::Finite(p) => Some(p),
            PlaceKind::Infinity => None,
        }
    }

    /// `[F_v : F_q]`.
    pub fn degree(&self) -> u32 {
        match &self.kind {
            PlaceKind::Finite(p) => p.degree().unwrap() as u32,
            PlaceKind::Infinity => 1,
        }
    }

    /// Multiplicity of this place in a nonzero polynomial (finite places).
    fn poly_mult(pi: &Poly, f: &Poly) -> i64 {
        let mut k = 0;
        let mut cur = f.clone();
        loop {
            let (q, r) = cur.divrem(pi);
            if !r.is_zero() {
                return k;
            }
            k += 1;
            cur = q;
        }
    }

    /// `ord_v(x)`; `+inf` for zero.
    pub fn ord(&self, x: &RatFunc) -> Valuation {
        if x.is_zero() {
            return Valuation::PlusInfinity;
        }
        let v = match &self.kind {
            PlaceKind::Infinity => x.den().deg() - x.num().deg(),
            PlaceKind::Finite(pi) => Place::poly_mult(pi, x.num()) - Place::poly_mult(pi, x.den()),
        };
        Valuation::Finite(v)
    }

    /// Uniformizer symbol used when rendering local expansions.
    pub fn uniformizer_name(&self) -> String {
        match &self.kind {
            PlaceKind::Infinity => "1/t".into(),
            PlaceKind::Finite(p) if p.degree() == Some(1) && p.coeff(0).is_zero() => "t".into(),
            PlaceKind::Finite(_) => "u".into(),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PlaceKind::Infinity => f.write_str("inf"),
            PlaceKind::Finite(p) => write!(f, "{p}"),
        }
    }
}

/// `ord_v(x)`.
pub fn ord_at(x: &RatFunc, v: &Place) -> Valuation {
    v.ord(x)
}

/// All places where a nonzero rational function has nonzero valuation,
/// finite ones first in canonical order, then infinity.
pub fn support(x: &RatFunc) -> Vec<(Place, i64)> {
    let mut out = Vec::new();
    for part in [x.num(), x.den()] {
        if part.degree().unwrap_or(0) == 0 {
            continue;
        }
        for (g, _) in factorize(part).factors {
            let place = Place {
                kind: PlaceKind::Finite(g),
            };
            let v = place.ord(x).unwrap();
            out.push((place, v));
        }
    }
    out.sort_by(|a, b| a.0.poly().unwrap().canonical_cmp(b.0.poly().unwrap()));
    let inf = Place::infinity();
    let v = inf.ord(x).unwrap();
    if v != 0 {
        out.push((inf, v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ord_examples() {
        let f = Fq::prime(3).unwrap();
        let p = |s| parse_ratfunc(s, &f).unwrap();
        assert_eq!(
            ord_at(&p("t^2 - 1"), &Place::infinity()),
            Valuation::Finite(-2)
        );
        assert_eq!(ord_at(&p("t^3/(1+t)"), &Place::t(&f)), Valuation::Finite(3));
        let delta = p("(t+1)^3*(t-1)^5*(t^2-t-1)^2");
        let v = Place::parse("t - 1", &f).unwrap();
        assert_eq!(ord_at(&delta, &v), Valuation::Finite(5));
        assert_eq!(ord_at(&RatFunc::zero(&f), &v), Valuation::PlusInfinity);
    }

    #[test]
    fn parse_rejects_reducible() {
        let f = Fq::prime(3).unwrap();
        assert!(Place::parse("t^2 - 1", &f).is_err());
        let q = Place::parse("2*t^2 + t + 1", &f).unwrap();
        assert_eq!(q.poly().unwrap().to_string(), "t^2 - t - 1");
        assert_eq!(q.degree(), 2);
        assert!(Place::parse("inf", &f).unwrap().is_infinite());
        assert_eq!(
            Place::parse("2*t + 2", &f)
                .unwrap()
                .poly()
                .unwrap()
                .to_string(),
            "t + 1"
        );
    }
}
