//! Exact arithmetic for Mazur-Tate sigma functions and canonical heights of
//! elliptic curves over `F_q(t)`, `q` odd.

pub mod curve;
pub mod error;
pub mod factor;
pub mod formal;
pub mod fq;
pub mod height;
pub mod local;
pub mod parse;
pub mod place;
pub mod poly;
pub mod ratfunc;
mod render;
pub mod series;
pub mod sigma;

pub use curve::{Curve, CurvePoint, ModelIso, ReductionInfo, ReductionType, WeierstrassModel};
pub use error::{Error, ErrorKind, Result};
pub use factor::{factorize, Factorization};
pub use formal::{DivisionPoly, FormalGroup};
pub use fq::{FieldSpec, Fq, FqElem};
pub use height::{
    canonical_height, canonical_height_infinity, degree_relation, height, pair, power_probe,
    HeightValue, IdeleSummary, PowerProbe,
};
pub use local::{positive_part, pth_power_test, zp_power, LocalElement, LocalField, PositivePart};
pub use parse::parse_ratfunc;
pub use place::{ord_at, Place, PlaceKind, Valuation};
pub use poly::Poly;
pub use ratfunc::RatFunc;
pub use series::{Coeff, TruncSeries};
pub use sigma::{
    check_mt_identity, check_sigma_congruence, check_sigma_oddness, sigma_eval, sigma_series,
    Discrepancy, Identity, SigmaSeries,
};
