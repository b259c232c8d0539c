//! Curve and point files.
//!
//! Curve files are `key = value` lines; `#` starts a comment.
//!
//! ```text
//! p = 3
//! n = 1
//! a2 = t^2 - 1
//! a6 = (t-1)^2*(t^2-t-1)^2
//! minimal = false
//! point.P = 0, (t-1)*(t^2-t-1)
//! point.Q = t^2 - t, t^2 - 1
//! ```
//!
//! `n > 1` needs `modulus`, the coefficients of a monic irreducible
//! polynomial over F_p listed from low to high degree. Missing `a_i` are 0.
//! `minimal = true` attests minimality at finite places where
//! `ord_v(Δ) >= 12`. Point files hold `x = ...` and `y = ...` lines, or the
//! single word `O`.

use std::collections::BTreeMap;
use std::path::Path;

use charp_heights::{parse_ratfunc, CurvePoint, FieldSpec, Fq, RatFunc, WeierstrassModel};

use crate::error::{CliError, CliResult};

/// A parsed curve file.
#[derive(Clone, Debug)]
pub struct CurveFile {
    pub field: Fq,
    pub model: WeierstrassModel,
    pub minimal_attested: bool,
    pub points: BTreeMap<String, CurvePoint>,
}

fn entries(text: &str) -> CliResult<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("line {}: expected `key = value`", i + 1)))?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_u32(line: usize, key: &str, v: &str) -> CliResult<u32> {
    v.parse().map_err(|_| {
        CliError::Parse(format!(
            "line {line}: `{key}` must be a nonnegative integer"
        ))
    })
}

fn expr(line: usize, v: &str, field: &Fq) -> CliResult<RatFunc> {
    parse_ratfunc(v, field).map_err(|e| CliError::Parse(format!("line {line}: {e}")))
}

/// `x, y` or `O`.
pub fn parse_inline_point(text: &str, model: &WeierstrassModel) -> CliResult<CurvePoint> {
    let text = text.trim();
    if text == "O" {
        return Ok(CurvePoint::Infinity);
    }
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| CliError::Parse(format!("point `{text}`: expected `x, y` or `O`")))?;
    let f = model.field();
    let x = parse_ratfunc(x.trim(), f).map_err(|e| CliError::Parse(format!("point x: {e}")))?;
    let y = parse_ratfunc(y.trim(), f).map_err(|e| CliError::Parse(format!("point y: {e}")))?;
    Ok(model.point(x, y)?)
}

pub fn parse_curve_file(text: &str) -> CliResult<CurveFile> {
    let entries = entries(text)?;
    let mut p = None;
    let mut n = 1u32;
    let mut modulus = None;
    for (line, k, v) in &entries {
        match k.as_str() {
            "p" => p = Some(parse_u32(*line, k, v)?),
            "n" => n = parse_u32(*line, k, v)?,
            "modulus" => {
                let coeffs = v
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_u32(*line, k, s))
                    .collect::<CliResult<Vec<u32>>>()?;
                modulus = Some(coeffs);
            }
            _ => {}
        }
    }
    let p = p.ok_or_else(|| CliError::Parse("missing `p`".into()))?;
    let spec = match (n, modulus) {
        (1, None) => FieldSpec::prime(p),
        (_, Some(m)) => {
            let spec = FieldSpec::extension(p, m);
            if spec.n != n {
                return Err(CliError::Parse(format!(
                    "modulus has degree {} but n = {n}",
                    spec.n
                )));
            }
            spec
        }
        (_, None) => return Err(CliError::Parse(format!("n = {n} needs a `modulus`"))),
    };
    let field = Fq::new(&spec)?;
    let mut a: [RatFunc; 5] = std::array::from_fn(|_| RatFunc::zero(&field));
    let mut minimal_attested = false;
    let mut raw_points = Vec::new();
    for (line, k, v) in entries {
        let slot = match k.as_str() {
            "p" | "n" | "modulus" => continue,
            "a1" => 0,
            "a2" => 1,
            "a3" => 2,
            "a4" => 3,
            "a6" => 4,
            "minimal" => {
                minimal_attested = match v.as_str() {
                    "true" | "yes" => true,
                    "false" | "no" => false,
                    _ => {
                        return Err(CliError::Parse(format!(
                            "line {line}: `minimal` must be true or false"
                        )))
                    }
                };
                continue;
            }
            other => match other.strip_prefix("point.") {
                Some(name) if !name.is_empty() => {
                    raw_points.push((line, name.to_string(), v));
                    continue;
                }
                _ => {
                    return Err(CliError::Parse(format!(
                        "line {line}: unknown key `{other}`"
                    )))
                }
            },
        };
        a[slot] = expr(line, &v, &field)?;
    }
    let model = WeierstrassModel::new(a)?;
    let mut points = BTreeMap::new();
    for (line, name, v) in raw_points {
        let pt = parse_inline_point(&v, &model).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("line {line}: {m}")),
            other => other,
        })?;
        points.insert(name, pt);
    }
    Ok(CurveFile {
        field,
        model,
        minimal_attested,
        points,
    })
}

pub fn parse_point_file(text: &str, model: &WeierstrassModel) -> CliResult<CurvePoint> {
    if text.split('#').next().unwrap_or("").trim() == "O" {
        return Ok(CurvePoint::Infinity);
    }
    let mut x = None;
    let mut y = None;
    for (line, k, v) in entries(text)? {
        match k.as_str() {
            "x" => x = Some(expr(line, &v, model.field())?),
            "y" => y = Some(expr(line, &v, model.field())?),
            other => {
                return Err(CliError::Parse(format!(
                    "line {line}: unknown key `{other}`"
                )))
            }
        }
    }
    match (x, y) {
        (Some(x), Some(y)) => Ok(model.point(x, y)?),
        _ => Err(CliError::Parse("point file needs both `x` and `y`".into())),
    }
}

/// Resolve `--point`: `O`, a name from the curve file, a point file, or an
/// inline `x, y`.
pub fn resolve_point(spec: &str, curve: &CurveFile) -> CliResult<CurvePoint> {
    let spec = spec.trim();
    if spec == "O" {
        return Ok(CurvePoint::Infinity);
    }
    if let Some(p) = curve.points.get(spec) {
        return Ok(p.clone());
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
        return parse_point_file(&text, &curve.model);
    }
    if spec.contains(',') {
        return parse_inline_point(spec, &curve.model);
    }
    Err(CliError::Parse(format!(
        "unknown point `{spec}` (not a name, file, or `x, y`)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: &str = "p = 3\nn = 1\na2 = t^2 - 1\na6 = (t-1)^2*(t^2-t-1)^2  # constant term\n\
                      point.P = 0, (t-1)*(t^2-t-1)\npoint.Q = t^2 - t, t^2 - 1\n";

    #[test]
    fn parses_example() {
        let c = parse_curve_file(EX).unwrap();
        assert_eq!(c.field.characteristic(), 3);
        assert_eq!(c.model.a2().to_string(), "t^2 - 1");
        assert_eq!(c.points.len(), 2);
        assert!(!c.minimal_attested);
        assert!(resolve_point("O", &c).unwrap().is_infinity());
        assert_eq!(
            resolve_point("t^2 - t, t^2 - 1", &c).unwrap(),
            c.points["Q"]
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_curve_file("n = 1\n"),
            Err(CliError::Parse(_))
        ));
        assert!(matches!(
            parse_curve_file("p = 3\nfoo = 1\n"),
            Err(CliError::Parse(_))
        ));
        assert!(matches!(
            parse_curve_file("p = 3\na6 = t +\n"),
            Err(CliError::Parse(_))
        ));
        assert!(matches!(
            parse_curve_file("p = 3\nn = 2\n"),
            Err(CliError::Parse(_))
        ));
        // a point off the curve
        let c = parse_curve_file(EX).unwrap();
        assert!(resolve_point("0, 1", &c).is_err());
    }

    #[test]
    fn extension_field() {
        let c =
            parse_curve_file("p = 3\nn = 2\nmodulus = 1 0 1\na2 = a*t\na6 = t^3 + a\n").unwrap();
        assert_eq!(c.field.order(), 9);
    }

    #[test]
    fn point_files() {
        let c = parse_curve_file(EX).unwrap();
        let p = parse_point_file("x = 0\ny = (t-1)*(t^2-t-1)\n", &c.model).unwrap();
        assert_eq!(p, c.points["P"]);
        assert!(parse_point_file("O\n", &c.model).unwrap().is_infinity());
    }
}
