//! Subcommands: `sigma`, `height` and `verify`.

use std::fs;
use std::path::{Path, PathBuf};

use charp_heights::height::MULTIPLE_CAP;
use charp_heights::sigma::model_key;
use charp_heights::{
    canonical_height, check_mt_identity, check_sigma_congruence, check_sigma_oddness,
    degree_relation, height, pair, parse_ratfunc, power_probe, sigma_eval, sigma_series, Curve,
    CurvePoint, Error, FormalGroup, HeightValue, Identity, LocalField, Place, RatFunc, TruncSeries,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::input::{parse_curve_file, resolve_point, CurveFile};

#[derive(Parser, Debug)]
#[command(
    name = "charp-heights",
    version,
    about = "Sigma functions and canonical heights over F_q(t)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the sigma series of a curve to a given z-precision.
    Sigma(JobConfig),
    /// Print the canonical height of a point at a place (two points: the pairing).
    Height(JobConfig),
    /// Run the invariant suite on a curve and its points.
    Verify(VerifyConfig),
}

#[derive(Args, Debug, Clone)]
pub struct JobConfig {
    /// Curve file (`key = value` lines).
    #[arg(long)]
    pub curve: PathBuf,
    /// Point: a name from the curve file, a point file, `x, y`, or `O`.
    #[arg(long = "point")]
    pub points: Vec<String>,
    /// Place: `inf` or a monic irreducible polynomial in `t`.
    #[arg(long, default_value = "t")]
    pub place: String,
    /// Precision in z of the sigma series.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(i64).range(1..))]
    pub zprec: i64,
    /// Relative precision in the uniformizer of the place.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(i64).range(1..))]
    pub vprec: i64,
    /// Evaluate at this multiple of the point, without extracting roots.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub multiple: Option<u64>,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyConfig {
    #[command(flatten)]
    pub job: JobConfig,
    /// Directory of `*.golden` files to compare byte for byte.
    #[arg(long)]
    pub golden: Option<PathBuf>,
}

fn load_curve(path: &Path) -> CliResult<(CurveFile, Curve)> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file = parse_curve_file(&text)?;
    let curve = Curve::new(file.model.clone(), file.minimal_attested)?;
    Ok((file, curve))
}

fn parse_place(spec: &str, curve: &Curve) -> CliResult<Place> {
    match spec.trim() {
        "inf" | "infinity" | "oo" => Ok(Place::infinity()),
        s => {
            Place::parse(s, curve.field()).map_err(|e| CliError::Parse(format!("place `{s}`: {e}")))
        }
    }
}

/// Run a parsed command line, returning the text for stdout.
pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Sigma(cfg) => cmd_sigma(cfg),
        Command::Height(cfg) => cmd_height(cfg),
        Command::Verify(cfg) => cmd_verify(cfg),
    }
}

// ---------------------------------------------------------------- sigma

fn cache_path(dir: &Path, curve: &Curve) -> PathBuf {
    let digest = Sha256::digest(model_key(&curve.model).as_bytes());
    let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("sigma-{hex}.json"))
}

fn sigma_to_json(s: &TruncSeries<RatFunc>) -> Value {
    let coeffs: Vec<Value> = s.terms().map(|(e, c)| json!([e, c.to_string()])).collect();
    json!({ "zprec": s.prec(), "coefficients": coeffs })
}

fn sigma_from_json(v: &Value, curve: &Curve) -> Option<TruncSeries<RatFunc>> {
    let prec = v.get("zprec")?.as_i64()?;
    let mut terms = Vec::new();
    for t in v.get("coefficients")?.as_array()? {
        let e = t.get(0)?.as_i64()?;
        let c = parse_ratfunc(t.get(1)?.as_str()?, curve.field()).ok()?;
        terms.push((e, c));
    }
    Some(TruncSeries::from_terms(
        &RatFunc::zero(curve.field()),
        &terms,
        prec,
    ))
}

/// The exact sigma series, through the on-disk memo named by
/// `CHARP_HEIGHTS_CACHE` when set.
fn sigma_cached(curve: &Curve, zprec: i64) -> CliResult<TruncSeries<RatFunc>> {
    let dir = std::env::var_os("CHARP_HEIGHTS_CACHE").map(PathBuf::from);
    if let Some(dir) = &dir {
        let path = cache_path(dir, curve);
        if let Ok(text) = fs::read_to_string(&path) {
            let hit = serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| sigma_from_json(&v, curve));
            if let Some(s) = hit.filter(|s| s.prec() >= zprec) {
                return Ok(s.with_prec(zprec));
            }
        }
    }
    let s = sigma_series(&curve.model, zprec)?.series.clone();
    if let Some(dir) = &dir {
        // the memo is best effort; failures to write are not errors
        if fs::create_dir_all(dir).is_ok() {
            let _ = fs::write(cache_path(dir, curve), sigma_to_json(&s).to_string());
        }
    }
    Ok(s)
}

pub fn cmd_sigma(cfg: &JobConfig) -> CliResult<String> {
    let (_, curve) = load_curve(&cfg.curve)?;
    let s = sigma_cached(&curve, cfg.zprec)?;
    Ok(if cfg.json {
        format!("{:#}\n", sigma_to_json(&s))
    } else {
        format!("{}\n", s.render())
    })
}

// ---------------------------------------------------------------- height

fn height_text(h: &HeightValue) -> String {
    if h.is_exact() {
        return "1\n".into();
    }
    format!(
        "{}\nmultiple: {}\nroot applied: {}\n",
        h.render(),
        h.multiple_used,
        h.root_applied
    )
}

fn height_json(h: &HeightValue) -> String {
    let mut v = h.to_json();
    v["value"] = json!(h.render());
    format!("{v:#}\n")
}

pub fn cmd_height(cfg: &JobConfig) -> CliResult<String> {
    let (file, curve) = load_curve(&cfg.curve)?;
    let place = parse_place(&cfg.place, &curve)?;
    let pts = cfg
        .points
        .iter()
        .map(|s| resolve_point(s, &file))
        .collect::<CliResult<Vec<_>>>()?;
    let h = match pts.as_slice() {
        [p] => height(&curve, p, &place, cfg.vprec, cfg.multiple)?,
        [p, q] => pair(&curve, p, q, &place, cfg.vprec, cfg.multiple)?,
        _ => {
            return Err(CliError::Parse(
                "height takes one `--point` (two for the pairing)".into(),
            ))
        }
    };
    Ok(if cfg.json {
        height_json(&h)
    } else {
        height_text(&h)
    })
}

// ---------------------------------------------------------------- verify

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Pass,
    Fail,
    Skip,
    Info,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
            Status::Info => "INFO",
        }
    }
}

struct Report {
    checks: Vec<(String, Status, String)>,
}

impl Report {
    fn push(&mut self, name: impl Into<String>, status: Status, detail: impl Into<String>) {
        self.checks.push((name.into(), status, detail.into()));
    }

    /// Record a boolean check; precision and precondition errors count as
    /// failures with the error as detail.
    fn check(
        &mut self,
        name: impl Into<String>,
        r: Result<bool, Error>,
        detail: impl Into<String>,
    ) {
        match r {
            Ok(true) => self.push(name, Status::Pass, detail),
            Ok(false) => self.push(name, Status::Fail, detail),
            Err(e) => self.push(name, Status::Fail, e.to_string()),
        }
    }

    fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| c.1 == Status::Fail)
            .map(|c| c.0.as_str())
            .collect()
    }

    fn text(&self) -> String {
        let mut out = String::new();
        for (name, st, detail) in &self.checks {
            if detail.is_empty() {
                out.push_str(&format!("{} {name}\n", st.label()));
            } else {
                out.push_str(&format!("{} {name}: {detail}\n", st.label()));
            }
        }
        out
    }

    fn json(&self) -> String {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|(n, s, d)| json!({ "check": n, "status": s.label(), "detail": d }))
            .collect();
        format!(
            "{:#}\n",
            json!({ "passed": self.failures().is_empty(), "checks": checks })
        )
    }
}

/// Named points to exercise, each replaced by its least multiple in `E_v(k)`.
fn base_points(cfg: &JobConfig, file: &CurveFile) -> CliResult<Vec<(String, CurvePoint)>> {
    if cfg.points.is_empty() {
        return Ok(file
            .points
            .iter()
            .map(|(n, p)| (n.clone(), p.clone()))
            .collect());
    }
    cfg.points
        .iter()
        .map(|s| Ok((s.clone(), resolve_point(s, file)?)))
        .collect()
}

fn sigma_checks(rep: &mut Report, curve: &Curve, zprec: i64) -> CliResult<TruncSeries<RatFunc>> {
    let s = sigma_series(&curve.model, zprec)?.series.clone();
    let lead_one = s.val() == 1 && s.coeff(1).is_one();
    rep.check("sigma lead is z", Ok(lead_one), "");
    rep.check(
        "sigma([-1] z) = -sigma(z)",
        check_sigma_oddness(&curve.model, zprec),
        format!("through z^{}", s.prec() - 1),
    );
    let p = curve.model.characteristic() as i64;
    let fg = FormalGroup::from_model(&curve.model);
    rep.check(
        "f_(p^2) = f_p([p] z) f_p(z)^(p^2)",
        fg.check_p_squared_recursion(p * p + p),
        format!("relative z-precision {}", p * p + p),
    );
    Ok(s)
}

/// Exact series summed at `z(P)` against the adaptive local evaluation.
fn dual_mode(
    curve: &Curve,
    s: &TruncSeries<RatFunc>,
    q: &CurvePoint,
    v: &Place,
    vprec: i64,
) -> Result<bool, Error> {
    let model = curve.model_at(v);
    let qv = curve.point_at(q, v);
    let field = LocalField::new(v, curve.field())?;
    let z = field.expand(&qv.z().expect("affine"), vprec);
    let k = z.lead_exponent();
    let s = if v.is_infinite() {
        sigma_series(model, s.prec())?.series.clone()
    } else {
        s.clone()
    };
    let mut acc = field.zero(k * s.prec());
    for (j, c) in s.terms() {
        acc = acc.add(&field.expand(c, vprec).mul(&z.pow(j)));
    }
    let local = sigma_eval(model, &qv, v, vprec)?;
    let joint = acc.prec().min(local.prec());
    Ok(acc.with_prec(joint).agrees_with(&local.with_prec(joint)))
}

fn quadratic_checks(
    rep: &mut Report,
    curve: &Curve,
    pts: &[(String, CurvePoint)],
    v: &Place,
    vprec: i64,
) {
    let tag = format!("at {v}");
    let e = &curve.model;
    let h = |p: &CurvePoint| height(curve, p, v, vprec, Some(1)).map(|h| h.value);
    for (name, p) in pts {
        for m in [2i64, 3] {
            let r = (|| Ok(h(&e.mul_point(m, p))?.agrees_with(&h(p)?.pow(m * m))))();
            rep.check(format!("H([{m}]{name}) = H({name})^{} {tag}", m * m), r, "");
        }
        let r = (|| Ok(h(&e.neg(p))? == h(p)?))();
        rep.check(format!("H(-{name}) = H({name}) {tag}"), r, "exact");
    }
    for (i, (na, a)) in pts.iter().enumerate() {
        for (nb, b) in &pts[i + 1..] {
            let r = (|| {
                let lhs = h(&e.add_points(a, b))?.mul(&h(&e.sub_points(a, b))?);
                let rhs = h(a)?.pow(2).mul(&h(b)?.pow(2));
                Ok(lhs.agrees_with(&rhs))
            })();
            rep.check(format!("parallelogram law for {na}, {nb} {tag}"), r, "");
        }
    }
}

fn mt_checks(rep: &mut Report, curve: &Curve, pts: &[(String, CurvePoint)], v: &Place, vprec: i64) {
    let model = curve.model_at(v);
    let at = |p: &CurvePoint| curve.point_at(p, v);
    let show = |d: Result<charp_heights::Discrepancy, Error>| match d {
        Ok(d) if d.holds() => (Ok(true), format!("relative precision {}", d.precision)),
        Ok(d) => (
            Ok(false),
            format!("disagree at order {:?}", d.disagreement_at),
        ),
        Err(e) => (Err(e), String::new()),
    };
    for (name, p) in pts {
        for m in [-1i64, 2, 3] {
            let (r, d) = show(check_mt_identity(
                model,
                Identity::B(m),
                &at(p),
                None,
                v,
                vprec,
            ));
            rep.check(
                format!(
                    "sigma([{m}]{name}) = sigma({name})^{} f_{m}({name}) at {v}",
                    m * m
                ),
                r,
                d,
            );
        }
        let (r, d) = show(check_mt_identity(
            model,
            Identity::C,
            &at(p),
            None,
            v,
            vprec,
        ));
        rep.check(
            format!("sigma([p]{name}) = sigma({name})^(p^2) f_p({name}) at {v}"),
            r,
            d,
        );
    }
    for (i, (na, a)) in pts.iter().enumerate() {
        for (nb, b) in &pts[i + 1..] {
            let sum = curve.model.add_points(a, b);
            let diff = curve.model.sub_points(a, b);
            if sum.is_infinity() || diff.is_infinity() {
                continue;
            }
            let (r, d) = show(check_mt_identity(
                model,
                Identity::A,
                &at(a),
                Some(&at(b)),
                v,
                vprec,
            ));
            rep.check(
                format!("sigma addition formula for {na}, {nb} at {v}"),
                r,
                d,
            );
        }
    }
}

/// Largest precision tried by the congruence check.
const CONGRUENCE_PREC_CAP: i64 = 512;

/// The `N = 1` congruence, doubling the precision while the power test
/// cannot decide.
fn congruence_adaptive(
    curve: &Curve,
    q: &CurvePoint,
    v: &Place,
    vprec: i64,
) -> (Result<bool, Error>, i64) {
    let mut prec = vprec;
    loop {
        match check_sigma_congruence(&curve.model, q, v, 1, prec) {
            Err(Error::Precision(_)) if prec < CONGRUENCE_PREC_CAP => {
                prec = (2 * prec).min(CONGRUENCE_PREC_CAP)
            }
            r => return (r, prec),
        }
    }
}

fn golden_checks(rep: &mut Report, dir: &Path) -> CliResult<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "golden"))
        .collect();
    files.sort();
    for path in files {
        let name = format!("golden {}", path.file_name().unwrap().to_string_lossy());
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let (header, expected) = text.split_once('\n').unwrap_or((&text, ""));
        let Some(args) = header.strip_prefix("# args:") else {
            rep.push(name, Status::Fail, "missing `# args:` header");
            continue;
        };
        let mut argv = vec!["charp-heights".to_string()];
        let mut words = shell_words(args.trim()).into_iter();
        while let Some(w) = words.next() {
            if w == "--curve" {
                argv.push(w);
                if let Some(c) = words.next() {
                    argv.push(dir.join(c).to_string_lossy().into_owned());
                }
            } else {
                argv.push(w);
            }
        }
        let got = Cli::try_parse_from(&argv)
            .map_err(|e| CliError::Parse(e.to_string()))
            .and_then(|cli| execute(&cli));
        match got {
            Ok(out) if out == expected => rep.push(name, Status::Pass, ""),
            Ok(out) => rep.push(
                name,
                Status::Fail,
                format!("got {:?}", out.lines().next().unwrap_or("")),
            ),
            Err(e) => rep.push(name, Status::Fail, e.to_string()),
        }
    }
    Ok(())
}

/// Whitespace splitting with double-quoted groups.
fn shell_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in s.chars() {
        match c {
            '"' => quoted = !quoted,
            c if c.is_whitespace() && !quoted => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn cmd_verify(cfg: &VerifyConfig) -> CliResult<String> {
    let job = &cfg.job;
    let (file, curve) = load_curve(&job.curve)?;
    let v = parse_place(&job.place, &curve)?;
    if v.is_infinite() {
        return Err(CliError::Parse(
            "verify takes a finite `--place`; infinity is always checked".into(),
        ));
    }
    // refuse cleanly when the chosen place is not ordinary
    charp_heights::sigma::check_local_hypotheses(&curve.model, &v)?;
    let inf = Place::infinity();
    let inf_ok = charp_heights::sigma::check_local_hypotheses(&curve.inf_model, &inf).is_ok();

    let mut rep = Report { checks: Vec::new() };
    let sig = sigma_checks(&mut rep, &curve, job.zprec.max(9))?;

    let mut at_v = Vec::new();
    let mut at_inf = Vec::new();
    for (name, p) in base_points(job, &file)? {
        if curve.is_torsion(&p, MULTIPLE_CAP)? {
            rep.push(format!("point {name}"), Status::Skip, "torsion");
            continue;
        }
        let (n, q) = curve.minimal_multiple_point(&p, &v, MULTIPLE_CAP)?;
        at_v.push((format!("{n}{name}"), q));
        if inf_ok {
            let (n, q) = curve.minimal_multiple_point(&p, &inf, MULTIPLE_CAP)?;
            at_inf.push((format!("{n}{name}"), q));
        }
        let (deg, nt) = degree_relation(&curve, &p)?;
        rep.check(
            format!("deg H_inf({name}) = 2 h_NT({name})"),
            Ok(deg == nt),
            format!("{deg} vs {nt}"),
        );
    }

    for (name, q) in &at_v {
        rep.check(
            format!("exact and local sigma agree at {name}"),
            dual_mode(&curve, &sig, q, &v, job.vprec),
            "",
        );
        let (r, used) = congruence_adaptive(&curve, q, &v, job.vprec);
        rep.check(
            format!("sigma congruence N = 1 at {name}"),
            r,
            format!("relative precision {used}"),
        );
        match power_probe(&curve, q, &v, 1, job.vprec, Some(1)) {
            Ok(r) => rep.push(
                format!("power probe N = 1 at {name}"),
                Status::Info,
                format!(
                    "cube: {}, 3 | 2h_NT = {}: {}",
                    r.is_power, r.two_nt, r.nt_divisible
                ),
            ),
            Err(e) => rep.push(
                format!("power probe N = 1 at {name}"),
                Status::Info,
                e.to_string(),
            ),
        }
        let hv = canonical_height(&curve, q, &v, job.vprec, Some(1));
        rep.check(
            format!("H_v({name}) is a 1-unit"),
            hv.map(|h| *h.value.exponent.numer() == 0),
            "",
        );
    }
    mt_checks(&mut rep, &curve, &at_v, &v, job.vprec);
    quadratic_checks(&mut rep, &curve, &at_v, &v, job.vprec);
    if inf_ok {
        for (name, q) in &at_inf {
            rep.check(
                format!("exact and local sigma agree at {name}, inf"),
                dual_mode(&curve, &sig, q, &inf, job.vprec),
                "",
            );
        }
        quadratic_checks(&mut rep, &curve, &at_inf, &inf, job.vprec);
    } else {
        rep.push(
            "checks at infinity",
            Status::Skip,
            "not ordinary at infinity",
        );
    }
    if let Some(dir) = &cfg.golden {
        golden_checks(&mut rep, dir)?;
    }

    let out = if job.json { rep.json() } else { rep.text() };
    let failed = rep.failures();
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Verify {
            failed: failed.join("; "),
            report: out,
        })
    }
}
