//! Shared text rendering of signed sums of monomials.

use crate::fq::{Fq, FqElem};

/// Render `c_1*m_1 + c_2*m_2 + ...` in the expression grammar. An empty
/// monomial string stands for the constant `1`. Zero terms are skipped;
/// an all-zero sum renders as `0`.
pub(crate) fn render_terms<'a, I>(f: &Fq, terms: I) -> String
where
    I: IntoIterator<Item = (FqElem, &'a str)>,
{
    let mut out = String::new();
    for (c, mono) in terms {
        if c.is_zero() {
            continue;
        }
        let (neg, body) = if f.renders_atomic(c) {
            let s = f.signed(c);
            let mag = s.unsigned_abs();
            let body = if mono.is_empty() {
                mag.to_string()
            } else if mag == 1 {
                mono.to_string()
            } else {
                format!("{mag}*{mono}")
            };
            (s < 0, body)
        } else {
            let r = f.render(c);
            let body = if mono.is_empty() {
                format!("({r})")
            } else {
                format!("({r})*{mono}")
            };
            (false, body)
        };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// `var^e` with the usual abbreviations for `e = 0, 1`.
pub(crate) fn monomial(var: &str, e: i64) -> String {
    match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{e}"),
    }
}
