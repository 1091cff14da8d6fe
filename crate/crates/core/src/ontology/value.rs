//! Cell value parsing: `a ± b`, plain decimals, bounds and ranges.

use std::sync::LazyLock;

use regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qualifier {
    LessThan,
    GreaterThan,
    Range,
    NonNumeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedValue {
    pub raw: String,
    pub mean: Option<f64>,
    pub spread: Option<f64>,
    pub qualifier: Option<Qualifier>,
    pub range_low: Option<f64>,
    pub range_high: Option<f64>,
    /// Footnote markers removed before parsing, in source order.
    pub footnotes_stripped: String,
    /// `raw` with footnote markers removed and whitespace collapsed.
    pub clean: String,
}

impl ParsedValue {
    fn non_numeric(raw: &str, clean: String, footnotes: String) -> Self {
        ParsedValue {
            raw: raw.to_string(),
            mean: None,
            spread: None,
            qualifier: Some(Qualifier::NonNumeric),
            range_low: None,
            range_high: None,
            footnotes_stripped: footnotes,
            clean,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.qualifier != Some(Qualifier::NonNumeric)
    }
}

const MAX_DIGITS: usize = 15;
const MARKER_SYMBOLS: &[char] = &['*', '†', '‡', '§', '¶', '#'];

const NUM: &str = r"[+\-]?\d+(?:\.\d+)?";
const DASH: &str = r"(?:-|–|—|to)";

static PLAIN: LazyLock<Regex> = LazyLock::new(|| re(&format!(r"^({NUM})$")));
static PLUS_MINUS: LazyLock<Regex> = LazyLock::new(|| re(&format!(r"^({NUM})\s*±\s*(\d+(?:\.\d+)?)$")));
static BOUND: LazyLock<Regex> = LazyLock::new(|| re(r"^(<=|>=|[<>≤≥])\s*(\d+(?:\.\d+)?)$"));
static RANGE: LazyLock<Regex> = LazyLock::new(|| re(&format!(r"^({NUM})\s*{DASH}\s*({NUM})$")));
static CENTRAL_RANGE: LazyLock<Regex> =
    LazyLock::new(|| re(&format!(r"^({NUM})\s*\(\s*({NUM})\s*(?:{DASH}|,)\s*({NUM})\s*\)$")));
static FOOTNOTE_TOKEN: LazyLock<Regex> = LazyLock::new(|| re(r"^[A-Za-z](?:,[A-Za-z])*$"));

fn re(p: &str) -> Regex {
    Regex::new(p).expect("static regex")
}

/// Parse one grid cell. Never fails; anything unrecognized is `NonNumeric`.
pub fn parse_value(cell: &str) -> ParsedValue {
    let (clean, footnotes) = strip_footnotes(cell);
    if clean.is_empty() || clean == crate::grid::PLACEHOLDER {
        return ParsedValue::non_numeric(cell, clean, footnotes);
    }
    let text = clean
        .replace("+/-", "±")
        .replace("+/−", "±")
        .replace('−', "-");

    let mut out = ParsedValue::non_numeric(cell, clean.clone(), footnotes);
    if let Some(c) = PLAIN.captures(&text) {
        if let Some(m) = number(&c[1]) {
            out.mean = Some(m);
            out.qualifier = None;
        }
    } else if let Some(c) = PLUS_MINUS.captures(&text) {
        if let (Some(m), Some(s)) = (number(&c[1]), number(&c[2])) {
            out.mean = Some(m);
            out.spread = Some(s);
            out.qualifier = None;
        }
    } else if let Some(c) = BOUND.captures(&text) {
        if let Some(m) = number(&c[2]) {
            out.mean = Some(m);
            out.qualifier = Some(match &c[1] {
                "<" | "<=" | "≤" => Qualifier::LessThan,
                _ => Qualifier::GreaterThan,
            });
        }
    } else if let Some(c) = RANGE.captures(&text) {
        if let (Some(lo), Some(hi)) = (number(&c[1]), number(&c[2])) {
            if lo <= hi {
                out.range_low = Some(lo);
                out.range_high = Some(hi);
                out.qualifier = Some(Qualifier::Range);
            }
        }
    } else if let Some(c) = CENTRAL_RANGE.captures(&text) {
        if let (Some(m), Some(lo), Some(hi)) = (number(&c[1]), number(&c[2]), number(&c[3])) {
            if lo <= hi {
                out.mean = Some(m);
                out.range_low = Some(lo);
                out.range_high = Some(hi);
                out.qualifier = Some(Qualifier::Range);
            }
        }
    }
    out
}

fn number(token: &str) -> Option<f64> {
    if token.chars().filter(char::is_ascii_digit).count() > MAX_DIGITS {
        return None;
    }
    token.parse().ok()
}

/// Remove footnote markers: trailing `* † ‡ § ¶ #`, trailing single-letter
/// tokens, and a single-letter token sitting right before `±`.
fn strip_footnotes(cell: &str) -> (String, String) {
    let mut tokens: Vec<&str> = cell.split_whitespace().collect();
    let mut removed: Vec<String> = Vec::new();

    while let Some(&last) = tokens.last() {
        let trimmed = last.trim_end_matches(MARKER_SYMBOLS);
        if trimmed.len() != last.len() {
            removed.push(last[trimmed.len()..].to_string());
            tokens.pop();
            if !trimmed.is_empty() {
                tokens.push(trimmed);
            }
            continue;
        }
        if tokens.len() >= 2 && FOOTNOTE_TOKEN.is_match(last) && ends_numeric(tokens[tokens.len() - 2]) {
            removed.push(last.to_string());
            tokens.pop();
            continue;
        }
        break;
    }
    removed.reverse();

    let mut i = 1;
    while i + 1 < tokens.len() {
        if tokens[i + 1].starts_with('±') && FOOTNOTE_TOKEN.is_match(tokens[i]) && ends_numeric(tokens[i - 1]) {
            removed.push(tokens.remove(i).to_string());
        } else {
            i += 1;
        }
    }
    (tokens.join(" "), removed.concat())
}

fn ends_numeric(token: &str) -> bool {
    token.ends_with(|c: char| c.is_ascii_digit() || c == ')' || c == '%')
}
