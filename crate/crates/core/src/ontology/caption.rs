//! Drug, dose, route, animal and matrix facts from captions and labels.

use std::sync::LazyLock;

use regex::Regex;

use super::words::Words;
use super::{match_parameter, Ontology};

#[derive(Debug, Clone, PartialEq)]
pub struct Dose {
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaptionFacts {
    pub drug: Option<String>,
    pub doses: Vec<Dose>,
    /// Route as written in the source, e.g. "IV" or "po".
    pub route: Option<String>,
    /// Canonical form of `route` from the route vocabulary.
    pub route_canonical: Option<String>,
    pub animal: Option<String>,
    pub matrices: Vec<String>,
    pub n_subjects: Option<u32>,
}

impl CaptionFacts {
    pub fn is_empty(&self) -> bool {
        *self == CaptionFacts::default()
    }
}

const ADMIN_WORDS: &[&str] = &[
    "administration",
    "administrations",
    "administered",
    "injection",
    "injections",
    "dosing",
    "infusion",
    "bolus",
    "dose",
    "doses",
    "route",
];
const ANCHOR_WORDS: &[&str] = &["after", "following"];
const CAPS_STOPWORDS: &[&str] = &["TABLE", "PK", "NCA", "SD", "SEM", "BW", "NONMEM", "AUC", "CI", "ND", "NC", "NA"];

static N_SUBJECTS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\(\s*n\s*=\s*(\d+)\s*\)").expect("static regex"));
static LIST_SEPARATOR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\s*(?:,|\band\b|\bor\b|&)\s*").expect("static regex"));
static DOSE_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bdoses?\b[^()]*\(([^()]*)\)").expect("static regex"));
static STANDALONE_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[^\w.])(\d+(?:\.\d+)?)(?:[^\w.]|$)").expect("static regex"));

/// Facts from a table caption, including the all-caps drug fallback when
/// the ontology enables it.
pub fn mine_caption(caption: &str, ontology: &Ontology) -> CaptionFacts {
    mine(caption, ontology, Source::Caption)
}

/// Facts from a header or index label. Drugs come from the lexicon only.
pub fn mine_label(label: &str, ontology: &Ontology) -> CaptionFacts {
    let mut facts = mine(label, ontology, Source::Label);
    if facts.doses.is_empty() {
        facts.doses = dose_from_label(label, ontology).into_iter().collect();
    }
    facts
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Source {
    Caption,
    Label,
}

fn mine(text: &str, ontology: &Ontology, source: Source) -> CaptionFacts {
    let words = Words::new(text);
    let mut facts = CaptionFacts {
        doses: find_doses(text, ontology),
        n_subjects: N_SUBJECTS.captures(text).and_then(|c| c[1].parse().ok()),
        ..Default::default()
    };
    if words.is_empty() {
        return facts;
    }

    let routes = ontology.route_hits(&words);
    let preferred = routes
        .iter()
        .find(|(_, _, _, last)| *last + 1 < words.len() && ADMIN_WORDS.contains(&words.word(*last + 1)));
    if let Some((surface, canonical, _, _)) = preferred.or(routes.first()) {
        facts.route = Some(surface.to_string());
        facts.route_canonical = Some(canonical.clone());
    }

    facts.animal = ontology.animal_hits(&words).into_iter().next().map(|(a, _, _)| a);
    for (m, _, _) in ontology.matrix_hits(&words) {
        if !facts.matrices.contains(&m) {
            facts.matrices.push(m);
        }
    }

    facts.drug = lexicon_drug(&words, ontology, source == Source::Label);
    if facts.drug.is_none() && source == Source::Caption && ontology.caps_drug_fallback {
        facts.drug = caps_drug(&words, ontology);
    }
    facts
}

/// First lexicon match on word boundaries, in its source spelling. Labels
/// naming more than one drug are ambiguous and yield nothing.
fn lexicon_drug(words: &Words<'_>, ontology: &Ontology, single_only: bool) -> Option<String> {
    let hits = ontology.drug_lexicon.phrases().find_all(words);
    let first = hits.first()?;
    if single_only {
        let name = |h: &super::words::Hit| words.surface(h.first, h.last).to_lowercase();
        let distinct = hits.iter().map(name).collect::<std::collections::BTreeSet<_>>();
        if distinct.len() > 1 {
            return None;
        }
    }
    Some(words.surface(first.first, first.last).to_string())
}

/// An all-caps abbreviation shortly before "after"/"following", with an
/// administration word later on: "parameters of MEL after IV administration".
fn caps_drug(words: &Words<'_>, ontology: &Ontology) -> Option<String> {
    let n = words.len();
    let anchors: Vec<usize> = (0..n).filter(|&j| ANCHOR_WORDS.contains(&words.word(j))).collect();
    for j in anchors {
        if !(j + 1..n).any(|k| ADMIN_WORDS.contains(&words.word(k))) {
            continue;
        }
        for i in (j.saturating_sub(3)..j).rev() {
            let token = words.surface(i, i);
            if is_caps_candidate(token, ontology) {
                return Some(token.to_string());
            }
        }
    }
    None
}

fn is_caps_candidate(token: &str, ontology: &Ontology) -> bool {
    let letters = token.chars().filter(|c| c.is_ascii_uppercase()).count();
    if letters < 3 || !token.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
        return false;
    }
    let lower = token.to_lowercase();
    !CAPS_STOPWORDS.contains(&token)
        && !ontology.route_vocabulary.contains_key(&lower)
        && !ontology.animal_vocabulary.contains(&lower)
        && !ontology.matrix_vocabulary.contains(&lower)
        && match_parameter(token, ontology).is_none()
}

fn flatten_scripts(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '⁻' | '−' | '₋' => '-',
            '¹' => '1',
            '²' => '2',
            '³' => '3',
            c => c,
        })
        .collect()
}

/// Every number-plus-dose-unit occurrence, in text order. Lists such as
/// "0.5 and 1 mg/kg" yield one dose per number.
pub fn find_doses(text: &str, ontology: &Ontology) -> Vec<Dose> {
    let flat = flatten_scripts(text);
    let re = ontology.dose_regex();
    let mut out = Vec::new();
    for caps in re.captures_iter(&flat) {
        let whole = caps.get(0).expect("group 0");
        let next = flat[whole.end()..].chars().next();
        if next.is_some_and(|c| c.is_alphanumeric() || c == '/') {
            continue;
        }
        let Some(unit) = (0..ontology.dose_units.len())
            .find(|i| caps.name(&format!("u{i}")).is_some())
            .map(|i| ontology.dose_units[i].unit.clone())
        else {
            continue;
        };
        for num in LIST_SEPARATOR.split(&caps["nums"]) {
            if let Ok(value) = num.trim().parse::<f64>() {
                if value > 0.0 {
                    out.push(Dose {
                        value,
                        unit: unit.clone(),
                    });
                }
            }
        }
    }
    out
}

/// The dose unit named by `text` on its own, e.g. "mg kg⁻¹" gives "mg/kg".
pub fn dose_unit_of(text: &str, ontology: &Ontology) -> Option<String> {
    let probe = flatten_scripts(&format!("1 {}", text.trim()));
    let whole = ontology.dose_regex().find(&probe)?;
    if whole.as_str().trim() != probe {
        return None;
    }
    let doses = find_doses(&probe, ontology);
    (doses.len() == 1).then(|| doses[0].unit.clone())
}

/// "Dose (mg kg⁻¹) 10.02 (po)": a dose header with the unit in parentheses
/// and the amount elsewhere in the label.
fn dose_from_label(label: &str, ontology: &Ontology) -> Option<Dose> {
    let caps = DOSE_LABEL.captures(label)?;
    let unit = dose_unit_of(&caps[1], ontology)?;
    let paren = caps.get(0).expect("group 0");
    let rest = format!("{} {}", &label[..paren.start()], &label[paren.end()..]);
    let number = STANDALONE_NUMBER.captures(&rest)?;
    let value: f64 = number[1].parse().ok()?;
    (value > 0.0).then_some(Dose { value, unit })
}
