//! PK parameter dictionary, vocabularies and the drug lexicon.
//!
//! The built-in configuration lives in `data/ontology.toml` and
//! `data/drugs.txt`. A user ontology file uses the same format; its
//! parameter entries replace built-in entries with the same canonical name
//! and its vocabularies extend the built-in ones.

pub mod caption;
pub mod value;
pub mod words;

use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use crate::error::ConfigError;
use words::{PhraseSet, Words};

pub use caption::{mine_caption, mine_label, CaptionFacts, Dose};
pub use value::{parse_value, ParsedValue, Qualifier};

const BUILTIN_ONTOLOGY: &str = include_str!("../../data/ontology.toml");
const BUILTIN_DRUGS: &str = include_str!("../../data/drugs.txt");

#[derive(Debug, Clone)]
pub struct OntologyEntry {
    pub canonical: String,
    pub patterns: Vec<String>,
    pub priority: i32,
    compiled: Vec<Regex>,
}

impl OntologyEntry {
    pub fn new(canonical: &str, patterns: Vec<String>, priority: i32) -> Result<Self, (usize, regex::Error)> {
        let compiled = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| compile_label_pattern(p).map_err(|e| (i, e)))
            .collect::<Result<_, _>>()?;
        Ok(OntologyEntry {
            canonical: canonical.to_string(),
            patterns,
            priority,
            compiled,
        })
    }
}

fn compile_label_pattern(p: &str) -> Result<Regex, regex::Error> {
    let squeezed: String = p.chars().filter(|c| !c.is_whitespace() && *c != '_').collect();
    Regex::new(&format!("(?i)^(?:{squeezed})$"))
}

#[derive(Debug, Clone)]
pub struct DoseUnit {
    pub unit: String,
    pub patterns: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct DrugLexicon {
    names: Vec<String>,
    set: PhraseSet,
}

impl DrugLexicon {
    pub fn insert(&mut self, name: &str) {
        let name = name.trim();
        if name.is_empty() || self.contains(name) {
            return;
        }
        self.names.push(name.to_string());
        self.set.insert(name);
    }

    pub fn contains(&self, name: &str) -> bool {
        let name = name.to_lowercase();
        self.names.iter().any(|n| n.to_lowercase() == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn phrases(&self) -> &PhraseSet {
        &self.set
    }
}

#[derive(Debug, Clone)]
pub struct Ontology {
    pub entries: Vec<OntologyEntry>,
    pub units_header_pattern: Regex,
    pub route_vocabulary: BTreeMap<String, String>,
    pub matrix_vocabulary: Vec<String>,
    pub animal_vocabulary: Vec<String>,
    pub drug_lexicon: DrugLexicon,
    pub dose_units: Vec<DoseUnit>,
    pub aggregate_tokens: Vec<String>,
    /// Phrases marking statistics columns or rows, e.g. "objective function".
    pub statistic_phrases: Vec<String>,
    pub drug_column_headers: Vec<String>,
    pub subject_column_headers: Vec<String>,
    pub caps_drug_fallback: bool,
    routes: PhraseSet,
    route_canonicals: Vec<String>,
    matrices: PhraseSet,
    statistics: PhraseSet,
    animals: PhraseSet,
    dose_regex: Regex,
}

/// A label that names a known parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamMatch {
    pub canonical: String,
    pub unit_in_label: Option<String>,
    /// The label with its unit suffix removed.
    pub base: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyFile {
    units_header_pattern: Option<String>,
    aggregate_tokens: Option<Vec<String>>,
    statistic_phrases: Option<Vec<String>>,
    drug_column_headers: Option<Vec<String>>,
    subject_column_headers: Option<Vec<String>>,
    matrices: Option<Vec<String>>,
    animals: Option<Vec<String>>,
    routes: Option<BTreeMap<String, String>>,
    dose_unit: Option<Vec<DoseUnitSpec>>,
    parameter: Option<Vec<EntrySpec>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoseUnitSpec {
    unit: String,
    patterns: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntrySpec {
    canonical: String,
    patterns: Vec<String>,
    #[serde(default)]
    priority: i32,
}

/// Unbuilt configuration, accumulated from the built-in file and overrides.
#[derive(Debug, Default)]
struct Draft {
    units_header_pattern: String,
    aggregate_tokens: Vec<String>,
    statistic_phrases: Vec<String>,
    drug_column_headers: Vec<String>,
    subject_column_headers: Vec<String>,
    matrices: Vec<String>,
    animals: Vec<String>,
    routes: BTreeMap<String, String>,
    dose_units: Vec<DoseUnit>,
    entries: Vec<OntologyEntry>,
}

fn line_of(text: &str, needle: &str) -> Option<usize> {
    let escaped = needle.replace('\\', "\\\\");
    text.lines()
        .position(|l| l.contains(&escaped) || l.contains(needle))
        .map(|i| i + 1)
}

fn lower_all(v: Vec<String>) -> Vec<String> {
    v.into_iter().map(|s| s.trim().to_lowercase()).filter(|s| !s.is_empty()).collect()
}

fn extend_unique(into: &mut Vec<String>, more: Vec<String>) {
    for m in lower_all(more) {
        if !into.contains(&m) {
            into.push(m);
        }
    }
}

impl Draft {
    fn apply(&mut self, text: &str, source: &str) -> Result<(), ConfigError> {
        let file: OntologyFile = toml::from_str(text).map_err(|e| ConfigError::from_toml(source, text, e))?;
        let err = |field: &str, needle: &str, msg: String| {
            let e = ConfigError::new(source, msg).in_field(field);
            match line_of(text, needle) {
                Some(l) => e.at_line(l),
                None => e,
            }
        };

        if let Some(p) = file.units_header_pattern {
            Regex::new(&format!("(?i){p}"))
                .map_err(|e| err("units_header_pattern", &p, format!("invalid pattern: {e}")))?;
            self.units_header_pattern = p;
        }
        if let Some(v) = file.aggregate_tokens {
            self.aggregate_tokens = lower_all(v);
        }
        if let Some(v) = file.statistic_phrases {
            self.statistic_phrases = lower_all(v);
        }
        if let Some(v) = file.drug_column_headers {
            self.drug_column_headers = lower_all(v);
        }
        if let Some(v) = file.subject_column_headers {
            self.subject_column_headers = lower_all(v);
        }
        if let Some(v) = file.matrices {
            extend_unique(&mut self.matrices, v);
        }
        if let Some(v) = file.animals {
            extend_unique(&mut self.animals, v);
        }
        if let Some(routes) = file.routes {
            for (token, canonical) in routes {
                if canonical.trim().is_empty() {
                    return Err(err("routes", &token, format!("route '{token}' has an empty canonical name")));
                }
                self.routes.insert(token.to_lowercase(), canonical);
            }
        }
        if let Some(units) = file.dose_unit {
            for (i, spec) in units.into_iter().enumerate() {
                let field = format!("dose_unit[{i}]");
                if spec.unit.trim().is_empty() || spec.patterns.is_empty() {
                    return Err(err(&field, &spec.unit, "dose unit needs a name and at least one pattern".into()));
                }
                for p in &spec.patterns {
                    Regex::new(p).map_err(|e| err(&field, p, format!("invalid pattern: {e}")))?;
                }
                let unit = DoseUnit {
                    unit: spec.unit,
                    patterns: spec.patterns,
                };
                match self.dose_units.iter_mut().find(|d| d.unit == unit.unit) {
                    Some(existing) => *existing = unit,
                    None => self.dose_units.push(unit),
                }
            }
        }
        if let Some(specs) = file.parameter {
            let mut seen: Vec<String> = Vec::new();
            for (i, spec) in specs.into_iter().enumerate() {
                let field = format!("parameter[{i}]");
                let canonical = spec.canonical.trim().to_string();
                if canonical.is_empty() {
                    return Err(err(&field, "canonical = \"\"", "canonical name is empty".into()));
                }
                let key = canonical.to_lowercase();
                if seen.contains(&key) {
                    return Err(err(&field, &canonical, format!("canonical '{canonical}' defined twice")));
                }
                seen.push(key);
                if spec.patterns.is_empty() {
                    return Err(err(&field, &canonical, format!("'{canonical}' has no patterns")));
                }
                let entry = OntologyEntry::new(&canonical, spec.patterns.clone(), spec.priority).map_err(|(k, e)| {
                    err(
                        &format!("{field}.patterns[{k}]"),
                        &spec.patterns[k],
                        format!("invalid pattern: {e}"),
                    )
                })?;
                match self
                    .entries
                    .iter_mut()
                    .find(|e| e.canonical.eq_ignore_ascii_case(&canonical))
                {
                    Some(existing) => *existing = entry,
                    None => self.entries.push(entry),
                }
            }
        }
        Ok(())
    }

    fn build(self, drug_lexicon: DrugLexicon) -> Result<Ontology, ConfigError> {
        let units_header_pattern = Regex::new(&format!("(?i){}", self.units_header_pattern))
            .map_err(|e| ConfigError::new("ontology", e.to_string()).in_field("units_header_pattern"))?;
        let route_tokens: Vec<&String> = self.routes.keys().collect();
        let routes = PhraseSet::new(route_tokens.iter().map(|s| s.as_str()), false);
        let route_canonicals = self.routes.values().cloned().collect();
        let dose_regex = build_dose_regex(&self.dose_units)
            .map_err(|e| ConfigError::new("ontology", e.to_string()).in_field("dose_unit"))?;
        Ok(Ontology {
            units_header_pattern,
            routes,
            route_canonicals,
            matrices: PhraseSet::new(&self.matrices, true),
            animals: PhraseSet::new(&self.animals, true),
            entries: self.entries,
            route_vocabulary: self.routes,
            matrix_vocabulary: self.matrices,
            animal_vocabulary: self.animals,
            drug_lexicon,
            dose_units: self.dose_units,
            statistics: PhraseSet::new(&self.statistic_phrases, false),
            aggregate_tokens: self.aggregate_tokens,
            statistic_phrases: self.statistic_phrases,
            drug_column_headers: self.drug_column_headers,
            subject_column_headers: self.subject_column_headers,
            caps_drug_fallback: true,
            dose_regex,
        })
    }
}

const NUMBER: &str = r"\d+(?:\.\d+)?";

fn build_dose_regex(units: &[DoseUnit]) -> Result<Regex, regex::Error> {
    let alternatives: Vec<String> = units
        .iter()
        .enumerate()
        .map(|(i, u)| format!("(?P<u{i}>{})", u.patterns.join("|")))
        .collect();
    Regex::new(&format!(
        r"(?i)(?:^|[^\w.])(?P<nums>{NUMBER}(?:\s*(?:,|and|or|&)\s*{NUMBER})*)\s*(?:{})(?:\s*(?:bw|b\.w\.|body\s*weight))?",
        alternatives.join("|")
    ))
}

fn parse_lexicon(text: &str, source: &str, lexicon: &mut DrugLexicon) -> Result<(), ConfigError> {
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.contains('\t') {
            return Err(ConfigError::new(source, "one drug name per line; tab found").at_line(i + 1));
        }
        lexicon.insert(line);
    }
    Ok(())
}

impl Ontology {
    /// The built-in ontology and drug lexicon.
    pub fn builtin() -> Ontology {
        Self::assemble(None, None).expect("built-in ontology is valid")
    }

    /// Built-in configuration extended by an optional ontology file and an
    /// optional drug lexicon, both given as text.
    pub fn assemble(ontology: Option<(&str, &str)>, lexicon: Option<(&str, &str)>) -> Result<Ontology, ConfigError> {
        let mut draft = Draft::default();
        draft.apply(BUILTIN_ONTOLOGY, "<built-in ontology>")?;
        if let Some((text, source)) = ontology {
            draft.apply(text, source)?;
        }
        let mut drugs = DrugLexicon::default();
        parse_lexicon(BUILTIN_DRUGS, "<built-in lexicon>", &mut drugs)?;
        if let Some((text, source)) = lexicon {
            parse_lexicon(text, source, &mut drugs)?;
        }
        draft.build(drugs)
    }

    pub fn canonicals(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.canonical.as_str())
    }

    pub fn is_units_header(&self, text: &str) -> bool {
        self.units_header_pattern.is_match(text.trim())
    }

    pub fn is_aggregate(&self, label: &str) -> bool {
        let l = label.trim().to_lowercase();
        self.aggregate_tokens.contains(&l)
    }

    /// Labels of test statistics and model diagnostics rather than values.
    pub fn is_statistic_label(&self, label: &str) -> bool {
        !self.statistics.find_all(&Words::new(label)).is_empty()
    }

    pub fn is_drug_column_header(&self, label: &str) -> bool {
        let l = split_unit(label).0.trim().to_lowercase();
        self.drug_column_headers.contains(&l)
    }

    pub fn is_subject_column_header(&self, label: &str) -> bool {
        let l = split_unit(label).0.trim().to_lowercase();
        self.subject_column_headers.contains(&l)
    }

    pub fn match_parameter(&self, label: &str) -> Option<ParamMatch> {
        match_parameter(label, self)
    }

    /// Route hits as (surface form, canonical, first word, last word).
    pub(crate) fn route_hits<'a>(&self, words: &Words<'a>) -> Vec<(&'a str, String, usize, usize)> {
        self.routes
            .find_all(words)
            .into_iter()
            .map(|h| (words.surface(h.first, h.last), self.route_canonicals[h.phrase].clone(), h.first, h.last))
            .collect()
    }

    pub(crate) fn matrix_hits(&self, words: &Words<'_>) -> Vec<(String, usize, usize)> {
        self.matrices
            .find_all(words)
            .into_iter()
            .map(|h| (self.matrix_vocabulary[h.phrase].clone(), h.first, h.last))
            .collect()
    }

    pub(crate) fn animal_hits(&self, words: &Words<'_>) -> Vec<(String, usize, usize)> {
        self.animals
            .find_all(words)
            .into_iter()
            .map(|h| (self.animal_vocabulary[h.phrase].clone(), h.first, h.last))
            .collect()
    }

    pub(crate) fn dose_regex(&self) -> &Regex {
        &self.dose_regex
    }
}

/// Load the ontology from optional files on disk.
pub fn load_ontology(path: Option<&Path>, drug_lexicon_path: Option<&Path>) -> Result<Ontology, ConfigError> {
    let read = |p: &Path| -> Result<(String, String), ConfigError> {
        let bytes = std::fs::read(p).map_err(|e| ConfigError::io(p, e))?;
        let source = p.display().to_string();
        match String::from_utf8(bytes) {
            Ok(text) => Ok((text, source)),
            Err(e) => {
                let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
                let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
                Err(ConfigError::new(source, "file is not valid UTF-8").at_line(line))
            }
        }
    };
    let ontology = path.map(read).transpose()?;
    let lexicon = drug_lexicon_path.map(read).transpose()?;
    Ontology::assemble(
        ontology.as_ref().map(|(t, s)| (t.as_str(), s.as_str())),
        lexicon.as_ref().map(|(t, s)| (t.as_str(), s.as_str())),
    )
}

/// Split a trailing parenthetical off a label: `"CL (mL/(h·kg))"` gives
/// `("CL", Some("mL/(h·kg)"))`. When the group holds a comma-separated list,
/// the unit is the last item.
pub fn split_unit(label: &str) -> (String, Option<String>) {
    let trimmed = strip_label_markers(label.trim());
    let mut base = trimmed;
    let mut groups: Vec<&str> = Vec::new();
    while let Some((open, inner)) = trailing_group(base) {
        if base[..open].trim().is_empty() {
            break;
        }
        groups.push(inner);
        base = base[..open].trim_end();
    }
    let unit = groups.last().and_then(|g| {
        let last = g.rsplit(',').next().unwrap_or(g).trim();
        (!last.is_empty()).then(|| last.to_string())
    });
    (base.to_string(), unit)
}

fn trailing_group(s: &str) -> Option<(usize, &str)> {
    let close = if s.ends_with(')') {
        ')'
    } else if s.ends_with(']') {
        ']'
    } else {
        return None;
    };
    let open_ch = if close == ')' { '(' } else { '[' };
    let mut depth = 0usize;
    for (i, ch) in s.char_indices().rev() {
        if ch == close {
            depth += 1;
        } else if ch == open_ch {
            depth -= 1;
            if depth == 0 {
                return Some((i, &s[i + 1..s.len() - 1]));
            }
        }
    }
    None
}

fn strip_label_markers(s: &str) -> &str {
    const MARKERS: &[char] = &['*', '†', '‡', '§', '¶', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹', '⁰'];
    let t = s.trim_end_matches(|c: char| MARKERS.contains(&c) || c.is_whitespace());
    if t.is_empty() {
        s
    } else {
        t
    }
}

/// Lower-case, drop whitespace and underscores, and flatten sub- and
/// superscript characters so that "C max", "Cmax" and "C_max" coincide.
pub fn normalize_label(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            c if c.is_whitespace() || c == '_' => {}
            '½' => out.push_str("1/2"),
            '−' | '–' | '—' | '₋' | '⁻' => out.push('-'),
            '₀'..='₉' => out.push(char::from(b'0' + (ch as u32 - '₀' as u32) as u8)),
            '⁰' => out.push('0'),
            '¹' => out.push('1'),
            '²' => out.push('2'),
            '³' => out.push('3'),
            '⁴'..='⁹' => out.push(char::from(b'4' + (ch as u32 - '⁴' as u32) as u8)),
            c => out.extend(c.to_lowercase()),
        }
    }
    out
}

/// Match a grid label against the parameter dictionary. Higher priority
/// wins, then the longer pattern, then the earlier entry.
pub fn match_parameter(label: &str, ontology: &Ontology) -> Option<ParamMatch> {
    let (base, unit) = split_unit(label);
    let key = normalize_label(&base);
    if key.is_empty() {
        return None;
    }
    let mut best: Option<(&OntologyEntry, usize)> = None;
    for entry in &ontology.entries {
        for (pattern, re) in entry.patterns.iter().zip(&entry.compiled) {
            if !re.is_match(&key) {
                continue;
            }
            let len = pattern.chars().filter(|c| !c.is_whitespace()).count();
            let better = match best {
                None => true,
                Some((b, blen)) => (entry.priority, len) > (b.priority, blen),
            };
            if better {
                best = Some((entry, len));
            }
        }
    }
    best.map(|(entry, _)| ParamMatch {
        canonical: entry.canonical.clone(),
        unit_in_label: unit,
        base,
    })
}
