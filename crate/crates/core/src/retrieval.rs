//! Sentence serializations per layout case, and structured PK records.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::grid::{DenseGrid, PLACEHOLDER};
use crate::layout::{leading_non_numeric_rows, HeaderBoundary, LayoutCase};
use crate::markup::collapse_whitespace;
use crate::ontology::caption::{dose_unit_of, mine_label};
use crate::ontology::words::Words;
use crate::ontology::{match_parameter, normalize_label, parse_value, split_unit, CaptionFacts, Dose, Ontology, ParamMatch, ParsedValue};

pub const SENTENCE_SEPARATOR: &str = " || ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceDoc {
    pub table_id: String,
    pub sentences: Vec<String>,
    pub joined: String,
    /// Grid position each sentence was read from, in the normalized grid.
    pub coords: Vec<(usize, usize)>,
}

impl SentenceDoc {
    fn new(table_id: &str, items: Vec<(String, (usize, usize))>) -> Self {
        let (sentences, coords): (Vec<String>, Vec<(usize, usize)>) = items.into_iter().unzip();
        SentenceDoc {
            table_id: table_id.to_string(),
            joined: sentences.join(SENTENCE_SEPARATOR),
            sentences,
            coords,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    RowMajor,
    ColumnMajor,
}

fn is_blank(text: &str) -> bool {
    text == PLACEHOLDER || text.trim().is_empty()
}

/// Header cells column by column, each column top to bottom.
pub fn serialize_header(grid: &DenseGrid, boundary: &HeaderBoundary) -> String {
    let h = boundary.header_rows.min(grid.n_rows);
    (0..grid.n_cols)
        .flat_map(|c| (0..h).map(move |r| grid.get(r, c)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn common_items(grid: &DenseGrid, boundary: &HeaderBoundary, facts: &CaptionFacts) -> Vec<(String, (usize, usize))> {
    let header = serialize_header(grid, boundary);
    (boundary.header_rows..grid.n_rows)
        .map(|r| {
            let mut s = format!("{} {header}.", grid.row(r).join(" "));
            if let Some(drug) = &facts.drug {
                s.push(' ');
                s.push_str(drug);
            }
            (s, (r, 0))
        })
        .collect()
}

/// One sentence per body row: the row's cells, the serialized header, a
/// period, then the drug when one is known.
pub fn extract_sentences_common(grid: &DenseGrid, boundary: &HeaderBoundary, facts: &CaptionFacts) -> SentenceDoc {
    SentenceDoc::new(&grid.table_id, common_items(grid, boundary, facts))
}

/// Header rows for a transposed grid: at least the former index columns,
/// extended over any further leading rows without numbers.
fn transposed_header_rows(t: &DenseGrid, index_cols: usize) -> usize {
    index_cols
        .max(leading_non_numeric_rows(t))
        .clamp(1, t.n_rows.saturating_sub(1).max(1))
}

/// The common serialization applied to the grid's transpose: one sentence
/// per body column.
pub fn extract_sentences_transposed(grid: &DenseGrid, boundary: &HeaderBoundary, facts: &CaptionFacts) -> SentenceDoc {
    let t = grid.transpose();
    let tb = HeaderBoundary {
        header_rows: transposed_header_rows(&t, boundary.index_cols),
        index_cols: 1,
    };
    let items = common_items(&t, &tb, facts)
        .into_iter()
        .map(|(s, (r, c))| (s, (c, r)))
        .collect();
    SentenceDoc::new(&grid.table_id, items)
}

/// One label per column: the column's distinct header texts, top to bottom.
pub fn column_labels(grid: &DenseGrid, header_rows: usize) -> Vec<String> {
    (0..grid.n_cols)
        .map(|c| {
            let mut parts: Vec<&str> = Vec::new();
            for r in 0..header_rows.min(grid.n_rows) {
                let text = grid.get(r, c);
                if !is_blank(text) && parts.last() != Some(&text) {
                    parts.push(text);
                }
            }
            if parts.is_empty() {
                PLACEHOLDER.to_string()
            } else {
                parts.join(" ")
            }
        })
        .collect()
}

/// Collapse the header rows into a single synthesized row.
pub fn expand_merged_header(grid: &DenseGrid, boundary: &HeaderBoundary) -> DenseGrid {
    let h = boundary.header_rows.min(grid.n_rows);
    let mut cells = vec![column_labels(grid, h)];
    cells.extend(grid.cells[h..].iter().cloned());
    DenseGrid {
        n_rows: cells.len(),
        n_cols: grid.n_cols,
        cells,
        header_row_count: 1,
        caption: grid.caption.clone(),
        table_id: grid.table_id.clone(),
    }
}

/// A column label as a sentence fragment: parentheses dropped, matrix words
/// marked with a leading underscore.
fn column_fragment(label: &str, ontology: &Ontology) -> String {
    if is_blank(label) {
        return String::new();
    }
    let words = Words::new(label);
    let mut starts: Vec<usize> = ontology
        .matrix_hits(&words)
        .into_iter()
        .map(|(_, first, _)| words.byte_start(first))
        .collect();
    starts.sort_unstable();
    let mut marked = String::with_capacity(label.len() + starts.len());
    let mut prev = 0;
    for s in starts {
        marked.push_str(&label[prev..s]);
        marked.push('_');
        prev = s;
    }
    marked.push_str(&label[prev..]);
    collapse_whitespace(&marked.replace(['(', ')'], " "))
}

fn units_column(grid: &DenseGrid, header_rows: usize, index_cols: usize, ontology: &Ontology) -> Option<usize> {
    (index_cols >= 2 && grid.n_cols > 2)
        .then_some(1)
        .filter(|&c| (0..header_rows).any(|r| ontology.is_units_header(grid.get(r, c))))
}

/// One sentence per (body row, data column) pair, row-major: parameter
/// label, unit, value, column label, drug. `grid` is the normalized grid;
/// header expansion happens here. Column-major orientation transposes first.
pub fn extract_sentences_merged(
    grid: &DenseGrid,
    boundary: &HeaderBoundary,
    facts: &CaptionFacts,
    orientation: Orientation,
    ontology: &Ontology,
) -> SentenceDoc {
    let (source, header_rows, index_cols) = match orientation {
        Orientation::RowMajor => (grid.clone(), boundary.header_rows, boundary.index_cols),
        Orientation::ColumnMajor => {
            let t = grid.transpose();
            let h = transposed_header_rows(&t, boundary.index_cols);
            (t, h, 1)
        }
    };
    let units_col = units_column(&source, header_rows, index_cols, ontology);
    let expanded = expand_merged_header(
        &source,
        &HeaderBoundary {
            header_rows,
            index_cols,
        },
    );
    let labels = expanded.row(0).to_vec();
    let fragments: Vec<String> = labels.iter().map(|l| column_fragment(l, ontology)).collect();

    let mut items = Vec::new();
    for r in 1..expanded.n_rows {
        let label = expanded.get(r, 0);
        let (base, label_unit) = if is_blank(label) {
            (String::new(), None)
        } else {
            split_unit(label)
        };
        let unit = label_unit.or_else(|| {
            units_col
                .map(|u| expanded.get(r, u))
                .filter(|t| !is_blank(t))
                .map(str::to_string)
        });
        let first = index_cols.min(expanded.n_cols - 1);
        for (c, fragment) in fragments.iter().enumerate().skip(first) {
            let value = parse_value(expanded.get(r, c)).clean;
            let parts = [
                base.as_str(),
                unit.as_deref().unwrap_or(""),
                value.as_str(),
                fragment.as_str(),
                facts.drug.as_deref().unwrap_or(""),
            ];
            let sentence = format!("{}.", parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join(" "));
            let source_row = r - 1 + header_rows;
            let coords = match orientation {
                Orientation::RowMajor => (source_row, c),
                Orientation::ColumnMajor => (c, source_row),
            };
            items.push((sentence, coords));
        }
    }
    SentenceDoc::new(&grid.table_id, items)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PkRecord {
    pub doc_id: String,
    pub table_id: String,
    pub parameter_canonical: String,
    pub parameter_raw: String,
    pub unit: Option<String>,
    pub value: ParsedValue,
    pub dose: Option<Dose>,
    pub route: Option<String>,
    pub matrix: Option<String>,
    pub animal: Option<String>,
    pub drug: Option<String>,
    pub layout_case: LayoutCase,
    pub row_index: usize,
    pub col_index: usize,
    pub sentence: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdvancedOutput {
    pub records: Vec<PkRecord>,
    pub warnings: Vec<String>,
}

static SUBJECT_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?i)([a-z]+)\s*[-#]?\s*\d+[a-z]?$").expect("static regex"));

/// "Dog1" names an individual animal when its prefix is an animal word.
fn subject_animal(label: &str, ontology: &Ontology) -> Option<String> {
    let caps = SUBJECT_LABEL.captures(label.trim())?;
    let prefix = caps[1].to_lowercase();
    let words = Words::new(&prefix);
    let hit = ontology.animal_hits(&words).into_iter().next()?;
    (hit.1 == 0 && hit.2 + 1 == words.len()).then(|| label.trim().to_string())
}

/// Facts for one value, merged with precedence: column label, then row
/// label, then caption.
struct Facts {
    dose: Option<Dose>,
    route: Option<String>,
    matrix: Option<String>,
    animal: Option<String>,
    drug: Option<String>,
}

fn merge_facts(column: &CaptionFacts, row: &CaptionFacts, caption: &CaptionFacts) -> Facts {
    let single = |v: &[Dose]| (v.len() == 1).then(|| v[0].clone());
    Facts {
        dose: column
            .doses
            .first()
            .cloned()
            .or_else(|| row.doses.first().cloned())
            .or_else(|| single(&caption.doses)),
        route: column.route.clone().or_else(|| row.route.clone()).or_else(|| caption.route.clone()),
        matrix: column
            .matrices
            .first()
            .cloned()
            .or_else(|| row.matrices.first().cloned())
            .or_else(|| (caption.matrices.len() == 1).then(|| caption.matrices[0].clone())),
        animal: column.animal.clone().or_else(|| row.animal.clone()).or_else(|| caption.animal.clone()),
        drug: column.drug.clone().or_else(|| row.drug.clone()).or_else(|| caption.drug.clone()),
    }
}

fn render_dose(d: &Dose) -> String {
    format!("{} {}", d.value, d.unit)
}

fn record_sentence(f: &Facts, canonical: &str, value: &ParsedValue, unit: Option<&str>) -> String {
    let mut parts = Vec::new();
    if let Some(d) = &f.drug {
        parts.push(format!("Drug {d}"));
    }
    if let Some(d) = &f.dose {
        parts.push(format!("Dose {}", render_dose(d)));
    }
    if let Some(r) = &f.route {
        parts.push(format!("route {r}"));
    }
    if let Some(m) = &f.matrix {
        parts.push(format!("matrix {m}"));
    }
    if let Some(a) = &f.animal {
        parts.push(format!("animal {a}"));
    }
    let mut tail = format!("{canonical} {}", value.clean);
    if let Some(u) = unit {
        tail.push(' ');
        tail.push_str(u);
    }
    parts.push(tail);
    parts.join(", ")
}

/// Which of the leading columns carries row parameter labels: the one with
/// the most hits, leftmost on ties.
fn parameter_column(grid: &DenseGrid, header_rows: usize, ontology: &Ontology) -> (usize, usize) {
    let scan = grid.n_cols.min(3);
    (0..scan)
        .map(|c| {
            let hits = (header_rows..grid.n_rows)
                .filter(|&r| match_parameter(grid.get(r, c), ontology).is_some())
                .count();
            (c, hits)
        })
        .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn column_parameter(grid: &DenseGrid, c: usize, header_rows: usize, label: &str, ontology: &Ontology) -> Option<(ParamMatch, String)> {
    (0..header_rows)
        .map(|r| grid.get(r, c))
        .chain(std::iter::once(label))
        .filter(|t| !is_blank(t))
        .find_map(|t| match_parameter(t, ontology).map(|m| (m, t.to_string())))
}

fn is_dose_label(label: &str, ontology: &Ontology) -> Option<String> {
    let (base, unit) = split_unit(label);
    let key = normalize_label(&base);
    if key != "dose" && key != "doses" {
        return None;
    }
    dose_unit_of(unit.as_deref()?, ontology)
}

/// Structured records in the advanced mode. Parameter labels are looked up
/// down the leading columns and across the header; whichever direction has
/// more hits decides the orientation.
pub fn extract_records_advanced(
    grid: &DenseGrid,
    boundary: &HeaderBoundary,
    facts: &CaptionFacts,
    ontology: &Ontology,
    wanted: Option<&BTreeSet<String>>,
    layout_case: LayoutCase,
) -> AdvancedOutput {
    let h = boundary.header_rows.min(grid.n_rows);
    let labels = column_labels(grid, h);
    let (param_col, row_hits) = parameter_column(grid, h, ontology);
    let col_params: Vec<Option<(ParamMatch, String)>> = (0..grid.n_cols)
        .map(|c| column_parameter(grid, c, h, &labels[c], ontology))
        .collect();
    let col_hits = col_params.iter().filter(|p| p.is_some()).count();

    let is_wanted = |canonical: &str| wanted.is_none_or(|w| w.iter().any(|x| x.eq_ignore_ascii_case(canonical)));
    let mut out = AdvancedOutput::default();
    let base = |m: &ParamMatch, raw: String, value: ParsedValue, unit: Option<String>, f: &Facts, r: usize, c: usize| PkRecord {
        doc_id: String::new(),
        table_id: grid.table_id.clone(),
        sentence: record_sentence(f, &m.canonical, &value, unit.as_deref()),
        parameter_canonical: m.canonical.clone(),
        parameter_raw: raw,
        unit,
        value,
        dose: f.dose.clone(),
        route: f.route.clone(),
        matrix: f.matrix.clone(),
        animal: f.animal.clone(),
        drug: f.drug.clone(),
        layout_case,
        row_index: r,
        col_index: c,
    };

    if row_hits > 0 && row_hits >= col_hits {
        let units_col = (0..grid.n_cols)
            .filter(|&c| c != param_col)
            .find(|&c| (0..h).any(|r| ontology.is_units_header(grid.get(r, c))));
        let first_data = boundary.index_cols.max(param_col + 1);
        let data_cols: Vec<usize> = (first_data..grid.n_cols)
            .filter(|&c| Some(c) != units_col && !ontology.is_aggregate(&labels[c]) && !ontology.is_statistic_label(&labels[c]))
            .collect();
        let dose_row = (h..grid.n_rows).find_map(|r| is_dose_label(grid.get(r, param_col), ontology).map(|u| (r, u)));
        let column_facts: Vec<CaptionFacts> = (0..grid.n_cols)
            .map(|c| {
                let mut f = mine_label(&labels[c], ontology);
                if let Some((r, unit)) = &dose_row {
                    if let Some(value) = parse_value(grid.get(*r, c)).mean.filter(|v| *v > 0.0) {
                        f.doses.insert(0, Dose { value, unit: unit.clone() });
                    }
                }
                f
            })
            .collect();

        for r in h..grid.n_rows {
            let label = grid.get(r, param_col);
            let Some(m) = match_parameter(label, ontology) else {
                if !is_blank(label) && Some(r) != dose_row.as_ref().map(|d| d.0) {
                    out.warnings.push(format!("row label '{label}' matches no parameter"));
                }
                continue;
            };
            if !is_wanted(&m.canonical) {
                continue;
            }
            let row_text: Vec<&str> = (0..param_col).map(|c| grid.get(r, c)).filter(|t| !is_blank(t)).collect();
            let row_facts = mine_label(&row_text.join(" "), ontology);
            let unit = m.unit_in_label.clone().or_else(|| {
                units_col
                    .map(|u| grid.get(r, u))
                    .filter(|t| !is_blank(t))
                    .map(str::to_string)
            });
            for &c in &data_cols {
                let value = parse_value(grid.get(r, c));
                if !value.is_numeric() {
                    continue;
                }
                let f = merge_facts(&column_facts[c], &row_facts, facts);
                out.records.push(base(&m, label.to_string(), value, unit.clone(), &f, r, c));
            }
        }
    } else if col_hits > 0 {
        let first_param = col_params.iter().position(Option::is_some).unwrap_or(0);
        let index_region: Vec<usize> = (0..first_param).collect();
        let drug_col = index_region.iter().copied().find(|&c| ontology.is_drug_column_header(&labels[c]));
        let units_row = (0..h).find(|&r| ontology.is_units_header(grid.get(r, 0)));
        for (c, p) in col_params.iter().enumerate() {
            if p.is_none() && c >= first_param && !is_blank(&labels[c]) {
                out.warnings.push(format!("header '{}' matches no parameter", labels[c]));
            }
        }

        for r in h..grid.n_rows {
            let row_label = grid.get(r, 0);
            if index_region
                .iter()
                .any(|&c| ontology.is_aggregate(grid.get(r, c)) || ontology.is_statistic_label(grid.get(r, c)))
            {
                continue;
            }
            let row_text: Vec<&str> = index_region
                .iter()
                .filter(|&&c| Some(c) != drug_col)
                .map(|&c| grid.get(r, c))
                .filter(|t| !is_blank(t))
                .collect();
            let mut row_facts = mine_label(&row_text.join(" "), ontology);
            if let Some(a) = subject_animal(row_label, ontology) {
                row_facts.animal = Some(a);
            }
            let mut drug_override: Option<Option<String>> = None;
            if let Some(dc) = drug_col {
                let cell = grid.get(r, dc);
                let lexicon = mine_label(cell, ontology).drug;
                drug_override = Some(if lexicon.is_some() {
                    lexicon
                } else if is_blank(cell) {
                    None
                } else if parse_value(cell).is_numeric() {
                    out.warnings.push(format!("compound '{cell}' in row {r} is a number, not a drug name; drug left empty"));
                    None
                } else if cell.split_whitespace().count() == 1 {
                    // Unlisted single names such as abbreviations are kept as written.
                    Some(cell.to_string())
                } else {
                    out.warnings.push(format!("'{cell}' in row {r} is not a known drug name; drug left empty"));
                    None
                });
            }

            for (c, p) in col_params.iter().enumerate() {
                let Some((m, raw)) = p else { continue };
                if !is_wanted(&m.canonical) {
                    continue;
                }
                let value = parse_value(grid.get(r, c));
                if !value.is_numeric() {
                    continue;
                }
                let unit = m.unit_in_label.clone().or_else(|| {
                    units_row
                        .map(|u| grid.get(u, c))
                        .filter(|t| !is_blank(t))
                        .map(str::to_string)
                });
                let column_facts = mine_label(&labels[c], ontology);
                let mut f = merge_facts(&column_facts, &row_facts, facts);
                if let Some(d) = &drug_override {
                    f.drug = d.clone();
                }
                out.records.push(base(m, raw.clone(), value, unit, &f, r, c));
            }
        }
    }
    out.records.sort_by_key(|rec| (rec.row_index, rec.col_index));
    out
}
