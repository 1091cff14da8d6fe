//! Shared helpers for the integration, property and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use pk_tablex::grid::{normalize, validate_grid, DenseGrid, PLACEHOLDER};
use pk_tablex::ingest::{find_tables, RawCell, RawTable, SourceKind, TagProfile};
use pk_tablex::layout::{classify, detect_header_boundary, LayoutCase};
use pk_tablex::ontology::{mine_caption, parse_value, Ontology, Qualifier};
use pk_tablex::pipeline::{run_with, ExtractionReport, Mode, RunConfig};
use pk_tablex::retrieval::{extract_records_advanced, extract_sentences_common, extract_sentences_transposed, PkRecord};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus() -> PathBuf {
    fixtures().join("corpus")
}

pub fn corpus_doc(stem: &str) -> PathBuf {
    corpus().join(format!("{stem}.xml"))
}

pub fn kind_of(path: &Path) -> SourceKind {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html" | "htm") => SourceKind::Html,
        _ => SourceKind::Xml,
    }
}

pub fn tables_in(path: &Path) -> Vec<RawTable> {
    let bytes = std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    find_tables(&bytes, kind_of(path), &TagProfile::default()).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn config(inputs: &[PathBuf], jobs: usize, mode: Mode, wanted: Option<&[&str]>) -> RunConfig {
    RunConfig {
        input_paths: inputs.to_vec(),
        mode,
        wanted_params: wanted.map(|w| w.iter().map(|s| s.to_string()).collect()),
        parallelism: jobs,
        ..RunConfig::default()
    }
}

/// Run the pipeline in memory and return the CSV bytes with the report.
pub fn extract_csv(config: &RunConfig) -> (Vec<u8>, ExtractionReport) {
    let mut out = Vec::new();
    let report = run_with(config, &mut out, std::io::sink()).expect("pipeline run");
    (out, report)
}

pub fn csv_rows(bytes: &[u8]) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(bytes).records().map(|r| r.expect("csv record")).collect()
}

pub fn column(name: &str) -> usize {
    pk_tablex::pipeline::CSV_COLUMNS.iter().position(|c| *c == name).expect("known column")
}

/// A normalized fixture table with everything the extractors need.
pub struct Prepared {
    pub raw: RawTable,
    pub grid: DenseGrid,
    pub case: LayoutCase,
}

pub fn prepare(path: &Path, ontology: &Ontology) -> Vec<Prepared> {
    tables_in(path)
        .into_iter()
        .filter_map(|raw| {
            let grid = normalize(&raw);
            let boundary = detect_header_boundary(&grid, ontology).ok()?;
            let case = classify(&raw, &grid, &boundary, ontology).case;
            Some(Prepared { raw, grid, case })
        })
        .collect()
}

pub fn records(p: &Prepared, ontology: &Ontology, wanted: Option<&BTreeSet<String>>) -> Vec<PkRecord> {
    let boundary = detect_header_boundary(&p.grid, ontology).expect("boundary");
    let facts = mine_caption(&p.raw.caption, ontology);
    extract_records_advanced(&p.grid, &boundary, &facts, ontology, wanted, p.case).records
}

pub fn corpus_tables() -> &'static [Prepared] {
    static TABLES: OnceLock<Vec<Prepared>> = OnceLock::new();
    TABLES.get_or_init(|| {
        let o = Ontology::builtin();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus())
            .expect("corpus dir")
            .map(|e| e.expect("dir entry").path())
            .collect();
        paths.sort();
        paths.iter().flat_map(|p| prepare(p, &o)).collect()
    })
}

pub fn builtin() -> &'static Ontology {
    static O: OnceLock<Ontology> = OnceLock::new();
    O.get_or_init(Ontology::builtin)
}

// ---------------------------------------------------------------------------
// Position-painting oracle

/// Paint each cell's rectangle in document order; a position keeps the first
/// text painted on it. Uncovered and blank positions read as the placeholder.
pub fn paint_oracle(table: &RawTable) -> Vec<Vec<String>> {
    let n_rows = table.row_count();
    let n_cols = table.declared_cols.max(1);
    let mut canvas: Vec<Vec<Option<String>>> = vec![vec![None; n_cols]; n_rows];
    for (r, row) in table.all_rows().enumerate() {
        for cell in row {
            let last_row = (r + cell.extra_rows).min(n_rows - 1);
            let last_col = cell.col_end.min(n_cols - 1);
            for line in canvas.iter_mut().take(last_row + 1).skip(r) {
                for slot in line.iter_mut().take(last_col + 1).skip(cell.col_start) {
                    if slot.is_none() {
                        *slot = Some(cell.text.clone());
                    }
                }
            }
        }
    }
    canvas
        .into_iter()
        .map(|line| {
            line.into_iter()
                .map(|t| match t {
                    Some(t) if !t.is_empty() => t,
                    _ => PLACEHOLDER.to_string(),
                })
                .collect()
        })
        .collect()
}

/// A span table with arbitrary, possibly overlapping cells.
pub fn random_raw_table(rng: &mut StdRng) -> RawTable {
    const TEXTS: [&str; 7] = ["", "a", "b", "CL", "1.5", "2 ± 1", "x y"];
    let n_rows = rng.gen_range(1..=8);
    let n_cols = rng.gen_range(1..=8);
    let header = rng.gen_range(0..=n_rows.min(2));
    let rows: Vec<Vec<RawCell>> = (0..n_rows)
        .map(|r| {
            let k = rng.gen_range(0..=n_cols);
            (0..k)
                .map(|i| {
                    let start = rng.gen_range(0..n_cols);
                    let end = (start + rng.gen_range(0..3)).min(n_cols - 1);
                    let extra = if rng.gen_bool(0.3) { rng.gen_range(1..=3) } else { 0 };
                    let text = format!("{}{}", TEXTS[rng.gen_range(0..TEXTS.len())], if rng.gen_bool(0.5) { format!("#{r}.{i}") } else { String::new() });
                    RawCell::new(text, start, end, extra)
                })
                .collect()
        })
        .collect();
    let mut rows = rows.into_iter();
    RawTable {
        table_id: "random".into(),
        caption: String::new(),
        declared_cols: n_cols,
        header_rows: rows.by_ref().take(header).collect(),
        body_rows: rows.collect(),
        source_kind: SourceKind::Xml,
        warnings: Vec::new(),
    }
}

pub fn raw_table_strategy() -> impl Strategy<Value = RawTable> {
    any::<u64>().prop_map(|seed| random_raw_table(&mut StdRng::seed_from_u64(seed)))
}

// ---------------------------------------------------------------------------
// Collision-free tilings rendered as CALS and HTML

#[derive(Debug, Clone)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
    pub text: String,
    /// Left out of the markup; its positions read as the placeholder.
    pub dropped: bool,
    /// Written with an explicit column name in CALS.
    pub explicit: bool,
}

#[derive(Debug, Clone)]
pub struct Tiling {
    pub n_rows: usize,
    pub n_cols: usize,
    pub header_rows: usize,
    /// Blocks in document order.
    pub blocks: Vec<Block>,
}

pub fn random_tiling(rng: &mut StdRng) -> Tiling {
    let n_rows = rng.gen_range(1..=8);
    let n_cols = rng.gen_range(1..=8);
    let header_rows = rng.gen_range(0..n_rows.min(3));
    let mut owner = vec![vec![false; n_cols]; n_rows];
    let mut blocks = Vec::new();
    for r in 0..n_rows {
        // Row spans never cross from the header into the body.
        let group_end = if r < header_rows { header_rows } else { n_rows };
        let mut c = 0;
        while c < n_cols {
            if owner[r][c] {
                c += 1;
                continue;
            }
            let free = (c..n_cols).take_while(|&k| !owner[r][k]).count();
            let width = rng.gen_range(1..=free.min(3));
            let mut height = 1;
            let max_h = rng.gen_range(1..=3).min(group_end - r);
            while height < max_h && (c..c + width).all(|k| !owner[r + height][k]) {
                height += 1;
            }
            for line in owner.iter_mut().skip(r).take(height) {
                for slot in line.iter_mut().skip(c).take(width) {
                    *slot = true;
                }
            }
            blocks.push(Block {
                row: r,
                col: c,
                height,
                width,
                text: format!("r{r}c{c}"),
                dropped: false,
                explicit: rng.gen_bool(0.3),
            });
            c += width;
        }
    }
    // Drop a trailing run of plain cells from some rows below the first.
    for r in 1..n_rows {
        let idx: Vec<usize> = (0..blocks.len()).filter(|&i| blocks[i].row == r).collect();
        let droppable = idx
            .iter()
            .rev()
            .take_while(|&&i| blocks[i].height == 1 && blocks[i].width == 1)
            .count();
        if droppable > 0 && rng.gen_bool(0.3) {
            let n = rng.gen_range(1..=droppable);
            for &i in idx.iter().rev().take(n) {
                blocks[i].dropped = true;
            }
        }
    }
    Tiling {
        n_rows,
        n_cols,
        header_rows,
        blocks,
    }
}

pub fn tiling_strategy() -> impl Strategy<Value = Tiling> {
    any::<u64>().prop_map(|seed| random_tiling(&mut StdRng::seed_from_u64(seed)))
}

impl Tiling {
    pub fn canvas(&self) -> Vec<Vec<String>> {
        let mut out = vec![vec![PLACEHOLDER.to_string(); self.n_cols]; self.n_rows];
        for b in self.blocks.iter().filter(|b| !b.dropped) {
            for line in out.iter_mut().skip(b.row).take(b.height) {
                for slot in line.iter_mut().skip(b.col).take(b.width) {
                    *slot = b.text.clone();
                }
            }
        }
        out
    }

    fn rows(&self) -> Vec<Vec<&Block>> {
        (0..self.n_rows)
            .map(|r| self.blocks.iter().filter(|b| b.row == r && !b.dropped).collect())
            .collect()
    }

    pub fn to_cals(&self) -> String {
        let mut s = format!("<doc><table><tgroup cols=\"{}\">", self.n_cols);
        for c in 0..self.n_cols {
            s.push_str(&format!("<colspec colname=\"c{}\"/>", c + 1));
        }
        for (r, row) in self.rows().into_iter().enumerate() {
            if r == 0 && self.header_rows > 0 {
                s.push_str("<thead>");
            }
            if r == self.header_rows {
                s.push_str("<tbody>");
            }
            s.push_str("<row>");
            for b in row {
                let mut attrs = String::new();
                if b.width > 1 {
                    attrs.push_str(&format!(" namest=\"c{}\" nameend=\"c{}\"", b.col + 1, b.col + b.width));
                } else if b.explicit {
                    attrs.push_str(&format!(" colname=\"c{}\"", b.col + 1));
                }
                if b.height > 1 {
                    attrs.push_str(&format!(" morerows=\"{}\"", b.height - 1));
                }
                s.push_str(&format!("<entry{attrs}>{}</entry>", b.text));
            }
            s.push_str("</row>");
            if r + 1 == self.header_rows {
                s.push_str("</thead>");
            }
        }
        s.push_str("</tbody></tgroup></table></doc>");
        s
    }

    pub fn to_html(&self) -> String {
        let mut s = String::from("<!DOCTYPE html><html><body><table>");
        for (r, row) in self.rows().into_iter().enumerate() {
            if r == 0 && self.header_rows > 0 {
                s.push_str("<thead>");
            }
            if r == self.header_rows {
                s.push_str("<tbody>");
            }
            s.push_str("<tr>");
            let tag = if r < self.header_rows { "th" } else { "td" };
            for b in row {
                let mut attrs = String::new();
                if b.width > 1 {
                    attrs.push_str(&format!(" colspan=\"{}\"", b.width));
                }
                if b.height > 1 {
                    attrs.push_str(&format!(" rowspan=\"{}\"", b.height));
                }
                s.push_str(&format!("<{tag}{attrs}>{}</{tag}>", b.text));
            }
            s.push_str("</tr>");
            if r + 1 == self.header_rows {
                s.push_str("</thead>");
            }
        }
        s.push_str("</tbody></table></body></html>");
        s
    }
}

// ---------------------------------------------------------------------------
// Property checks, shared by `properties.rs` and the acceptance runner

pub fn check_oracle(table: &RawTable) -> Result<(), TestCaseError> {
    let grid = normalize(table);
    prop_assert_eq!(&grid.cells, &paint_oracle(table));
    Ok(())
}

/// Rectangularity and completeness on arbitrary tables.
pub fn check_normalizer_shape(table: &RawTable) -> Result<(), TestCaseError> {
    let grid = normalize(table);
    prop_assert!(validate_grid(&grid).is_empty(), "{:?}", validate_grid(&grid));
    prop_assert_eq!(grid.n_rows, table.row_count());
    prop_assert_eq!(grid.n_cols, table.declared_cols.max(1));
    prop_assert_eq!(grid.header_row_count, table.header_rows.len());
    for row in &grid.cells {
        prop_assert_eq!(row.len(), grid.n_cols);
        prop_assert!(row.iter().all(|t| !t.is_empty()));
    }
    Ok(())
}

/// Conservation on collision-free tables: each cell appears exactly once
/// per covered position, and nothing else appears.
pub fn check_conservation(tiling: &Tiling) -> Result<(), TestCaseError> {
    let tables = find_tables(tiling.to_cals().as_bytes(), SourceKind::Xml, &TagProfile::default())
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(tables.len(), 1);
    let grid = normalize(&tables[0]);
    for b in &tiling.blocks {
        let count = grid.cells.iter().flatten().filter(|t| **t == b.text).count();
        let expected = if b.dropped { 0 } else { b.height * b.width };
        prop_assert_eq!(count, expected, "block {}", b.text);
    }
    let placeholders = grid.cells.iter().flatten().filter(|t| *t == PLACEHOLDER).count();
    let dropped: usize = tiling.blocks.iter().filter(|b| b.dropped).map(|b| b.height * b.width).sum();
    prop_assert_eq!(placeholders, dropped);
    Ok(())
}

/// CALS and HTML renderings of the same tiling normalize to its canvas.
pub fn check_markup_agreement(tiling: &Tiling) -> Result<(), TestCaseError> {
    let expected = tiling.canvas();
    for (kind, text) in [(SourceKind::Xml, tiling.to_cals()), (SourceKind::Html, tiling.to_html())] {
        let tables = find_tables(text.as_bytes(), kind, &TagProfile::default())
            .map_err(|e| TestCaseError::fail(format!("{kind:?}: {e}")))?;
        prop_assert_eq!(tables.len(), 1, "{:?}", kind);
        let grid = normalize(&tables[0]);
        prop_assert_eq!(&grid.cells, &expected, "{:?}\n{}", kind, text);
        prop_assert_eq!(grid.header_row_count, tiling.header_rows, "{:?}", kind);
    }
    Ok(())
}

pub const PARAM_LABELS: [(&str, &str); 7] = [
    ("CL (mL/min/kg)", "clearance"),
    ("AUC (ng h/mL)", "auc"),
    ("Cmax (ng/mL)", "cmax"),
    ("Tmax (h)", "tmax"),
    ("t1/2 (h)", "half-life"),
    ("Vss (L/kg)", "volume of distribution"),
    ("MRT (h)", "mrt"),
];

/// Parameters down the first column, groups across the top.
#[derive(Debug, Clone)]
pub struct PlainTable {
    pub params: Vec<usize>,
    pub groups: Vec<String>,
    pub values: Vec<Vec<String>>,
}

pub fn plain_table_strategy() -> impl Strategy<Value = PlainTable> {
    (
        proptest::sample::subsequence((0..PARAM_LABELS.len()).collect::<Vec<_>>(), 2..=PARAM_LABELS.len()),
        1usize..=5,
        any::<u64>(),
    )
        .prop_map(|(params, n_groups, seed)| {
            let mut rng = StdRng::seed_from_u64(seed);
            let groups = (1..=n_groups).map(|g| format!("Group {g}")).collect();
            let values = params
                .iter()
                .map(|_| {
                    (0..n_groups)
                        .map(|_| {
                            let m = rng.gen_range(1..100000) as f64 / 100.0;
                            if rng.gen_bool(0.5) {
                                format!("{m} ± {}", rng.gen_range(1..1000) as f64 / 100.0)
                            } else {
                                format!("{m}")
                            }
                        })
                        .collect()
                })
                .collect();
            PlainTable { params, groups, values }
        })
}

impl PlainTable {
    pub fn common(&self) -> DenseGrid {
        let mut rows = vec![std::iter::once("Parameter".to_string()).chain(self.groups.iter().cloned()).collect::<Vec<_>>()];
        for (i, &p) in self.params.iter().enumerate() {
            rows.push(std::iter::once(PARAM_LABELS[p].0.to_string()).chain(self.values[i].iter().cloned()).collect());
        }
        DenseGrid::from_rows(&rows, 1)
    }

    pub fn transposed(&self) -> DenseGrid {
        let mut t = self.common().transpose();
        t.header_row_count = 1;
        t
    }
}

/// A table and its transpose classify as each other's mirror, and yield the
/// same sentences and records.
pub fn check_transpose_duality(table: &PlainTable) -> Result<(), TestCaseError> {
    let o = builtin();
    let common = table.common();
    let transposed = table.transposed();
    let bc = detect_header_boundary(&common, o).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let bt = detect_header_boundary(&transposed, o).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(classify(&common.to_raw(), &common, &bc, o).case, LayoutCase::Common);
    prop_assert_eq!(classify(&transposed.to_raw(), &transposed, &bt, o).case, LayoutCase::Transposed);

    let facts = Default::default();
    let sc = extract_sentences_common(&common, &bc, &facts);
    let st = extract_sentences_transposed(&transposed, &bt, &facts);
    prop_assert_eq!(&sc.sentences, &st.sentences);

    let key = |r: &PkRecord| (r.parameter_canonical.clone(), r.value.raw.clone());
    let mut rc: Vec<_> = extract_records_advanced(&common, &bc, &facts, o, None, LayoutCase::Common)
        .records
        .iter()
        .map(key)
        .collect();
    let mut rt: Vec<_> = extract_records_advanced(&transposed, &bt, &facts, o, None, LayoutCase::Transposed)
        .records
        .iter()
        .map(key)
        .collect();
    rc.sort();
    rt.sort();
    prop_assert_eq!(rc.len(), table.params.len() * table.groups.len());
    prop_assert_eq!(rc, rt);
    Ok(())
}

#[derive(Debug, Clone)]
pub enum ValueForm {
    PlusMinus { mean: String, spread: String, sep: &'static str },
    Plain(String),
    Bound { op: &'static str, value: String },
    Range { low: String, high: String, dash: &'static str },
}

fn decimal() -> impl Strategy<Value = String> {
    (0u32..1_000_000, 0usize..=4).prop_map(|(n, places)| {
        if places == 0 {
            n.to_string()
        } else {
            let s = format!("{:0>width$}", n, width = places + 1);
            let (int, frac) = s.split_at(s.len() - places);
            format!("{int}.{frac}")
        }
    })
}

pub fn value_form_strategy() -> impl Strategy<Value = (ValueForm, Option<&'static str>)> {
    let form = prop_oneof![
        (decimal(), decimal(), prop::sample::select(vec![" ± ", "±", " +/- "]))
            .prop_map(|(mean, spread, sep)| ValueForm::PlusMinus { mean, spread, sep }),
        decimal().prop_map(ValueForm::Plain),
        (prop::sample::select(vec!["<", ">", "≤", "≥", "<="]), decimal()).prop_map(|(op, value)| ValueForm::Bound { op, value }),
        (decimal(), decimal(), prop::sample::select(vec!["–", "-", " to "])).prop_map(|(a, b, dash)| {
            let (x, y): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
            let (low, high) = if x <= y { (a, b) } else { (b, a) };
            ValueForm::Range { low, high, dash }
        }),
    ];
    (form, prop::option::of(prop::sample::select(vec![" a", "*", " b†", "**"])))
}

/// Rendering a value and parsing it back recovers the numbers.
pub fn check_value_round_trip(form: &ValueForm, footnote: Option<&str>) -> Result<(), TestCaseError> {
    let num = |s: &str| s.parse::<f64>().expect("decimal");
    let text = match form {
        ValueForm::PlusMinus { mean, spread, sep } => format!("{mean}{sep}{spread}"),
        ValueForm::Plain(v) => v.clone(),
        ValueForm::Bound { op, value } => format!("{op}{value}"),
        ValueForm::Range { low, high, dash } => format!("{low}{dash}{high}"),
    };
    let cell = format!("{text}{}", footnote.unwrap_or(""));
    let v = parse_value(&cell);
    prop_assert_eq!(&v.raw, &cell);
    match form {
        ValueForm::PlusMinus { mean, spread, .. } => {
            prop_assert_eq!(v.mean, Some(num(mean)), "{}", cell);
            prop_assert_eq!(v.spread, Some(num(spread)), "{}", cell);
            prop_assert_eq!(v.qualifier, None);
        }
        ValueForm::Plain(x) => {
            prop_assert_eq!(v.mean, Some(num(x)), "{}", cell);
            prop_assert_eq!(v.qualifier, None);
        }
        ValueForm::Bound { op, value } => {
            prop_assert_eq!(v.mean, Some(num(value)), "{}", cell);
            let q = if op.starts_with('<') || *op == "≤" { Qualifier::LessThan } else { Qualifier::GreaterThan };
            prop_assert_eq!(v.qualifier, Some(q));
        }
        ValueForm::Range { low, high, .. } => {
            prop_assert_eq!(v.range_low, Some(num(low)), "{}", cell);
            prop_assert_eq!(v.range_high, Some(num(high)), "{}", cell);
            prop_assert_eq!(v.qualifier, Some(Qualifier::Range));
        }
    }
    Ok(())
}

pub fn fuzz_text_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<String>(),
        "[0-9 .,±<>≤≥+/\\-–()a-cA-C*†%]{0,24}",
    ]
}

/// Arbitrary text never panics and always yields a self-consistent value.
pub fn check_value_fuzz(text: &str) -> Result<(), TestCaseError> {
    let v = parse_value(text);
    prop_assert_eq!(&v.raw, text);
    if v.qualifier == Some(Qualifier::NonNumeric) {
        prop_assert!(v.mean.is_none() && v.spread.is_none() && v.range_low.is_none());
    } else {
        prop_assert!(v.mean.is_some() || v.range_low.is_some());
    }
    if let (Some(lo), Some(hi)) = (v.range_low, v.range_high) {
        prop_assert!(lo <= hi);
    }
    for x in [v.mean, v.spread, v.range_low, v.range_high].into_iter().flatten() {
        prop_assert!(x.is_finite());
    }
    Ok(())
}

pub fn wanted_pair_strategy() -> impl Strategy<Value = (BTreeSet<String>, BTreeSet<String>)> {
    let names: Vec<String> = builtin().canonicals().map(str::to_string).collect();
    let n = names.len();
    (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)).prop_map(move |(a, b)| {
        let small: BTreeSet<String> = (0..n).filter(|&i| a[i] && b[i]).map(|i| names[i].clone()).collect();
        let large: BTreeSet<String> = (0..n).filter(|&i| b[i]).map(|i| names[i].clone()).collect();
        (small, large)
    })
}

/// Narrowing the wanted set only removes records, never changes the rest.
pub fn check_filter_monotonicity(small: &BTreeSet<String>, large: &BTreeSet<String>) -> Result<(), TestCaseError> {
    let o = builtin();
    for t in corpus_tables() {
        let all = records(t, o, None);
        let rs = records(t, o, Some(small));
        let rl = records(t, o, Some(large));
        prop_assert!(rs.iter().all(|r| small.contains(&r.parameter_canonical)));
        prop_assert!(rl.iter().all(|r| large.contains(&r.parameter_canonical)));
        let narrowed: Vec<&PkRecord> = rl.iter().filter(|r| small.contains(&r.parameter_canonical)).collect();
        prop_assert_eq!(rs.iter().collect::<Vec<_>>(), narrowed, "{}", t.raw.table_id);
        let from_all: Vec<&PkRecord> = all.iter().filter(|r| large.contains(&r.parameter_canonical)).collect();
        prop_assert_eq!(rl.iter().collect::<Vec<_>>(), from_all, "{}", t.raw.table_id);
    }
    Ok(())
}
