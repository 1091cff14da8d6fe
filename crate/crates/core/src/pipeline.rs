//! Batch extraction over a corpus of XML/HTML documents.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::ConfigError;
use crate::grid::{normalize_reporting, validate_grid};
use crate::ingest::{find_tables, SourceKind, TagProfile};
use crate::layout::{classify, detect_header_boundary, LayoutCase};
use crate::ontology::{load_ontology, mine_caption, Ontology};
use crate::retrieval::{
    extract_records_advanced, extract_sentences_common, extract_sentences_merged, extract_sentences_transposed,
    Orientation, PkRecord, SentenceDoc,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Auto,
    Xml,
    Html,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Sentences,
    Records,
    #[default]
    Both,
}

impl Mode {
    fn sentences(self) -> bool {
        matches!(self, Mode::Sentences | Mode::Both)
    }

    fn records(self) -> bool {
        matches!(self, Mode::Records | Mode::Both)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input_paths: Vec<PathBuf>,
    pub format: InputFormat,
    pub mode: Mode,
    pub wanted_params: Option<BTreeSet<String>>,
    pub ontology_path: Option<PathBuf>,
    pub lexicon_path: Option<PathBuf>,
    pub profile_path: Option<PathBuf>,
    /// `-` writes to standard output.
    pub output_path: PathBuf,
    /// Fail a document on span collisions, clamped row spans or grid violations.
    pub strict: bool,
    pub parallelism: usize,
    pub dump_grids: bool,
    pub force_case: Option<LayoutCase>,
    pub caps_drug_fallback: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_paths: Vec::new(),
            format: InputFormat::Auto,
            mode: Mode::Both,
            wanted_params: None,
            ontology_path: None,
            lexicon_path: None,
            profile_path: None,
            output_path: PathBuf::from("-"),
            strict: false,
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            dump_grids: false,
            force_case: None,
            caps_drug_fallback: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Warning {
    pub doc_id: String,
    pub table_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionReport {
    pub docs_seen: usize,
    pub docs_failed: usize,
    pub tables_seen: usize,
    pub tables_skipped: usize,
    pub per_case: BTreeMap<LayoutCase, usize>,
    pub records_emitted: usize,
    pub sentences_emitted: usize,
    pub warnings: Vec<Warning>,
    /// (doc_id, reason) for every failed document.
    pub failures: Vec<(String, String)>,
}

impl ExtractionReport {
    fn merge(&mut self, other: ExtractionReport) {
        self.docs_seen += other.docs_seen;
        self.docs_failed += other.docs_failed;
        self.tables_seen += other.tables_seen;
        self.tables_skipped += other.tables_skipped;
        for (case, n) in other.per_case {
            *self.per_case.entry(case).or_default() += n;
        }
        self.records_emitted += other.records_emitted;
        self.sentences_emitted += other.sentences_emitted;
        self.warnings.extend(other.warnings);
        self.failures.extend(other.failures);
    }

    /// Table counters add up: every table is classified or skipped.
    pub fn is_consistent(&self) -> bool {
        self.tables_seen == self.per_case.values().sum::<usize>() + self.tables_skipped
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A document queued for extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub path: PathBuf,
}

fn has_markup_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "xml" | "html" | "htm"))
}

fn doc_id_for(path: &Path, root: Option<&Path>) -> String {
    let rel = root.and_then(|r| path.strip_prefix(r).ok()).unwrap_or(path);
    let stem = rel.with_extension("");
    let parts: Vec<String> = stem
        .components()
        .filter_map(|c| match c {
            std::path::Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect();
    if root.is_some() {
        parts.join("/")
    } else {
        parts.last().cloned().unwrap_or_default()
    }
}

/// Expand input paths into documents. Directories are walked recursively
/// for `.xml`, `.html` and `.htm` files in name order.
pub fn collect_documents(paths: &[PathBuf]) -> Result<Vec<Document>, PipelineError> {
    let mut docs = Vec::new();
    for path in paths {
        let meta = std::fs::metadata(path).map_err(io_err(path))?;
        if meta.is_dir() {
            for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
                let entry = entry.map_err(|e| PipelineError::Io {
                    path: path.clone(),
                    source: e.into(),
                })?;
                if entry.file_type().is_file() && has_markup_extension(entry.path()) {
                    docs.push(Document {
                        doc_id: doc_id_for(entry.path(), Some(path)),
                        path: entry.path().to_path_buf(),
                    });
                }
            }
        } else {
            docs.push(Document {
                doc_id: doc_id_for(path, None),
                path: path.clone(),
            });
        }
    }
    Ok(docs)
}

fn source_kind(path: &Path, bytes: &[u8], format: InputFormat) -> SourceKind {
    match format {
        InputFormat::Xml => SourceKind::Xml,
        InputFormat::Html => SourceKind::Html,
        InputFormat::Auto => {
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            match ext.as_deref() {
                Some("html" | "htm") => SourceKind::Html,
                Some("xml") => SourceKind::Xml,
                _ => {
                    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(512)]).to_lowercase();
                    if head.contains("<!doctype html") || head.contains("<html") {
                        SourceKind::Html
                    } else {
                        SourceKind::Xml
                    }
                }
            }
        }
    }
}

/// Everything needed to process documents; immutable and shared by workers.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub ontology: Ontology,
    pub profile: TagProfile,
    pub format: InputFormat,
    pub mode: Mode,
    pub wanted: Option<BTreeSet<String>>,
    pub strict: bool,
    pub force_case: Option<LayoutCase>,
    pub dump_grids: bool,
}

impl Extractor {
    pub fn from_config(config: &RunConfig) -> Result<Self, PipelineError> {
        let mut ontology = load_ontology(config.ontology_path.as_deref(), config.lexicon_path.as_deref())?;
        ontology.caps_drug_fallback = config.caps_drug_fallback;
        let profile = match &config.profile_path {
            Some(p) => TagProfile::load(p)?,
            None => TagProfile::default(),
        };
        if let Some(wanted) = &config.wanted_params {
            let known: Vec<String> = ontology.canonicals().map(str::to_lowercase).collect();
            if let Some(bad) = wanted.iter().find(|w| !known.contains(&w.to_lowercase())) {
                return Err(ConfigError::new("--params", format!("unknown parameter '{bad}'; known: {}", known.join(", "))).into());
            }
        }
        Ok(Extractor {
            ontology,
            profile,
            format: config.format,
            mode: config.mode,
            wanted: config.wanted_params.clone(),
            strict: config.strict,
            force_case: config.force_case,
            dump_grids: config.dump_grids,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKind {
    Record,
    Sentence,
}

impl RowKind {
    fn as_str(self) -> &'static str {
        match self {
            RowKind::Record => "record",
            RowKind::Sentence => "sentence",
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRow {
    pub doc_id: String,
    pub table_ordinal: usize,
    pub table_id: String,
    pub table_caption: String,
    pub layout_case: LayoutCase,
    pub kind: RowKind,
    pub record: Option<PkRecord>,
    pub row_index: usize,
    pub col_index: usize,
    pub sentence: String,
    seq: usize,
}

impl OutputRow {
    fn sort_key(&self) -> (&str, usize, usize, usize, RowKind, usize) {
        (&self.doc_id, self.table_ordinal, self.row_index, self.col_index, self.kind, self.seq)
    }
}

pub const CSV_COLUMNS: [&str; 20] = [
    "doc_id",
    "table_id",
    "table_caption",
    "layout_case",
    "mode_row",
    "parameter_canonical",
    "parameter_raw",
    "unit",
    "value_raw",
    "value_mean",
    "value_spread",
    "dose_value",
    "dose_unit",
    "route",
    "matrix",
    "animal",
    "drug",
    "row_index",
    "col_index",
    "sentence",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl OutputRow {
    pub fn fields(&self) -> [String; 20] {
        let empty = String::new;
        let rec = self.record.as_ref();
        [
            self.doc_id.clone(),
            self.table_id.clone(),
            self.table_caption.clone(),
            self.layout_case.to_string(),
            self.kind.as_str().to_string(),
            rec.map(|r| r.parameter_canonical.clone()).unwrap_or_else(empty),
            rec.map(|r| r.parameter_raw.clone()).unwrap_or_else(empty),
            rec.map(|r| opt(&r.unit)).unwrap_or_else(empty),
            rec.map(|r| r.value.raw.clone()).unwrap_or_else(empty),
            rec.map(|r| opt(&r.value.mean)).unwrap_or_else(empty),
            rec.map(|r| opt(&r.value.spread)).unwrap_or_else(empty),
            rec.map(|r| opt(&r.dose.as_ref().map(|d| d.value))).unwrap_or_else(empty),
            rec.map(|r| opt(&r.dose.as_ref().map(|d| d.unit.clone()))).unwrap_or_else(empty),
            rec.map(|r| opt(&r.route)).unwrap_or_else(empty),
            rec.map(|r| opt(&r.matrix)).unwrap_or_else(empty),
            rec.map(|r| opt(&r.animal)).unwrap_or_else(empty),
            rec.map(|r| opt(&r.drug)).unwrap_or_else(empty),
            self.row_index.to_string(),
            self.col_index.to_string(),
            self.sentence.clone(),
        ]
    }
}

/// The result of processing one document.
#[derive(Debug, Clone, Default)]
pub struct DocOutcome {
    pub rows: Vec<OutputRow>,
    pub report: ExtractionReport,
    pub grid_dump: String,
}

impl Extractor {
    /// Process one document. Failures are captured in the outcome's report,
    /// never propagated.
    pub fn process(&self, doc: &Document) -> DocOutcome {
        let bytes = match std::fs::read(&doc.path) {
            Ok(b) => b,
            Err(e) => return failed(&doc.doc_id, format!("cannot read {}: {e}", doc.path.display()), 0),
        };
        let kind = source_kind(&doc.path, &bytes, self.format);
        self.process_bytes(&doc.doc_id, &bytes, kind)
    }

    pub fn process_bytes(&self, doc_id: &str, bytes: &[u8], kind: SourceKind) -> DocOutcome {
        match catch_unwind(AssertUnwindSafe(|| self.process_inner(doc_id, bytes, kind))) {
            Ok(outcome) => outcome,
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "unknown panic".into());
                failed(doc_id, format!("internal error: {msg}"), 0)
            }
        }
    }

    fn process_inner(&self, doc_id: &str, bytes: &[u8], kind: SourceKind) -> DocOutcome {
        let tables = match find_tables(bytes, kind, &self.profile) {
            Ok(t) => t,
            Err(e) => return failed(doc_id, e.to_string(), 0),
        };
        let mut out = DocOutcome::default();
        out.report.docs_seen = 1;
        let warn = |report: &mut ExtractionReport, table_id: &str, message: String| {
            report.warnings.push(Warning {
                doc_id: doc_id.to_string(),
                table_id: table_id.to_string(),
                message,
            })
        };
        let mut seq = 0usize;

        for (ordinal, raw) in tables.iter().enumerate() {
            out.report.tables_seen += 1;
            let tid = raw.table_id.as_str();
            for w in &raw.warnings {
                warn(&mut out.report, tid, w.clone());
            }
            let mut grid_warnings = Vec::new();
            let grid = normalize_reporting(raw, &mut grid_warnings);
            if self.dump_grids {
                out.grid_dump.push_str(&format!(">>> {doc_id}\t{tid}\n{}", grid.to_tsv()));
            }
            let mut problems = grid_warnings;
            problems.extend(validate_grid(&grid).iter().map(ToString::to_string));
            if self.strict && !problems.is_empty() {
                let mut f = failed(doc_id, format!("table {tid}: {}", problems.join("; ")), tables.len());
                f.report.warnings.splice(0..0, out.report.warnings);
                f.grid_dump = out.grid_dump;
                return f;
            }
            for w in problems {
                warn(&mut out.report, tid, w);
            }

            let boundary = match detect_header_boundary(&grid, &self.ontology) {
                Ok(b) => b,
                Err(e) => {
                    out.report.tables_skipped += 1;
                    warn(&mut out.report, tid, format!("skipped: {e}"));
                    continue;
                }
            };
            let case = self
                .force_case
                .unwrap_or_else(|| classify(raw, &grid, &boundary, &self.ontology).case);
            *out.report.per_case.entry(case).or_default() += 1;
            let facts = mine_caption(&raw.caption, &self.ontology);

            let mut push = |out: &mut DocOutcome, kind: RowKind, record: Option<PkRecord>, (r, c): (usize, usize), sentence: String| {
                out.rows.push(OutputRow {
                    doc_id: doc_id.to_string(),
                    table_ordinal: ordinal,
                    table_id: raw.table_id.clone(),
                    table_caption: raw.caption.clone(),
                    layout_case: case,
                    kind,
                    record,
                    row_index: r,
                    col_index: c,
                    sentence,
                    seq,
                });
                seq += 1;
            };

            if self.mode.sentences() {
                let doc: SentenceDoc = match case {
                    LayoutCase::Common => extract_sentences_common(&grid, &boundary, &facts),
                    LayoutCase::Transposed => extract_sentences_transposed(&grid, &boundary, &facts),
                    LayoutCase::MergedHeader => {
                        extract_sentences_merged(&grid, &boundary, &facts, Orientation::RowMajor, &self.ontology)
                    }
                    LayoutCase::MergedIndex => {
                        extract_sentences_merged(&grid, &boundary, &facts, Orientation::ColumnMajor, &self.ontology)
                    }
                };
                out.report.sentences_emitted += doc.sentences.len();
                for (s, at) in doc.sentences.into_iter().zip(doc.coords) {
                    push(&mut out, RowKind::Sentence, None, at, s);
                }
            }
            if self.mode.records() {
                let adv = extract_records_advanced(&grid, &boundary, &facts, &self.ontology, self.wanted.as_ref(), case);
                for w in adv.warnings {
                    warn(&mut out.report, tid, w);
                }
                out.report.records_emitted += adv.records.len();
                for mut rec in adv.records {
                    rec.doc_id = doc_id.to_string();
                    let at = (rec.row_index, rec.col_index);
                    let sentence = rec.sentence.clone();
                    push(&mut out, RowKind::Record, Some(rec), at, sentence);
                }
            }
        }
        out
    }

    /// Process documents on `parallelism` threads; rows come back sorted.
    pub fn run_documents(&self, docs: &[Document], parallelism: usize) -> (Vec<OutputRow>, ExtractionReport, String) {
        let work = || docs.par_iter().map(|d| self.process(d)).collect::<Vec<_>>();
        let outcomes = match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
            Ok(pool) => pool.install(work),
            Err(_) => docs.iter().map(|d| self.process(d)).collect(),
        };
        let mut rows = Vec::new();
        let mut report = ExtractionReport::default();
        let mut dump = String::new();
        for o in outcomes {
            rows.extend(o.rows);
            report.merge(o.report);
            dump.push_str(&o.grid_dump);
        }
        rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        (rows, report, dump)
    }
}

fn failed(doc_id: &str, reason: String, tables: usize) -> DocOutcome {
    DocOutcome {
        rows: Vec::new(),
        report: ExtractionReport {
            docs_seen: 1,
            docs_failed: 1,
            tables_seen: tables,
            tables_skipped: tables,
            failures: vec![(doc_id.to_string(), reason)],
            ..Default::default()
        },
        grid_dump: String::new(),
    }
}

/// Write rows as CSV with a fixed header, LF line endings and minimal quoting.
pub fn emit_csv<W: Write>(rows: &[OutputRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Run the whole pipeline, writing CSV to `csv_out` and grid dumps (when
/// enabled) to `dump_out`.
pub fn run_with<W: Write, D: Write>(config: &RunConfig, csv_out: W, mut dump_out: D) -> Result<ExtractionReport, PipelineError> {
    let extractor = Extractor::from_config(config)?;
    let docs = collect_documents(&config.input_paths)?;
    let (rows, report, dump) = extractor.run_documents(&docs, config.parallelism);
    emit_csv(&rows, csv_out)?;
    if !dump.is_empty() {
        dump_out
            .write_all(dump.as_bytes())
            .map_err(io_err(Path::new("<grid dump>")))?;
    }
    Ok(report)
}

/// Run the pipeline with output to `config.output_path` and grid dumps to
/// standard error.
pub fn run(config: &RunConfig) -> Result<ExtractionReport, PipelineError> {
    if config.output_path.as_os_str() == "-" {
        let stdout = std::io::stdout();
        run_with(config, stdout.lock(), std::io::stderr())
    } else {
        let path = &config.output_path;
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        let report = run_with(config, std::io::BufWriter::new(file), std::io::stderr())?;
        Ok(report)
    }
}

/// Outcome of ingest, normalize and validate on one table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableCheck {
    pub doc_id: String,
    pub table_id: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub problems: Vec<String>,
}

/// Ingest, normalize and validate only. Document-level failures come back
/// as `Err` entries.
pub fn validate_documents(
    docs: &[Document],
    format: InputFormat,
    profile: &TagProfile,
) -> Vec<Result<Vec<TableCheck>, (String, String)>> {
    docs.par_iter()
        .map(|doc| {
            let bytes = std::fs::read(&doc.path).map_err(|e| (doc.doc_id.clone(), e.to_string()))?;
            let kind = source_kind(&doc.path, &bytes, format);
            let tables = find_tables(&bytes, kind, profile).map_err(|e| (doc.doc_id.clone(), e.to_string()))?;
            Ok(tables
                .iter()
                .map(|raw| {
                    let mut problems = raw.warnings.clone();
                    let grid = normalize_reporting(raw, &mut problems);
                    problems.extend(validate_grid(&grid).iter().map(ToString::to_string));
                    TableCheck {
                        doc_id: doc.doc_id.clone(),
                        table_id: raw.table_id.clone(),
                        n_rows: grid.n_rows,
                        n_cols: grid.n_cols,
                        problems,
                    }
                })
                .collect())
        })
        .collect()
}
