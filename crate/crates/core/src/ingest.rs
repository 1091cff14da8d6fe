//! Table discovery and parsing for CALS-model XML and HTML documents.
//!
//! Output tables keep span annotations as written; expansion into a dense
//! grid happens in [`crate::grid`]. Style elements inside cells (italic,
//! bold, sub/superscript) are flattened to their text with a word break at
//! each element boundary, so `C<inf>max</inf>` reads as `C max`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use regex::Regex;
use serde::Deserialize;
use std::sync::LazyLock;

use crate::error::ConfigError;
use crate::markup::{self, Element, MarkupError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    Xml,
    Html,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCell {
    pub text: String,
    /// 0-based first column.
    pub col_start: usize,
    /// 0-based last column, inclusive.
    pub col_end: usize,
    /// Rows spanned below the cell's own row.
    pub extra_rows: usize,
    pub is_header: bool,
}

impl RawCell {
    pub fn new(text: impl Into<String>, col_start: usize, col_end: usize, extra_rows: usize) -> Self {
        RawCell {
            text: text.into(),
            col_start,
            col_end,
            extra_rows,
            is_header: false,
        }
    }

    pub fn header(mut self) -> Self {
        self.is_header = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub table_id: String,
    pub caption: String,
    pub declared_cols: usize,
    pub header_rows: Vec<Vec<RawCell>>,
    pub body_rows: Vec<Vec<RawCell>>,
    pub source_kind: SourceKind,
    /// Recoverable problems met while parsing (clamped spans and the like).
    pub warnings: Vec<String>,
}

impl RawTable {
    /// Header rows followed by body rows.
    pub fn all_rows(&self) -> impl Iterator<Item = &Vec<RawCell>> {
        self.header_rows.iter().chain(self.body_rows.iter())
    }

    pub fn row_count(&self) -> usize {
        self.header_rows.len() + self.body_rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanAttrNames {
    pub col_start_name: String,
    pub col_end_name: String,
    pub extra_rows_name: String,
    pub col_name: String,
    pub col_count_name: String,
    pub col_number_name: String,
    pub span_name: String,
}

impl Default for SpanAttrNames {
    fn default() -> Self {
        SpanAttrNames {
            col_start_name: "namest".into(),
            col_end_name: "nameend".into(),
            extra_rows_name: "morerows".into(),
            col_name: "colname".into(),
            col_count_name: "cols".into(),
            col_number_name: "colnum".into(),
            span_name: "spanname".into(),
        }
    }
}

/// Element names used to locate tables and their parts in XML input.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TagProfile {
    pub table_tags: Vec<String>,
    pub caption_tags: Vec<String>,
    pub label_tags: Vec<String>,
    pub group_tags: Vec<String>,
    pub colspec_tags: Vec<String>,
    pub spanspec_tags: Vec<String>,
    pub row_tags: Vec<String>,
    pub header_section_tags: Vec<String>,
    pub body_section_tags: Vec<String>,
    pub footer_section_tags: Vec<String>,
    pub cell_tags: Vec<String>,
    pub span_attr_names: SpanAttrNames,
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for TagProfile {
    fn default() -> Self {
        TagProfile {
            table_tags: names(&["ce:table", "table-wrap", "table", "informaltable"]),
            caption_tags: names(&["ce:caption", "caption", "title"]),
            label_tags: names(&["ce:label", "label"]),
            group_tags: names(&["tgroup"]),
            colspec_tags: names(&["colspec"]),
            spanspec_tags: names(&["spanspec"]),
            row_tags: names(&["row", "tr"]),
            header_section_tags: names(&["thead"]),
            body_section_tags: names(&["tbody"]),
            footer_section_tags: names(&["tfoot"]),
            cell_tags: names(&["entry", "td", "th"]),
            span_attr_names: SpanAttrNames::default(),
        }
    }
}

impl TagProfile {
    /// Parse a profile file. Roles missing from the file keep their defaults.
    pub fn from_toml_str(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let mut profile: TagProfile =
            toml::from_str(text).map_err(|e| ConfigError::from_toml(source_name, text, e))?;
        for list in profile.lists_mut() {
            for n in list.iter_mut() {
                *n = n.trim().to_lowercase();
            }
        }
        profile.validate(source_name)?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    fn lists_mut(&mut self) -> [&mut Vec<String>; 11] {
        [
            &mut self.table_tags,
            &mut self.caption_tags,
            &mut self.label_tags,
            &mut self.group_tags,
            &mut self.colspec_tags,
            &mut self.spanspec_tags,
            &mut self.row_tags,
            &mut self.header_section_tags,
            &mut self.body_section_tags,
            &mut self.footer_section_tags,
            &mut self.cell_tags,
        ]
    }

    pub fn validate(&self, source_name: &str) -> Result<(), ConfigError> {
        let roles: [(&str, &Vec<String>); 11] = [
            ("table_tags", &self.table_tags),
            ("caption_tags", &self.caption_tags),
            ("label_tags", &self.label_tags),
            ("group_tags", &self.group_tags),
            ("colspec_tags", &self.colspec_tags),
            ("spanspec_tags", &self.spanspec_tags),
            ("row_tags", &self.row_tags),
            ("header_section_tags", &self.header_section_tags),
            ("body_section_tags", &self.body_section_tags),
            ("footer_section_tags", &self.footer_section_tags),
            ("cell_tags", &self.cell_tags),
        ];
        for (role, list) in roles {
            if list.is_empty() {
                return Err(ConfigError::new(source_name, "list must not be empty").in_field(role));
            }
            if let Some(i) = list.iter().position(|n| n.trim().is_empty()) {
                return Err(
                    ConfigError::new(source_name, "element name must not be empty").in_field(format!("{role}[{i}]"))
                );
            }
        }
        let a = &self.span_attr_names;
        for (field, v) in [
            ("col_start_name", &a.col_start_name),
            ("col_end_name", &a.col_end_name),
            ("extra_rows_name", &a.extra_rows_name),
        ] {
            if v.trim().is_empty() {
                return Err(ConfigError::new(source_name, "attribute name must not be empty")
                    .in_field(format!("span_attr_names.{field}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed document: {0}")]
    MalformedDocument(#[from] MarkupError),
}

/// Locate every table in `document`, in document order.
pub fn find_tables(document: &[u8], kind: SourceKind, profile: &TagProfile) -> Result<Vec<RawTable>, IngestError> {
    let root = match kind {
        SourceKind::Xml => markup::parse_xml(document)?,
        SourceKind::Html => markup::parse_html(document),
    };
    let ctx = match kind {
        SourceKind::Xml => WalkContext {
            table_tags: profile.table_tags.clone(),
            caption_tags: profile.caption_tags.clone(),
            label_tags: profile.label_tags.clone(),
        },
        SourceKind::Html => WalkContext {
            table_tags: names(&["table"]),
            caption_tags: names(&["caption", "figcaption"]),
            label_tags: names(&["label"]),
        },
    };

    let mut found = Vec::new();
    collect_tables(&root, &ctx, None, &mut found);

    let mut tables = Vec::new();
    let mut used_ids = HashSet::new();
    for (ordinal, (el, outer_caption)) in found.into_iter().enumerate() {
        let (label, inner_caption) = table_caption(el, &ctx, kind, profile);
        let caption_text = if inner_caption.is_empty() && label.is_empty() {
            outer_caption.unwrap_or_default()
        } else {
            join_nonempty(&[label.as_str(), inner_caption.as_str()])
        };
        let base_id = table_id(&label, &caption_text, ordinal + 1);

        let mut parts = match kind {
            SourceKind::Xml => parse_xml_table(el, profile),
            SourceKind::Html => vec![parse_html_table(el)],
        };
        let multi = parts.len() > 1;
        for (k, part) in parts.iter_mut().enumerate() {
            let mut id = if multi { format!("{base_id}/g{}", k + 1) } else { base_id.clone() };
            let mut n = 2;
            while !used_ids.insert(id.clone()) {
                id = format!("{base_id}#{n}");
                n += 1;
            }
            part.table_id = id;
            part.caption = caption_text.clone();
            part.source_kind = kind;
        }
        tables.extend(parts);
    }
    Ok(tables)
}

struct WalkContext {
    table_tags: Vec<String>,
    caption_tags: Vec<String>,
    label_tags: Vec<String>,
}

/// Depth-first walk recording each outermost table together with the
/// nearest caption seen before it at the same or an enclosing level.
fn collect_tables<'a>(el: &'a Element, ctx: &WalkContext, inherited: Option<String>, out: &mut Vec<(&'a Element, Option<String>)>) {
    let mut pending = inherited;
    for child in el.child_elements() {
        if child.is_any(&ctx.table_tags) {
            out.push((child, pending.clone()));
        } else if child.is_any(&ctx.caption_tags) || child.is_any(&ctx.label_tags) {
            let text = child.flat_text();
            if !text.is_empty() {
                pending = Some(text);
            }
        } else {
            collect_tables(child, ctx, pending.clone(), out);
        }
    }
}

/// Label and caption text found inside the table element, outside its
/// row structure.
fn table_caption(table: &Element, ctx: &WalkContext, kind: SourceKind, profile: &TagProfile) -> (String, String) {
    let mut stop: Vec<String> = ctx.table_tags.clone();
    match kind {
        SourceKind::Xml => {
            stop.extend(profile.group_tags.iter().cloned());
            stop.extend(profile.row_tags.iter().cloned());
            stop.extend(profile.header_section_tags.iter().cloned());
            stop.extend(profile.body_section_tags.iter().cloned());
        }
        SourceKind::Html => stop.extend(names(&["tr", "thead", "tbody", "tfoot"])),
    }
    let mut labels = Vec::new();
    table.find_outermost(&ctx.label_tags, &stop, &mut labels);
    let mut captions = Vec::new();
    table.find_outermost(&ctx.caption_tags, &stop, &mut captions);
    let label = labels.iter().map(|e| e.flat_text()).collect::<Vec<_>>().join(" ");
    let caption = captions.iter().map(|e| e.flat_text()).collect::<Vec<_>>().join(" ");
    (label, caption)
}

fn join_nonempty(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join(" ")
}

static CAPTION_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(table\s+[a-z]?\d+[a-z]?)\b").expect("static regex"));

fn table_id(label: &str, caption: &str, ordinal: usize) -> String {
    let label = label.trim().trim_end_matches(['.', ':', '–', '-']).trim();
    if !label.is_empty() {
        return label.to_string();
    }
    if let Some(m) = CAPTION_ID.captures(caption) {
        return m[1].to_string();
    }
    format!("t{ordinal}")
}

/// Parse one XML table element: CALS groups when present, otherwise an
/// HTML-model table (as used by JATS) nested inside or at the element.
fn parse_xml_table(table: &Element, profile: &TagProfile) -> Vec<RawTable> {
    let cals = parse_cals_table(table, profile);
    if !cals.is_empty() {
        return cals;
    }
    let html_table = names(&["table"]);
    let mut inner = Vec::new();
    table.find_outermost(&html_table, &[], &mut inner);
    if inner.is_empty() {
        vec![parse_html_table(table)]
    } else {
        inner.into_iter().map(parse_html_table).collect()
    }
}

/// Tracks which columns are still covered by row spans from earlier rows.
#[derive(Debug, Default)]
struct Occupancy {
    remaining: Vec<usize>,
    cursor: usize,
}

impl Occupancy {
    fn start_row(&mut self) {
        self.cursor = 0;
    }

    fn busy(&self, col: usize) -> bool {
        self.remaining.get(col).is_some_and(|&r| r > 0)
    }

    fn next_free(&mut self) -> usize {
        while self.busy(self.cursor) {
            self.cursor += 1;
        }
        self.cursor
    }

    fn claim(&mut self, start: usize, end: usize, extra_rows: usize) {
        if self.remaining.len() <= end {
            self.remaining.resize(end + 1, 0);
        }
        for slot in &mut self.remaining[start..=end] {
            *slot = (*slot).max(extra_rows + 1);
        }
        self.cursor = end + 1;
    }

    fn end_row(&mut self) {
        for slot in &mut self.remaining {
            *slot = slot.saturating_sub(1);
        }
    }

    fn width(&self) -> usize {
        self.remaining.len()
    }
}

/// Parse every CALS group (`tgroup`) under `table`. Tables without groups
/// yield an empty list.
pub fn parse_cals_table(table: &Element, profile: &TagProfile) -> Vec<RawTable> {
    let mut groups = Vec::new();
    table.find_outermost(&profile.group_tags, &profile.table_tags, &mut groups);
    groups.into_iter().map(|g| parse_cals_group(g, profile)).collect()
}

fn parse_cals_group(group: &Element, profile: &TagProfile) -> RawTable {
    let attrs = &profile.span_attr_names;
    let mut warnings = Vec::new();

    let mut colnames: HashMap<String, usize> = HashMap::new();
    let mut next_colnum = 1usize;
    for spec in group.child_elements().filter(|e| e.is_any(&profile.colspec_tags)) {
        let num = spec
            .attr(&attrs.col_number_name)
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or(next_colnum);
        next_colnum = num + 1;
        if let Some(name) = spec.attr(&attrs.col_name) {
            colnames.insert(name.trim().to_string(), num - 1);
        }
    }
    let mut spanspecs: HashMap<String, (String, String)> = HashMap::new();
    for spec in group.child_elements().filter(|e| e.is_any(&profile.spanspec_tags)) {
        if let (Some(name), Some(st), Some(end)) = (
            spec.attr(&attrs.span_name),
            spec.attr(&attrs.col_start_name),
            spec.attr(&attrs.col_end_name),
        ) {
            spanspecs.insert(name.trim().to_string(), (st.trim().to_string(), end.trim().to_string()));
        }
    }
    let resolve = |name: &str, warnings: &mut Vec<String>| -> Option<usize> {
        let name = name.trim();
        if let Some(&i) = colnames.get(name) {
            return Some(i);
        }
        let digits: String = name.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
        let n = digits.chars().rev().collect::<String>().parse::<usize>().ok().filter(|&n| n >= 1);
        if n.is_none() {
            warnings.push(format!("unknown column name '{name}'"));
        }
        n.map(|n| n - 1)
    };

    // (is_header, row element)
    let mut rows: Vec<(bool, &Element)> = Vec::new();
    let mut footer: Vec<&Element> = Vec::new();
    for child in group.child_elements() {
        if child.is_any(&profile.header_section_tags) {
            rows.extend(child.child_elements().filter(|r| r.is_any(&profile.row_tags)).map(|r| (true, r)));
        } else if child.is_any(&profile.body_section_tags) {
            rows.extend(child.child_elements().filter(|r| r.is_any(&profile.row_tags)).map(|r| (false, r)));
        } else if child.is_any(&profile.footer_section_tags) {
            footer.extend(child.child_elements().filter(|r| r.is_any(&profile.row_tags)));
        } else if child.is_any(&profile.row_tags) {
            rows.push((false, child));
        }
    }
    rows.extend(footer.into_iter().map(|r| (false, r)));

    let mut occ = Occupancy::default();
    let mut header_rows = Vec::new();
    let mut body_rows = Vec::new();
    for (is_header, row) in rows {
        occ.start_row();
        let mut cells = Vec::new();
        for entry in row.child_elements().filter(|e| e.is_any(&profile.cell_tags)) {
            let mut start_name = entry.attr(&attrs.col_start_name).map(str::to_string);
            let mut end_name = entry.attr(&attrs.col_end_name).map(str::to_string);
            if start_name.is_none() {
                if let Some((st, end)) = entry.attr(&attrs.span_name).and_then(|s| spanspecs.get(s.trim())) {
                    start_name = Some(st.clone());
                    end_name = Some(end.clone());
                }
            }
            let explicit_start = start_name
                .as_deref()
                .or_else(|| entry.attr(&attrs.col_name))
                .and_then(|n| resolve(n, &mut warnings));
            let start = explicit_start.unwrap_or_else(|| occ.next_free());
            let end = match end_name.as_deref() {
                Some(n) if explicit_start.is_some() => resolve(n, &mut warnings).unwrap_or(start),
                _ => start,
            };
            let extra_rows = match entry.attr(&attrs.extra_rows_name) {
                None => 0,
                Some(v) => v.trim().parse::<usize>().unwrap_or_else(|_| {
                    warnings.push(format!("invalid {} value '{v}'", attrs.extra_rows_name));
                    0
                }),
            };
            let (start, end) = if end < start {
                warnings.push(format!("span ends before it starts (columns {} to {}); clamped", start + 1, end + 1));
                (start, start)
            } else {
                (start, end)
            };
            occ.claim(start, end, extra_rows);
            cells.push(RawCell {
                text: entry.flat_text(),
                col_start: start,
                col_end: end,
                extra_rows,
                is_header,
            });
        }
        occ.end_row();
        if is_header {
            header_rows.push(cells);
        } else {
            body_rows.push(cells);
        }
    }

    let declared = group
        .attr(&attrs.col_count_name)
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1);
    let declared_cols = declared.unwrap_or_else(|| occ.width().max(1));
    let mut table = RawTable {
        table_id: String::new(),
        caption: String::new(),
        declared_cols,
        header_rows,
        body_rows,
        source_kind: SourceKind::Xml,
        warnings,
    };
    clamp_to_width(&mut table);
    table
}

fn span_attr(cell: &Element, name: &str) -> Option<usize> {
    cell.attr(name)
        .and_then(|v| v.trim().parse::<usize>().ok())
}

/// Parse an HTML-model table (`tr`/`td`/`th` with `colspan`/`rowspan`).
pub fn parse_html_table(table: &Element) -> RawTable {
    let mut warnings = Vec::new();
    // (in_thead, row)
    let mut rows: Vec<(bool, &Element)> = Vec::new();
    let mut footer: Vec<&Element> = Vec::new();
    for child in table.child_elements() {
        match markup_local(child) {
            "thead" => rows.extend(child.child_elements().filter(|r| markup_local(r) == "tr").map(|r| (true, r))),
            "tbody" => rows.extend(child.child_elements().filter(|r| markup_local(r) == "tr").map(|r| (false, r))),
            "tfoot" => footer.extend(child.child_elements().filter(|r| markup_local(r) == "tr")),
            "tr" => rows.push((false, child)),
            _ => {}
        }
    }
    rows.extend(footer.into_iter().map(|r| (false, r)));
    let has_thead = rows.iter().any(|(h, _)| *h);

    let mut occ = Occupancy::default();
    let mut header_rows = Vec::new();
    let mut body_rows = Vec::new();
    let mut in_leading_th_run = !has_thead;
    for (in_thead, row) in rows {
        occ.start_row();
        let mut cells = Vec::new();
        let tds: Vec<&Element> = row
            .child_elements()
            .filter(|c| matches!(markup_local(c), "td" | "th"))
            .collect();
        let all_th = !tds.is_empty() && tds.iter().all(|c| markup_local(c) == "th");
        for cell in tds {
            let colspan = span_attr(cell, "colspan").unwrap_or(1).max(1);
            let rowspan = span_attr(cell, "rowspan").unwrap_or(1).max(1);
            let start = occ.next_free();
            let end = start + colspan - 1;
            occ.claim(start, end, rowspan - 1);
            cells.push(RawCell {
                text: cell.flat_text(),
                col_start: start,
                col_end: end,
                extra_rows: rowspan - 1,
                is_header: in_thead || markup_local(cell) == "th",
            });
        }
        occ.end_row();
        let header_row = in_thead || (in_leading_th_run && all_th);
        if !header_row {
            if all_th && !body_rows.is_empty() {
                warnings.push(format!("header-styled row inside body at row {}", header_rows.len() + body_rows.len() + 1));
            }
            in_leading_th_run = false;
        }
        if header_row {
            for c in &mut cells {
                c.is_header = true;
            }
            header_rows.push(cells);
        } else {
            body_rows.push(cells);
        }
    }

    let mut table = RawTable {
        table_id: String::new(),
        caption: String::new(),
        declared_cols: occ.width().max(1),
        header_rows,
        body_rows,
        source_kind: SourceKind::Html,
        warnings,
    };
    clamp_to_width(&mut table);
    table
}

fn markup_local(el: &Element) -> &str {
    el.name.rsplit_once(':').map_or(el.name.as_str(), |(_, l)| l)
}

/// Enforce `col_start <= col_end < declared_cols` on every cell.
fn clamp_to_width(table: &mut RawTable) {
    let width = table.declared_cols;
    let mut warnings = Vec::new();
    let sections = [&mut table.header_rows, &mut table.body_rows];
    for rows in sections {
        for (r, row) in rows.iter_mut().enumerate() {
            row.retain_mut(|cell| {
                if cell.col_start >= width {
                    warnings.push(format!(
                        "cell '{}' at column {} lies outside the declared {} columns; dropped",
                        cell.text,
                        cell.col_start + 1,
                        width
                    ));
                    return false;
                }
                if cell.col_end >= width {
                    warnings.push(format!(
                        "span of '{}' in row {} exceeds {} columns; clamped",
                        cell.text,
                        r + 1,
                        width
                    ));
                    cell.col_end = width - 1;
                }
                true
            });
        }
    }
    table.warnings.extend(warnings);
}
