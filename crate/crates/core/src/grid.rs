//! Dense, rectangular table grids.
//!
//! [`normalize`] replicates every spanning cell into each position it
//! covers and fills uncovered or empty positions with [`PLACEHOLDER`].

use std::fmt::Write as _;

use crate::ingest::{RawCell, RawTable, SourceKind};

pub const PLACEHOLDER: &str = "NaN";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseGrid {
    pub cells: Vec<Vec<String>>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub header_row_count: usize,
    pub caption: String,
    pub table_id: String,
}

impl DenseGrid {
    /// Build a grid from row-major text; empty strings become the placeholder.
    pub fn from_rows<S: AsRef<str>>(rows: &[Vec<S>], header_row_count: usize) -> Self {
        let n_cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let mut out: Vec<String> = r.iter().map(|s| fill(s.as_ref())).collect();
                out.resize(n_cols, PLACEHOLDER.to_string());
                out
            })
            .collect();
        DenseGrid {
            n_rows: cells.len(),
            n_cols,
            cells,
            header_row_count,
            caption: String::new(),
            table_id: String::new(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> &str {
        &self.cells[row][col]
    }

    pub fn row(&self, row: usize) -> &[String] {
        &self.cells[row]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &str> + '_ {
        self.cells.iter().map(move |r| r[col].as_str())
    }

    /// Swap rows and columns. The declared header count does not carry over.
    pub fn transpose(&self) -> DenseGrid {
        let cells = (0..self.n_cols)
            .map(|c| self.cells.iter().map(|r| r[c].clone()).collect())
            .collect();
        DenseGrid {
            cells,
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            header_row_count: 0,
            caption: self.caption.clone(),
            table_id: self.table_id.clone(),
        }
    }

    /// Every cell as its own 1×1 raw cell; header rows keep their flag.
    pub fn to_raw(&self) -> RawTable {
        let to_cells = |(r, row): (usize, &Vec<String>)| -> Vec<RawCell> {
            row.iter()
                .enumerate()
                .map(|(c, text)| RawCell {
                    text: text.clone(),
                    col_start: c,
                    col_end: c,
                    extra_rows: 0,
                    is_header: r < self.header_row_count,
                })
                .collect()
        };
        let rows: Vec<Vec<RawCell>> = self.cells.iter().enumerate().map(to_cells).collect();
        let (header, body) = rows.split_at(self.header_row_count.min(rows.len()));
        RawTable {
            table_id: self.table_id.clone(),
            caption: self.caption.clone(),
            declared_cols: self.n_cols.max(1),
            header_rows: header.to_vec(),
            body_rows: body.to_vec(),
            source_kind: SourceKind::Xml,
            warnings: Vec::new(),
        }
    }

    /// Tab-separated dump; header rows carry a leading `#`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (r, row) in self.cells.iter().enumerate() {
            if r < self.header_row_count {
                out.push('#');
            }
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        out
    }
}

fn fill(text: &str) -> String {
    if text.is_empty() {
        PLACEHOLDER.to_string()
    } else {
        text.to_string()
    }
}

/// A span carried down from an earlier row.
struct Carry<'a> {
    cell: &'a RawCell,
    rows_left: usize,
}

/// Expand `table` into a dense grid, discarding diagnostics.
pub fn normalize(table: &RawTable) -> DenseGrid {
    normalize_reporting(table, &mut Vec::new())
}

/// Expand `table` into a dense grid. Position conflicts resolve in favour of
/// the cell that comes first in document order; conflicts and row spans
/// running past the last row are reported in `warnings`.
pub fn normalize_reporting(table: &RawTable, warnings: &mut Vec<String>) -> DenseGrid {
    let n_cols = table.declared_cols.max(1);
    let n_rows = table.row_count();
    let mut cells = Vec::with_capacity(n_rows);
    // Carries stay in document order: older rows first, then left to right.
    let mut carries: Vec<Carry<'_>> = Vec::new();

    for (r, row) in table.all_rows().enumerate() {
        let mut line: Vec<Option<&str>> = vec![None; n_cols];
        for carry in &mut carries {
            paint(&mut line, carry.cell, r, warnings);
            carry.rows_left -= 1;
        }
        carries.retain(|c| c.rows_left > 0);
        for cell in row {
            paint(&mut line, cell, r, warnings);
            if cell.extra_rows > 0 {
                let available = n_rows - r - 1;
                if cell.extra_rows > available {
                    warnings.push(format!(
                        "row span of '{}' at row {} runs past the last row; clamped",
                        cell.text,
                        r + 1
                    ));
                }
                if available > 0 {
                    carries.push(Carry {
                        cell,
                        rows_left: cell.extra_rows.min(available),
                    });
                }
            }
        }
        cells.push(line.into_iter().map(|t| fill(t.unwrap_or(""))).collect());
    }

    DenseGrid {
        cells,
        n_rows,
        n_cols,
        header_row_count: table.header_rows.len(),
        caption: table.caption.clone(),
        table_id: table.table_id.clone(),
    }
}

fn paint<'a>(line: &mut [Option<&'a str>], cell: &'a RawCell, row: usize, warnings: &mut Vec<String>) {
    let end = cell.col_end.min(line.len().saturating_sub(1));
    for slot in line.iter_mut().take(end + 1).skip(cell.col_start) {
        match slot {
            None => *slot = Some(&cell.text),
            Some(existing) => warnings.push(format!(
                "'{}' collides with '{}' at row {}; earlier cell kept",
                cell.text,
                existing,
                row + 1
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridViolation {
    RaggedRow { row: usize, len: usize, expected: usize },
    EmptyCell { row: usize, col: usize },
    RowCountMismatch { declared: usize, actual: usize },
    ZeroDimension,
    HeaderOverflow { header_rows: usize, n_rows: usize },
}

impl std::fmt::Display for GridViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridViolation::RaggedRow { row, len, expected } => {
                write!(f, "row {row} has {len} cells, expected {expected}")
            }
            GridViolation::EmptyCell { row, col } => write!(f, "empty cell at ({row}, {col})"),
            GridViolation::RowCountMismatch { declared, actual } => {
                write!(f, "n_rows is {declared} but grid holds {actual} rows")
            }
            GridViolation::ZeroDimension => write!(f, "grid has no rows or no columns"),
            GridViolation::HeaderOverflow { header_rows, n_rows } => {
                write!(f, "{header_rows} header rows exceed {n_rows} rows")
            }
        }
    }
}

/// All invariant violations in `grid`; empty when the grid is sound.
pub fn validate_grid(grid: &DenseGrid) -> Vec<GridViolation> {
    let mut out = Vec::new();
    if grid.n_rows == 0 || grid.n_cols == 0 {
        out.push(GridViolation::ZeroDimension);
    }
    if grid.cells.len() != grid.n_rows {
        out.push(GridViolation::RowCountMismatch {
            declared: grid.n_rows,
            actual: grid.cells.len(),
        });
    }
    if grid.header_row_count > grid.n_rows {
        out.push(GridViolation::HeaderOverflow {
            header_rows: grid.header_row_count,
            n_rows: grid.n_rows,
        });
    }
    for (r, row) in grid.cells.iter().enumerate() {
        if row.len() != grid.n_cols {
            out.push(GridViolation::RaggedRow {
                row: r,
                len: row.len(),
                expected: grid.n_cols,
            });
        }
        for (c, text) in row.iter().enumerate() {
            if text.is_empty() {
                out.push(GridViolation::EmptyCell { row: r, col: c });
            }
        }
    }
    out
}
