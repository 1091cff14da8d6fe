//! Reading-order classification and header detection.

use std::fmt;
use std::str::FromStr;

use crate::grid::DenseGrid;
use crate::ingest::RawTable;
use crate::ontology::{match_parameter, parse_value, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayoutCase {
    /// Parameters down the first column, read row by row.
    Common,
    /// Parameters across the first row, read column by column.
    Transposed,
    /// Spanning cells in the header rows.
    MergedHeader,
    /// Row-spanning cells in the index column.
    MergedIndex,
}

impl LayoutCase {
    pub const ALL: [LayoutCase; 4] = [
        LayoutCase::Common,
        LayoutCase::Transposed,
        LayoutCase::MergedHeader,
        LayoutCase::MergedIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LayoutCase::Common => "common",
            LayoutCase::Transposed => "transposed",
            LayoutCase::MergedHeader => "merged-header",
            LayoutCase::MergedIndex => "merged-index",
        }
    }
}

impl fmt::Display for LayoutCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayoutCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LayoutCase::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown layout case '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutClass {
    pub case: LayoutCase,
    pub had_header_spans: bool,
    pub had_index_spans: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeaderBoundary {
    pub header_rows: usize,
    /// Leading columns holding labels rather than values.
    pub index_cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("degenerate table: {rows} rows x {cols} columns, {header_rows} header rows")]
    DegenerateTable { rows: usize, cols: usize, header_rows: usize },
}

fn row_has_number(row: &[String]) -> bool {
    row.iter().any(|cell| {
        let v = parse_value(cell);
        v.mean.is_some() || v.range_low.is_some()
    })
}

/// Number of leading rows without any parseable number.
pub fn leading_non_numeric_rows(grid: &DenseGrid) -> usize {
    grid.cells.iter().take_while(|row| !row_has_number(row)).count()
}

pub fn detect_header_boundary(grid: &DenseGrid, ontology: &Ontology) -> Result<HeaderBoundary, LayoutError> {
    let degenerate = || LayoutError::DegenerateTable {
        rows: grid.n_rows,
        cols: grid.n_cols,
        header_rows: grid.header_row_count,
    };
    if grid.n_rows < 2 || grid.n_cols < 2 || grid.header_row_count >= grid.n_rows {
        return Err(degenerate());
    }
    let header_rows = if grid.header_row_count > 0 {
        grid.header_row_count
    } else {
        leading_non_numeric_rows(grid).clamp(1, grid.n_rows - 1)
    };
    let units_column = grid.n_cols > 2 && (0..header_rows).any(|r| ontology.is_units_header(grid.get(r, 1)));
    Ok(HeaderBoundary {
        header_rows,
        index_cols: if units_column { 2 } else { 1 },
    })
}

/// Parameter-label hits down column 0 (body rows) and along row 0 (data
/// columns).
pub fn orientation_hits(grid: &DenseGrid, boundary: &HeaderBoundary, ontology: &Ontology) -> (usize, usize) {
    let col_hits = (boundary.header_rows..grid.n_rows)
        .filter(|&r| match_parameter(grid.get(r, 0), ontology).is_some())
        .count();
    let row_hits = (boundary.index_cols..grid.n_cols)
        .filter(|&c| match_parameter(grid.get(0, c), ontology).is_some())
        .count();
    (col_hits, row_hits)
}

pub fn classify(raw: &RawTable, grid: &DenseGrid, boundary: &HeaderBoundary, ontology: &Ontology) -> LayoutClass {
    let rows: Vec<_> = raw.all_rows().collect();
    let had_header_spans = rows
        .iter()
        .take(boundary.header_rows)
        .flat_map(|row| row.iter())
        .any(|cell| cell.col_end > cell.col_start);
    let had_index_spans = rows
        .iter()
        .skip(boundary.header_rows)
        .flat_map(|row| row.iter())
        .any(|cell| cell.col_start == 0 && cell.extra_rows > 0);

    let case = if had_header_spans {
        LayoutCase::MergedHeader
    } else if had_index_spans {
        LayoutCase::MergedIndex
    } else {
        let (col_hits, row_hits) = orientation_hits(grid, boundary, ontology);
        if col_hits >= row_hits {
            LayoutCase::Common
        } else {
            LayoutCase::Transposed
        }
    };
    LayoutClass {
        case,
        had_header_spans,
        had_index_spans,
    }
}
