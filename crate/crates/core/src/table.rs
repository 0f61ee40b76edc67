//! Column tables rendered as CSV with fixed float formatting.

use std::fmt::Write;

use crate::chain::TimeGrid;

/// Columns of equal length with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

/// 17 significant digits, `.` decimal separator, exponent notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn new() -> Self {
        Table { header: Vec::new(), columns: Vec::new() }
    }

    /// A table whose first column `t` holds the grid points.
    pub fn with_time(grid: &TimeGrid) -> Self {
        let mut t = Table::new();
        t.push("t", grid.points().collect());
        t
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) {
        self.header.push(name.into());
        self.columns.push(column);
    }

    pub fn rows(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for i in 0..self.rows() {
            for (c, col) in self.columns.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                if let Some(v) = col.get(i) {
                    let _ = write!(out, "{}", format_float(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}
