//! CSV output: `#` metadata lines, a header row, then data rows.

use std::fmt::Write as _;

/// One cell of a data row.
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("non-finite value {value} in column '{column}'")]
pub struct NonFinite {
    pub column: String,
    pub value: f64,
}

pub struct Table {
    header: Vec<&'static str>,
    body: String,
    footer: Vec<String>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            body: String::new(),
            footer: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> Result<(), NonFinite> {
        assert_eq!(cells.len(), self.header.len(), "row width");
        let mut fields = Vec::with_capacity(cells.len());
        for (cell, &column) in cells.into_iter().zip(&self.header) {
            fields.push(match cell {
                Cell::Num(v) if !v.is_finite() => {
                    return Err(NonFinite {
                        column: column.to_string(),
                        value: v,
                    })
                }
                Cell::Num(v) => format!("{v}"),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s,
                Cell::Bool(b) => b.to_string(),
            });
        }
        self.body.push_str(&fields.join(","));
        self.body.push('\n');
        Ok(())
    }

    /// A trailing `#` line after the data.
    pub fn summary(&mut self, line: String) {
        self.footer.push(line);
    }

    pub fn render(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        out.push_str(&self.body);
        for line in &self.footer {
            let _ = writeln!(out, "# {line}");
        }
        out
    }
}
