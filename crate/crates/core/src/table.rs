//! Plot-ready CSV output: one `#` comment line, a header row, data rows.

use std::fmt::Display;
use std::io::{self, Write};

/// Version string stamped into every output header.
pub const TOOL_VERSION: &str = concat!("blowlab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub comment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(comment: impl Into<String>, header: impl IntoIterator<Item = S>) -> Self {
        Self { comment: comment.into(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Panics if the row width differs from the header.
    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: Display,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {}", self.comment.replace('\n', " "))?;
        let mut out = csv::WriterBuilder::new().from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

/// Header comment shared by every file: tool version, seed, parameters.
pub fn header_comment(seed: Option<u64>, params: &str) -> String {
    match seed {
        Some(s) => format!("{TOOL_VERSION} seed={s} {params}"),
        None => format!("{TOOL_VERSION} {params}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut t = Table::new("v1 seed=1", ["a", "b"]);
        t.push([1.5, 2.0]);
        t.push(["x,y", "z"]);
        assert_eq!(t.to_csv_string(), "# v1 seed=1\na,b\n1.5,2\n\"x,y\",z\n");
    }

    #[test]
    #[should_panic]
    fn ragged_rows_rejected() {
        Table::new("", ["a"]).push([1, 2]);
    }
}
