//! CSV and JSON emission shared by the experiments and the CLI.
//!
//! Floats are written with 17 significant digits in scientific notation so
//! that every value round-trips exactly and no locale setting can change the
//! bytes.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// An in-memory CSV table with optional `# key=value` provenance lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> CsvTable {
        CsvTable {
            comments: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.comments.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        for (k, v) in &self.comments {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Writes the whole table with a single `write` of the final bytes.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string_lossy())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_roundtrip() {
        for x in [0.0, 1.25, -3.5e-300, 1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.25), "1.2500000000000000e0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new(["k", "mu"]);
        t.comment("n", 3);
        t.push(vec!["1".into(), "0.5".into()]);
        assert_eq!(t.to_string_lossy(), "# n=3\nk,mu\n1,0.5\n");
    }
}
