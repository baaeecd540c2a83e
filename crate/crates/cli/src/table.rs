//! Numeric result tables and their CSV form.
//!
//! Layout: leading `# key: value` metadata lines, one header row, then
//! float rows serialized with 17 significant digits so that parsing a
//! file reproduces the exact values that were written.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(
        columns: impl IntoIterator<Item = S>,
        metadata: BTreeMap<String, String>,
    ) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            metadata,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(&self.columns)
            .expect("writing to memory cannot fail");
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writer.write_record(&fields).expect("writing to memory cannot fail");
        }
        let bytes = writer.into_inner().expect("writing to memory cannot fail");
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut body_start = 0usize;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, value) = rest.split_once(": ").ok_or_else(|| CliError::Io {
                    message: format!("malformed metadata line: {line}"),
                })?;
                metadata.insert(key.to_string(), value.to_string());
                body_start += line.len() + 1;
            } else {
                break;
            }
        }
        let mut reader = csv::Reader::from_reader(text[body_start..].as_bytes());
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Io { message: format!("reading CSV header: {e}") })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CliError::Io {
                message: format!("reading CSV row: {e}"),
            })?;
            let row: Vec<f64> = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|e| CliError::Io {
                        message: format!("parsing {field:?} as a float: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows, metadata })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.emit()).map_err(|e| CliError::Io {
            message: format!("writing {}: {e}", path.display()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> ResultTable {
        let mut metadata = BTreeMap::new();
        metadata.insert("tool_version".to_string(), "0.0.0".to_string());
        metadata.insert("config_sha256".to_string(), "ab12".to_string());
        let mut t = ResultTable::new(["Q", "prob"], metadata);
        t.push(vec![-2.0, 0.25]);
        t.push(vec![0.1 + 0.2, 1.0 / 3.0]);
        t.push(vec![1e-300, 0.75]);
        t.push(vec![std::f64::consts::PI, 2.2250738585072014e-308]);
        t
    }

    #[test]
    fn emit_parse_round_trip_is_exact() {
        let table = sample_table();
        let parsed = ResultTable::parse(&table.emit()).unwrap();
        assert_eq!(parsed, table);
        for (a, b) in table.rows.iter().flatten().zip(parsed.rows.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn reemitting_parsed_table_is_byte_identical() {
        let emitted = sample_table().emit();
        let again = ResultTable::parse(&emitted).unwrap().emit();
        assert_eq!(emitted, again);
    }

    #[test]
    fn metadata_lines_precede_the_header() {
        let emitted = sample_table().emit();
        let lines: Vec<&str> = emitted.lines().collect();
        assert!(lines[0].starts_with("# "));
        assert!(lines[1].starts_with("# "));
        assert_eq!(lines[2], "Q,prob");
    }

    #[test]
    fn parse_rejects_non_numeric_fields() {
        assert!(ResultTable::parse("a,b\n1.0,x\n").is_err());
    }
}
