//! Plain-text artifacts: CSV tables with `# key=value` header lines and JSON lines.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value parses back bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta(key).and_then(|v| v.parse().ok())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |reason: String| Error::Parse { what: "CSV", path: path.to_path_buf(), reason };
        let mut table = CsvTable::default();
        let mut have_columns = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| err(format!("line {}: header without '='", n + 1)))?;
                table.meta.push((k.trim().to_string(), v.trim().to_string()));
            } else if !have_columns {
                table.columns = line.split(',').map(|c| c.trim().to_string()).collect();
                have_columns = true;
            } else {
                let row = line
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| err(format!("line {}: {e}", n + 1)))?;
                if row.len() != table.columns.len() {
                    return Err(err(format!(
                        "line {}: {} fields, expected {}",
                        n + 1,
                        row.len(),
                        table.columns.len()
                    )));
                }
                table.rows.push(row);
            }
        }
        if !have_columns {
            return Err(err("no column line".into()));
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }
}

/// Appends rows to a CSV file as they are produced.
pub struct CsvStream {
    out: BufWriter<fs::File>,
    width: usize,
}

impl CsvStream {
    pub fn create(path: &Path, meta: &[(String, String)], columns: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        for (k, v) in meta {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(CsvStream { out, width: columns.len() })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        debug_assert_eq!(values.len(), self.width);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.out.write_all(b",")?;
            }
            write!(self.out, "{v}")?;
        }
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn append_jsonl<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    let mut out = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    out.write_all(&line)?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            what: "JSON line",
            path: path.to_path_buf(),
            reason: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(rows in proptest::collection::vec(proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 0..20)) {
            let mut t = CsvTable::new(&["a", "b", "c"]).with_meta("t2", -1.5e-7).with_meta("tag", "x");
            t.rows = rows;
            let back = CsvTable::parse(&t.to_csv_string(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, t);
        }
    }

    #[test]
    fn rejects_ragged_rows() {
        let r = CsvTable::parse("a,b\n1,2\n3\n", Path::new("mem"));
        assert!(matches!(r, Err(Error::Parse { .. })));
    }

    #[test]
    fn stream_and_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let mut s = CsvStream::create(&p, &[("k".into(), "v".into())], &["t", "u"]).unwrap();
        s.row(&[0.1, -3.0]).unwrap();
        s.row(&[0.2, 1e-300]).unwrap();
        s.flush().unwrap();
        drop(s);
        let t = CsvTable::read(&p).unwrap();
        assert_eq!(t.meta("k"), Some("v"));
        assert_eq!(t.rows, vec![vec![0.1, -3.0], vec![0.2, 1e-300]]);

        let j = dir.path().join("r.jsonl");
        let recs = vec![(1.0f64, "a".to_string()), (0.1 + 0.2, "b".to_string())];
        write_jsonl(&j, &recs).unwrap();
        append_jsonl(&j, &(2.5f64, "c".to_string())).unwrap();
        let back: Vec<(f64, String)> = read_jsonl(&j).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[1].0, 0.1 + 0.2);
    }
}
