//! Deterministic text output: CSV files with pinned float formatting and a
//! flat key-value manifest, all written atomically (temp file + rename) so
//! readers never observe a partial file.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV cell. Floats always print as `{:.8e}` (nine significant digits,
/// unpadded exponent: 1/3 -> `3.33333333e-1`), booleans as 1/0, so output
/// bytes depend only on the values, never on locale or platform.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    /// Plain identifier-style label; must not contain commas or newlines.
    Label(&'static str),
}

impl CsvValue {
    fn render(&self, out: &mut String) {
        use std::fmt::Write as _;
        match self {
            CsvValue::Float(v) => {
                let _ = write!(out, "{v:.8e}");
            }
            CsvValue::Int(v) => {
                let _ = write!(out, "{v}");
            }
            CsvValue::Bool(b) => out.push(if *b { '1' } else { '0' }),
            CsvValue::Label(s) => out.push_str(s),
        }
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let wrap = |source: std::io::Error| Error::io(path, source);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.flush().map_err(wrap)?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Write a header and rows as CSV with `\n` line endings. Every row must
/// have exactly as many cells as the header has columns.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<CsvValue>>,
{
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::SizeMismatch {
                left_name: "row cells",
                left: row.len(),
                right_name: "header columns",
                right: header.len(),
            });
        }
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            cell.render(&mut text);
        }
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Write `key = value` lines in the given order; the same grammar the run
/// configuration uses, so a manifest can be read back by the same parser
/// family and diffed textually.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(k);
        text.push_str(" = ");
        text.push_str(v);
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_pinned() {
        let mut s = String::new();
        CsvValue::Float(1.0 / 3.0).render(&mut s);
        assert_eq!(s, "3.33333333e-1");
        s.clear();
        CsvValue::Float(35935852.622689776).render(&mut s);
        assert_eq!(s, "3.59358526e7");
        s.clear();
        CsvValue::Float(0.0).render(&mut s);
        assert_eq!(s, "0.00000000e0");
        s.clear();
        CsvValue::Float(-2.2590154813068367e-27).render(&mut s);
        assert_eq!(s, "-2.25901548e-27");
    }

    #[test]
    fn rows_and_header_land_in_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv(
            &path,
            &["t_s", "value", "ok"],
            vec![
                vec![CsvValue::Float(0.5), CsvValue::Int(3), CsvValue::Bool(true)],
                vec![CsvValue::Float(1.5), CsvValue::Int(-4), CsvValue::Bool(false)],
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t_s,value,ok\n5.00000000e-1,3,1\n1.50000000e0,-4,0\n");
    }

    #[test]
    fn empty_input_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&path, &["a", "b"], Vec::new()).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
    }

    #[test]
    fn rewrite_replaces_content_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("file.csv");
        write_csv(&path, &["a"], vec![vec![CsvValue::Int(1)]]).unwrap();
        write_csv(&path, &["a"], vec![vec![CsvValue::Int(2)]]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a\n2\n");
        // no stray temporaries left behind
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.path() != path)
            .collect();
        assert!(leftovers.is_empty(), "{leftovers:?}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let err = write_csv(&path, &["a", "b"], vec![vec![CsvValue::Int(1)]]).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { .. }));
        assert!(!path.exists(), "nothing should be written on shape errors");
    }

    #[test]
    fn io_failures_name_the_path() {
        let err = write_csv(
            Path::new("/nonexistent-dir-for-sure/x.csv"),
            &["a"],
            Vec::new(),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nonexistent-dir-for-sure"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn manifest_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        write_manifest(
            &path,
            &[
                ("b.key".to_string(), "2".to_string()),
                ("a.key".to_string(), "1".to_string()),
            ],
        )
        .unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "b.key = 2\na.key = 1\n"
        );
    }
}
