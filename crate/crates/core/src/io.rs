//! Plain-text numeric CSV used by every file interface of the toolkit.
//!
//! Files carry one header line, `#` comment lines anywhere, and rows of
//! comma-separated numbers. Parsing is strict: a wrong header, a wrong
//! column count or an unparsable field is an error naming the line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    /// Comment lines with their 1-based line numbers, `#` stripped.
    pub comments: Vec<(usize, String)>,
    /// Data rows with their 1-based line numbers.
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl CsvTable {
    /// Value of a `# key=value` comment, if present.
    pub fn comment_value(&self, key: &str) -> Option<(usize, &str)> {
        self.comments.iter().find_map(|(line, c)| {
            let (k, v) = c.split_once('=')?;
            (k.trim() == key).then_some((*line, v.trim()))
        })
    }
}

pub fn parse_numeric_csv(text: &str, source: &str, header: &[&str]) -> Result<CsvTable> {
    let mut table = CsvTable::default();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            table.comments.push((line_no, comment.trim().to_string()));
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header {
            if fields != header {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("expected header `{}`, found `{line}`", header.join(",")),
                ));
            }
            seen_header = true;
            continue;
        }
        if fields.len() != header.len() {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected {} columns, found {}", header.len(), fields.len()),
            ));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(source, line_no, format!("not a number: `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        table.rows.push((line_no, values));
    }
    if !seen_header {
        return Err(Error::parse(source, 1, format!("missing header `{}`", header.join(","))));
    }
    Ok(table)
}

/// Whole file as text; errors name the path.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

pub fn read_numeric_csv(path: &Path, header: &[&str]) -> Result<CsvTable> {
    let text = read_text(path)?;
    parse_numeric_csv(&text, &path.display().to_string(), header)
}

/// Render rows under `header`, with optional leading comment lines.
pub fn format_csv<'a, I>(comments: &[String], header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HDR: &[&str] = &["a", "b"];

    #[test]
    fn parses_comments_and_rows() {
        let t = parse_numeric_csv("# x=1.5\na,b\n1,2\n# mid\n3,4e-3\n", "t", HDR).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1], (5, vec![3.0, 4e-3]));
        assert_eq!(t.comment_value("x"), Some((1, "1.5")));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_numeric_csv("a,b\n1,2\n3,zz\n", "f.csv", HDR) {
            Err(Error::Parse { line, source_name, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(source_name, "f.csv");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_numeric_csv("a,b\n1\n", "f", HDR),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_numeric_csv("a,c\n1,2\n", "f", HDR),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn format_round_trips() {
        let rows = [vec![1.0, 0.1 + 0.2], vec![-3.5e-20, 7.0]];
        let text = format_csv(&["k=v".into()], HDR, rows.iter().map(|r| r.as_slice()));
        let t = parse_numeric_csv(&text, "t", HDR).unwrap();
        assert_eq!(t.rows[0].1, rows[0]);
        assert_eq!(t.rows[1].1, rows[1]);
    }
}
