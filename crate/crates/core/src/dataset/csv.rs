use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::LabeledDataset;
use crate::error::{Error, Result};

/// Reads a `label,f0,...,f{d-1}` file. Classes are indexed by first appearance.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, path)
}

/// Parses CSV text; `origin` only labels error messages.
pub fn parse_csv(text: &str, origin: &Path) -> Result<LabeledDataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let header: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if header.first().map(|h| h.trim()) != Some("label") {
        return Err(parse_err(1, "header must start with `label`".into()));
    }
    let dim = header.len() - 1;
    if dim == 0 {
        return Err(parse_err(1, "header declares no feature columns".into()));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        let label = fields[0].trim();
        if label.is_empty() {
            return Err(parse_err(line_no, "empty label".into()));
        }
        let mut row = Vec::with_capacity(dim);
        for (col, cell) in fields[1..].iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                parse_err(line_no, format!("column f{col}: `{cell}` is not a number"))
            })?;
            if !value.is_finite() {
                return Err(parse_err(
                    line_no,
                    format!("column f{col}: `{cell}` is not finite"),
                ));
            }
            row.push(value);
        }
        rows.push(row);
        labels.push(label.to_string());
    }
    if rows.is_empty() {
        return Err(parse_err(2, "file has a header but no data rows".into()));
    }
    LabeledDataset::from_rows(&rows, &labels)
}

/// Renders the dataset in the ingestion format. Floats use the shortest
/// representation that parses back to the same value.
pub fn to_csv_string(ds: &LabeledDataset) -> String {
    let mut out = String::from("label");
    for j in 0..ds.dim() {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for i in 0..ds.len() {
        out.push_str(ds.label_name(i));
        for v in ds.row(i) {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(ds)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
