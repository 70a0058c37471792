//! CSV helpers shared by the loaders.

use std::path::Path;

use crate::error::{Error, Result};

/// Reads a comma-separated numeric table.
///
/// With `allow_header`, a first row that does not parse as numbers is
/// skipped. All rows must have the same width.
pub fn read_numeric_csv(path: &Path, allow_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(Error::parse(
                            path,
                            line,
                            format!("expected {} columns, found {}", first.len(), row.len()),
                        ));
                    }
                }
                rows.push(row);
            }
            Err(_) if allow_header && rows.is_empty() && idx == 0 => continue,
            Err(e) => return Err(Error::parse(path, line, format!("non-numeric cell: {e}"))),
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("CSV file has no data rows"));
    }
    Ok(rows)
}
