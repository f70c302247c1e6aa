use std::path::Path;

use crate::error::{CliResult, Failure};

/// Column selector: a header name, or a 1-based position.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl Column {
    pub fn parse(s: &str) -> Column {
        match s.parse::<usize>() {
            Ok(i) if i >= 1 => Column::Index(i),
            _ => Column::Name(s.to_string()),
        }
    }
}

/// Reads one numeric column of a CSV file, in file order.
///
/// A name selector requires a header row. With a positional selector the
/// first row is taken as a header when its cell does not parse as a number.
pub fn ingest_csv(path: &Path, column: &Column) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::Data(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        rows.push(rec);
    }
    let Some(first) = rows.first() else {
        return Err(Failure::Data(format!("{} is empty", path.display())));
    };
    let (col, skip) = match column {
        Column::Name(name) => {
            let pos = first
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Failure::Config(format!("no column named '{name}' in the header of {}", path.display())))?;
            (pos, 1)
        }
        Column::Index(i) => {
            let header = first.get(i - 1).is_some_and(|c| c.parse::<f64>().is_err());
            (i - 1, usize::from(header))
        }
    };
    let label = match column {
        Column::Name(n) => format!("'{n}'"),
        Column::Index(i) => i.to_string(),
    };
    let mut x = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate().skip(skip) {
        let row = i + 1;
        let cell = rec
            .get(col)
            .ok_or_else(|| Failure::Data(format!("row {row}: column {label} is missing")))?;
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => x.push(v),
            _ => return Err(Failure::Data(format!("row {row}, column {label}: '{cell}' is not a finite number"))),
        }
    }
    if x.is_empty() {
        return Err(Failure::Data(format!("{} has no data rows", path.display())));
    }
    Ok(x)
}
