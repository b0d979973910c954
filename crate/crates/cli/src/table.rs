//! Numeric CSV input.
//!
//! Comma separated, no quoting. A first row that does not parse as numbers is
//! taken as a header. Every row must have the same number of columns.

use std::fs::File;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn columns(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Splits off the last column as a 0/1 outlier label.
    pub fn into_labeled(self) -> Result<Vec<(Vec<f64>, bool)>, CliError> {
        if self.columns() < 2 {
            return Err(CliError::Input(
                "labeled input needs at least one feature column and a label column".into(),
            ));
        }
        self.rows
            .into_iter()
            .enumerate()
            .map(|(i, mut row)| {
                let label = row.pop().expect("checked column count");
                if label == 0.0 {
                    Ok((row, false))
                } else if label == 1.0 {
                    Ok((row, true))
                } else {
                    Err(CliError::Input(format!(
                        "data row {}: label must be 0 or 1, found {label}",
                        i + 1
                    )))
                }
            })
            .collect()
    }
}

pub fn read(path: &Path) -> Result<Table, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse(file).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(source: impl std::io::Read) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        if record.iter().any(|cell| cell.contains('"')) {
            return Err(CliError::Input(format!(
                "line {line}: quoted fields are not supported"
            )));
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => {
                if let Some(j) = values.iter().position(|x| !x.is_finite()) {
                    return Err(CliError::Input(format!(
                        "line {line}: column {} is not finite",
                        j + 1
                    )));
                }
                rows.push(values);
            }
            Err(_) if line == 1 => header = Some(record.iter().map(String::from).collect()),
            Err(_) => {
                let (j, cell) = record
                    .iter()
                    .enumerate()
                    .find(|(_, c)| c.parse::<f64>().is_err())
                    .expect("some cell failed to parse");
                return Err(CliError::Input(format!(
                    "line {line}: column {} is not a number: `{cell}`",
                    j + 1
                )));
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Input("no data rows".into()));
    }
    Ok(Table { header, rows })
}
