//! Training data for the rule miner: comma-separated rows of speed, sender
//! gain, receiver gain and idle factor under one header line.

use std::io::Read;

use v2x_fuzzy_core::miner::{Dataset, DIM};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{source_name}:{line}: {message}")]
    Row { source_name: String, line: u64, message: String },
    #[error("{source_name}: {err}")]
    Csv {
        source_name: String,
        #[source]
        err: csv::Error,
    },
    #[error("{source_name}: no data rows")]
    Empty { source_name: String },
}

/// `source_name` only labels errors. Blank lines are skipped.
pub fn read_dataset<R: Read>(input: R, source_name: &str) -> Result<Dataset, DatasetError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rd.headers().map_err(|err| DatasetError::Csv { source_name: source_name.into(), err })?.clone();
    if header.len() != DIM {
        return Err(DatasetError::Row {
            source_name: source_name.into(),
            line: 1,
            message: format!("header has {} columns, expected {DIM} (s, sg, rg, f)", header.len()),
        });
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|err| match err.position() {
            Some(p) => DatasetError::Row { source_name: source_name.into(), line: p.line(), message: err.to_string() },
            None => DatasetError::Csv { source_name: source_name.into(), err },
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut point = [0.0; DIM];
        for (c, (slot, field)) in point.iter_mut().zip(rec.iter()).enumerate() {
            *slot = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| DatasetError::Row {
                source_name: source_name.into(),
                line,
                message: format!("column {} ({}): `{field}` is not a finite number", c + 1, &header[c]),
            })?;
        }
        rows.push(point);
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty { source_name: source_name.into() });
    }
    Dataset::new(rows).map_err(|e| DatasetError::Row {
        source_name: source_name.into(),
        line: 0,
        message: e.to_string(),
    })
}
