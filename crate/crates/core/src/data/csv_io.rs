use std::path::Path;

use super::TimeSeries;
use crate::{Error, Result};

/// Column selection and error handling for CSV ingestion.
#[derive(Clone, Debug)]
pub struct CsvOptions {
    /// Value column; defaults to the last column of each row.
    pub value_col: Option<usize>,
    /// Timestamp column; defaults to column 0 when rows have two or more
    /// columns. Timestamps are kept only when every row parses numerically.
    pub timestamp_col: Option<usize>,
    /// In strict mode any malformed data row aborts with its line number;
    /// otherwise malformed rows are skipped and reported.
    pub strict: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { value_col: None, timestamp_col: None, strict: true }
    }
}

/// One skipped or rejected row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowIssue {
    pub line: u64,
    pub reason: String,
}

/// Loads a univariate series from a UTF-8, comma-separated file with an
/// optional single header row (auto-detected: a first row whose value field
/// is not numeric is skipped).
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<(TimeSeries, Vec<RowIssue>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let mut values = Vec::new();
    let mut timestamps: Vec<f64> = Vec::new();
    let mut timestamps_valid = true;
    let mut issues = Vec::new();
    let mut saw_data_row = false;

    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }

        let value_idx = options.value_col.unwrap_or(record.len().saturating_sub(1));
        let raw_value = match record.get(value_idx) {
            Some(v) => v,
            None => {
                let issue = RowIssue {
                    line,
                    reason: format!("missing value column {value_idx}"),
                };
                if options.strict && saw_data_row {
                    return Err(Error::Data(format!("line {line}: {}", issue.reason)));
                }
                issues.push(issue);
                continue;
            }
        };

        match raw_value.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                saw_data_row = true;
                values.push(v);
                if timestamps_valid && record.len() >= 2 {
                    let ts_idx = options.timestamp_col.unwrap_or(0);
                    match record.get(ts_idx).and_then(|t| t.parse::<f64>().ok()) {
                        Some(t) => timestamps.push(t),
                        None => timestamps_valid = false,
                    }
                } else if record.len() < 2 {
                    timestamps_valid = false;
                }
            }
            parsed => {
                let reason = match parsed {
                    Ok(v) => format!("non-finite value '{v}'"),
                    Err(_) => format!("non-numeric value '{raw_value}'"),
                };
                if !saw_data_row {
                    // Header auto-detection: the first such row is skipped.
                    saw_data_row = true;
                    continue;
                }
                if options.strict {
                    return Err(Error::Data(format!("{}: line {line}: {reason}", path.display())));
                }
                issues.push(RowIssue { line, reason });
            }
        }
    }

    if values.is_empty() {
        return Err(Error::Data(format!("{}: no parseable data rows", path.display())));
    }

    let timestamps = (timestamps_valid && timestamps.len() == values.len()
        && timestamps.windows(2).all(|w| w[1] > w[0]))
    .then_some(timestamps);
    let series = TimeSeries::from_parts(values, timestamps)?;
    Ok((series, issues))
}

/// Writes a series as `t,value` rows with a header. The timestamp column is
/// the recorded timestamps when present, the row index otherwise.
pub fn write_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut out = String::from("t,value\n");
    for (i, &v) in series.values().iter().enumerate() {
        let t = series
            .timestamps()
            .map(|ts| ts[i])
            .unwrap_or(i as f64);
        out.push_str(&format!("{t},{v}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}
