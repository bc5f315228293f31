//! Data pipeline: CSV ingestion, zero-record cleaning, chronological
//! train/test split, window construction and synthetic series generation.
//!
//! The pipeline order is clean -> split -> fit scaler on the training
//! partition -> scale both partitions -> window; scaling itself lives in
//! [`crate::train::Scaler`] so nothing here can leak test-set statistics.

mod csv_io;
mod synth;
mod windows;

pub use csv_io::{load_csv, write_csv, CsvOptions, RowIssue};
pub use synth::{synth_series, SynthKind, SynthParams};
pub use windows::{make_windows, WindowedDataset};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A univariate series: values plus optional numeric timestamps.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    timestamps: Option<Vec<f64>>,
    /// Sampling interval metadata in minutes, when known. Cleaning removes
    /// records, so a nominally uniform series may carry gaps; this field is
    /// informational only.
    pub sample_interval_minutes: Option<f64>,
}

impl TimeSeries {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("time series must be non-empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("time series contains non-finite value {bad}")));
        }
        Ok(TimeSeries { values, timestamps: None, sample_interval_minutes: None })
    }

    pub fn from_parts(values: Vec<f64>, timestamps: Option<Vec<f64>>) -> Result<Self> {
        let mut series = Self::from_values(values)?;
        if let Some(ts) = timestamps {
            if ts.len() != series.values.len() {
                return Err(Error::Data(format!(
                    "{} timestamps for {} values",
                    ts.len(),
                    series.values.len()
                )));
            }
            if ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Data("timestamps must be strictly increasing".into()));
            }
            series.timestamps = Some(ts);
        }
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }
}

/// Outcome of zero-record removal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub removed_count: usize,
    pub removed_rate: f64,
    pub original_length: usize,
}

/// Removes exact-zero values (sensor error records), concatenating the
/// series across the gaps. Errors when nothing would remain.
pub fn clean_zeros(series: &TimeSeries) -> Result<(TimeSeries, CleanReport)> {
    let original_length = series.len();
    let keep: Vec<bool> = series.values.iter().map(|&v| v != 0.0).collect();
    let removed_count = keep.iter().filter(|&&k| !k).count();
    if removed_count == original_length {
        return Err(Error::Data(
            "clean_zeros: every value is zero; nothing left after cleaning".into(),
        ));
    }

    let values: Vec<f64> = series
        .values
        .iter()
        .zip(&keep)
        .filter_map(|(&v, &k)| k.then_some(v))
        .collect();
    let timestamps = series.timestamps.as_ref().map(|ts| {
        ts.iter()
            .zip(&keep)
            .filter_map(|(&t, &k)| k.then_some(t))
            .collect()
    });

    let mut cleaned = TimeSeries::from_parts(values, timestamps)?;
    cleaned.sample_interval_minutes = series.sample_interval_minutes;
    let report = CleanReport {
        removed_count,
        removed_rate: removed_count as f64 / original_length as f64,
        original_length,
    };
    Ok((cleaned, report))
}

/// Chronological split: the first `floor(train_frac * n)` points become the
/// training partition, the rest the test partition. No shuffling.
pub fn split(series: &TimeSeries, train_frac: f64) -> Result<(TimeSeries, TimeSeries)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split: train fraction must be in (0, 1), got {train_frac}"
        )));
    }
    let n = series.len();
    let n_train = ((n as f64) * train_frac).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Data(format!(
            "split: fraction {train_frac} leaves an empty partition for {n} points"
        )));
    }

    let take = |range: std::ops::Range<usize>| -> Result<TimeSeries> {
        let mut part = TimeSeries::from_parts(
            series.values[range.clone()].to_vec(),
            series.timestamps.as_ref().map(|ts| ts[range].to_vec()),
        )?;
        part.sample_interval_minutes = series.sample_interval_minutes;
        Ok(part)
    };
    Ok((take(0..n_train)?, take(n_train..n)?))
}
