//! From-scratch multi-step time-series forecasting.
//!
//! This crate implements five deep-learning model families for univariate
//! multi-step forecasting - LSTM, GRU, their bidirectional wrappers, a 1D CNN
//! and a temporal convolutional network (TCN) - with hand-derived gradients,
//! plus the full experimental pipeline around them: CSV ingestion, zero-record
//! cleaning, min-max scaling, windowing, MSE/Adam training and
//! expanding-window walk-forward evaluation with per-horizon RMSE/MAE/R2
//! reports.
//!
//! There is no autodiff graph. Every layer carries an explicit backward pass,
//! and every backward pass is verified against a central finite-difference
//! oracle ([`numeric::finite_diff_grad`]).
//!
//! Layout:
//! - [`numeric`]: dense tensors, activations, seeded RNG, gradient oracle
//! - [`rnn`]: LSTM/GRU cells, unrolling, BPTT, bidirectional wrapper, dense head
//! - [`cnn`]: 1D convolution, max pooling, weight norm, spatial dropout, TCN
//! - [`models`]: the six forecaster configurations and their on-disk format
//! - [`train`]: MSE loss, Adam, min-max scaler, mini-batch training loop
//! - [`data`]: CSV loading, cleaning, chronological split, windowing, synthesis
//! - [`eval`]: metrics, walk-forward harness, per-horizon reports

pub mod cnn;
pub mod data;
pub mod eval;
pub mod models;
pub mod numeric;
pub mod rnn;
pub mod train;

pub use numeric::{Tensor, RngState};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor shapes do not conform for the requested operation.
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    /// A parameter or flag value is outside its legal range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Input data cannot be parsed or is unusable (empty, degenerate, ...).
    #[error("data error: {0}")]
    Data(String),
    /// A computation produced non-finite values or is numerically undefined.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// A serialized model or report file is malformed.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
