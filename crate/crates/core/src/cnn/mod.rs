//! 1D convolutional building blocks: dilated causal convolution, max
//! pooling, weight normalization, spatial dropout and the TCN residual
//! stack.
//!
//! Data layout is `[batch, steps, channels]` throughout and convolution
//! kernels are `[kernel, in_channels, out_channels]` with tap index
//! `kernel-1` reading the current step, so causal outputs depend only on the
//! present and past.

mod conv;
mod dropout;
mod norm;
mod tcn;

pub use conv::{
    conv1d_backward, conv1d_forward, max_pool1d, max_pool1d_backward, max_pool1d_traced,
    MaxPoolTrace,
};
pub use dropout::{apply_dropout_mask, spatial_dropout, spatial_dropout_traced};
pub use norm::{weight_norm_apply, weight_norm_backward};
pub use tcn::{
    residual_block_backward, residual_block_forward, tcn_trunk_backward, tcn_trunk_forward,
    BlockGrads, BlockTrace, DilatedConvParams, PlainConvParams, ResidualBlockParams,
};

use crate::{Error, Result};

/// Padding behaviour of a 1D convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// Left-pad with `dilation * (kernel - 1)` zeros; output length equals
    /// input length and no tap ever reads the future.
    Causal,
    /// No padding; output shrinks by the receptive span minus one.
    None,
}

/// Description of a single convolution layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
}

impl ConvSpec {
    pub fn causal(filters: usize, kernel_size: usize, dilation: usize) -> Self {
        ConvSpec { filters, kernel_size, stride: 1, dilation, padding: Padding::Causal }
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters == 0 || self.kernel_size == 0 || self.dilation == 0 || self.stride == 0 {
            return Err(Error::InvalidArgument(format!(
                "conv spec fields must be positive: {self:?}"
            )));
        }
        if self.padding == Padding::Causal && self.stride != 1 {
            return Err(Error::InvalidArgument(
                "causal convolution requires stride 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of input steps one output step depends on.
    pub fn span(&self) -> usize {
        self.dilation * (self.kernel_size - 1) + 1
    }
}

/// Architecture of a TCN: one residual block per dilation entry.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TcnSpec {
    pub dilations: Vec<usize>,
    pub kernel_size: usize,
    pub filters: usize,
    pub dropout_rate: f64,
}

/// Dilated convolutions per residual block; fixed by the architecture.
pub const CONVS_PER_BLOCK: usize = 2;

impl TcnSpec {
    /// The configuration used throughout the experiments: kernel 3, dilations
    /// 1..32 doubling, 4 filters.
    pub fn standard() -> Self {
        TcnSpec {
            dilations: vec![1, 2, 4, 8, 16, 32],
            kernel_size: 3,
            filters: 4,
            dropout_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dilations.is_empty() {
            return Err(Error::InvalidArgument("tcn spec: dilations must be non-empty".into()));
        }
        if self.dilations.iter().any(|&d| d == 0) || self.kernel_size == 0 || self.filters == 0 {
            return Err(Error::InvalidArgument(format!("tcn spec fields must be positive: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "tcn spec: dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

/// Number of past input steps that can influence one output step of a
/// dilated causal stack: `1 + convs_per_block * (kernel-1) * sum(dilations)`.
pub fn receptive_field(kernel_size: usize, dilations: &[usize], convs_per_block: usize) -> usize {
    let total: usize = dilations.iter().sum();
    1 + convs_per_block * (kernel_size - 1) * total
}
