use crate::numeric::{init_weights, matmul, InitScheme, RngState, Tensor};
use crate::{Error, Result};

/// Dense output head mapping a feature vector to the full multi-step
/// forecast in one affine map: `out = features W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHead {
    /// `[feature_dim, horizon]`
    pub w: Tensor,
    /// `[horizon]`
    pub b: Tensor,
}

impl DenseHead {
    pub fn init(feature_dim: usize, horizon: usize, rng: &mut RngState) -> Result<Self> {
        Ok(DenseHead {
            w: init_weights(&[feature_dim, horizon], InitScheme::UniformScaled, rng)?,
            b: init_weights(&[horizon], InitScheme::Zeros, rng)?,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn horizon(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn zeros_like(&self) -> Self {
        DenseHead { w: Tensor::zeros(self.w.shape()), b: Tensor::zeros(self.b.shape()) }
    }

    /// `features [batch, feature_dim] -> [batch, horizon]`.
    pub fn forward(&self, features: &Tensor) -> Result<Tensor> {
        if features.rank() != 2 || features.shape()[1] != self.feature_dim() {
            return Err(Error::shape(
                "dense_head_forward",
                format!("features {:?} vs head [{}, {}]", features.shape(), self.feature_dim(), self.horizon()),
            ));
        }
        matmul(features, &self.w)?.add_bias_rows(&self.b)
    }

    /// Returns `(dW, db, dfeatures)` for an upstream gradient `[batch, horizon]`.
    pub fn backward(&self, features: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        if grad_out.shape() != [features.shape()[0], self.horizon()] {
            return Err(Error::shape(
                "dense_head_backward",
                format!("grad {:?} vs [{}, {}]", grad_out.shape(), features.shape()[0], self.horizon()),
            ));
        }
        let dw = matmul(&features.transpose(), grad_out)?;
        let db = grad_out.column_sums();
        let dfeat = matmul(grad_out, &self.w.transpose())?;
        Ok((dw, db, dfeat))
    }
}
