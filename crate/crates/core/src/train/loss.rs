use crate::numeric::Tensor;
use crate::{Error, Result};

/// Mean squared error and its gradient `2 (pred - target) / n` where `n` is
/// the total element count.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            "mse_loss",
            format!("{:?} vs {:?}", pred.shape(), target.shape()),
        ));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    for (i, (&p, &t)) in pred.data().iter().zip(target.data().iter()).enumerate() {
        let diff = p - t;
        loss += diff * diff;
        grad.data_mut()[i] = 2.0 * diff / n;
    }
    Ok((loss / n, grad))
}
