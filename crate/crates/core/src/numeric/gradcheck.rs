use super::Tensor;
use crate::{Error, Result};

/// Central finite-difference gradient of a scalar-valued function.
///
/// Perturbs each element of `x` by `+/- eps` and returns
/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)` per element. This is the
/// independent oracle every hand-derived backward pass in this crate is
/// checked against; it must never share code with those passes.
pub fn finite_diff_grad<F>(mut f: F, x: &Tensor, eps: f64) -> Result<Tensor>
where
    F: FnMut(&Tensor) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("finite_diff_grad: eps must be positive, got {eps}")));
    }
    let mut grad = Tensor::zeros(x.shape());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];

        probe.data_mut()[i] = orig + eps;
        let up = f(&probe)?;
        probe.data_mut()[i] = orig - eps;
        let down = f(&probe)?;
        probe.data_mut()[i] = orig;

        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!(
                "finite_diff_grad: non-finite evaluation at element {i} (f+={up}, f-={down})"
            )));
        }
        grad.data_mut()[i] = (up - down) / (2.0 * eps);
    }
    Ok(grad)
}
