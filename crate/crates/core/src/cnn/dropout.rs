use crate::numeric::{RngState, Tensor};
use crate::{Error, Result};

/// Spatial dropout over `[batch, steps, channels]`: whole channels are
/// zeroed per sample with probability `rate`, survivors scaled by
/// `1/(1-rate)`. Returns the output and the `[batch, channels]` mask of
/// applied factors so the backward pass can replay it exactly.
///
/// With `training = false` (or `rate = 0`) this is the identity and the RNG
/// is not consumed.
pub fn spatial_dropout_traced(
    x: &Tensor,
    rate: f64,
    rng: &mut RngState,
    training: bool,
) -> Result<(Tensor, Tensor)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "spatial_dropout: rate must be in [0, 1), got {rate}"
        )));
    }
    if x.rank() != 3 {
        return Err(Error::shape(
            "spatial_dropout",
            format!("input must be rank-3, got {:?}", x.shape()),
        ));
    }
    let (batch, steps, ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if !training || rate == 0.0 {
        return Ok((x.clone(), Tensor::filled(&[batch, ch], 1.0)));
    }

    let keep_scale = 1.0 / (1.0 - rate);
    let mut mask = Tensor::zeros(&[batch, ch]);
    for m in mask.data_mut() {
        *m = if rng.next_f64() < rate { 0.0 } else { keep_scale };
    }
    let mut out = x.clone();
    for b in 0..batch {
        for t in 0..steps {
            for c in 0..ch {
                let v = out.at3(b, t, c) * mask.at2(b, c);
                out.set3(b, t, c, v);
            }
        }
    }
    Ok((out, mask))
}

/// Mask-discarding wrapper around [`spatial_dropout_traced`].
pub fn spatial_dropout(x: &Tensor, rate: f64, rng: &mut RngState, training: bool) -> Result<Tensor> {
    Ok(spatial_dropout_traced(x, rate, rng, training)?.0)
}

/// Applies a recorded `[batch, channels]` mask to an upstream gradient.
pub fn apply_dropout_mask(grad: &Tensor, mask: &Tensor) -> Result<Tensor> {
    if grad.rank() != 3 || mask.shape() != [grad.shape()[0], grad.shape()[2]] {
        return Err(Error::shape(
            "apply_dropout_mask",
            format!("grad {:?} vs mask {:?}", grad.shape(), mask.shape()),
        ));
    }
    let mut out = grad.clone();
    let (batch, steps, ch) = (grad.shape()[0], grad.shape()[1], grad.shape()[2]);
    for b in 0..batch {
        for t in 0..steps {
            for c in 0..ch {
                let v = out.at3(b, t, c) * mask.at2(b, c);
                out.set3(b, t, c, v);
            }
        }
    }
    Ok(out)
}
