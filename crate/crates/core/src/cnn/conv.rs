use super::{ConvSpec, Padding};
use crate::numeric::Tensor;
use crate::{Error, Result};

fn check_conv_shapes(x: &Tensor, spec: &ConvSpec, weights: &Tensor, bias: &Tensor) -> Result<()> {
    spec.validate()?;
    if x.rank() != 3 {
        return Err(Error::shape(
            "conv1d",
            format!("input must be [batch, steps, in_ch], got {:?}", x.shape()),
        ));
    }
    let in_ch = x.shape()[2];
    if weights.shape() != [spec.kernel_size, in_ch, spec.filters] {
        return Err(Error::shape(
            "conv1d",
            format!(
                "weights {:?} vs expected [{}, {in_ch}, {}]",
                weights.shape(),
                spec.kernel_size,
                spec.filters
            ),
        ));
    }
    if bias.shape() != [spec.filters] {
        return Err(Error::shape(
            "conv1d",
            format!("bias {:?} vs expected [{}]", bias.shape(), spec.filters),
        ));
    }
    Ok(())
}

/// 1D convolution over `[batch, steps, in_ch]`:
///
/// `y[t] = b + sum_i w[i] . x[t - d*(k-1-i)]`
///
/// so tap `k-1` reads the current step. Causal padding inserts
/// `d*(k-1)` implicit zeros on the left and preserves length; `Padding::None`
/// is a valid convolution and requires `steps >= span`.
pub fn conv1d_forward(
    x: &Tensor,
    spec: &ConvSpec,
    weights: &Tensor,
    bias: &Tensor,
) -> Result<Tensor> {
    check_conv_shapes(x, spec, weights, bias)?;
    let (batch, steps, in_ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (k, d, out_ch) = (spec.kernel_size, spec.dilation, spec.filters);

    let out_steps = match spec.padding {
        Padding::Causal => steps,
        Padding::None => {
            if steps < spec.span() {
                return Err(Error::InvalidArgument(format!(
                    "conv1d: input of {steps} steps is shorter than the receptive span {}",
                    spec.span()
                )));
            }
            (steps - spec.span()) / spec.stride + 1
        }
    };

    let mut out = Tensor::zeros(&[batch, out_steps, out_ch]);
    for b in 0..batch {
        for t_out in 0..out_steps {
            for o in 0..out_ch {
                let mut acc = bias.data()[o];
                for i in 0..k {
                    // Source step for tap i (tap k-1 is the current step).
                    let src = match spec.padding {
                        Padding::Causal => {
                            let offset = d * (k - 1 - i);
                            if t_out < offset {
                                continue; // implicit zero padding
                            }
                            t_out - offset
                        }
                        Padding::None => t_out * spec.stride + d * i,
                    };
                    for c in 0..in_ch {
                        acc += weights.at3(i, c, o) * x.at3(b, src, c);
                    }
                }
                out.set3(b, t_out, o, acc);
            }
        }
    }
    out.debug_check_finite("conv1d_forward");
    Ok(out)
}

/// Gradients of [`conv1d_forward`]: returns `(d_weights, d_bias, d_input)`.
pub fn conv1d_backward(
    x: &Tensor,
    spec: &ConvSpec,
    weights: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    spec.validate()?;
    let (batch, steps, in_ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (k, d, out_ch) = (spec.kernel_size, spec.dilation, spec.filters);
    if grad_out.rank() != 3 || grad_out.shape()[0] != batch || grad_out.shape()[2] != out_ch {
        return Err(Error::shape(
            "conv1d_backward",
            format!("grad {:?} vs batch {batch}, out_ch {out_ch}", grad_out.shape()),
        ));
    }
    let out_steps = grad_out.shape()[1];

    let mut dw = Tensor::zeros(weights.shape());
    let mut db = Tensor::zeros(&[out_ch]);
    let mut dx = Tensor::zeros(x.shape());

    for b in 0..batch {
        for t_out in 0..out_steps {
            for o in 0..out_ch {
                let g = grad_out.at3(b, t_out, o);
                if g == 0.0 {
                    continue;
                }
                db.data_mut()[o] += g;
                for i in 0..k {
                    let src = match spec.padding {
                        Padding::Causal => {
                            let offset = d * (k - 1 - i);
                            if t_out < offset {
                                continue;
                            }
                            t_out - offset
                        }
                        Padding::None => t_out * spec.stride + d * i,
                    };
                    if src >= steps {
                        continue;
                    }
                    for c in 0..in_ch {
                        let wi = (i * in_ch + c) * out_ch + o;
                        dw.data_mut()[wi] += g * x.at3(b, src, c);
                        let xi = (b * steps + src) * in_ch + c;
                        dx.data_mut()[xi] += g * weights.at3(i, c, o);
                    }
                }
            }
        }
    }
    Ok((dw, db, dx))
}

/// Argmax bookkeeping for routing pooled gradients.
#[derive(Clone, Debug)]
pub struct MaxPoolTrace {
    pub pool_size: usize,
    pub input_shape: Vec<usize>,
    /// Source time index for each output element, in output iteration order.
    pub argmax: Vec<usize>,
}

/// Non-overlapping max pooling over the time axis; the trailing remainder is
/// dropped. Ties break to the earliest index.
pub fn max_pool1d_traced(x: &Tensor, pool_size: usize) -> Result<(Tensor, MaxPoolTrace)> {
    if x.rank() != 3 {
        return Err(Error::shape(
            "max_pool1d",
            format!("input must be rank-3, got {:?}", x.shape()),
        ));
    }
    let (batch, steps, ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if pool_size == 0 {
        return Err(Error::InvalidArgument("max_pool1d: pool_size must be >= 1".into()));
    }
    if pool_size > steps {
        return Err(Error::InvalidArgument(format!(
            "max_pool1d: pool_size {pool_size} exceeds sequence length {steps}"
        )));
    }
    let out_steps = steps / pool_size;
    let mut out = Tensor::zeros(&[batch, out_steps, ch]);
    let mut argmax = Vec::with_capacity(batch * out_steps * ch);
    for b in 0..batch {
        for t_out in 0..out_steps {
            for c in 0..ch {
                let start = t_out * pool_size;
                let mut best = x.at3(b, start, c);
                let mut best_t = start;
                for t in start + 1..start + pool_size {
                    let v = x.at3(b, t, c);
                    if v > best {
                        best = v;
                        best_t = t;
                    }
                }
                out.set3(b, t_out, c, best);
                argmax.push(best_t);
            }
        }
    }
    Ok((
        out,
        MaxPoolTrace { pool_size, input_shape: x.shape().to_vec(), argmax },
    ))
}

/// Pooled values only; see [`max_pool1d_traced`] when gradients are needed.
pub fn max_pool1d(x: &Tensor, pool_size: usize) -> Result<Tensor> {
    Ok(max_pool1d_traced(x, pool_size)?.0)
}

/// Routes `grad_out` entirely to each window's argmax position.
pub fn max_pool1d_backward(trace: &MaxPoolTrace, grad_out: &Tensor) -> Result<Tensor> {
    let (batch, _steps, ch) = (
        trace.input_shape[0],
        trace.input_shape[1],
        trace.input_shape[2],
    );
    let out_steps = grad_out.shape()[1];
    if grad_out.len() != trace.argmax.len() {
        return Err(Error::shape(
            "max_pool1d_backward",
            format!("grad {:?} vs {} traced elements", grad_out.shape(), trace.argmax.len()),
        ));
    }
    let mut dx = Tensor::zeros(&trace.input_shape);
    let mut idx = 0;
    for b in 0..batch {
        for t_out in 0..out_steps {
            for c in 0..ch {
                let src_t = trace.argmax[idx];
                let flat = (b * trace.input_shape[1] + src_t) * ch + c;
                dx.data_mut()[flat] += grad_out.at3(b, t_out, c);
                idx += 1;
            }
        }
    }
    Ok(dx)
}
