use crate::numeric::Tensor;
use crate::{Error, Result};

/// Number of output channels (last axis) and per-channel L2 norms of `v`.
fn channel_norms(v: &Tensor) -> (usize, Vec<f64>) {
    let out_ch = *v.shape().last().expect("non-empty shape");
    let mut norms = vec![0.0; out_ch];
    for (i, &val) in v.data().iter().enumerate() {
        norms[i % out_ch] += val * val;
    }
    for n in &mut norms {
        *n = n.sqrt();
    }
    (out_ch, norms)
}

/// Weight normalization: `w = g * v / ||v||` per output channel, where the
/// output channel is the last axis of `v`.
pub fn weight_norm_apply(v: &Tensor, g: &Tensor) -> Result<Tensor> {
    let (out_ch, norms) = channel_norms(v);
    if g.shape() != [out_ch] {
        return Err(Error::shape(
            "weight_norm_apply",
            format!("gain {:?} vs {out_ch} output channels", g.shape()),
        ));
    }
    if let Some(o) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::Numeric(format!(
            "weight_norm_apply: direction vector for channel {o} has zero norm"
        )));
    }
    let mut out = v.clone();
    for (i, val) in out.data_mut().iter_mut().enumerate() {
        let o = i % out_ch;
        *val *= g.data()[o] / norms[o];
    }
    out.debug_check_finite("weight_norm_apply");
    Ok(out)
}

/// Pulls a gradient on the effective weights back through the
/// reparameterization; returns `(d_v, d_g)`.
///
/// With `w_o = g_o v_o / n_o`, `n_o = ||v_o||`:
///   `dg_o = <dw_o, v_o> / n_o`
///   `dv_o = (g_o / n_o) dw_o - (g_o <dw_o, v_o> / n_o^3) v_o`
pub fn weight_norm_backward(v: &Tensor, g: &Tensor, grad_w: &Tensor) -> Result<(Tensor, Tensor)> {
    if grad_w.shape() != v.shape() {
        return Err(Error::shape(
            "weight_norm_backward",
            format!("grad {:?} vs v {:?}", grad_w.shape(), v.shape()),
        ));
    }
    let (out_ch, norms) = channel_norms(v);
    if let Some(o) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::Numeric(format!(
            "weight_norm_backward: direction vector for channel {o} has zero norm"
        )));
    }
    let mut dots = vec![0.0; out_ch];
    for (i, (&dw, &vv)) in grad_w.data().iter().zip(v.data().iter()).enumerate() {
        dots[i % out_ch] += dw * vv;
    }

    let mut dg = Tensor::zeros(&[out_ch]);
    for o in 0..out_ch {
        dg.data_mut()[o] = dots[o] / norms[o];
    }
    let mut dv = Tensor::zeros(v.shape());
    for i in 0..v.len() {
        let o = i % out_ch;
        let gn = g.data()[o] / norms[o];
        dv.data_mut()[i] =
            gn * grad_w.data()[i] - gn * dots[o] / (norms[o] * norms[o]) * v.data()[i];
    }
    Ok((dv, dg))
}
