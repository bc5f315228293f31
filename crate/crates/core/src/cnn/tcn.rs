use super::conv::{conv1d_backward, conv1d_forward};
use super::dropout::{apply_dropout_mask, spatial_dropout_traced};
use super::norm::{weight_norm_apply, weight_norm_backward};
use super::{ConvSpec, TcnSpec};
use crate::numeric::{init_weights, InitScheme, RngState, Tensor};
use crate::{Error, Result};

/// A weight-normalized dilated convolution: direction `v`, per-channel gain
/// `g`, bias `b`. The effective kernel `g * v / ||v||` is recomputed each
/// forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct DilatedConvParams {
    pub v: Tensor,
    pub g: Tensor,
    pub b: Tensor,
}

impl DilatedConvParams {
    pub fn init(kernel: usize, in_ch: usize, out_ch: usize, rng: &mut RngState) -> Result<Self> {
        let v = init_weights(&[kernel, in_ch, out_ch], InitScheme::UniformScaled, rng)?;
        // Gains start at ||v_o|| so the initial effective kernel equals v.
        let mut norms = vec![0.0; out_ch];
        for (i, &val) in v.data().iter().enumerate() {
            norms[i % out_ch] += val * val;
        }
        let g = Tensor::new(&[out_ch], norms.iter().map(|n| n.sqrt()).collect())?;
        Ok(DilatedConvParams { v, g, b: Tensor::zeros(&[out_ch]) })
    }

    pub fn zeros_like(&self) -> Self {
        DilatedConvParams {
            v: Tensor::zeros(self.v.shape()),
            g: Tensor::zeros(self.g.shape()),
            b: Tensor::zeros(self.b.shape()),
        }
    }
}

/// Plain (un-normalized) convolution parameters; used for the 1x1 channel
/// matcher and for the simple CNN forecaster.
#[derive(Clone, Debug, PartialEq)]
pub struct PlainConvParams {
    pub w: Tensor,
    pub b: Tensor,
}

impl PlainConvParams {
    pub fn init(kernel: usize, in_ch: usize, out_ch: usize, rng: &mut RngState) -> Result<Self> {
        Ok(PlainConvParams {
            w: init_weights(&[kernel, in_ch, out_ch], InitScheme::UniformScaled, rng)?,
            b: Tensor::zeros(&[out_ch]),
        })
    }

    pub fn zeros_like(&self) -> Self {
        PlainConvParams { w: Tensor::zeros(self.w.shape()), b: Tensor::zeros(self.b.shape()) }
    }
}

/// One residual block: two weight-normalized dilated causal convolutions
/// (each followed by ReLU and spatial dropout) plus a skip connection,
/// matched by a 1x1 convolution exactly when channel counts differ.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlockParams {
    pub conv1: DilatedConvParams,
    pub conv2: DilatedConvParams,
    pub matcher: Option<PlainConvParams>,
}

impl ResidualBlockParams {
    pub fn init(kernel: usize, in_ch: usize, out_ch: usize, rng: &mut RngState) -> Result<Self> {
        let matcher = if in_ch != out_ch {
            Some(PlainConvParams::init(1, in_ch, out_ch, rng)?)
        } else {
            None
        };
        Ok(ResidualBlockParams {
            conv1: DilatedConvParams::init(kernel, in_ch, out_ch, rng)?,
            conv2: DilatedConvParams::init(kernel, out_ch, out_ch, rng)?,
            matcher,
        })
    }

    pub fn zeros_like(&self) -> Self {
        ResidualBlockParams {
            conv1: self.conv1.zeros_like(),
            conv2: self.conv2.zeros_like(),
            matcher: self.matcher.as_ref().map(|m| m.zeros_like()),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.conv1.v.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.conv1.v.shape()[2]
    }
}

/// Gradients for one residual block, same layout as its parameters.
pub type BlockGrads = ResidualBlockParams;

/// Forward record for one residual block.
#[derive(Clone, Debug)]
pub struct BlockTrace {
    pub x: Tensor,
    pub w1_eff: Tensor,
    pub pre1: Tensor,
    pub mask1: Tensor,
    /// Input to the second convolution (after ReLU + dropout).
    pub mid: Tensor,
    pub w2_eff: Tensor,
    pub pre2: Tensor,
    pub mask2: Tensor,
    /// Pre-activation of the final ReLU (skip + branch).
    pub sum: Tensor,
    pub dilation: usize,
    pub kernel: usize,
}

fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

fn relu_grad(pre: &Tensor, grad: &Tensor) -> Result<Tensor> {
    grad.hadamard(&pre.map(|v| if v > 0.0 { 1.0 } else { 0.0 }))
}

/// Residual block forward:
/// `out = ReLU(match(x) + f(x))` with
/// `f = [conv(weight-normed kernel) -> ReLU -> spatial dropout] x 2`.
pub fn residual_block_forward(
    x: &Tensor,
    params: &ResidualBlockParams,
    kernel: usize,
    dilation: usize,
    dropout_rate: f64,
    rng: &mut RngState,
    training: bool,
) -> Result<(Tensor, BlockTrace)> {
    let out_ch = params.out_channels();
    let in_ch = x.shape()[2];
    if in_ch != params.in_channels() {
        return Err(Error::shape(
            "residual_block_forward",
            format!("input channels {in_ch} vs params {}", params.in_channels()),
        ));
    }
    if (in_ch != out_ch) != params.matcher.is_some() {
        return Err(Error::InvalidArgument(
            "residual_block_forward: 1x1 matcher must be present exactly when channel counts differ"
                .into(),
        ));
    }
    let spec = ConvSpec::causal(out_ch, kernel, dilation);

    let w1_eff = weight_norm_apply(&params.conv1.v, &params.conv1.g)?;
    let pre1 = conv1d_forward(x, &spec, &w1_eff, &params.conv1.b)?;
    let (a1, mask1) = spatial_dropout_traced(&relu(&pre1), dropout_rate, rng, training)?;

    let w2_eff = weight_norm_apply(&params.conv2.v, &params.conv2.g)?;
    let pre2 = conv1d_forward(&a1, &spec, &w2_eff, &params.conv2.b)?;
    let (a2, mask2) = spatial_dropout_traced(&relu(&pre2), dropout_rate, rng, training)?;

    let skip = match &params.matcher {
        Some(m) => conv1d_forward(x, &ConvSpec::causal(out_ch, 1, 1), &m.w, &m.b)?,
        None => x.clone(),
    };
    let sum = skip.add(&a2)?;
    let out = relu(&sum);

    let trace = BlockTrace {
        x: x.clone(),
        w1_eff,
        pre1,
        mask1,
        mid: a1,
        w2_eff,
        pre2,
        mask2,
        sum,
        dilation,
        kernel,
    };
    Ok((out, trace))
}

/// Backward through one residual block. Returns the block gradients
/// (including `v`/`g` of both weight-normalized kernels and the 1x1 matcher
/// when present) and the gradient w.r.t. the block input.
pub fn residual_block_backward(
    trace: &BlockTrace,
    params: &ResidualBlockParams,
    grad_out: &Tensor,
) -> Result<(BlockGrads, Tensor)> {
    if grad_out.shape() != trace.sum.shape() {
        return Err(Error::shape(
            "residual_block_backward",
            format!("grad {:?} vs trace {:?}", grad_out.shape(), trace.sum.shape()),
        ));
    }
    let out_ch = params.out_channels();
    let spec = ConvSpec::causal(out_ch, trace.kernel, trace.dilation);

    // Final ReLU over skip + branch.
    let d_sum = relu_grad(&trace.sum, grad_out)?;

    // Skip path.
    let mut grads = params.zeros_like();
    let dx_skip = match &params.matcher {
        Some(m) => {
            let (dw, db, dx) =
                conv1d_backward(&trace.x, &ConvSpec::causal(out_ch, 1, 1), &m.w, &d_sum)?;
            let gm = grads.matcher.as_mut().expect("matcher grads");
            gm.w = dw;
            gm.b = db;
            dx
        }
        None => d_sum.clone(),
    };

    // Branch: dropout2 -> ReLU2 -> conv2 -> dropout1 -> ReLU1 -> conv1.
    let d_a2 = apply_dropout_mask(&d_sum, &trace.mask2)?;
    let d_pre2 = relu_grad(&trace.pre2, &d_a2)?;
    let (dw2_eff, db2, d_mid) = conv1d_backward(&trace.mid, &spec, &trace.w2_eff, &d_pre2)?;
    let (dv2, dg2) = weight_norm_backward(&params.conv2.v, &params.conv2.g, &dw2_eff)?;
    grads.conv2 = DilatedConvParams { v: dv2, g: dg2, b: db2 };

    let d_a1 = apply_dropout_mask(&d_mid, &trace.mask1)?;
    let d_pre1 = relu_grad(&trace.pre1, &d_a1)?;
    let (dw1_eff, db1, dx_branch) = conv1d_backward(&trace.x, &spec, &trace.w1_eff, &d_pre1)?;
    let (dv1, dg1) = weight_norm_backward(&params.conv1.v, &params.conv1.g, &dw1_eff)?;
    grads.conv1 = DilatedConvParams { v: dv1, g: dg1, b: db1 };

    let dx = dx_skip.add(&dx_branch)?;
    Ok((grads, dx))
}

/// Stacks one residual block per dilation entry, in order. The trunk output
/// has the same length as the input.
pub fn tcn_trunk_forward(
    x: &Tensor,
    spec: &TcnSpec,
    blocks: &[ResidualBlockParams],
    rng: &mut RngState,
    training: bool,
) -> Result<(Tensor, Vec<BlockTrace>)> {
    spec.validate()?;
    if blocks.len() != spec.dilations.len() {
        return Err(Error::InvalidArgument(format!(
            "tcn_trunk_forward: {} blocks for {} dilations",
            blocks.len(),
            spec.dilations.len()
        )));
    }
    let mut cur = x.clone();
    let mut traces = Vec::with_capacity(blocks.len());
    for (block, &dilation) in blocks.iter().zip(spec.dilations.iter()) {
        let (next, trace) = residual_block_forward(
            &cur,
            block,
            spec.kernel_size,
            dilation,
            spec.dropout_rate,
            rng,
            training,
        )?;
        traces.push(trace);
        cur = next;
    }
    Ok((cur, traces))
}

/// Backward through the whole trunk; returns per-block gradients (same order
/// as `blocks`) and the gradient w.r.t. the trunk input.
pub fn tcn_trunk_backward(
    traces: &[BlockTrace],
    blocks: &[ResidualBlockParams],
    grad_out: &Tensor,
) -> Result<(Vec<BlockGrads>, Tensor)> {
    if traces.len() != blocks.len() {
        return Err(Error::InvalidArgument(
            "tcn_trunk_backward: trace/block count mismatch".into(),
        ));
    }
    let mut grad = grad_out.clone();
    let mut grads = vec![None; blocks.len()];
    for i in (0..blocks.len()).rev() {
        let (bg, dx) = residual_block_backward(&traces[i], &blocks[i], &grad)?;
        grads[i] = Some(bg);
        grad = dx;
    }
    Ok((grads.into_iter().map(|g| g.expect("filled")).collect(), grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_dropout_rng() -> RngState {
        RngState::new(0)
    }

    #[test]
    fn zero_branch_weights_reduce_to_relu_of_input() {
        // Equal channel counts, branch kernels normalize a nonzero v but get
        // gain 0 and bias 0 -> f(x) = 0, identity skip, out = ReLU(x).
        let mut rng = RngState::new(81);
        let mut params = ResidualBlockParams::init(3, 2, 2, &mut rng).unwrap();
        params.conv1.g = Tensor::zeros(&[2]);
        params.conv2.g = Tensor::zeros(&[2]);
        params.conv1.b = Tensor::zeros(&[2]);
        params.conv2.b = Tensor::zeros(&[2]);
        let x = Tensor::new(&[1, 4, 2], vec![0.5, -1.0, 2.0, -0.25, 0.0, 1.5, -3.0, 0.75]).unwrap();
        let (out, _) =
            residual_block_forward(&x, &params, 3, 1, 0.0, &mut no_dropout_rng(), false).unwrap();
        assert_eq!(out, x.map(|v| v.max(0.0)));
    }

    #[test]
    fn channel_mismatch_forces_matcher_and_output_channels() {
        let mut rng = RngState::new(82);
        let params = ResidualBlockParams::init(3, 1, 4, &mut rng).unwrap();
        assert!(params.matcher.is_some());
        let x = Tensor::new(&[2, 5, 1], (0..10).map(|v| v as f64 * 0.1).collect()).unwrap();
        let (out, _) =
            residual_block_forward(&x, &params, 3, 2, 0.0, &mut no_dropout_rng(), false).unwrap();
        assert_eq!(out.shape(), &[2, 5, 4]);
    }

    #[test]
    fn block_matches_hand_composed_stages() {
        let mut rng = RngState::new(83);
        let params = ResidualBlockParams::init(2, 3, 3, &mut rng).unwrap();
        let x = Tensor::new(&[1, 6, 3], (0..18).map(|v| (v as f64 * 0.7).sin()).collect()).unwrap();
        let (out, _) =
            residual_block_forward(&x, &params, 2, 2, 0.0, &mut no_dropout_rng(), false).unwrap();

        // Hand-compose the same pipeline from the public primitives.
        let spec = ConvSpec::causal(3, 2, 2);
        let w1 = weight_norm_apply(&params.conv1.v, &params.conv1.g).unwrap();
        let a1 = conv1d_forward(&x, &spec, &w1, &params.conv1.b).unwrap().map(|v| v.max(0.0));
        let w2 = weight_norm_apply(&params.conv2.v, &params.conv2.g).unwrap();
        let a2 = conv1d_forward(&a1, &spec, &w2, &params.conv2.b).unwrap().map(|v| v.max(0.0));
        let manual = x.add(&a2).unwrap().map(|v| v.max(0.0));
        assert_eq!(out, manual);
    }

    #[test]
    fn single_block_delta_kernels_pass_signal_through() {
        // Delta kernels (current-step tap only, unit gain) make each conv an
        // identity, so the branch contributes ReLU(x) and the identity skip
        // doubles positive values: out = 2 * ReLU(x).
        let delta = Tensor::new(&[2, 1, 1], vec![0.0, 1.0]).unwrap();
        let params = ResidualBlockParams {
            conv1: DilatedConvParams { v: delta.clone(), g: Tensor::new(&[1], vec![1.0]).unwrap(), b: Tensor::zeros(&[1]) },
            conv2: DilatedConvParams { v: delta, g: Tensor::new(&[1], vec![1.0]).unwrap(), b: Tensor::zeros(&[1]) },
            matcher: None,
        };
        let spec = TcnSpec { dilations: vec![1], kernel_size: 2, filters: 1, dropout_rate: 0.0 };
        let x = Tensor::new(&[1, 5, 1], vec![1.0, -2.0, 0.5, 0.0, -0.75]).unwrap();
        let (out, _) =
            tcn_trunk_forward(&x, &spec, std::slice::from_ref(&params), &mut no_dropout_rng(), false)
                .unwrap();
        let expected = x.map(|v| 2.0 * v.max(0.0));
        assert_eq!(out, expected);
    }

    #[test]
    fn trunk_preserves_length_for_any_dilation_stack() {
        let mut rng = RngState::new(84);
        for dilations in [vec![1], vec![1, 2], vec![1, 2, 4, 8], vec![3, 5]] {
            let spec = TcnSpec {
                dilations: dilations.clone(),
                kernel_size: 3,
                filters: 4,
                dropout_rate: 0.0,
            };
            let mut blocks = Vec::new();
            let mut in_ch = 1;
            for _ in &dilations {
                blocks.push(ResidualBlockParams::init(3, in_ch, 4, &mut rng).unwrap());
                in_ch = 4;
            }
            let x = Tensor::new(&[1, 30, 1], (0..30).map(|v| (v as f64 * 0.3).cos()).collect())
                .unwrap();
            let (out, _) =
                tcn_trunk_forward(&x, &spec, &blocks, &mut no_dropout_rng(), false).unwrap();
            assert_eq!(out.shape(), &[1, 30, 4], "dilations {dilations:?}");
        }
    }

    #[test]
    fn trunk_matches_block_by_block_composition() {
        let mut rng = RngState::new(85);
        let spec = TcnSpec { dilations: vec![1, 2, 4], kernel_size: 3, filters: 3, dropout_rate: 0.0 };
        let blocks = vec![
            ResidualBlockParams::init(3, 1, 3, &mut rng).unwrap(),
            ResidualBlockParams::init(3, 3, 3, &mut rng).unwrap(),
            ResidualBlockParams::init(3, 3, 3, &mut rng).unwrap(),
        ];
        let x = Tensor::new(&[2, 12, 1], (0..24).map(|v| (v as f64 * 0.21).sin()).collect()).unwrap();
        let (out, _) = tcn_trunk_forward(&x, &spec, &blocks, &mut no_dropout_rng(), false).unwrap();

        let mut cur = x;
        for (i, block) in blocks.iter().enumerate() {
            let (next, _) = residual_block_forward(
                &cur,
                block,
                3,
                spec.dilations[i],
                0.0,
                &mut no_dropout_rng(),
                false,
            )
            .unwrap();
            cur = next;
        }
        assert_eq!(out, cur);
    }

    #[test]
    fn causality_random_perturbations_never_reach_the_past() {
        let mut rng = RngState::new(86);
        let spec = TcnSpec { dilations: vec![1, 2, 4], kernel_size: 2, filters: 3, dropout_rate: 0.0 };
        let blocks = vec![
            ResidualBlockParams::init(2, 1, 3, &mut rng).unwrap(),
            ResidualBlockParams::init(2, 3, 3, &mut rng).unwrap(),
            ResidualBlockParams::init(2, 3, 3, &mut rng).unwrap(),
        ];
        let steps = 20;
        for trial in 0..10 {
            let data: Vec<f64> = (0..steps).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x = Tensor::new(&[1, steps, 1], data.clone()).unwrap();
            let (base, _) = tcn_trunk_forward(&x, &spec, &blocks, &mut no_dropout_rng(), false).unwrap();

            let t = rng.below(steps as u64) as usize;
            let mut bumped = data;
            bumped[t] += 1.0 + trial as f64 * 0.1;
            let xb = Tensor::new(&[1, steps, 1], bumped).unwrap();
            let (pert, _) = tcn_trunk_forward(&xb, &spec, &blocks, &mut no_dropout_rng(), false).unwrap();

            for s in 0..t {
                for c in 0..3 {
                    assert_eq!(
                        base.at3(0, s, c),
                        pert.at3(0, s, c),
                        "output at step {s} changed after perturbing step {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn receptive_field_matches_gradient_footprint() {
        // Positive weights and inputs so no ReLU path dies and no gradient
        // cancellation can shrink the measured footprint.
        let configs: [(usize, Vec<usize>); 5] = [
            (2, vec![1, 2, 4]),
            (3, vec![1, 2, 4]),
            (2, vec![1, 2, 4, 8, 16]),
            (3, vec![2, 3]),
            (1, vec![1, 2, 4, 8]),
        ];
        for (kernel, dilations) in configs {
            let rf = super::super::receptive_field(kernel, &dilations, 2);
            let steps = rf + 7;
            let spec = TcnSpec {
                dilations: dilations.clone(),
                kernel_size: kernel,
                filters: 2,
                dropout_rate: 0.0,
            };
            let mut rng = RngState::new(87);
            let mut blocks = Vec::new();
            let mut in_ch = 1;
            for _ in &dilations {
                let mut b = ResidualBlockParams::init(kernel, in_ch, 2, &mut rng).unwrap();
                b.conv1.v = b.conv1.v.map(|v| v.abs() + 0.05);
                b.conv2.v = b.conv2.v.map(|v| v.abs() + 0.05);
                b.conv1.g = b.conv1.g.map(|v| v.abs() + 0.05);
                b.conv2.g = b.conv2.g.map(|v| v.abs() + 0.05);
                if let Some(m) = &mut b.matcher {
                    m.w = m.w.map(|v| v.abs() + 0.05);
                }
                blocks.push(b);
                in_ch = 2;
            }
            let x = Tensor::filled(&[1, steps, 1], 0.5);
            let (out, traces) =
                tcn_trunk_forward(&x, &spec, &blocks, &mut no_dropout_rng(), false).unwrap();
            let mut grad = Tensor::zeros(out.shape());
            grad.set3(0, steps - 1, 0, 1.0);
            let (_, dx) = tcn_trunk_backward(&traces, &blocks, &grad).unwrap();
            let footprint = dx.data().iter().filter(|v| v.abs() > 0.0).count();
            assert_eq!(
                footprint,
                rf.min(steps),
                "kernel {kernel}, dilations {dilations:?}"
            );
        }
    }
}
