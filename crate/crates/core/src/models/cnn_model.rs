use super::TrainableModel;
use crate::cnn::{
    conv1d_backward, conv1d_forward, max_pool1d_backward, max_pool1d_traced, ConvSpec,
    MaxPoolTrace, PlainConvParams,
};
use crate::numeric::{RngState, Tensor};
use crate::rnn::DenseHead;
use crate::{Error, Result};

/// 1D CNN forecaster: one causal convolution, ReLU, non-overlapping max
/// pooling, then the dense head over the flattened feature map.
#[derive(Clone, Debug)]
pub struct CnnForecaster {
    pub conv: PlainConvParams,
    pub head: DenseHead,
    spec: ConvSpec,
    pool_size: usize,
    input_len: usize,
}

pub struct CnnTrace {
    x: Tensor,
    pre: Tensor,
    pool: MaxPoolTrace,
    features: Tensor,
}

impl CnnForecaster {
    pub fn init(
        input_len: usize,
        filters: usize,
        kernel: usize,
        pool_size: usize,
        horizon: usize,
        rng: &mut RngState,
    ) -> Result<Self> {
        if pool_size == 0 || pool_size > input_len {
            return Err(Error::InvalidArgument(format!(
                "cnn_forecaster: pool size {pool_size} invalid for input length {input_len}"
            )));
        }
        let pooled = input_len / pool_size;
        Ok(CnnForecaster {
            conv: PlainConvParams::init(kernel, 1, filters, rng)?,
            head: DenseHead::init(pooled * filters, horizon, rng)?,
            spec: ConvSpec::causal(filters, kernel, 1),
            pool_size,
            input_len,
        })
    }

    pub fn param_names(&self) -> Vec<String> {
        vec!["conv.w".into(), "conv.b".into(), "head.w".into(), "head.b".into()]
    }
}

impl TrainableModel for CnnForecaster {
    type Trace = CnnTrace;

    fn input_len(&self) -> usize {
        self.input_len
    }

    fn horizon(&self) -> usize {
        self.head.horizon()
    }

    fn forward(
        &self,
        input: &Tensor,
        _rng: &mut RngState,
        _training: bool,
    ) -> Result<(Tensor, CnnTrace)> {
        if input.rank() != 3 || input.shape()[1] != self.input_len || input.shape()[2] != 1 {
            return Err(Error::shape(
                "cnn_forecaster",
                format!("input {:?} vs expected [batch, {}, 1]", input.shape(), self.input_len),
            ));
        }
        let batch = input.shape()[0];
        let pre = conv1d_forward(input, &self.spec, &self.conv.w, &self.conv.b)?;
        let act = pre.map(|v| v.max(0.0));
        let (pooled, pool) = max_pool1d_traced(&act, self.pool_size)?;
        let features = pooled.reshape(&[batch, pooled.shape()[1] * pooled.shape()[2]])?;
        let out = self.head.forward(&features)?;
        Ok((out, CnnTrace { x: input.clone(), pre, pool, features }))
    }

    fn backward(&self, trace: &CnnTrace, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        let (dw_head, db_head, dfeat) = self.head.backward(&trace.features, grad_out)?;
        let batch = grad_out.shape()[0];
        let pooled_steps = trace.pool.input_shape[1] / trace.pool.pool_size;
        let filters = trace.pool.input_shape[2];
        let dpooled = dfeat.reshape(&[batch, pooled_steps, filters])?;
        let dact = max_pool1d_backward(&trace.pool, &dpooled)?;
        let dpre = dact.hadamard(&trace.pre.map(|v| if v > 0.0 { 1.0 } else { 0.0 }))?;
        let (dw, db, _dx) = conv1d_backward(&trace.x, &self.spec, &self.conv.w, &dpre)?;
        Ok(vec![dw, db, dw_head, db_head])
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        vec![&self.conv.w, &self.conv.b, &self.head.w, &self.head.b]
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.conv.w, &mut self.conv.b, &mut self.head.w, &mut self.head.b]
    }
}
