use super::TrainableModel;
use crate::numeric::{RngState, Tensor};
use crate::rnn::{rnn_backward, unroll_forward, CellKind, CellParams, DenseHead, GateTrace};
use crate::{Error, Result};

/// Bidirectional recurrent forecaster. One cell reads the window forward,
/// an independent cell reads it reversed; the concatenated final states of
/// the two passes feed the dense head.
#[derive(Clone, Debug)]
pub struct BiRnnForecaster {
    pub fwd: CellParams,
    pub bwd: CellParams,
    pub head: DenseHead,
    input_len: usize,
}

pub struct BiRnnTrace {
    gate_fwd: GateTrace,
    gate_bwd: GateTrace,
    features: Tensor,
    steps: usize,
}

impl BiRnnForecaster {
    pub fn init(
        kind: CellKind,
        input_len: usize,
        units: usize,
        horizon: usize,
        rng: &mut RngState,
    ) -> Result<Self> {
        Ok(BiRnnForecaster {
            fwd: CellParams::init(kind, 1, units, rng)?,
            bwd: CellParams::init(kind, 1, units, rng)?,
            head: DenseHead::init(2 * units, horizon, rng)?,
            input_len,
        })
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .fwd
            .tensor_names()
            .into_iter()
            .map(|n| format!("fwd.{n}"))
            .collect();
        names.extend(self.bwd.tensor_names().into_iter().map(|n| format!("bwd.{n}")));
        names.push("head.w".into());
        names.push("head.b".into());
        names
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.rank() != 3 || input.shape()[1] != self.input_len || input.shape()[2] != 1 {
            return Err(Error::shape(
                "birnn_forecaster",
                format!(
                    "input {:?} vs expected [batch, {}, 1]",
                    input.shape(),
                    self.input_len
                ),
            ));
        }
        Ok(())
    }
}

impl TrainableModel for BiRnnForecaster {
    type Trace = BiRnnTrace;

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
    ) -> Result<(Tensor, BiRnnTrace)> {
        self.check_input(input)?;
        let batch = input.shape()[0];
        let last = self.input_len - 1;

        let (hidden_fwd, gate_fwd) = unroll_forward(&self.fwd, input, &self.fwd.zero_state(batch))?;
        let reversed = input.reverse_time();
        let (hidden_bwd, gate_bwd) =
            unroll_forward(&self.bwd, &reversed, &self.bwd.zero_state(batch))?;

        // Final state of each direction: the forward pass at the last step,
        // the backward pass at the last step of its own (reversed) axis.
        let features = hidden_fwd
            .step_slice(last)
            .concat_cols(&hidden_bwd.step_slice(last))?;
        let out = self.head.forward(&features)?;
        Ok((
            out,
            BiRnnTrace { gate_fwd, gate_bwd, features, steps: self.input_len },
        ))
    }

    fn backward(&self, trace: &BiRnnTrace, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        let (dw_head, db_head, dfeat) = self.head.backward(&trace.features, grad_out)?;
        let hidden = self.fwd.hidden_dim();
        let batch = grad_out.shape()[0];
        let (dfeat_fwd, dfeat_bwd) = dfeat.split_cols(hidden);

        let mut grad_hidden_fwd = Tensor::zeros(&[batch, trace.steps, hidden]);
        grad_hidden_fwd.set_step_slice(trace.steps - 1, &dfeat_fwd);
        let (grads_fwd, _) = rnn_backward(&trace.gate_fwd, &grad_hidden_fwd, &self.fwd)?;

        let mut grad_hidden_bwd = Tensor::zeros(&[batch, trace.steps, hidden]);
        grad_hidden_bwd.set_step_slice(trace.steps - 1, &dfeat_bwd);
        let (grads_bwd, _) = rnn_backward(&trace.gate_bwd, &grad_hidden_bwd, &self.bwd)?;

        let mut grads: Vec<Tensor> = grads_fwd.tensors().into_iter().cloned().collect();
        grads.extend(grads_bwd.tensors().into_iter().cloned());
        grads.push(dw_head);
        grads.push(db_head);
        Ok(grads)
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        let mut v = self.fwd.tensors();
        v.extend(self.bwd.tensors());
        v.push(&self.head.w);
        v.push(&self.head.b);
        v
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.fwd.tensors_mut();
        v.extend(self.bwd.tensors_mut());
        v.push(&mut self.head.w);
        v.push(&mut self.head.b);
        v
    }
}
