use super::TrainableModel;
use crate::numeric::{RngState, Tensor};
use crate::rnn::{rnn_backward, unroll_forward, CellKind, CellParams, DenseHead, GateTrace};
use crate::{Error, Result};

/// Unidirectional recurrent forecaster: a single LSTM or GRU layer whose
/// final hidden state feeds the dense head.
#[derive(Clone, Debug)]
pub struct RnnForecaster {
    pub cell: CellParams,
    pub head: DenseHead,
    input_len: usize,
}

pub struct RnnTrace {
    gate: GateTrace,
    /// Final hidden state, the head's input features.
    features: Tensor,
    steps: usize,
}

impl RnnForecaster {
    pub fn init(
        kind: CellKind,
        input_len: usize,
        units: usize,
        horizon: usize,
        rng: &mut RngState,
    ) -> Result<Self> {
        Ok(RnnForecaster {
            cell: CellParams::init(kind, 1, units, rng)?,
            head: DenseHead::init(units, horizon, rng)?,
            input_len,
        })
    }

    pub fn param_names(&self) -> Vec<String> {
        let prefix = match self.cell.kind() {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        };
        let mut names: Vec<String> = self
            .cell
            .tensor_names()
            .into_iter()
            .map(|n| format!("{prefix}.{n}"))
            .collect();
        names.push("head.w".into());
        names.push("head.b".into());
        names
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.rank() != 3 || input.shape()[1] != self.input_len || input.shape()[2] != 1 {
            return Err(Error::shape(
                "rnn_forecaster",
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

impl TrainableModel for RnnForecaster {
    type Trace = RnnTrace;

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
    ) -> Result<(Tensor, RnnTrace)> {
        self.check_input(input)?;
        let batch = input.shape()[0];
        let init = self.cell.zero_state(batch);
        let (hidden_seq, gate) = unroll_forward(&self.cell, input, &init)?;
        let features = hidden_seq.step_slice(self.input_len - 1);
        let out = self.head.forward(&features)?;
        Ok((out, RnnTrace { gate, features, steps: self.input_len }))
    }

    fn backward(&self, trace: &RnnTrace, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        let (dw_head, db_head, dfeat) = self.head.backward(&trace.features, grad_out)?;
        let batch = grad_out.shape()[0];
        let hidden = self.cell.hidden_dim();
        // Loss reads the hidden sequence only at its final step.
        let mut grad_hidden = Tensor::zeros(&[batch, trace.steps, hidden]);
        grad_hidden.set_step_slice(trace.steps - 1, &dfeat);
        let (cell_grads, _dx) = rnn_backward(&trace.gate, &grad_hidden, &self.cell)?;

        let mut grads: Vec<Tensor> = cell_grads.tensors().into_iter().cloned().collect();
        grads.push(dw_head);
        grads.push(db_head);
        Ok(grads)
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        let mut v = self.cell.tensors();
        v.push(&self.head.w);
        v.push(&self.head.b);
        v
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.cell.tensors_mut();
        v.push(&mut self.head.w);
        v.push(&mut self.head.b);
        v
    }
}
