//! LSTM and GRU cells with exact forward recurrences, backpropagation
//! through time, a bidirectional wrapper and the dense output head that maps
//! the final hidden state to the multi-step forecast vector.
//!
//! Gate parameters are kept per-gate (no fused matrices) so the backward
//! passes read like the forward equations. All gradients here are
//! hand-derived and checked against the finite-difference oracle in the
//! integration tests.

mod gru;
mod head;
mod lstm;

pub use gru::{gru_cell_forward, GruParams, GruStepTrace, GruTrace};
pub use head::DenseHead;
pub use lstm::{lstm_cell_forward, LstmParams, LstmStepTrace, LstmTrace};

use crate::numeric::{init_weights, InitScheme, RngState, Tensor};
use crate::{Error, Result};

/// One gate's parameter set: input weights `[input_dim, hidden]`, recurrent
/// weights `[hidden, hidden]` and bias `[hidden]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateParams {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

impl GateParams {
    pub fn init(input_dim: usize, hidden: usize, rng: &mut RngState) -> Result<Self> {
        Ok(GateParams {
            w_x: init_weights(&[input_dim, hidden], InitScheme::UniformScaled, rng)?,
            w_h: init_weights(&[hidden, hidden], InitScheme::UniformScaled, rng)?,
            b: init_weights(&[hidden], InitScheme::Zeros, rng)?,
        })
    }

    pub fn zeros_like(&self) -> Self {
        GateParams {
            w_x: Tensor::zeros(self.w_x.shape()),
            w_h: Tensor::zeros(self.w_h.shape()),
            b: Tensor::zeros(self.b.shape()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.shape()[0]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_h.shape()[0]
    }

    /// Pre-activation `x W_x + h W_h + b` for a batch.
    fn preactivation(&self, x: &Tensor, h: &Tensor) -> Result<Tensor> {
        let xa = crate::numeric::matmul(x, &self.w_x)?;
        let ha = crate::numeric::matmul(h, &self.w_h)?;
        xa.add(&ha)?.add_bias_rows(&self.b)
    }
}

/// Recurrent state: hidden `[batch, hidden]`, plus the cell channel for LSTM.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState {
    pub h: Tensor,
    pub c: Option<Tensor>,
}

impl CellState {
    pub fn zeros_lstm(batch: usize, hidden: usize) -> Self {
        CellState {
            h: Tensor::zeros(&[batch, hidden]),
            c: Some(Tensor::zeros(&[batch, hidden])),
        }
    }

    pub fn zeros_gru(batch: usize, hidden: usize) -> Self {
        CellState { h: Tensor::zeros(&[batch, hidden]), c: None }
    }
}

/// Which recurrent cell a model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Lstm,
    Gru,
}

/// Parameters for either cell kind.
#[derive(Clone, Debug, PartialEq)]
pub enum CellParams {
    Lstm(LstmParams),
    Gru(GruParams),
}

impl CellParams {
    pub fn init(kind: CellKind, input_dim: usize, hidden: usize, rng: &mut RngState) -> Result<Self> {
        Ok(match kind {
            CellKind::Lstm => CellParams::Lstm(LstmParams::init(input_dim, hidden, rng)?),
            CellKind::Gru => CellParams::Gru(GruParams::init(input_dim, hidden, rng)?),
        })
    }

    pub fn kind(&self) -> CellKind {
        match self {
            CellParams::Lstm(_) => CellKind::Lstm,
            CellParams::Gru(_) => CellKind::Gru,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        match self {
            CellParams::Lstm(p) => p.hidden_dim(),
            CellParams::Gru(p) => p.hidden_dim(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            CellParams::Lstm(p) => p.input_dim(),
            CellParams::Gru(p) => p.input_dim(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            CellParams::Lstm(p) => CellParams::Lstm(p.zeros_like()),
            CellParams::Gru(p) => CellParams::Gru(p.zeros_like()),
        }
    }

    pub fn zero_state(&self, batch: usize) -> CellState {
        match self {
            CellParams::Lstm(p) => CellState::zeros_lstm(batch, p.hidden_dim()),
            CellParams::Gru(p) => CellState::zeros_gru(batch, p.hidden_dim()),
        }
    }

    /// Parameter tensors in canonical order (matches gradient order).
    pub fn tensors(&self) -> Vec<&Tensor> {
        match self {
            CellParams::Lstm(p) => p.tensors(),
            CellParams::Gru(p) => p.tensors(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            CellParams::Lstm(p) => p.tensors_mut(),
            CellParams::Gru(p) => p.tensors_mut(),
        }
    }

    /// Canonical tensor names, matching [`CellParams::tensors`] order.
    pub fn tensor_names(&self) -> Vec<String> {
        match self {
            CellParams::Lstm(p) => p.tensor_names(),
            CellParams::Gru(p) => p.tensor_names(),
        }
    }
}

/// Per-sequence record of everything the backward pass needs.
#[derive(Clone, Debug)]
pub enum GateTrace {
    Lstm(LstmTrace),
    Gru(GruTrace),
}

/// Runs the cell step-by-step over `sequence` (`[batch, steps, input_dim]`),
/// returning the hidden sequence `[batch, steps, hidden]` and the gate trace.
pub fn unroll_forward(
    params: &CellParams,
    sequence: &Tensor,
    init: &CellState,
) -> Result<(Tensor, GateTrace)> {
    if sequence.rank() != 3 {
        return Err(Error::shape(
            "unroll_forward",
            format!("sequence must be rank-3, got {:?}", sequence.shape()),
        ));
    }
    let (batch, steps, input_dim) = (
        sequence.shape()[0],
        sequence.shape()[1],
        sequence.shape()[2],
    );
    if steps == 0 {
        return Err(Error::InvalidArgument("unroll_forward: zero-length sequence".into()));
    }
    if input_dim != params.input_dim() {
        return Err(Error::shape(
            "unroll_forward",
            format!("input_dim {} vs params {}", input_dim, params.input_dim()),
        ));
    }
    let hidden = params.hidden_dim();
    if init.h.shape() != [batch, hidden] {
        return Err(Error::shape(
            "unroll_forward",
            format!("init state {:?} vs expected [{batch}, {hidden}]", init.h.shape()),
        ));
    }

    let mut out = Tensor::zeros(&[batch, steps, hidden]);
    match params {
        CellParams::Lstm(p) => {
            let mut state = init.clone();
            if state.c.is_none() {
                return Err(Error::InvalidArgument(
                    "unroll_forward: LSTM init state is missing the cell channel".into(),
                ));
            }
            let mut trace = LstmTrace { steps: Vec::with_capacity(steps) };
            for t in 0..steps {
                let x_t = sequence.step_slice(t);
                let (next, step_trace) = lstm_cell_forward(&x_t, &state, p)?;
                out.set_step_slice(t, &next.h);
                trace.steps.push(step_trace);
                state = next;
            }
            Ok((out, GateTrace::Lstm(trace)))
        }
        CellParams::Gru(p) => {
            let mut h = init.h.clone();
            let mut trace = GruTrace { steps: Vec::with_capacity(steps) };
            for t in 0..steps {
                let x_t = sequence.step_slice(t);
                let (next_h, step_trace) = gru_cell_forward(&x_t, &h, p)?;
                out.set_step_slice(t, &next_h);
                trace.steps.push(step_trace);
                h = next_h;
            }
            Ok((out, GateTrace::Gru(trace)))
        }
    }
}

/// Backpropagation through time.
///
/// `grad_hidden` is the loss gradient with respect to the full hidden
/// sequence (`[batch, steps, hidden]`; zero wherever the loss does not read
/// the hidden state). Returns gradients for every parameter (same layout as
/// `params`) and for the input sequence.
pub fn rnn_backward(
    trace: &GateTrace,
    grad_hidden: &Tensor,
    params: &CellParams,
) -> Result<(CellParams, Tensor)> {
    match (trace, params) {
        (GateTrace::Lstm(tr), CellParams::Lstm(p)) => {
            let (grads, dx) = lstm::lstm_backward(tr, grad_hidden, p)?;
            Ok((CellParams::Lstm(grads), dx))
        }
        (GateTrace::Gru(tr), CellParams::Gru(p)) => {
            let (grads, dx) = gru::gru_backward(tr, grad_hidden, p)?;
            Ok((CellParams::Gru(grads), dx))
        }
        _ => Err(Error::InvalidArgument(
            "rnn_backward: trace and parameter kinds do not match".into(),
        )),
    }
}

/// Trace pair for a bidirectional pass. The backward trace is recorded in the
/// reversed time axis of its own run.
#[derive(Clone, Debug)]
pub struct BidirTrace {
    pub fwd: GateTrace,
    pub bwd: GateTrace,
}

/// Bidirectional wrapper: one pass over the sequence, a second pass over the
/// time-reversed sequence, outputs re-reversed and concatenated on the
/// feature axis (`[batch, steps, 2*hidden]`).
pub fn bidirectional_forward(
    params_fwd: &CellParams,
    params_bwd: &CellParams,
    sequence: &Tensor,
) -> Result<(Tensor, BidirTrace)> {
    if params_fwd.hidden_dim() != params_bwd.hidden_dim() {
        return Err(Error::shape(
            "bidirectional_forward",
            format!(
                "hidden dims differ: {} vs {}",
                params_fwd.hidden_dim(),
                params_bwd.hidden_dim()
            ),
        ));
    }
    let batch = sequence.shape()[0];
    let (out_f, trace_f) = unroll_forward(params_fwd, sequence, &params_fwd.zero_state(batch))?;
    let reversed = sequence.reverse_time();
    let (out_b_rev, trace_b) = unroll_forward(params_bwd, &reversed, &params_bwd.zero_state(batch))?;
    let out_b = out_b_rev.reverse_time();
    let out = out_f.concat_features(&out_b)?;
    Ok((out, BidirTrace { fwd: trace_f, bwd: trace_b }))
}

/// Backward through the bidirectional wrapper.
///
/// `grad_out` is the gradient with respect to the concatenated output
/// `[batch, steps, 2*hidden]`. Returns (forward grads, backward grads,
/// input-sequence gradient).
pub fn bidirectional_backward(
    trace: &BidirTrace,
    grad_out: &Tensor,
    params_fwd: &CellParams,
    params_bwd: &CellParams,
) -> Result<(CellParams, CellParams, Tensor)> {
    let hidden = params_fwd.hidden_dim();
    let (batch, steps, width) = (
        grad_out.shape()[0],
        grad_out.shape()[1],
        grad_out.shape()[2],
    );
    if width != 2 * hidden {
        return Err(Error::shape(
            "bidirectional_backward",
            format!("grad width {width} vs 2*hidden {}", 2 * hidden),
        ));
    }
    let mut grad_f = Tensor::zeros(&[batch, steps, hidden]);
    let mut grad_b = Tensor::zeros(&[batch, steps, hidden]);
    for b in 0..batch {
        for t in 0..steps {
            for k in 0..hidden {
                grad_f.set3(b, t, k, grad_out.at3(b, t, k));
                grad_b.set3(b, t, k, grad_out.at3(b, t, hidden + k));
            }
        }
    }
    let (grads_f, dx_f) = rnn_backward(&trace.fwd, &grad_f, params_fwd)?;
    // The backward run saw the reversed sequence, so its hidden gradient must
    // be re-reversed into that run's own time axis, and its input gradient
    // reversed back afterwards.
    let (grads_b, dx_b_rev) = rnn_backward(&trace.bwd, &grad_b.reverse_time(), params_bwd)?;
    let dx = dx_f.add(&dx_b_rev.reverse_time())?;
    Ok((grads_f, grads_b, dx))
}
