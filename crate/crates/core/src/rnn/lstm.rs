use super::{CellState, GateParams};
use crate::numeric::{matmul, Tensor};
use crate::{Error, Result};

/// LSTM parameters: one [`GateParams`] per gate. The forget, input,
/// candidate and output gates each own distinct weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub forget: GateParams,
    pub input: GateParams,
    pub candidate: GateParams,
    pub output: GateParams,
}

impl LstmParams {
    pub fn init(input_dim: usize, hidden: usize, rng: &mut crate::numeric::RngState) -> Result<Self> {
        Ok(LstmParams {
            forget: GateParams::init(input_dim, hidden, rng)?,
            input: GateParams::init(input_dim, hidden, rng)?,
            candidate: GateParams::init(input_dim, hidden, rng)?,
            output: GateParams::init(input_dim, hidden, rng)?,
        })
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams {
            forget: self.forget.zeros_like(),
            input: self.input.zeros_like(),
            candidate: self.candidate.zeros_like(),
            output: self.output.zeros_like(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.forget.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.forget.hidden_dim()
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [&self.forget, &self.input, &self.candidate, &self.output]
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.gates()
            .into_iter()
            .flat_map(|g| [&g.w_x, &g.w_h, &g.b])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(12);
        for g in [
            &mut self.forget,
            &mut self.input,
            &mut self.candidate,
            &mut self.output,
        ] {
            out.push(&mut g.w_x);
            out.push(&mut g.w_h);
            out.push(&mut g.b);
        }
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        ["forget", "input", "candidate", "output"]
            .iter()
            .flat_map(|g| {
                ["w_x", "w_h", "b"].iter().map(move |p| format!("{g}.{p}"))
            })
            .collect()
    }
}

/// Everything one LSTM step records for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmStepTrace {
    pub x: Tensor,
    pub h_prev: Tensor,
    pub c_prev: Tensor,
    pub pre_f: Tensor,
    pub f: Tensor,
    pub pre_i: Tensor,
    pub i: Tensor,
    pub pre_c: Tensor,
    pub c_tilde: Tensor,
    pub pre_o: Tensor,
    pub o: Tensor,
    pub c: Tensor,
    pub tanh_c: Tensor,
}

/// Full-sequence trace, one record per unrolled step.
#[derive(Clone, Debug)]
pub struct LstmTrace {
    pub steps: Vec<LstmStepTrace>,
}

/// One LSTM step:
///
/// ```text
/// F = sigmoid(x W_xf + h W_hf + b_f)        forget gate
/// I = sigmoid(x W_xi + h W_hi + b_i)        input gate
/// C~ = tanh(x W_xc + h W_hc + b_c)          candidate cell
/// C = F . C_prev + I . C~                   cell update
/// O = sigmoid(x W_xo + h W_ho + b_o)        output gate
/// H = O . tanh(C)                           hidden update
/// ```
pub fn lstm_cell_forward(
    x_t: &Tensor,
    state: &CellState,
    params: &LstmParams,
) -> Result<(CellState, LstmStepTrace)> {
    let c_prev = state.c.as_ref().ok_or_else(|| {
        Error::InvalidArgument("lstm_cell_forward: state has no cell channel".into())
    })?;
    if x_t.rank() != 2 || x_t.shape()[1] != params.input_dim() {
        return Err(Error::shape(
            "lstm_cell_forward",
            format!("input {:?} vs input_dim {}", x_t.shape(), params.input_dim()),
        ));
    }
    if state.h.shape() != [x_t.shape()[0], params.hidden_dim()] {
        return Err(Error::shape(
            "lstm_cell_forward",
            format!(
                "state {:?} vs expected [{}, {}]",
                state.h.shape(),
                x_t.shape()[0],
                params.hidden_dim()
            ),
        ));
    }

    let pre_f = params.forget.preactivation(x_t, &state.h)?;
    let f = pre_f.map(crate::numeric::sigmoid);
    let pre_i = params.input.preactivation(x_t, &state.h)?;
    let i = pre_i.map(crate::numeric::sigmoid);
    let pre_c = params.candidate.preactivation(x_t, &state.h)?;
    let c_tilde = pre_c.map(f64::tanh);
    let c = f.hadamard(c_prev)?.add(&i.hadamard(&c_tilde)?)?;
    let pre_o = params.output.preactivation(x_t, &state.h)?;
    let o = pre_o.map(crate::numeric::sigmoid);
    let tanh_c = c.map(f64::tanh);
    let h = o.hadamard(&tanh_c)?;

    let trace = LstmStepTrace {
        x: x_t.clone(),
        h_prev: state.h.clone(),
        c_prev: c_prev.clone(),
        pre_f,
        f,
        pre_i,
        i,
        pre_c,
        c_tilde,
        pre_o,
        o,
        c: c.clone(),
        tanh_c,
    };
    Ok((CellState { h, c: Some(c) }, trace))
}

/// BPTT over a recorded LSTM trace. `grad_hidden` is `[batch, steps, hidden]`.
pub(super) fn lstm_backward(
    trace: &LstmTrace,
    grad_hidden: &Tensor,
    params: &LstmParams,
) -> Result<(LstmParams, Tensor)> {
    let steps = trace.steps.len();
    if grad_hidden.rank() != 3 || grad_hidden.shape()[1] != steps {
        return Err(Error::shape(
            "lstm_backward",
            format!("grad_hidden {:?} vs {} traced steps", grad_hidden.shape(), steps),
        ));
    }
    let batch = grad_hidden.shape()[0];
    let hidden = params.hidden_dim();
    let input_dim = params.input_dim();
    if trace.steps[0].h_prev.shape() != [batch, hidden] {
        return Err(Error::InvalidArgument(
            "lstm_backward: trace does not match parameters".into(),
        ));
    }

    let mut grads = params.zeros_like();
    let mut input_grads = Tensor::zeros(&[batch, steps, input_dim]);

    // Hoist the recurrent/input weight transposes out of the time loop.
    let wt = |g: &GateParams| (g.w_x.transpose(), g.w_h.transpose());
    let (wxf_t, whf_t) = wt(&params.forget);
    let (wxi_t, whi_t) = wt(&params.input);
    let (wxc_t, whc_t) = wt(&params.candidate);
    let (wxo_t, who_t) = wt(&params.output);

    let mut dh_next = Tensor::zeros(&[batch, hidden]);
    let mut dc_next = Tensor::zeros(&[batch, hidden]);

    for t in (0..steps).rev() {
        let s = &trace.steps[t];
        let dh = grad_hidden.step_slice(t).add(&dh_next)?;

        // H = O . tanh(C)
        let d_o = dh.hadamard(&s.tanh_c)?;
        let dtanh_c = dh.hadamard(&s.o)?;
        let dc = dc_next.add(&dtanh_c.hadamard(&s.tanh_c.map(|v| 1.0 - v * v))?)?;

        // C = F . C_prev + I . C~
        let d_f = dc.hadamard(&s.c_prev)?;
        let d_i = dc.hadamard(&s.c_tilde)?;
        let d_ct = dc.hadamard(&s.i)?;
        dc_next = dc.hadamard(&s.f)?;

        // Through the activations to the pre-activations.
        let da_f = d_f.hadamard(&s.f.map(|v| v * (1.0 - v)))?;
        let da_i = d_i.hadamard(&s.i.map(|v| v * (1.0 - v)))?;
        let da_c = d_ct.hadamard(&s.c_tilde.map(|v| 1.0 - v * v))?;
        let da_o = d_o.hadamard(&s.o.map(|v| v * (1.0 - v)))?;

        let x_t = s.x.transpose();
        let h_t = s.h_prev.transpose();
        for (gate_grads, da) in [
            (&mut grads.forget, &da_f),
            (&mut grads.input, &da_i),
            (&mut grads.candidate, &da_c),
            (&mut grads.output, &da_o),
        ] {
            gate_grads.w_x.add_assign(&matmul(&x_t, da)?)?;
            gate_grads.w_h.add_assign(&matmul(&h_t, da)?)?;
            gate_grads.b.add_assign(&da.column_sums())?;
        }

        let mut dh_prev = matmul(&da_f, &whf_t)?;
        dh_prev.add_assign(&matmul(&da_i, &whi_t)?)?;
        dh_prev.add_assign(&matmul(&da_c, &whc_t)?)?;
        dh_prev.add_assign(&matmul(&da_o, &who_t)?)?;
        dh_next = dh_prev;

        let mut dx = matmul(&da_f, &wxf_t)?;
        dx.add_assign(&matmul(&da_i, &wxi_t)?)?;
        dx.add_assign(&matmul(&da_c, &wxc_t)?)?;
        dx.add_assign(&matmul(&da_o, &wxo_t)?)?;
        input_grads.set_step_slice(t, &dx);
    }

    Ok((grads, input_grads))
}
