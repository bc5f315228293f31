use super::GateParams;
use crate::numeric::{matmul, sigmoid, Tensor};
use crate::{Error, Result};

/// GRU parameters: reset, update and candidate gates.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub reset: GateParams,
    pub update: GateParams,
    pub candidate: GateParams,
}

impl GruParams {
    pub fn init(input_dim: usize, hidden: usize, rng: &mut crate::numeric::RngState) -> Result<Self> {
        Ok(GruParams {
            reset: GateParams::init(input_dim, hidden, rng)?,
            update: GateParams::init(input_dim, hidden, rng)?,
            candidate: GateParams::init(input_dim, hidden, rng)?,
        })
    }

    pub fn zeros_like(&self) -> Self {
        GruParams {
            reset: self.reset.zeros_like(),
            update: self.update.zeros_like(),
            candidate: self.candidate.zeros_like(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.reset.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.reset.hidden_dim()
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        [&self.reset, &self.update, &self.candidate]
            .into_iter()
            .flat_map(|g| [&g.w_x, &g.w_h, &g.b])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(9);
        for g in [&mut self.reset, &mut self.update, &mut self.candidate] {
            out.push(&mut g.w_x);
            out.push(&mut g.w_h);
            out.push(&mut g.b);
        }
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        ["reset", "update", "candidate"]
            .iter()
            .flat_map(|g| ["w_x", "w_h", "b"].iter().map(move |p| format!("{g}.{p}")))
            .collect()
    }
}

/// Per-step GRU trace.
#[derive(Clone, Debug)]
pub struct GruStepTrace {
    pub x: Tensor,
    pub h_prev: Tensor,
    pub pre_r: Tensor,
    pub r: Tensor,
    pub pre_z: Tensor,
    pub z: Tensor,
    /// `R . H_prev`, the reset-scaled state fed to the candidate.
    pub rh: Tensor,
    pub pre_h: Tensor,
    pub h_tilde: Tensor,
}

#[derive(Clone, Debug)]
pub struct GruTrace {
    pub steps: Vec<GruStepTrace>,
}

/// One GRU step:
///
/// ```text
/// R = sigmoid(x W_xr + h W_hr + b_r)          reset gate
/// Z = sigmoid(x W_xz + h W_hz + b_z)          update gate
/// H~ = tanh(x W_xh + (R . h) W_hh + b_h)      candidate state
/// H = Z . h_prev + (1 - Z) . H~               state update
/// ```
///
/// The update combines `Z` with the previous state (and `1 - Z` with the
/// candidate); callers relying on the opposite labelling must relabel
/// `Z -> 1 - Z`.
pub fn gru_cell_forward(
    x_t: &Tensor,
    h_prev: &Tensor,
    params: &GruParams,
) -> Result<(Tensor, GruStepTrace)> {
    if x_t.rank() != 2 || x_t.shape()[1] != params.input_dim() {
        return Err(Error::shape(
            "gru_cell_forward",
            format!("input {:?} vs input_dim {}", x_t.shape(), params.input_dim()),
        ));
    }
    if h_prev.shape() != [x_t.shape()[0], params.hidden_dim()] {
        return Err(Error::shape(
            "gru_cell_forward",
            format!(
                "state {:?} vs expected [{}, {}]",
                h_prev.shape(),
                x_t.shape()[0],
                params.hidden_dim()
            ),
        ));
    }

    let pre_r = params.reset.preactivation(x_t, h_prev)?;
    let r = pre_r.map(sigmoid);
    let pre_z = params.update.preactivation(x_t, h_prev)?;
    let z = pre_z.map(sigmoid);
    let rh = r.hadamard(h_prev)?;
    let pre_h = matmul(x_t, &params.candidate.w_x)?
        .add(&matmul(&rh, &params.candidate.w_h)?)?
        .add_bias_rows(&params.candidate.b)?;
    let h_tilde = pre_h.map(f64::tanh);
    let one_minus_z = z.map(|v| 1.0 - v);
    let h = z.hadamard(h_prev)?.add(&one_minus_z.hadamard(&h_tilde)?)?;

    let trace = GruStepTrace {
        x: x_t.clone(),
        h_prev: h_prev.clone(),
        pre_r,
        r,
        pre_z,
        z,
        rh,
        pre_h,
        h_tilde,
    };
    Ok((h, trace))
}

/// BPTT over a recorded GRU trace.
pub(super) fn gru_backward(
    trace: &GruTrace,
    grad_hidden: &Tensor,
    params: &GruParams,
) -> Result<(GruParams, Tensor)> {
    let steps = trace.steps.len();
    if grad_hidden.rank() != 3 || grad_hidden.shape()[1] != steps {
        return Err(Error::shape(
            "gru_backward",
            format!("grad_hidden {:?} vs {} traced steps", grad_hidden.shape(), steps),
        ));
    }
    let batch = grad_hidden.shape()[0];
    let hidden = params.hidden_dim();
    let input_dim = params.input_dim();
    if trace.steps[0].h_prev.shape() != [batch, hidden] {
        return Err(Error::InvalidArgument(
            "gru_backward: trace does not match parameters".into(),
        ));
    }

    let mut grads = params.zeros_like();
    let mut input_grads = Tensor::zeros(&[batch, steps, input_dim]);

    let wxr_t = params.reset.w_x.transpose();
    let whr_t = params.reset.w_h.transpose();
    let wxz_t = params.update.w_x.transpose();
    let whz_t = params.update.w_h.transpose();
    let wxh_t = params.candidate.w_x.transpose();
    let whh_t = params.candidate.w_h.transpose();

    let mut dh_next = Tensor::zeros(&[batch, hidden]);

    for t in (0..steps).rev() {
        let s = &trace.steps[t];
        let dh = grad_hidden.step_slice(t).add(&dh_next)?;

        // H = Z . h_prev + (1 - Z) . H~
        let dz = dh.hadamard(&s.h_prev.sub(&s.h_tilde)?)?;
        let dht = dh.hadamard(&s.z.map(|v| 1.0 - v))?;
        let mut dh_prev = dh.hadamard(&s.z)?;

        // Candidate: H~ = tanh(x W_xh + rh W_hh + b_h)
        let da_h = dht.hadamard(&s.h_tilde.map(|v| 1.0 - v * v))?;
        grads.candidate.w_x.add_assign(&matmul(&s.x.transpose(), &da_h)?)?;
        grads.candidate.w_h.add_assign(&matmul(&s.rh.transpose(), &da_h)?)?;
        grads.candidate.b.add_assign(&da_h.column_sums())?;

        let drh = matmul(&da_h, &whh_t)?;
        let dr = drh.hadamard(&s.h_prev)?;
        dh_prev.add_assign(&drh.hadamard(&s.r)?)?;

        let da_r = dr.hadamard(&s.r.map(|v| v * (1.0 - v)))?;
        let da_z = dz.hadamard(&s.z.map(|v| v * (1.0 - v)))?;

        let x_t = s.x.transpose();
        let h_t = s.h_prev.transpose();
        grads.reset.w_x.add_assign(&matmul(&x_t, &da_r)?)?;
        grads.reset.w_h.add_assign(&matmul(&h_t, &da_r)?)?;
        grads.reset.b.add_assign(&da_r.column_sums())?;
        grads.update.w_x.add_assign(&matmul(&x_t, &da_z)?)?;
        grads.update.w_h.add_assign(&matmul(&h_t, &da_z)?)?;
        grads.update.b.add_assign(&da_z.column_sums())?;

        dh_prev.add_assign(&matmul(&da_r, &whr_t)?)?;
        dh_prev.add_assign(&matmul(&da_z, &whz_t)?)?;
        dh_next = dh_prev;

        let mut dx = matmul(&da_r, &wxr_t)?;
        dx.add_assign(&matmul(&da_z, &wxz_t)?)?;
        dx.add_assign(&matmul(&da_h, &wxh_t)?)?;
        input_grads.set_step_slice(t, &dx);
    }

    Ok((grads, input_grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngState;

    #[test]
    fn saturated_update_gate_copies_state_bitwise() {
        let mut rng = RngState::new(31);
        let mut p = GruParams::init(1, 3, &mut rng).unwrap();
        p.update.b = Tensor::filled(&[3], 500.0);
        let h_prev = Tensor::new(&[2, 3], vec![0.7, -0.2, 1.4, 0.0, -0.9, 0.3]).unwrap();
        let x = Tensor::new(&[2, 1], vec![0.5, -1.0]).unwrap();
        let (h, trace) = gru_cell_forward(&x, &h_prev, &p).unwrap();
        assert!(trace.z.data().iter().all(|&v| v == 1.0));
        // Z = 1 exactly, so H = 1*h_prev + 0*H~ must be bit-for-bit equal.
        assert_eq!(h.data(), h_prev.data());
    }

    #[test]
    fn degenerate_zero_path_gives_zero_state() {
        // Z = 0, R = 0, zero input and zero candidate bias: H = tanh(0) = 0.
        let mut rng = RngState::new(32);
        let mut p = GruParams::init(1, 2, &mut rng).unwrap();
        p.update.b = Tensor::filled(&[2], -500.0);
        p.reset.b = Tensor::filled(&[2], -500.0);
        p.candidate.b = Tensor::zeros(&[2]);
        // Zero input removes the x path through every gate.
        let x = Tensor::new(&[1, 1], vec![0.0]).unwrap();
        let h_prev = Tensor::new(&[1, 2], vec![0.4, -0.6]).unwrap();
        let (h, _) = gru_cell_forward(&x, &h_prev, &p).unwrap();
        assert!(h.data().iter().all(|&v| v == 0.0), "{:?}", h.data());
    }

    #[test]
    fn gate_activations_stay_in_range() {
        let mut rng = RngState::new(33);
        let p = GruParams::init(2, 4, &mut rng).unwrap();
        let mut h = Tensor::zeros(&[2, 4]);
        for step in 0..8 {
            let data = (0..4).map(|k| ((step * 3 + k) as f64 * 0.73).cos() * 2.5).collect();
            let x = Tensor::new(&[2, 2], data).unwrap();
            let (next, trace) = gru_cell_forward(&x, &h, &p).unwrap();
            for g in [&trace.r, &trace.z] {
                assert!(g.data().iter().all(|&v| v > 0.0 && v < 1.0));
            }
            assert!(trace.h_tilde.data().iter().all(|&v| v > -1.0 && v < 1.0));
            h = next;
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut rng = RngState::new(34);
        let p = GruParams::init(2, 3, &mut rng).unwrap();
        let x = Tensor::new(&[1, 3], vec![0.0; 3]).unwrap();
        let h = Tensor::zeros(&[1, 3]);
        assert!(gru_cell_forward(&x, &h, &p).is_err());
    }
}
