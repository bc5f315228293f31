//! The six forecaster configurations compared in this project, behind one
//! trainable-model interface, plus their on-disk parameter format.
//!
//! Every model consumes a window `[batch, input_len, 1]` of the scaled
//! series and emits the full multi-step forecast `[batch, horizon]` from one
//! dense head (direct multi-output decoding).

mod birnn_model;
mod cnn_model;
mod io;
mod rnn_model;
mod tcn_model;

pub use birnn_model::{BiRnnForecaster, BiRnnTrace};
pub use cnn_model::{CnnForecaster, CnnTrace};
pub use io::{load_model, save_model, ModelMeta, FORMAT_VERSION};
pub use rnn_model::{RnnForecaster, RnnTrace};
pub use tcn_model::{TcnForecaster, TcnTrace};

use crate::cnn::TcnSpec;
use crate::numeric::{RngState, Tensor};
use crate::rnn::CellKind;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which of the six model configurations to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    Gru,
    BiLstm,
    BiGru,
    Cnn,
    Tcn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Lstm,
        ModelKind::Gru,
        ModelKind::BiLstm,
        ModelKind::BiGru,
        ModelKind::Cnn,
        ModelKind::Tcn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
            ModelKind::BiLstm => "bilstm",
            ModelKind::BiGru => "bigru",
            ModelKind::Cnn => "cnn",
            ModelKind::Tcn => "tcn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(ModelKind::Lstm),
            "gru" => Ok(ModelKind::Gru),
            "bilstm" => Ok(ModelKind::BiLstm),
            "bigru" => Ok(ModelKind::BiGru),
            "cnn" => Ok(ModelKind::Cnn),
            "tcn" => Ok(ModelKind::Tcn),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind '{other}' (expected lstm|gru|bilstm|bigru|cnn|tcn)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters for any of the six models. Defaults follow the
/// experiment configuration: 10-step input, 10-step horizon, 50 recurrent
/// units, CNN with 16 filters of kernel 3, TCN with kernel 3, 4 filters and
/// dilations 1..32.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input_len: usize,
    pub horizon: usize,
    pub units: usize,
    pub cnn_filters: usize,
    pub cnn_kernel: usize,
    pub cnn_pool: usize,
    pub tcn: TcnSpec,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            input_len: 10,
            horizon: 10,
            units: 50,
            cnn_filters: 16,
            cnn_kernel: 3,
            cnn_pool: 2,
            tcn: TcnSpec::standard(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.horizon == 0 {
            return Err(Error::InvalidArgument(
                "model config: input_len and horizon must be positive".into(),
            ));
        }
        if self.units == 0 || self.cnn_filters == 0 || self.cnn_kernel == 0 || self.cnn_pool == 0 {
            return Err(Error::InvalidArgument(
                "model config: units, filters, kernel and pool size must be positive".into(),
            ));
        }
        if self.cnn_pool > self.input_len {
            return Err(Error::InvalidArgument(format!(
                "model config: pool size {} exceeds input length {}",
                self.cnn_pool, self.input_len
            )));
        }
        self.tcn.validate()
    }
}

/// A model plus everything its backward pass needs from the forward pass.
pub trait TrainableModel {
    type Trace;

    fn input_len(&self) -> usize;
    fn horizon(&self) -> usize;

    /// Maps `[batch, input_len, 1]` to `[batch, horizon]`, recording a trace.
    /// `rng` is consumed only by dropout and only when `training` is set.
    fn forward(&self, input: &Tensor, rng: &mut RngState, training: bool)
        -> Result<(Tensor, Self::Trace)>;

    /// Gradients for every parameter tensor, aligned with
    /// [`TrainableModel::param_tensors`].
    fn backward(&self, trace: &Self::Trace, grad_out: &Tensor) -> Result<Vec<Tensor>>;

    fn param_tensors(&self) -> Vec<&Tensor>;
    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor>;

    /// Inference forward (no dropout, no trace).
    fn predict(&self, input: &Tensor) -> Result<Tensor> {
        let mut rng = RngState::new(0);
        Ok(self.forward(input, &mut rng, false)?.0)
    }
}

/// Any of the six forecasters, dispatching [`TrainableModel`] by kind.
#[derive(Clone, Debug)]
pub enum AnyModel {
    Lstm(RnnForecaster),
    Gru(RnnForecaster),
    BiLstm(BiRnnForecaster),
    BiGru(BiRnnForecaster),
    Cnn(CnnForecaster),
    Tcn(TcnForecaster),
}

/// Trace for [`AnyModel`].
pub enum AnyTrace {
    Rnn(RnnTrace),
    BiRnn(BiRnnTrace),
    Cnn(CnnTrace),
    Tcn(TcnTrace),
}

impl AnyModel {
    /// Builds a freshly initialized model of the configured kind.
    pub fn init(config: &ModelConfig, rng: &mut RngState) -> Result<Self> {
        config.validate()?;
        Ok(match config.kind {
            ModelKind::Lstm => AnyModel::Lstm(RnnForecaster::init(
                CellKind::Lstm,
                config.input_len,
                config.units,
                config.horizon,
                rng,
            )?),
            ModelKind::Gru => AnyModel::Gru(RnnForecaster::init(
                CellKind::Gru,
                config.input_len,
                config.units,
                config.horizon,
                rng,
            )?),
            ModelKind::BiLstm => AnyModel::BiLstm(BiRnnForecaster::init(
                CellKind::Lstm,
                config.input_len,
                config.units,
                config.horizon,
                rng,
            )?),
            ModelKind::BiGru => AnyModel::BiGru(BiRnnForecaster::init(
                CellKind::Gru,
                config.input_len,
                config.units,
                config.horizon,
                rng,
            )?),
            ModelKind::Cnn => AnyModel::Cnn(CnnForecaster::init(
                config.input_len,
                config.cnn_filters,
                config.cnn_kernel,
                config.cnn_pool,
                config.horizon,
                rng,
            )?),
            ModelKind::Tcn => AnyModel::Tcn(TcnForecaster::init(
                config.input_len,
                &config.tcn,
                config.horizon,
                rng,
            )?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Lstm(_) => ModelKind::Lstm,
            AnyModel::Gru(_) => ModelKind::Gru,
            AnyModel::BiLstm(_) => ModelKind::BiLstm,
            AnyModel::BiGru(_) => ModelKind::BiGru,
            AnyModel::Cnn(_) => ModelKind::Cnn,
            AnyModel::Tcn(_) => ModelKind::Tcn,
        }
    }

    /// Stable parameter names aligned with [`TrainableModel::param_tensors`].
    pub fn param_names(&self) -> Vec<String> {
        match self {
            AnyModel::Lstm(m) | AnyModel::Gru(m) => m.param_names(),
            AnyModel::BiLstm(m) | AnyModel::BiGru(m) => m.param_names(),
            AnyModel::Cnn(m) => m.param_names(),
            AnyModel::Tcn(m) => m.param_names(),
        }
    }
}

impl TrainableModel for AnyModel {
    type Trace = AnyTrace;

    fn input_len(&self) -> usize {
        match self {
            AnyModel::Lstm(m) | AnyModel::Gru(m) => m.input_len(),
            AnyModel::BiLstm(m) | AnyModel::BiGru(m) => m.input_len(),
            AnyModel::Cnn(m) => m.input_len(),
            AnyModel::Tcn(m) => m.input_len(),
        }
    }

    fn horizon(&self) -> usize {
        match self {
            AnyModel::Lstm(m) | AnyModel::Gru(m) => m.horizon(),
            AnyModel::BiLstm(m) | AnyModel::BiGru(m) => m.horizon(),
            AnyModel::Cnn(m) => m.horizon(),
            AnyModel::Tcn(m) => m.horizon(),
        }
    }

    fn forward(
        &self,
        input: &Tensor,
        rng: &mut RngState,
        training: bool,
    ) -> Result<(Tensor, AnyTrace)> {
        match self {
            AnyModel::Lstm(m) | AnyModel::Gru(m) => {
                let (out, tr) = m.forward(input, rng, training)?;
                Ok((out, AnyTrace::Rnn(tr)))
            }
            AnyModel::BiLstm(m) | AnyModel::BiGru(m) => {
                let (out, tr) = m.forward(input, rng, training)?;
                Ok((out, AnyTrace::BiRnn(tr)))
            }
            AnyModel::Cnn(m) => {
                let (out, tr) = m.forward(input, rng, training)?;
                Ok((out, AnyTrace::Cnn(tr)))
            }
            AnyModel::Tcn(m) => {
                let (out, tr) = m.forward(input, rng, training)?;
                Ok((out, AnyTrace::Tcn(tr)))
            }
        }
    }

    fn backward(&self, trace: &AnyTrace, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        match (self, trace) {
            (AnyModel::Lstm(m) | AnyModel::Gru(m), AnyTrace::Rnn(tr)) => m.backward(tr, grad_out),
            (AnyModel::BiLstm(m) | AnyModel::BiGru(m), AnyTrace::BiRnn(tr)) => {
                m.backward(tr, grad_out)
            }
            (AnyModel::Cnn(m), AnyTrace::Cnn(tr)) => m.backward(tr, grad_out),
            (AnyModel::Tcn(m), AnyTrace::Tcn(tr)) => m.backward(tr, grad_out),
            _ => Err(Error::InvalidArgument(
                "backward: trace does not belong to this model".into(),
            )),
        }
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        match self {
            AnyModel::Lstm(m) | AnyModel::Gru(m) => m.param_tensors(),
            AnyModel::BiLstm(m) | AnyModel::BiGru(m) => m.param_tensors(),
            AnyModel::Cnn(m) => m.param_tensors(),
            AnyModel::Tcn(m) => m.param_tensors(),
        }
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            AnyModel::Lstm(m) | AnyModel::Gru(m) => m.param_tensors_mut(),
            AnyModel::BiLstm(m) | AnyModel::BiGru(m) => m.param_tensors_mut(),
            AnyModel::Cnn(m) => m.param_tensors_mut(),
            AnyModel::Tcn(m) => m.param_tensors_mut(),
        }
    }
}
