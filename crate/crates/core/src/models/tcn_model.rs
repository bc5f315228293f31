use super::TrainableModel;
use crate::cnn::{
    tcn_trunk_backward, tcn_trunk_forward, BlockTrace, ResidualBlockParams, TcnSpec,
};
use crate::numeric::{RngState, Tensor};
use crate::rnn::DenseHead;
use crate::{Error, Result};

/// TCN forecaster: a stack of residual blocks (one per dilation), with the
/// final time step's channel vector feeding the dense head.
#[derive(Clone, Debug)]
pub struct TcnForecaster {
    pub spec: TcnSpec,
    pub blocks: Vec<ResidualBlockParams>,
    pub head: DenseHead,
    input_len: usize,
}

pub struct TcnTrace {
    blocks: Vec<BlockTrace>,
    features: Tensor,
    steps: usize,
}

impl TcnForecaster {
    pub fn init(
        input_len: usize,
        spec: &TcnSpec,
        horizon: usize,
        rng: &mut RngState,
    ) -> Result<Self> {
        spec.validate()?;
        let mut blocks = Vec::with_capacity(spec.dilations.len());
        let mut in_ch = 1;
        for _ in &spec.dilations {
            blocks.push(ResidualBlockParams::init(spec.kernel_size, in_ch, spec.filters, rng)?);
            in_ch = spec.filters;
        }
        Ok(TcnForecaster {
            spec: spec.clone(),
            blocks,
            head: DenseHead::init(spec.filters, horizon, rng)?,
            input_len,
        })
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, block) in self.blocks.iter().enumerate() {
            for conv in ["conv1", "conv2"] {
                for p in ["v", "g", "b"] {
                    names.push(format!("block{i}.{conv}.{p}"));
                }
            }
            if block.matcher.is_some() {
                names.push(format!("block{i}.matcher.w"));
                names.push(format!("block{i}.matcher.b"));
            }
        }
        names.push("head.w".into());
        names.push("head.b".into());
        names
    }

    fn push_block_tensors<'a>(block: &'a ResidualBlockParams, out: &mut Vec<&'a Tensor>) {
        out.push(&block.conv1.v);
        out.push(&block.conv1.g);
        out.push(&block.conv1.b);
        out.push(&block.conv2.v);
        out.push(&block.conv2.g);
        out.push(&block.conv2.b);
        if let Some(m) = &block.matcher {
            out.push(&m.w);
            out.push(&m.b);
        }
    }
}

impl TrainableModel for TcnForecaster {
    type Trace = TcnTrace;

    fn input_len(&self) -> usize {
        self.input_len
    }

    fn horizon(&self) -> usize {
        self.head.horizon()
    }

    fn forward(
        &self,
        input: &Tensor,
        rng: &mut RngState,
        training: bool,
    ) -> Result<(Tensor, TcnTrace)> {
        if input.rank() != 3 || input.shape()[1] != self.input_len || input.shape()[2] != 1 {
            return Err(Error::shape(
                "tcn_forecaster",
                format!("input {:?} vs expected [batch, {}, 1]", input.shape(), self.input_len),
            ));
        }
        let (trunk, blocks) = tcn_trunk_forward(input, &self.spec, &self.blocks, rng, training)?;
        let features = trunk.step_slice(self.input_len - 1);
        let out = self.head.forward(&features)?;
        Ok((out, TcnTrace { blocks, features, steps: self.input_len }))
    }

    fn backward(&self, trace: &TcnTrace, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        let (dw_head, db_head, dfeat) = self.head.backward(&trace.features, grad_out)?;
        let batch = grad_out.shape()[0];
        let mut grad_trunk = Tensor::zeros(&[batch, trace.steps, self.spec.filters]);
        grad_trunk.set_step_slice(trace.steps - 1, &dfeat);
        let (block_grads, _dx) = tcn_trunk_backward(&trace.blocks, &self.blocks, &grad_trunk)?;

        let mut grads = Vec::new();
        for bg in &block_grads {
            grads.push(bg.conv1.v.clone());
            grads.push(bg.conv1.g.clone());
            grads.push(bg.conv1.b.clone());
            grads.push(bg.conv2.v.clone());
            grads.push(bg.conv2.g.clone());
            grads.push(bg.conv2.b.clone());
            if let Some(m) = &bg.matcher {
                grads.push(m.w.clone());
                grads.push(m.b.clone());
            }
        }
        grads.push(dw_head);
        grads.push(db_head);
        Ok(grads)
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        let mut v = Vec::new();
        for block in &self.blocks {
            Self::push_block_tensors(block, &mut v);
        }
        v.push(&self.head.w);
        v.push(&self.head.b);
        v
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v: Vec<&mut Tensor> = Vec::new();
        for block in &mut self.blocks {
            v.push(&mut block.conv1.v);
            v.push(&mut block.conv1.g);
            v.push(&mut block.conv1.b);
            v.push(&mut block.conv2.v);
            v.push(&mut block.conv2.g);
            v.push(&mut block.conv2.b);
            if let Some(m) = &mut block.matcher {
                v.push(&mut m.w);
                v.push(&mut m.b);
            }
        }
        v.push(&mut self.head.w);
        v.push(&mut self.head.b);
        v
    }
}
