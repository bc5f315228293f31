//! Minimal dense-array arithmetic, activations, seeded initialization and a
//! finite-difference gradient oracle.
//!
//! Everything is `f64`: the series involved are small and the gradient checks
//! that gate every learned layer need the precision headroom.

mod gradcheck;
mod rng;
mod tensor;

pub use gradcheck::finite_diff_grad;
pub use rng::{init_weights, InitScheme, RngState};
pub use tensor::{activation, matmul, Activation, Tensor};

pub(crate) use tensor::sigmoid;
