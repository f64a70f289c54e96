//! A small reverse-mode differentiation engine covering exactly the layers a
//! Chain-Net classifier needs: strided 2-D convolution, ReLU, max and global
//! average pooling, channel concatenation, element-wise addition, fully
//! connected layers, inverted dropout and a fused softmax/cross-entropy head.
//!
//! Tensors are dense NHWC arrays generic over `f32` (training) and `f64`
//! (gradient verification).

pub mod checkpoint;
mod error;
pub mod graph;
pub mod init;
pub mod ops;
pub mod optim;
pub mod param;
pub mod scalar;
pub mod tensor;

pub use error::{NnError, Result};
pub use graph::{Graph, NodeId};
pub use ops::{ConvSpec, DropoutMode, Padding, PoolSpec};
pub use optim::Sgd;
pub use param::{ParamId, ParamRole, ParamSet, Parameter};
pub use scalar::{Precision, Scalar};
pub use tensor::{Shape, Tensor};
