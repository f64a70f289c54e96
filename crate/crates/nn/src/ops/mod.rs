//! Layer kernels. Each layer is a forward function plus a backward function
//! that consumes the upstream gradient; [`crate::Graph`] wires them together.

mod activation;
mod conv;
mod dense;
mod loss;
mod pool;
mod structural;

pub use activation::{dropout_backward, dropout_forward, relu_backward, relu_forward, DropoutMode};
pub use conv::{conv2d, conv2d_backward, conv2d_forward, ConvGrads, ConvSpec, Padding};
pub use dense::{fully_connected, fully_connected_backward, fully_connected_forward, FcGrads};
pub use loss::{cross_entropy_loss, softmax, softmax_cross_entropy, LOG_FLOOR};
pub use pool::{
    global_avgpool, global_avgpool_backward, maxpool, maxpool_backward, maxpool_forward, PoolSpec,
};
pub use structural::{add_elementwise, depthcat, depthcat_split};

/// Output extent and leading pad along one spatial axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct AxisWindow {
    pub output: usize,
    pub pad_before: usize,
}

/// Window placement for one axis. `same_ceil` yields `ceil(input / stride)`
/// outputs with the total pad split as evenly as possible, extra pad after.
pub(crate) fn axis_window(
    input: usize,
    kernel: usize,
    stride: usize,
    same_ceil: bool,
) -> Option<AxisWindow> {
    if kernel == 0 || stride == 0 || input == 0 {
        return None;
    }
    if same_ceil {
        let output = input.div_ceil(stride);
        let needed = (output - 1) * stride + kernel;
        let pad_total = needed.saturating_sub(input);
        Some(AxisWindow {
            output,
            pad_before: pad_total / 2,
        })
    } else if kernel <= input {
        Some(AxisWindow {
            output: (input - kernel) / stride + 1,
            pad_before: 0,
        })
    } else {
        None
    }
}
