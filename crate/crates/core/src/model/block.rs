use chainnet_nn::{ConvSpec, Graph, NodeId, ParamId, ParamSet, Scalar};

use crate::error::Result;

/// A convolution whose parameters live in the network's [`ParamSet`].
#[derive(Debug, Clone)]
pub struct ConvLayer {
    pub name: String,
    pub spec: ConvSpec,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl ConvLayer {
    pub(crate) fn apply<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        input: NodeId,
        params: &ParamSet<T>,
    ) -> Result<NodeId> {
        Ok(graph.conv2d(&self.name, input, self.spec, self.weight, self.bias, params)?)
    }
}

/// Two asymmetric-kernel flows joined by channel concatenation, a 1×1
/// rescaling convolution and a residual addition into each flow.
#[derive(Debug, Clone)]
pub struct ChainBlock {
    pub index: usize,
    /// Horizontal flow, 1×3 kernel, stride (1, 2).
    pub conv_1x3: ConvLayer,
    /// Vertical flow, 3×1 kernel, stride (1, 2), zero padded vertically.
    pub conv_3x1: ConvLayer,
    /// 2K → K depth rescale, stride (1, 1).
    pub conv_1x1: ConvLayer,
}

/// Node ids produced by one block, kept for tracing and tests.
#[derive(Debug, Clone, Copy)]
pub struct BlockOutputs {
    pub flow_h: NodeId,
    pub flow_v: NodeId,
    pub concat: NodeId,
    pub correction: NodeId,
    pub out_h: NodeId,
    pub out_v: NodeId,
}

impl ChainBlock {
    pub fn name(&self) -> String {
        format!("block{}", self.index + 1)
    }

    /// ```text
    /// f_h = relu(conv_1x3(in_h))      f_v = relu(conv_3x1(in_v))
    /// r   = relu(conv_1x1(concat(f_h, f_v)))
    /// out_h = f_h + r                 out_v = f_v + r
    /// ```
    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        input_h: NodeId,
        input_v: NodeId,
        params: &ParamSet<T>,
    ) -> Result<BlockOutputs> {
        let name = self.name();
        if graph.shape(input_h) != graph.shape(input_v) {
            let (h, v) = (graph.shape(input_h), graph.shape(input_v));
            return Err(crate::Error::config(
                &name,
                format!("flow inputs differ: horizontal {h}, vertical {v}"),
            ));
        }
        let h = self.conv_1x3.apply(graph, input_h, params)?;
        let flow_h = graph.relu(&format!("{name}.relu_h"), h);
        let v = self.conv_3x1.apply(graph, input_v, params)?;
        let flow_v = graph.relu(&format!("{name}.relu_v"), v);
        let concat = graph.depthcat(&format!("{name}.depthcat"), flow_h, flow_v)?;
        let r = self.conv_1x1.apply(graph, concat, params)?;
        let correction = graph.relu(&format!("{name}.relu_1x1"), r);
        let out_h = graph.add(&format!("{name}.out_h"), flow_h, correction)?;
        let out_v = graph.add(&format!("{name}.out_v"), flow_v, correction)?;
        Ok(BlockOutputs {
            flow_h,
            flow_v,
            concat,
            correction,
            out_h,
            out_v,
        })
    }
}
