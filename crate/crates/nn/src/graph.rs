//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every layer applied during a forward pass. Calling
//! [`Graph::backward`] walks the tape in reverse, routing gradients to
//! intermediate nodes and accumulating parameter gradients into a
//! [`ParamSet`]. One graph serves one forward/backward pass and is then
//! dropped; parameters live outside it.

use crate::error::{NnError, Result};
use crate::ops::{self, ConvSpec, DropoutMode, PoolSpec};
use crate::param::{ParamId, ParamSet};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op<T> {
    Input {
        requires_grad: bool,
    },
    Conv {
        input: NodeId,
        spec: ConvSpec,
        weight: ParamId,
        bias: ParamId,
    },
    Relu {
        input: NodeId,
    },
    MaxPool {
        input: NodeId,
        argmax: Vec<usize>,
    },
    GlobalAvgPool {
        input: NodeId,
    },
    DepthCat {
        a: NodeId,
        b: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    FullyConnected {
        input: NodeId,
        weight: ParamId,
        bias: ParamId,
    },
    Dropout {
        input: NodeId,
        mask: Option<Vec<T>>,
    },
}

#[derive(Debug)]
struct Node<T> {
    name: String,
    value: Tensor<T>,
    op: Op<T>,
}

#[derive(Debug)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, name: &str, value: Tensor<T>, op: Op<T>) -> NodeId {
        self.nodes.push(Node {
            name: name.to_string(),
            value,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> Shape {
        self.nodes[id.0].value.shape()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Ids of all recorded nodes in creation order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gradient of a node after [`Graph::backward`], if it was reached.
    pub fn grad(&self, id: NodeId) -> Option<&[T]> {
        self.nodes[id.0].value.grad()
    }

    /// `(name, shape)` of every node in recording order.
    pub fn trace(&self) -> Vec<(String, Shape)> {
        self.nodes
            .iter()
            .map(|n| (n.name.clone(), n.value.shape()))
            .collect()
    }

    /// Differentiable leaf; its gradient is available after backward.
    pub fn input(&mut self, name: &str, value: Tensor<T>) -> NodeId {
        self.push(
            name,
            value,
            Op::Input {
                requires_grad: true,
            },
        )
    }

    /// Constant leaf (e.g. a batch of frames); no gradient is computed for it.
    pub fn constant(&mut self, name: &str, value: Tensor<T>) -> NodeId {
        self.push(
            name,
            value,
            Op::Input {
                requires_grad: false,
            },
        )
    }

    pub fn conv2d(
        &mut self,
        name: &str,
        input: NodeId,
        spec: ConvSpec,
        weight: ParamId,
        bias: ParamId,
        params: &ParamSet<T>,
    ) -> Result<NodeId> {
        let out = ops::conv2d_forward(
            self.value(input),
            &spec,
            &params.get(weight).value,
            &params.get(bias).value,
            name,
        )?;
        Ok(self.push(
            name,
            out,
            Op::Conv {
                input,
                spec,
                weight,
                bias,
            },
        ))
    }

    pub fn relu(&mut self, name: &str, input: NodeId) -> NodeId {
        let out = ops::relu_forward(self.value(input));
        self.push(name, out, Op::Relu { input })
    }

    pub fn maxpool(&mut self, name: &str, input: NodeId, spec: PoolSpec) -> Result<NodeId> {
        let (out, argmax) = ops::maxpool_forward(self.value(input), &spec, name)?;
        Ok(self.push(name, out, Op::MaxPool { input, argmax }))
    }

    pub fn global_avgpool(&mut self, name: &str, input: NodeId) -> NodeId {
        let out = ops::global_avgpool(self.value(input));
        self.push(name, out, Op::GlobalAvgPool { input })
    }

    pub fn depthcat(&mut self, name: &str, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = ops::depthcat(self.value(a), self.value(b)).map_err(|e| rename(e, name))?;
        Ok(self.push(name, out, Op::DepthCat { a, b }))
    }

    pub fn add(&mut self, name: &str, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out =
            ops::add_elementwise(self.value(a), self.value(b)).map_err(|e| rename(e, name))?;
        Ok(self.push(name, out, Op::Add { a, b }))
    }

    pub fn fully_connected(
        &mut self,
        name: &str,
        input: NodeId,
        weight: ParamId,
        bias: ParamId,
        params: &ParamSet<T>,
    ) -> Result<NodeId> {
        let out = ops::fully_connected_forward(
            self.value(input),
            &params.get(weight).value,
            &params.get(bias).value,
            name,
        )?;
        Ok(self.push(
            name,
            out,
            Op::FullyConnected {
                input,
                weight,
                bias,
            },
        ))
    }

    pub fn dropout(
        &mut self,
        name: &str,
        input: NodeId,
        ratio: f64,
        mode: DropoutMode,
    ) -> Result<NodeId> {
        let (out, mask) =
            ops::dropout_forward(self.value(input), ratio, mode).map_err(|e| rename(e, name))?;
        Ok(self.push(name, out, Op::Dropout { input, mask }))
    }

    /// Back-propagates `seed` (the gradient of the objective with respect to
    /// `output`) through the tape. Parameter gradients are *added* to
    /// `params`; intermediate gradients are kept on the nodes.
    pub fn backward(&mut self, output: NodeId, seed: &[T], params: &mut ParamSet<T>) -> Result<()> {
        if seed.len() != self.value(output).len() {
            return Err(NnError::shape(
                &self.nodes[output.0].name,
                "seed gradient",
                self.value(output).len(),
                seed.len(),
            ));
        }
        for node in &mut self.nodes {
            node.value.take_grad();
        }
        self.nodes[output.0].value.grad_mut().copy_from_slice(seed);

        for idx in (0..=output.0).rev() {
            let Some(grad) = self.nodes[idx].value.take_grad() else {
                continue;
            };
            let (before, rest) = self.nodes.split_at_mut(idx);
            let node = &rest[0];
            match &node.op {
                Op::Input { .. } => {}
                Op::Conv {
                    input,
                    spec,
                    weight,
                    bias,
                } => {
                    let src = &before[input.0];
                    let need_input = !matches!(
                        src.op,
                        Op::Input {
                            requires_grad: false
                        }
                    );
                    let g = ops::conv2d_backward(
                        &src.value,
                        spec,
                        &params.get(*weight).value,
                        &grad,
                        need_input,
                        &node.name,
                    )?;
                    accumulate(params.get_mut(*weight).grad.data_mut(), &g.weight);
                    accumulate(params.get_mut(*bias).grad.data_mut(), &g.bias);
                    if let Some(gi) = g.input {
                        accumulate(before[input.0].value.grad_mut(), &gi);
                    }
                }
                Op::Relu { input } => {
                    let gi = ops::relu_backward(&before[input.0].value, &grad);
                    accumulate(before[input.0].value.grad_mut(), &gi);
                }
                Op::MaxPool { input, argmax } => {
                    let len = before[input.0].value.len();
                    let gi = ops::maxpool_backward(len, argmax, &grad);
                    accumulate(before[input.0].value.grad_mut(), &gi);
                }
                Op::GlobalAvgPool { input } => {
                    let gi = ops::global_avgpool_backward(before[input.0].value.shape(), &grad);
                    accumulate(before[input.0].value.grad_mut(), &gi);
                }
                Op::DepthCat { a, b } => {
                    let boundary = before[a.0].value.shape().channels;
                    let (ga, gb) = ops::depthcat_split(node.value.shape(), &grad, boundary);
                    accumulate(before[a.0].value.grad_mut(), &ga);
                    accumulate(before[b.0].value.grad_mut(), &gb);
                }
                Op::Add { a, b } => {
                    accumulate(before[a.0].value.grad_mut(), &grad);
                    accumulate(before[b.0].value.grad_mut(), &grad);
                }
                Op::FullyConnected {
                    input,
                    weight,
                    bias,
                } => {
                    let g = ops::fully_connected_backward(
                        &before[input.0].value,
                        &params.get(*weight).value,
                        &grad,
                    );
                    accumulate(params.get_mut(*weight).grad.data_mut(), &g.weight);
                    accumulate(params.get_mut(*bias).grad.data_mut(), &g.bias);
                    accumulate(before[input.0].value.grad_mut(), &g.input);
                }
                Op::Dropout { input, mask } => {
                    let gi = ops::dropout_backward(mask.as_deref(), &grad);
                    accumulate(before[input.0].value.grad_mut(), &gi);
                }
            }
            self.nodes[idx].value.set_grad(grad);
        }
        Ok(())
    }
}

fn accumulate<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = *d + *s;
    }
}

fn rename(err: NnError, layer: &str) -> NnError {
    match err {
        NnError::Shape {
            axis,
            expected,
            found,
            ..
        } => NnError::Shape {
            layer: layer.to_string(),
            axis,
            expected,
            found,
        },
        NnError::Config { message, .. } => NnError::Config {
            layer: layer.to_string(),
            message,
        },
        other => other,
    }
}
