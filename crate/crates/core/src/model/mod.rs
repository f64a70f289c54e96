//! The Chain-Net graph: a conv/ReLU/max-pool stem, a cascade of chain
//! blocks, a concatenation of the last block's two flows, global average
//! pooling and a three-layer fully connected head.

mod block;
mod config;

use std::fmt;

use chainnet_nn::{
    init, ConvSpec, DropoutMode, Graph, NodeId, ParamRole, ParamSet, Parameter, PoolSpec, Scalar,
    Shape, Tensor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use block::{BlockOutputs, ChainBlock, ConvLayer};
pub use config::{NetworkConfig, HIDDEN_NODES};

use crate::error::{Error, Result};
use crate::seed;

/// Whether dropout is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { dropout_seed: u64 },
    Infer,
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub name: String,
    pub weight: chainnet_nn::ParamId,
    pub bias: chainnet_nn::ParamId,
}

#[derive(Debug, Clone)]
pub struct ChainNet<T> {
    config: NetworkConfig,
    params: ParamSet<T>,
    stem: ConvLayer,
    blocks: Vec<ChainBlock>,
    fc: [DenseLayer; 3],
}

struct Builder<T> {
    params: ParamSet<T>,
    seed: u64,
    layer: u64,
}

impl<T: Scalar> Builder<T> {
    fn rng(&mut self) -> ChaCha8Rng {
        self.layer += 1;
        ChaCha8Rng::seed_from_u64(seed::derive(self.seed, &[self.layer]))
    }

    fn conv(&mut self, name: &str, spec: ConvSpec) -> ConvLayer {
        let mut rng = self.rng();
        let w = init::he_uniform(spec.weight_shape(), spec.fan_in(), &mut rng);
        let weight = self.params.add(Parameter::new(
            format!("{name}.weight"),
            ParamRole::Weight,
            w,
        ));
        let bias = self.params.add(Parameter::new(
            format!("{name}.bias"),
            ParamRole::Bias,
            Tensor::zeros(spec.bias_shape()),
        ));
        ConvLayer {
            name: name.to_string(),
            spec,
            weight,
            bias,
        }
    }

    fn dense(&mut self, name: &str, inputs: usize, outputs: usize, zero: bool) -> DenseLayer {
        let mut rng = self.rng();
        let shape = Shape::new(1, 1, outputs, inputs);
        let w = if zero {
            Tensor::zeros(shape)
        } else {
            init::he_uniform(shape, inputs, &mut rng)
        };
        let weight = self.params.add(Parameter::new(
            format!("{name}.weight"),
            ParamRole::Weight,
            w,
        ));
        let bias = self.params.add(Parameter::new(
            format!("{name}.bias"),
            ParamRole::Bias,
            Tensor::zeros(Shape::new(1, 1, 1, outputs)),
        ));
        DenseLayer {
            name: name.to_string(),
            weight,
            bias,
        }
    }
}

/// Node ids of the named stages of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardNodes {
    pub input: NodeId,
    pub stem: NodeId,
    pub blocks: Vec<BlockOutputs>,
    pub depthcat: NodeId,
    pub avgpool: NodeId,
    pub logits: NodeId,
}

impl<T: Scalar> ChainNet<T> {
    /// Builds the graph topology and initializes every parameter from
    /// `config.seed`: He-uniform weights, zero biases and a zero output
    /// layer.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let k = config.kernel_count;
        let mut b = Builder {
            params: ParamSet::new(),
            seed: config.seed,
            layer: 0,
        };
        let stem = b.conv("stack.conv", ConvSpec::new((1, 5), 1, k).with_stride(1, 2));
        let blocks = (0..config.block_count)
            .map(|i| {
                let name = format!("block{}", i + 1);
                ChainBlock {
                    index: i,
                    conv_1x3: b.conv(
                        &format!("{name}.conv_1x3"),
                        ConvSpec::new((1, 3), k, k).with_stride(1, 2),
                    ),
                    conv_3x1: b.conv(
                        &format!("{name}.conv_3x1"),
                        ConvSpec::new((3, 1), k, k).with_stride(1, 2),
                    ),
                    conv_1x1: b.conv(&format!("{name}.conv_1x1"), ConvSpec::new((1, 1), 2 * k, k)),
                }
            })
            .collect();
        let fc = [
            b.dense("fc1", 2 * k, HIDDEN_NODES, false),
            b.dense("fc2", HIDDEN_NODES, HIDDEN_NODES, false),
            // Activations grow through the summing blocks; a zero classifier
            // starts every frame at the uniform prediction.
            b.dense("fc3", HIDDEN_NODES, config.class_count, true),
        ];
        Ok(ChainNet {
            config,
            params: b.params,
            stem,
            blocks,
            fc,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn blocks(&self) -> &[ChainBlock] {
        &self.blocks
    }

    /// Scalar count obtained by walking the instantiated parameters.
    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    /// Input frames must be shaped `(N, 2, signal_length, 1)`.
    pub fn check_frames(&self, shape: Shape) -> Result<()> {
        if shape.height != 2 || shape.channels != 1 {
            return Err(Error::Length(format!(
                "frames must be 2 x {} x 1 (I/Q rows), got {shape}",
                self.config.signal_length
            )));
        }
        if shape.width != self.config.signal_length {
            return Err(Error::Length(format!(
                "frame length {} does not match network signal length {}",
                shape.width, self.config.signal_length
            )));
        }
        Ok(())
    }

    /// Records the full forward pass on `graph` and returns the named nodes.
    /// The logits node holds un-normalized class scores.
    pub fn forward(
        &self,
        graph: &mut Graph<T>,
        frames: Tensor<T>,
        mode: Mode,
    ) -> Result<ForwardNodes> {
        self.check_frames(frames.shape())?;
        let input = graph.constant("input", frames);
        let c = self.stem.apply(graph, input, &self.params)?;
        let a = graph.relu("stack.relu", c);
        let stem = graph.maxpool("stack.maxpool", a, PoolSpec::new((1, 2), (1, 2)))?;

        let mut blocks = Vec::with_capacity(self.blocks.len());
        let (mut h, mut v) = (stem, stem);
        for block in &self.blocks {
            let out = block.forward(graph, h, v, &self.params)?;
            (h, v) = (out.out_h, out.out_v);
            blocks.push(out);
        }

        let depthcat = graph.depthcat("depthcat", h, v)?;
        let avgpool = graph.global_avgpool("avgpool", depthcat);
        let [fc1, fc2, fc3] = &self.fc;
        let x = graph.fully_connected(&fc1.name, avgpool, fc1.weight, fc1.bias, &self.params)?;
        let x = graph.relu("fc1.relu", x);
        let x = graph.fully_connected(&fc2.name, x, fc2.weight, fc2.bias, &self.params)?;
        let x = graph.relu("fc2.relu", x);
        let dropout = match mode {
            Mode::Train { dropout_seed } => DropoutMode::Train { seed: dropout_seed },
            Mode::Infer => DropoutMode::Infer,
        };
        let x = graph.dropout("dropout", x, self.config.dropout_ratio, dropout)?;
        let logits = graph.fully_connected(&fc3.name, x, fc3.weight, fc3.bias, &self.params)?;
        Ok(ForwardNodes {
            input,
            stem,
            blocks,
            depthcat,
            avgpool,
            logits,
        })
    }

    /// Class probabilities `(N, 1, 1, C)` in inference mode.
    pub fn forward_classify(&self, frames: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_frames(frames.shape())?;
        let mut graph = Graph::new();
        let nodes = self.forward(&mut graph, frames.clone(), Mode::Infer)?;
        Ok(chainnet_nn::ops::softmax(graph.value(nodes.logits)))
    }

    /// Shapes of every stage for a single frame.
    pub fn shape_trace(&self) -> Result<ShapeTrace> {
        let frames = Tensor::zeros(Shape::new(1, 2, self.config.signal_length, 1));
        let mut graph = Graph::new();
        let nodes = self.forward(&mut graph, frames, Mode::Infer)?;
        let mut entries = vec![
            ("input".to_string(), graph.shape(nodes.input)),
            ("stack".to_string(), graph.shape(nodes.stem)),
        ];
        for (i, b) in nodes.blocks.iter().enumerate() {
            entries.push((format!("block{}.out_h", i + 1), graph.shape(b.out_h)));
            entries.push((format!("block{}.out_v", i + 1), graph.shape(b.out_v)));
        }
        entries.push(("depthcat".to_string(), graph.shape(nodes.depthcat)));
        entries.push(("avgpool".to_string(), graph.shape(nodes.avgpool)));
        entries.push(("fc".to_string(), graph.shape(nodes.logits)));
        Ok(ShapeTrace { entries })
    }
}

/// Ordered `(stage, output shape)` list.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeTrace {
    pub entries: Vec<(String, Shape)>,
}

impl ShapeTrace {
    pub fn get(&self, stage: &str) -> Option<Shape> {
        self.entries
            .iter()
            .find(|(n, _)| n == stage)
            .map(|(_, s)| *s)
    }
}

impl fmt::Display for ShapeTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.entries.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        for (name, shape) in &self.entries {
            writeln!(f, "{name:<width$}  {shape}")?;
        }
        Ok(())
    }
}
