use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::archive::ArchiveError;
use crate::signals::StftParams;

/// Name under which nodes refer to the network input.
pub const INPUT: &str = "input";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    Reflect,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        weight: String,
        #[serde(default)]
        bias: Option<String>,
    },
    ConvTranspose2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        #[serde(default)]
        output_padding: usize,
        weight: String,
        #[serde(default)]
        bias: Option<String>,
    },
    InstanceNorm {
        channels: usize,
        eps: f32,
        #[serde(default)]
        weight: Option<String>,
        #[serde(default)]
        bias: Option<String>,
    },
    Relu,
    LeakyRelu {
        alpha: f32,
    },
    Tanh,
    Concat,
    Pad {
        mode: PadMode,
        /// top, bottom, left, right
        amount: [usize; 4],
    },
}

impl Op {
    pub fn kind(&self) -> &'static str {
        match self {
            Op::Conv2d { .. } => "conv2d",
            Op::ConvTranspose2d { .. } => "conv_transpose2d",
            Op::InstanceNorm { .. } => "instance_norm",
            Op::Relu => "relu",
            Op::LeakyRelu { .. } => "leaky_relu",
            Op::Tanh => "tanh",
            Op::Concat => "concat",
            Op::Pad { .. } => "pad",
        }
    }

    /// Weight tensors this op reads, with the shape each must have.
    pub fn tensors(&self) -> Vec<(&str, Vec<usize>)> {
        let mut out = Vec::new();
        match self {
            Op::Conv2d {
                in_channels,
                out_channels,
                kernel,
                weight,
                bias,
                ..
            } => {
                out.push((
                    weight.as_str(),
                    vec![*out_channels, *in_channels, *kernel, *kernel],
                ));
                if let Some(b) = bias {
                    out.push((b.as_str(), vec![*out_channels]));
                }
            }
            Op::ConvTranspose2d {
                in_channels,
                out_channels,
                kernel,
                weight,
                bias,
                ..
            } => {
                out.push((
                    weight.as_str(),
                    vec![*in_channels, *out_channels, *kernel, *kernel],
                ));
                if let Some(b) = bias {
                    out.push((b.as_str(), vec![*out_channels]));
                }
            }
            Op::InstanceNorm {
                channels,
                weight,
                bias,
                ..
            } => {
                for t in [weight, bias].into_iter().flatten() {
                    out.push((t.as_str(), vec![*channels]));
                }
            }
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub inputs: Vec<String>,
    #[serde(flatten)]
    pub op: Op,
}

/// Per-channel affine map `y = x·scale + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub scale: Vec<f32>,
    pub offset: Vec<f32>,
}

impl Affine {
    pub fn uniform(channels: usize, scale: f32, offset: f32) -> Self {
        Self {
            scale: vec![scale; channels],
            offset: vec![offset; channels],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Declared value range.
    pub range: [f32; 2],
}

/// Layout of the spectrogram image a spectrogram generator emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramLayout {
    pub bins: usize,
    pub frames: usize,
    pub stft: StftParams,
    pub db_floor: f64,
    pub reference_magnitude: f64,
    pub original_length: usize,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputKind {
    /// Network output maps to heights via `output_normalization`.
    Height,
    /// Network output maps to spectrogram-image pixels in `[0, 1]`, resampled
    /// to `layout.bins × layout.frames`.
    Spectrogram { layout: SpectrogramLayout },
    /// No interpretation attached.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDescriptor {
    pub name: String,
    pub input: TensorSpec,
    pub output: TensorSpec,
    /// Pixel values in `[0, 1]` → network input.
    pub input_normalization: Affine,
    /// Network output → physical units.
    pub output_normalization: Affine,
    pub output_kind: OutputKind,
    pub nodes: Vec<Node>,
    /// Node whose value is the network output.
    pub output_node: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Static shape `(channels, height, width)`.
pub type Shape = (usize, usize, usize);

fn graph_err(node: &str, msg: impl Into<String>) -> ArchiveError {
    ArchiveError::Graph {
        node: node.to_string(),
        msg: msg.into(),
    }
}

impl GraphDescriptor {
    /// Checks topology and propagates shapes; returns the shape of every node.
    ///
    /// `tensor_shapes` holds the archive's tensors. Every tensor must be read
    /// by exactly one node and have the shape that node implies.
    pub fn validate(
        &self,
        tensor_shapes: &BTreeMap<String, Vec<usize>>,
    ) -> Result<BTreeMap<String, Shape>, ArchiveError> {
        let mut shapes: BTreeMap<String, Shape> = BTreeMap::new();
        if self.input.channels == 0 || self.input.height == 0 || self.input.width == 0 {
            return Err(graph_err(INPUT, "input spec has a zero dimension"));
        }
        for (what, r) in [("input", self.input.range), ("output", self.output.range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(graph_err(
                    INPUT,
                    format!("{what} range {r:?} must be finite and increasing"),
                ));
            }
        }
        for (what, a) in [
            ("input_normalization", &self.input_normalization),
            ("output_normalization", &self.output_normalization),
        ] {
            let want = if what == "input_normalization" {
                self.input.channels
            } else {
                self.output.channels
            };
            if a.scale.len() != want || a.offset.len() != want {
                return Err(graph_err(
                    INPUT,
                    format!("{what} must have {want} scale and offset entries"),
                ));
            }
        }
        shapes.insert(
            INPUT.to_string(),
            (self.input.channels, self.input.height, self.input.width),
        );
        let mut used: BTreeSet<&str> = BTreeSet::new();
        for node in &self.nodes {
            if node.name == INPUT || shapes.contains_key(&node.name) {
                return Err(graph_err(&node.name, "duplicate node name"));
            }
            let ins: Vec<Shape> = node
                .inputs
                .iter()
                .map(|i| {
                    shapes.get(i).copied().ok_or_else(|| {
                        graph_err(
                            &node.name,
                            format!("input `{i}` is not defined by an earlier node"),
                        )
                    })
                })
                .collect::<Result<_, _>>()?;
            let arity_ok = if matches!(node.op, Op::Concat) {
                ins.len() >= 2
            } else {
                ins.len() == 1
            };
            if !arity_ok {
                let want = if matches!(node.op, Op::Concat) {
                    "at least 2"
                } else {
                    "exactly 1"
                };
                return Err(graph_err(
                    &node.name,
                    format!("{} takes {want} inputs, got {}", node.op.kind(), ins.len()),
                ));
            }
            for (t, want) in node.op.tensors() {
                let got = tensor_shapes
                    .get(t)
                    .ok_or_else(|| ArchiveError::MissingTensor {
                        tensor: t.to_string(),
                        node: node.name.clone(),
                    })?;
                if *got != want {
                    return Err(ArchiveError::TensorShape {
                        tensor: t.to_string(),
                        expected: want,
                        actual: got.clone(),
                    });
                }
                if !used.insert(t) {
                    return Err(ArchiveError::DuplicateTensor(t.to_string()));
                }
            }
            let out = infer_shape(node, &ins)?;
            shapes.insert(node.name.clone(), out);
        }
        if let Some(t) = tensor_shapes.keys().find(|t| !used.contains(t.as_str())) {
            return Err(ArchiveError::UnusedTensor(t.clone()));
        }
        let out = shapes
            .get(&self.output_node)
            .copied()
            .ok_or_else(|| graph_err(&self.output_node, "output node is not defined"))?;
        let declared = (self.output.channels, self.output.height, self.output.width);
        if out != declared {
            return Err(graph_err(
                &self.output_node,
                format!("produces {out:?}, output spec declares {declared:?}"),
            ));
        }
        let last = self
            .nodes
            .iter()
            .find(|n| n.name == self.output_node)
            .map(|n| &n.op);
        if matches!(last, Some(Op::Tanh)) && self.output.range != [-1.0, 1.0] {
            return Err(graph_err(
                &self.output_node,
                format!("tanh output but declared range {:?}", self.output.range),
            ));
        }
        Ok(shapes)
    }
}

fn infer_shape(node: &Node, ins: &[Shape]) -> Result<Shape, ArchiveError> {
    let (c, h, w) = ins[0];
    let name = &node.name;
    match &node.op {
        Op::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            ..
        } => {
            if c != *in_channels {
                return Err(graph_err(
                    name,
                    format!("expects {in_channels} channels, input has {c}"),
                ));
            }
            if *kernel == 0 || *stride == 0 {
                return Err(graph_err(name, "kernel and stride must be positive"));
            }
            let (ph, pw) = (h + 2 * padding, w + 2 * padding);
            if ph < *kernel || pw < *kernel {
                return Err(graph_err(
                    name,
                    format!("kernel {kernel} exceeds padded input {ph}x{pw}"),
                ));
            }
            Ok((
                *out_channels,
                (ph - kernel) / stride + 1,
                (pw - kernel) / stride + 1,
            ))
        }
        Op::ConvTranspose2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            output_padding,
            ..
        } => {
            if c != *in_channels {
                return Err(graph_err(
                    name,
                    format!("expects {in_channels} channels, input has {c}"),
                ));
            }
            if *kernel == 0 || *stride == 0 || output_padding >= stride {
                return Err(graph_err(
                    name,
                    "kernel and stride must be positive and output_padding < stride",
                ));
            }
            let size =
                |n: usize| ((n - 1) * stride + kernel + output_padding).checked_sub(2 * padding);
            match (size(h), size(w)) {
                (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Ok((*out_channels, oh, ow)),
                _ => Err(graph_err(name, "padding removes the whole output")),
            }
        }
        Op::InstanceNorm { channels, eps, .. } => {
            if c != *channels {
                return Err(graph_err(
                    name,
                    format!("expects {channels} channels, input has {c}"),
                ));
            }
            if !(eps.is_finite() && *eps > 0.0) {
                return Err(graph_err(name, "eps must be positive"));
            }
            Ok((c, h, w))
        }
        Op::Relu | Op::Tanh => Ok((c, h, w)),
        Op::LeakyRelu { alpha } => {
            if !alpha.is_finite() {
                return Err(graph_err(name, "alpha must be finite"));
            }
            Ok((c, h, w))
        }
        Op::Concat => {
            let mut total = 0;
            for (i, s) in ins.iter().enumerate() {
                if (s.1, s.2) != (h, w) {
                    return Err(graph_err(
                        name,
                        format!("input {i} is {}x{}, expected {h}x{w}", s.1, s.2),
                    ));
                }
                total += s.0;
            }
            Ok((total, h, w))
        }
        Op::Pad { mode, amount } => {
            let [t, b, l, r] = *amount;
            if *mode == PadMode::Reflect && (t.max(b) >= h || l.max(r) >= w) {
                return Err(graph_err(
                    name,
                    format!("reflect padding {amount:?} needs an input larger than {h}x{w}"),
                ));
            }
            Ok((c, h + t + b, w + l + r))
        }
    }
}
