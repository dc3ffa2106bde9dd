use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};

use super::archive::{Tensor, WeightArchive};
use super::graph::{Affine, GraphDescriptor, Node, Op, OutputKind, PadMode, TensorSpec, INPUT};
use crate::seed;

/// Encoder–decoder with skip connections: a reflect-padded 3×3 stem, four
/// stride-2 4×4 down blocks, four matching transposed-convolution up blocks
/// that concatenate the encoder features, and a 3×3 tanh head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UNetConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    /// Square input side; must be divisible by 16.
    pub size: usize,
    pub base_channels: usize,
}

impl Default for UNetConfig {
    fn default() -> Self {
        Self {
            in_channels: 3,
            out_channels: 1,
            size: 64,
            base_channels: 8,
        }
    }
}

struct Builder {
    nodes: Vec<Node>,
}

impl Builder {
    fn push(&mut self, name: &str, inputs: &[&str], op: Op) -> String {
        self.nodes.push(Node {
            name: name.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            op,
        });
        name.to_string()
    }

    #[allow(clippy::too_many_arguments)]
    fn conv(
        &mut self,
        name: &str,
        input: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> String {
        self.push(
            name,
            &[input],
            Op::Conv2d {
                in_channels: cin,
                out_channels: cout,
                kernel,
                stride,
                padding,
                weight: format!("{name}.weight"),
                bias: Some(format!("{name}.bias")),
            },
        )
    }

    fn up(&mut self, name: &str, input: &str, cin: usize, cout: usize) -> String {
        self.push(
            name,
            &[input],
            Op::ConvTranspose2d {
                in_channels: cin,
                out_channels: cout,
                kernel: 4,
                stride: 2,
                padding: 1,
                output_padding: 0,
                weight: format!("{name}.weight"),
                bias: Some(format!("{name}.bias")),
            },
        )
    }

    fn norm(&mut self, name: &str, input: &str, channels: usize) -> String {
        self.push(
            name,
            &[input],
            Op::InstanceNorm {
                channels,
                eps: 1e-5,
                weight: None,
                bias: None,
            },
        )
    }
}

impl UNetConfig {
    pub fn descriptor(&self, name: &str, output_kind: OutputKind) -> GraphDescriptor {
        let c = self.base_channels;
        let mut b = Builder { nodes: Vec::new() };
        b.push(
            "stem_pad",
            &[INPUT],
            Op::Pad {
                mode: PadMode::Reflect,
                amount: [1; 4],
            },
        );
        b.conv("stem", "stem_pad", self.in_channels, c, 3, 1, 0);
        b.push("e0", &["stem"], Op::LeakyRelu { alpha: 0.2 });

        let enc = [(c, 2 * c), (2 * c, 4 * c), (4 * c, 8 * c), (8 * c, 8 * c)];
        let mut prev = "e0".to_string();
        for (i, (cin, cout)) in enc.iter().enumerate() {
            let d = i + 1;
            let conv = b.conv(&format!("down{d}"), &prev, *cin, *cout, 4, 2, 1);
            let x = if d < 4 {
                b.norm(&format!("down{d}_norm"), &conv, *cout)
            } else {
                conv
            };
            prev = b.push(&format!("e{d}"), &[&x], Op::LeakyRelu { alpha: 0.2 });
        }

        // Up block d doubles the resolution and is joined with e{d-1}.
        let skip_channels = [c, 2 * c, 4 * c, 8 * c];
        let mut channels = 8 * c;
        for d in (1..=4).rev() {
            let out = skip_channels[d - 1];
            let up = b.up(&format!("up{d}"), &prev, channels, out);
            let n = b.norm(&format!("up{d}_norm"), &up, out);
            let a = b.push(&format!("up{d}_act"), &[&n], Op::Relu);
            prev = b.push(
                &format!("d{}", d - 1),
                &[&a, &format!("e{}", d - 1)],
                Op::Concat,
            );
            channels = 2 * out;
        }
        b.push(
            "head_pad",
            &[&prev],
            Op::Pad {
                mode: PadMode::Reflect,
                amount: [1; 4],
            },
        );
        b.conv("head", "head_pad", channels, self.out_channels, 3, 1, 0);
        b.push("out", &["head"], Op::Tanh);

        GraphDescriptor {
            name: name.to_string(),
            input: TensorSpec {
                channels: self.in_channels,
                height: self.size,
                width: self.size,
                range: [-1.0, 1.0],
            },
            output: TensorSpec {
                channels: self.out_channels,
                height: self.size,
                width: self.size,
                range: [-1.0, 1.0],
            },
            input_normalization: Affine::uniform(self.in_channels, 2.0, -1.0),
            output_normalization: Affine::uniform(self.out_channels, 0.5, 0.5),
            output_kind,
            nodes: b.nodes,
            output_node: "out".into(),
            metadata: BTreeMap::new(),
        }
    }
}

/// Archive with every tensor the descriptor names filled with N(0, std²).
pub fn random_archive(descriptor: GraphDescriptor, seed_value: u64, std: f32) -> WeightArchive {
    let normal = Normal::new(0.0f32, std).expect("finite std");
    let mut tensors = BTreeMap::new();
    for node in &descriptor.nodes {
        for (name, shape) in node.op.tensors() {
            let mut rng = seed::rng(seed::derive(seed_value, name));
            let n = shape.iter().product();
            let data = (0..n).map(|_| normal.sample(&mut rng)).collect();
            tensors.insert(name.to_string(), Tensor { shape, data });
        }
    }
    WeightArchive {
        descriptor,
        tensors,
    }
}
