use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;

use super::archive::{ArchiveError, Tensor, WeightArchive};
use super::graph::{GraphDescriptor, Op, PadMode, Shape, INPUT};
use crate::error::{Error, Result};
use crate::synth::VisualImage;

/// Dense `(channel, row, col)` activation, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                left: vec![channels, height, width],
                right: vec![data.len()],
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn shape(&self) -> Shape {
        (self.channels, self.height, self.width)
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel(&self, c: usize) -> Array2<f64> {
        let p = self.plane(c);
        Array2::from_shape_fn((self.height, self.width), |(r, col)| {
            f64::from(p[r * self.width + col])
        })
    }

    fn zeros(shape: Shape) -> Self {
        Self::filled(shape.0, shape.1, shape.2, 0.0)
    }
}

/// Resizes one plane with half-pixel-centre bilinear sampling.
pub fn resize_bilinear(src: &Array2<f64>, rows: usize, cols: usize) -> Array2<f64> {
    let (h, w) = src.dim();
    if (h, w) == (rows, cols) {
        return src.clone();
    }
    let coord = |o: usize, out: usize, inp: usize| -> (usize, usize, f64) {
        let x = ((o as f64 + 0.5) * inp as f64 / out as f64 - 0.5).clamp(0.0, (inp - 1) as f64);
        let i0 = x.floor() as usize;
        (i0, (i0 + 1).min(inp - 1), x - i0 as f64)
    };
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let (y0, y1, ty) = coord(r, rows, h);
        let (x0, x1, tx) = coord(c, cols, w);
        let top = src[[y0, x0]] * (1.0 - tx) + src[[y0, x1]] * tx;
        let bottom = src[[y1, x0]] * (1.0 - tx) + src[[y1, x1]] * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// A validated network ready to run. Immutable; share it across threads.
#[derive(Debug, Clone)]
pub struct Generator {
    archive: WeightArchive,
    shapes: BTreeMap<String, Shape>,
}

impl Generator {
    pub fn new(archive: WeightArchive) -> std::result::Result<Self, ArchiveError> {
        let shapes = archive.descriptor.validate(&archive.tensor_shapes())?;
        Ok(Self { archive, shapes })
    }

    /// Reads and validates an archive file.
    pub fn load(path: &Path) -> Result<Self> {
        let archive = WeightArchive::read(path)?;
        Self::new(archive).map_err(|source| Error::ArchiveFile {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn descriptor(&self) -> &GraphDescriptor {
        &self.archive.descriptor
    }

    pub fn archive(&self) -> &WeightArchive {
        &self.archive
    }

    pub fn node_count(&self) -> usize {
        self.archive.descriptor.nodes.len()
    }

    /// Static output shape of a node (or of `input`).
    pub fn node_shape(&self, name: &str) -> Option<Shape> {
        self.shapes.get(name).copied()
    }

    /// Visual image → network input: resized to the input spec, then the
    /// input normalization applied in f32.
    pub fn prepare(&self, x: &VisualImage) -> FeatureMap {
        let spec = &self.archive.descriptor.input;
        let norm = &self.archive.descriptor.input_normalization;
        let px = x.pixels();
        let mut data = Vec::with_capacity(spec.channels * spec.height * spec.width);
        for c in 0..spec.channels {
            let plane = px.index_axis(ndarray::Axis(2), c.min(2)).to_owned();
            let plane = resize_bilinear(&plane, spec.height, spec.width);
            data.extend(
                plane
                    .iter()
                    .map(|v| (*v as f32) * norm.scale[c] + norm.offset[c]),
            );
        }
        FeatureMap {
            channels: spec.channels,
            height: spec.height,
            width: spec.width,
            data,
        }
    }

    /// Runs the graph on a prepared input and returns the raw output node.
    pub fn forward(&self, x: &FeatureMap) -> std::result::Result<FeatureMap, ArchiveError> {
        let want = self.shapes[INPUT];
        if x.shape() != want {
            return Err(ArchiveError::Graph {
                node: INPUT.into(),
                msg: format!("got shape {:?}, expected {want:?}", x.shape()),
            });
        }
        let desc = &self.archive.descriptor;
        let mut values: BTreeMap<&str, FeatureMap> = BTreeMap::new();
        values.insert(INPUT, x.clone());
        for node in &desc.nodes {
            let ins: Vec<&FeatureMap> = node.inputs.iter().map(|i| &values[i.as_str()]).collect();
            let out = self.eval(&node.op, &ins, self.shapes[&node.name]);
            debug_assert_eq!(out.shape(), self.shapes[&node.name], "node {}", node.name);
            values.insert(node.name.as_str(), out);
        }
        Ok(values
            .remove(desc.output_node.as_str())
            .expect("validated output node"))
    }

    /// Prepares `x`, runs the graph and applies the output normalization;
    /// returns output channel 0.
    pub fn run(&self, x: &VisualImage) -> Result<Array2<f64>> {
        let out = self.forward(&self.prepare(x))?;
        let norm = &self.archive.descriptor.output_normalization;
        let (s, o) = (f64::from(norm.scale[0]), f64::from(norm.offset[0]));
        Ok(out.channel(0).mapv(|v| v * s + o))
    }

    fn tensor(&self, name: &str) -> &Tensor {
        &self.archive.tensors[name]
    }

    fn eval(&self, op: &Op, ins: &[&FeatureMap], shape: Shape) -> FeatureMap {
        match op {
            Op::Conv2d {
                stride,
                padding,
                kernel,
                weight,
                bias,
                ..
            } => conv2d(
                ins[0],
                self.tensor(weight),
                bias.as_deref().map(|b| self.tensor(b)),
                *kernel,
                *stride,
                *padding,
                shape,
            ),
            Op::ConvTranspose2d {
                stride,
                padding,
                kernel,
                weight,
                bias,
                ..
            } => conv_transpose2d(
                ins[0],
                self.tensor(weight),
                bias.as_deref().map(|b| self.tensor(b)),
                *kernel,
                *stride,
                *padding,
                shape,
            ),
            Op::InstanceNorm {
                eps, weight, bias, ..
            } => instance_norm(
                ins[0],
                *eps,
                weight.as_deref().map(|t| self.tensor(t)),
                bias.as_deref().map(|t| self.tensor(t)),
            ),
            Op::Relu => map(ins[0], |v| v.max(0.0)),
            Op::LeakyRelu { alpha } => map(ins[0], |v| if v >= 0.0 { v } else { alpha * v }),
            Op::Tanh => map(ins[0], f32::tanh),
            Op::Concat => {
                let mut data = Vec::with_capacity(shape.0 * shape.1 * shape.2);
                for x in ins {
                    data.extend_from_slice(&x.data);
                }
                FeatureMap {
                    channels: shape.0,
                    height: shape.1,
                    width: shape.2,
                    data,
                }
            }
            Op::Pad { mode, amount } => pad(ins[0], *mode, *amount, shape),
        }
    }
}

fn map(x: &FeatureMap, f: impl Fn(f32) -> f32) -> FeatureMap {
    FeatureMap {
        data: x.data.iter().map(|v| f(*v)).collect(),
        ..*x
    }
}

fn conv2d(
    x: &FeatureMap,
    w: &Tensor,
    b: Option<&Tensor>,
    k: usize,
    stride: usize,
    pad: usize,
    shape: Shape,
) -> FeatureMap {
    let (oc, oh, ow) = shape;
    let (ic, ih, iw) = x.shape();
    let mut out = FeatureMap::zeros(shape);
    for o in 0..oc {
        let acc = &mut out.data[o * oh * ow..(o + 1) * oh * ow];
        if let Some(b) = b {
            acc.fill(b.data[o]);
        }
        for i in 0..ic {
            let src = x.plane(i);
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w.data[((o * ic + i) * k + ky) * k + kx];
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= ih as isize {
                            continue;
                        }
                        let row = &src[iy as usize * iw..(iy as usize + 1) * iw];
                        let dst = &mut acc[oy * ow..(oy + 1) * ow];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix >= 0 && ix < iw as isize {
                                *d += wv * row[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn conv_transpose2d(
    x: &FeatureMap,
    w: &Tensor,
    b: Option<&Tensor>,
    k: usize,
    stride: usize,
    pad: usize,
    shape: Shape,
) -> FeatureMap {
    let (oc, oh, ow) = shape;
    let (ic, ih, iw) = x.shape();
    let mut out = FeatureMap::zeros(shape);
    for o in 0..oc {
        let acc = &mut out.data[o * oh * ow..(o + 1) * oh * ow];
        if let Some(b) = b {
            acc.fill(b.data[o]);
        }
        for i in 0..ic {
            let src = x.plane(i);
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w.data[((i * oc + o) * k + ky) * k + kx];
                    for iy in 0..ih {
                        let oy = (iy * stride + ky) as isize - pad as isize;
                        if oy < 0 || oy >= oh as isize {
                            continue;
                        }
                        for ix in 0..iw {
                            let ox = (ix * stride + kx) as isize - pad as isize;
                            if ox >= 0 && ox < ow as isize {
                                acc[oy as usize * ow + ox as usize] += wv * src[iy * iw + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn instance_norm(
    x: &FeatureMap,
    eps: f32,
    gamma: Option<&Tensor>,
    beta: Option<&Tensor>,
) -> FeatureMap {
    let n = x.height * x.width;
    let mut out = x.clone();
    for c in 0..x.channels {
        let plane = &mut out.data[c * n..(c + 1) * n];
        // Two-pass mean and biased variance, accumulated in f64.
        let mean = plane.iter().map(|v| f64::from(*v)).sum::<f64>() / n as f64;
        let var = plane
            .iter()
            .map(|v| (f64::from(*v) - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        let inv = 1.0 / (var + f64::from(eps)).sqrt();
        let g = gamma.map_or(1.0, |t| t.data[c]);
        let b = beta.map_or(0.0, |t| t.data[c]);
        for v in plane.iter_mut() {
            *v = ((f64::from(*v) - mean) * inv) as f32 * g + b;
        }
    }
    out
}

fn pad(x: &FeatureMap, mode: PadMode, amount: [usize; 4], shape: Shape) -> FeatureMap {
    let [top, _, left, _] = amount;
    let (c, oh, ow) = shape;
    let (h, w) = (x.height as isize, x.width as isize);
    // Reflection without repeating the edge sample.
    let fold = |i: isize, n: isize| -> Option<usize> {
        match mode {
            PadMode::Zero => (0..n).contains(&i).then_some(i as usize),
            PadMode::Reflect => {
                let j = if i < 0 {
                    -i
                } else if i >= n {
                    2 * (n - 1) - i
                } else {
                    i
                };
                Some(j as usize)
            }
        }
    };
    let mut out = FeatureMap::zeros(shape);
    for ch in 0..c {
        let src = x.plane(ch);
        for r in 0..oh {
            let Some(sr) = fold(r as isize - top as isize, h) else {
                continue;
            };
            for col in 0..ow {
                if let Some(sc) = fold(col as isize - left as isize, w) {
                    out.data[(ch * oh + r) * ow + col] = src[sr * x.width + sc];
                }
            }
        }
    }
    out
}
