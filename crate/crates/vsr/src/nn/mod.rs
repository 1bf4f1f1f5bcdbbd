//! Neural building blocks: convolution layers, residual blocks,
//! activations, pixel-shuffle, bilinear resampling and flow warping.

mod conv;
pub mod gradcheck;
mod ops;

pub use ops::{bilinear_resize, flow_warp, leaky_relu, pixel_shuffle, pixel_unshuffle, relu};

use crate::tensor::rng::Rng;
use crate::tensor::{Scalar, Shape, Tensor, TensorError};

use conv::ConvDims;

/// Anything with named trainable parameters. Visitation order is the
/// declaration order of the parameters, which optimizer state and
/// checkpoints rely on.
pub trait Module<T: Scalar> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>));
    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params("", &mut |_, t| n += t.numel());
        n
    }

    fn zero_grads(&self) {
        self.visit_params("", &mut |_, t| t.zero_grad());
    }

    /// Parameters as (name, tensor) pairs in declaration order.
    fn named_params(&self) -> Vec<(String, Tensor<T>)> {
        let mut out = Vec::new();
        self.visit_params("", &mut |name, t| out.push((name.to_string(), t.clone())));
        out
    }
}

pub(crate) fn join_name(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// 2-d convolution layer (cross-correlation, zero padding).
pub struct Conv2d<T: Scalar> {
    pub weight: Tensor<T>, // (C_out, C_in, k, k)
    pub bias: Tensor<T>,   // (C_out,)
    pub stride: usize,
    pub padding: usize,
}

impl<T: Scalar> Conv2d<T> {
    /// Kaiming fan-in normal weights, zero bias, stride 1 and `(k-1)/2`
    /// padding so spatial extents are preserved.
    pub fn init(c_in: usize, c_out: usize, k: usize, rng: &mut Rng) -> Self {
        Self::init_scaled(c_in, c_out, k, 1.0, rng)
    }

    /// Like [`Conv2d::init`] with the weights multiplied by `scale`.
    pub fn init_scaled(c_in: usize, c_out: usize, k: usize, scale: f64, rng: &mut Rng) -> Self {
        assert!(k % 2 == 1, "kernel size must be odd");
        let fan_in = (c_in * k * k) as f64;
        let std = (2.0 / fan_in).sqrt() * scale;
        let weight: Vec<T> =
            (0..c_out * c_in * k * k).map(|_| T::from_f64(rng.normal() * std)).collect();
        Conv2d {
            weight: Tensor::leaf(weight, Shape::new(vec![c_out, c_in, k, k]), true),
            bias: Tensor::leaf(vec![T::zero(); c_out], Shape::new(vec![c_out]), true),
            stride: 1,
            padding: (k - 1) / 2,
        }
    }

    /// All-zero weights and bias. Residual flow heads start from the zero
    /// field this way.
    pub fn zeros(c_in: usize, c_out: usize, k: usize) -> Self {
        assert!(k % 2 == 1, "kernel size must be odd");
        Conv2d {
            weight: Tensor::leaf(
                vec![T::zero(); c_out * c_in * k * k],
                Shape::new(vec![c_out, c_in, k, k]),
                true,
            ),
            bias: Tensor::leaf(vec![T::zero(); c_out], Shape::new(vec![c_out]), true),
            stride: 1,
            padding: (k - 1) / 2,
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        conv2d(x, &self.weight, &self.bias, self.stride, self.padding)
    }
}

impl<T: Scalar> Module<T> for Conv2d<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        f(&join_name(prefix, "weight"), &self.weight);
        f(&join_name(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f(&join_name(prefix, "weight"), &mut self.weight);
        f(&join_name(prefix, "bias"), &mut self.bias);
    }
}

/// conv -> ReLU -> conv with an identity skip. Input and output have the
/// same shape.
pub struct ResidualBlock<T: Scalar> {
    pub conv1: Conv2d<T>,
    pub conv2: Conv2d<T>,
}

impl<T: Scalar> ResidualBlock<T> {
    /// The closing conv starts 0.1x smaller so freshly initialized blocks
    /// stay close to the identity, which recurrent stacks need to train
    /// stably.
    pub fn init(channels: usize, rng: &mut Rng) -> Self {
        ResidualBlock {
            conv1: Conv2d::init(channels, channels, 3, rng),
            conv2: Conv2d::init_scaled(channels, channels, 3, 0.1, rng),
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        let h = self.conv1.forward(x)?;
        let h = relu(&h);
        let h = self.conv2.forward(&h)?;
        x.add(&h)
    }
}

impl<T: Scalar> Module<T> for ResidualBlock<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor<T>)) {
        self.conv1.visit_params(&join_name(prefix, "conv1"), f);
        self.conv2.visit_params(&join_name(prefix, "conv2"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.conv1.visit_params_mut(&join_name(prefix, "conv1"), f);
        self.conv2.visit_params_mut(&join_name(prefix, "conv2"), f);
    }
}

/// 2-d cross-correlation with zero padding.
///
/// `x` is (N, C_in, H, W), `weight` is (C_out, C_in, k, k), `bias` is
/// (C_out,). Output extents follow `(H + 2p - k) / stride + 1`.
pub fn conv2d<T: Scalar>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>, TensorError> {
    let (batch, c_in, h, w) = x.shape().dims4()?;
    let (c_out, wc_in, k, k2) = weight.shape().dims4()?;
    if k != k2 {
        return Err(TensorError::Invalid {
            op: "conv2d",
            detail: format!("kernel must be square, got {}", weight.shape()),
        });
    }
    if wc_in != c_in {
        return Err(TensorError::Invalid {
            op: "conv2d",
            detail: format!(
                "input has {c_in} channels but weight {} expects {wc_in}",
                weight.shape()
            ),
        });
    }
    if bias.numel() != c_out {
        return Err(TensorError::Invalid {
            op: "conv2d",
            detail: format!("bias {} does not match {c_out} output channels", bias.shape()),
        });
    }
    if h + 2 * padding < k || w + 2 * padding < k {
        return Err(TensorError::Invalid {
            op: "conv2d",
            detail: format!(
                "non-positive output extent for input {}x{h}x{w}, kernel {k}, padding {padding}",
                c_in
            ),
        });
    }
    assert!(stride >= 1, "stride must be at least 1");

    let dims = ConvDims { batch, c_in, h, w, c_out, k, stride, padding };
    let data = conv::forward(x.data(), weight.data(), bias.data(), dims);
    let out_shape = Shape::new(vec![batch, c_out, dims.out_h(), dims.out_w()]);

    Ok(Tensor::from_op(
        data,
        out_shape,
        vec![x.clone(), weight.clone(), bias.clone()],
        Box::new(move |parents, _, g, sink| {
            if parents[0].is_tracked() {
                sink(0, conv::backward_input(g, parents[1].data(), dims));
            }
            if parents[1].is_tracked() {
                sink(1, conv::backward_weight(g, parents[0].data(), dims));
            }
            if parents[2].is_tracked() {
                sink(2, conv::backward_bias(g, dims));
            }
        }),
    ))
}
