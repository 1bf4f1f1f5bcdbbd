//! Video super-resolution with recurrent bidirectional propagation and
//! optical-flow feature alignment, built from scratch on a small CPU-only
//! autodiff engine.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: dense tensors, reverse-mode autodiff, serialization, RNG
//! - [`nn`]: convolution, activations, residual blocks, pixel-shuffle,
//!   bilinear resampling, flow warping
//! - [`flow`]: coarse-to-fine pyramid flow network and ground-truth flow
//!   for synthetic sequences
//! - [`model`]: the propagation / alignment / aggregation / upsampling
//!   pipeline with all its variants
//! - [`data`]: degradations, synthetic sequence generation, PNG frame I/O,
//!   PSNR/SSIM
//! - [`train`]: Charbonnier loss, Adam, cosine annealing, batch sampling,
//!   the training loop
//! - [`cli`]: the `vsr` command-line harness and its experiment drivers

pub mod cli;
pub mod nn;
pub mod tensor;

pub use tensor::{no_grad, Dtype, Scalar, Shape, Tensor, TensorError};
