//! Data pipeline: degradations, synthetic sequences with known motion,
//! frame directories and image quality metrics.

mod degrade;
mod io;
mod metrics;
mod synth;

pub use degrade::{bicubic_resize, degrade, gaussian_kernel, DegradationKind, DegradationSpec};
pub use io::{load_frames, save_frames};
pub use metrics::{psnr, ssim, y_plane, MetricMode, PSNR_CAP_DB};
pub use synth::{synth_sequence, Occluder, SynthSpec, SyntheticSequence};

use thiserror::Error;

use crate::tensor::{Scalar, Tensor, TensorError};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("frame {0} missing from directory (numbering must be consecutive from 0)")]
    MissingFrame(usize),
    #[error("frame {index} has extents {got}, expected {expected}")]
    FrameShapeMismatch { index: usize, expected: String, got: String },
    #[error("extents {h}x{w} not divisible by {divisor}")]
    IndivisibleExtents { h: usize, w: usize, divisor: usize },
    #[error("shape mismatch between inputs: {a} vs {b}")]
    ShapeMismatch { a: String, b: String },
    #[error("{0}")]
    BadSpec(String),
    #[error("no frames found in {0}")]
    EmptyDirectory(String),
    #[error("image error on {path}: {source}")]
    Image { path: String, source: image::ImageError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Ordered RGB frames in [0, 1]. Every frame is a (3, H, W) tensor of the
/// same extents; values clamp to [0, 1] on construction.
pub struct VideoSequence<T: Scalar> {
    frames: Vec<Tensor<T>>,
}

impl<T: Scalar> VideoSequence<T> {
    pub fn new(frames: Vec<Tensor<T>>) -> Result<Self, DataError> {
        if frames.is_empty() {
            return Err(DataError::BadSpec("a sequence needs at least one frame".into()));
        }
        let expected = frames[0].shape().clone();
        if expected.ndim() != 3 || expected[0] != 3 {
            return Err(DataError::BadSpec(format!(
                "frames must be (3, H, W), got {expected}"
            )));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.shape() != &expected {
                return Err(DataError::FrameShapeMismatch {
                    index: i,
                    expected: expected.to_string(),
                    got: f.shape().to_string(),
                });
            }
        }
        let frames = frames.into_iter().map(|f| f.clamp(T::zero(), T::one())).collect();
        Ok(VideoSequence { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &Tensor<T> {
        &self.frames[i]
    }

    pub fn frames(&self) -> &[Tensor<T>] {
        &self.frames
    }

    /// (H, W) of every frame.
    pub fn extents(&self) -> (usize, usize) {
        let s = self.frames[0].shape();
        (s[1], s[2])
    }
}

impl<T: Scalar> Clone for VideoSequence<T> {
    fn clone(&self) -> Self {
        VideoSequence { frames: self.frames.clone() }
    }
}
