//! BI (antialiased bicubic) and BD (Gaussian blur + subsampling)
//! degradations. Both are linear in the input and computed in f64
//! internally regardless of the frame dtype.

use crate::tensor::{Scalar, Shape, Tensor};

use super::{DataError, VideoSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradationKind {
    /// Antialiased bicubic downsampling.
    Bi,
    /// Gaussian blur followed by subsampling every `scale` pixels.
    Bd,
}

#[derive(Debug, Clone, Copy)]
pub struct DegradationSpec {
    pub kind: DegradationKind,
    pub scale: usize,
    /// BD blur width.
    pub sigma: f64,
    /// BD kernel taps; odd.
    pub kernel_size: usize,
}

impl DegradationSpec {
    pub fn bi() -> Self {
        DegradationSpec { kind: DegradationKind::Bi, scale: 4, sigma: 0.0, kernel_size: 0 }
    }

    pub fn bd() -> Self {
        DegradationSpec { kind: DegradationKind::Bd, scale: 4, sigma: 1.6, kernel_size: 13 }
    }
}

/// Normalized Gaussian taps.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Vec<f64> {
    assert!(size % 2 == 1, "kernel size must be odd");
    let half = (size / 2) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Mirror an index into [0, n) without repeating the edge sample.
fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * n - 2 - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable filtering of one (H, W) plane with reflect padding.
fn filter_plane(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let mut rows = vec![0.0; h * w];
    for y in 0..h {
        let row = &src[y * w..][..w];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * row[reflect(x as isize + t as isize - half, w)];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * rows[reflect(y as isize + t as isize - half, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Gaussian blur with reflect padding, applied per plane. Exposed for the
/// synthetic-texture generator.
pub(crate) fn gaussian_blur_planes(
    data: &[f64],
    planes: usize,
    h: usize,
    w: usize,
    sigma: f64,
    size: usize,
) -> Vec<f64> {
    let taps = gaussian_kernel(sigma, size);
    let mut out = vec![0.0; data.len()];
    for p in 0..planes {
        let filtered = filter_plane(&data[p * h * w..][..h * w], h, w, &taps);
        out[p * h * w..][..h * w].copy_from_slice(&filtered);
    }
    out
}

/// Cubic interpolation kernel with a = -0.5.
fn cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (A + 2.0) * x * x * x - (A + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        A * x * x * x - 5.0 * A * x * x + 8.0 * A * x - 4.0 * A
    } else {
        0.0
    }
}

/// Tap positions and normalized weights for one resampled axis.
/// When downscaling, the kernel is dilated by 1/scale (antialiasing).
/// Indices clamp to the edge; weights renormalize to sum 1.
fn bicubic_axis(n_in: usize, n_out: usize, scale: f64) -> Vec<(usize, Vec<f64>)> {
    let kscale = scale.min(1.0);
    let support = 2.0 / kscale;
    (0..n_out)
        .map(|d| {
            let src = (d as f64 + 0.5) / scale - 0.5;
            let lo = (src - support).ceil() as isize;
            let hi = (src + support).floor() as isize;
            let mut weights = Vec::with_capacity((hi - lo + 1) as usize);
            let mut first = usize::MAX;
            for i in lo..=hi {
                let wgt = cubic((src - i as f64) * kscale) * kscale;
                let idx = i.clamp(0, n_in as isize - 1) as usize;
                if first == usize::MAX {
                    first = idx;
                    weights.push(wgt);
                } else if idx < first + weights.len() {
                    // Clamped duplicate: merge into the edge tap.
                    let last = weights.len() - 1;
                    weights[last] += wgt;
                } else {
                    weights.push(wgt);
                }
            }
            let sum: f64 = weights.iter().sum();
            for wgt in &mut weights {
                *wgt /= sum;
            }
            (first, weights)
        })
        .collect()
}

fn resample_axis_w(src: &[f64], h: usize, w: usize, axis: &[(usize, Vec<f64>)]) -> Vec<f64> {
    let ow = axis.len();
    let mut out = vec![0.0; h * ow];
    for y in 0..h {
        let row = &src[y * w..][..w];
        for (ox, (start, weights)) in axis.iter().enumerate() {
            let mut acc = 0.0;
            for (t, &k) in weights.iter().enumerate() {
                acc += k * row[(start + t).min(w - 1)];
            }
            out[y * ow + ox] = acc;
        }
    }
    out
}

fn transpose(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = src[y * w + x];
        }
    }
    out
}

/// Bicubic resampling (a = -0.5, align-corners=false, antialiased when
/// downscaling) of a (..., H, W) tensor over its two trailing axes.
pub fn bicubic_resize<T: Scalar>(x: &Tensor<T>, scale: f64) -> Tensor<T> {
    assert!(scale > 0.0, "scale must be positive");
    let extents = x.shape().extents();
    assert!(extents.len() >= 2, "bicubic_resize needs at least 2 axes");
    let (h, w) = (extents[extents.len() - 2], extents[extents.len() - 1]);
    let planes = x.numel() / (h * w);
    let oh = ((h as f64 * scale).round() as usize).max(1);
    let ow = ((w as f64 * scale).round() as usize).max(1);

    let ax_w = bicubic_axis(w, ow, scale);
    let ax_h = bicubic_axis(h, oh, scale);

    let mut out = Vec::with_capacity(planes * oh * ow);
    for p in 0..planes {
        let plane: Vec<f64> =
            x.data()[p * h * w..][..h * w].iter().map(|v| v.to_f64_val()).collect();
        let horiz = resample_axis_w(&plane, h, w, &ax_w);
        let t = transpose(&horiz, h, ow);
        let vert = resample_axis_w(&t, ow, h, &ax_h);
        let plane_out = transpose(&vert, ow, oh);
        out.extend(plane_out.iter().map(|&v| T::from_f64(v)));
    }

    let mut out_extents = extents.to_vec();
    let nd = out_extents.len();
    out_extents[nd - 2] = oh;
    out_extents[nd - 1] = ow;
    Tensor::leaf(out, Shape::new(out_extents), false)
}

/// Blur one frame with the BD Gaussian and keep every `stride`-th pixel
/// starting at index 0.
fn bd_frame<T: Scalar>(frame: &Tensor<T>, spec: &DegradationSpec) -> Tensor<T> {
    let extents = frame.shape().extents();
    let (h, w) = (extents[extents.len() - 2], extents[extents.len() - 1]);
    let planes = frame.numel() / (h * w);
    let data: Vec<f64> = frame.data().iter().map(|v| v.to_f64_val()).collect();
    let blurred = gaussian_blur_planes(&data, planes, h, w, spec.sigma, spec.kernel_size);

    let stride = spec.scale;
    let (oh, ow) = (h / stride, w / stride);
    let mut out = Vec::with_capacity(planes * oh * ow);
    for p in 0..planes {
        let plane = &blurred[p * h * w..][..h * w];
        for y in 0..oh {
            for x in 0..ow {
                out.push(T::from_f64(plane[y * stride * w + x * stride]));
            }
        }
    }
    let mut out_extents = extents.to_vec();
    let nd = out_extents.len();
    out_extents[nd - 2] = oh;
    out_extents[nd - 1] = ow;
    Tensor::leaf(out, Shape::new(out_extents), false)
}

/// Apply the configured degradation to every frame of an HR sequence.
pub fn degrade<T: Scalar>(
    hr: &VideoSequence<T>,
    spec: &DegradationSpec,
) -> Result<VideoSequence<T>, DataError> {
    let (h, w) = hr.extents();
    if h % spec.scale != 0 || w % spec.scale != 0 {
        return Err(DataError::IndivisibleExtents { h, w, divisor: spec.scale });
    }
    let frames = hr
        .frames()
        .iter()
        .map(|f| match spec.kind {
            DegradationKind::Bi => bicubic_resize(f, 1.0 / spec.scale as f64),
            DegradationKind::Bd => bd_frame(f, spec),
        })
        .collect();
    VideoSequence::new(frames)
}
