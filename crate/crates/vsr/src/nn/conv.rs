//! 2-d cross-correlation kernels and their gradients.
//!
//! The hot loops are written as contiguous row AXPY / dot operations so the
//! compiler can vectorize them. Every reduction runs in a fixed order that
//! does not depend on seeds or thread counts, which keeps repeated runs
//! bit-identical.

use crate::tensor::Scalar;

/// out[i] += a * x[i]
#[inline]
fn axpy<T: Scalar>(out: &mut [T], x: &[T], a: T) {
    debug_assert_eq!(out.len(), x.len());
    for (o, &v) in out.iter_mut().zip(x) {
        *o = *o + a * v;
    }
}

/// Dot product with a fixed 8-lane accumulator tree.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [T::zero(); 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let pa = &a[i * 8..i * 8 + 8];
        let pb = &b[i * 8..i * 8 + 8];
        for l in 0..8 {
            lanes[l] = lanes[l] + pa[l] * pb[l];
        }
    }
    let mut acc = T::zero();
    for l in 0..8 {
        acc = acc + lanes[l];
    }
    for i in chunks * 8..a.len() {
        acc = acc + a[i] * b[i];
    }
    acc
}

/// Sum with the same fixed 8-lane tree as [`dot`].
#[inline]
fn sum_lanes<T: Scalar>(a: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let pa = &a[i * 8..i * 8 + 8];
        for l in 0..8 {
            lanes[l] = lanes[l] + pa[l];
        }
    }
    let mut acc = T::zero();
    for l in 0..8 {
        acc = acc + lanes[l];
    }
    for i in chunks * 8..a.len() {
        acc = acc + a[i];
    }
    acc
}

#[derive(Clone, Copy, Debug)]
pub struct ConvDims {
    pub batch: usize,
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvDims {
    pub fn out_h(&self) -> usize {
        (self.h + 2 * self.padding - self.k) / self.stride + 1
    }
    pub fn out_w(&self) -> usize {
        (self.w + 2 * self.padding - self.k) / self.stride + 1
    }
}

pub fn forward<T: Scalar>(x: &[T], weight: &[T], bias: &[T], d: ConvDims) -> Vec<T> {
    let (oh, ow) = (d.out_h(), d.out_w());
    let mut out = vec![T::zero(); d.batch * d.c_out * oh * ow];
    if d.stride == 1 {
        forward_stride1(x, weight, bias, d, &mut out);
    } else {
        forward_strided(x, weight, bias, d, &mut out);
    }
    out
}

fn forward_stride1<T: Scalar>(x: &[T], weight: &[T], bias: &[T], d: ConvDims, out: &mut [T]) {
    let (oh, ow) = (d.out_h(), d.out_w());
    let p = d.padding as isize;
    for n in 0..d.batch {
        for co in 0..d.c_out {
            let out_plane = &mut out[(n * d.c_out + co) * oh * ow..][..oh * ow];
            out_plane.fill(bias[co]);
            for ci in 0..d.c_in {
                let w_tap = &weight[(co * d.c_in + ci) * d.k * d.k..][..d.k * d.k];
                let x_plane = &x[(n * d.c_in + ci) * d.h * d.w..][..d.h * d.w];
                for oy in 0..oh {
                    let out_row = &mut out_plane[oy * ow..][..ow];
                    for ky in 0..d.k {
                        let iy = oy as isize + ky as isize - p;
                        if iy < 0 || iy >= d.h as isize {
                            continue;
                        }
                        let x_row = &x_plane[iy as usize * d.w..][..d.w];
                        for kx in 0..d.k {
                            let shift = kx as isize - p;
                            let lo = (-shift).max(0) as usize;
                            let hi = (d.w as isize - shift).min(ow as isize).max(0) as usize;
                            if lo >= hi {
                                continue;
                            }
                            let src = (lo as isize + shift) as usize;
                            axpy(
                                &mut out_row[lo..hi],
                                &x_row[src..src + (hi - lo)],
                                w_tap[ky * d.k + kx],
                            );
                        }
                    }
                }
            }
        }
    }
}

fn forward_strided<T: Scalar>(x: &[T], weight: &[T], bias: &[T], d: ConvDims, out: &mut [T]) {
    let (oh, ow) = (d.out_h(), d.out_w());
    let p = d.padding as isize;
    for n in 0..d.batch {
        for co in 0..d.c_out {
            let out_plane = &mut out[(n * d.c_out + co) * oh * ow..][..oh * ow];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias[co];
                    for ci in 0..d.c_in {
                        let w_tap = &weight[(co * d.c_in + ci) * d.k * d.k..][..d.k * d.k];
                        let x_plane = &x[(n * d.c_in + ci) * d.h * d.w..][..d.h * d.w];
                        for ky in 0..d.k {
                            let iy = (oy * d.stride + ky) as isize - p;
                            if iy < 0 || iy >= d.h as isize {
                                continue;
                            }
                            for kx in 0..d.k {
                                let ix = (ox * d.stride + kx) as isize - p;
                                if ix < 0 || ix >= d.w as isize {
                                    continue;
                                }
                                acc = acc
                                    + w_tap[ky * d.k + kx]
                                        * x_plane[iy as usize * d.w + ix as usize];
                            }
                        }
                    }
                    out_plane[oy * ow + ox] = acc;
                }
            }
        }
    }
}

/// Gradient w.r.t. the input.
pub fn backward_input<T: Scalar>(grad_out: &[T], weight: &[T], d: ConvDims) -> Vec<T> {
    let (oh, ow) = (d.out_h(), d.out_w());
    let p = d.padding as isize;
    let mut dx = vec![T::zero(); d.batch * d.c_in * d.h * d.w];
    if d.stride == 1 {
        for n in 0..d.batch {
            for ci in 0..d.c_in {
                let dx_plane = &mut dx[(n * d.c_in + ci) * d.h * d.w..][..d.h * d.w];
                for co in 0..d.c_out {
                    let w_tap = &weight[(co * d.c_in + ci) * d.k * d.k..][..d.k * d.k];
                    let g_plane = &grad_out[(n * d.c_out + co) * oh * ow..][..oh * ow];
                    for y in 0..d.h {
                        let dx_row = &mut dx_plane[y * d.w..][..d.w];
                        for ky in 0..d.k {
                            let gy = y as isize - ky as isize + p;
                            if gy < 0 || gy >= oh as isize {
                                continue;
                            }
                            let g_row = &g_plane[gy as usize * ow..][..ow];
                            for kx in 0..d.k {
                                let shift = p - kx as isize;
                                let lo = (-shift).max(0) as usize;
                                let hi = (ow as isize - shift).min(d.w as isize).max(0) as usize;
                                if lo >= hi {
                                    continue;
                                }
                                let src = (lo as isize + shift) as usize;
                                axpy(
                                    &mut dx_row[lo..hi],
                                    &g_row[src..src + (hi - lo)],
                                    w_tap[ky * d.k + kx],
                                );
                            }
                        }
                    }
                }
            }
        }
    } else {
        for n in 0..d.batch {
            for co in 0..d.c_out {
                let g_plane = &grad_out[(n * d.c_out + co) * oh * ow..][..oh * ow];
                for ci in 0..d.c_in {
                    let w_tap = &weight[(co * d.c_in + ci) * d.k * d.k..][..d.k * d.k];
                    let dx_plane = &mut dx[(n * d.c_in + ci) * d.h * d.w..][..d.h * d.w];
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let g = g_plane[oy * ow + ox];
                            for ky in 0..d.k {
                                let iy = (oy * d.stride + ky) as isize - p;
                                if iy < 0 || iy >= d.h as isize {
                                    continue;
                                }
                                for kx in 0..d.k {
                                    let ix = (ox * d.stride + kx) as isize - p;
                                    if ix < 0 || ix >= d.w as isize {
                                        continue;
                                    }
                                    let idx = iy as usize * d.w + ix as usize;
                                    dx_plane[idx] = dx_plane[idx] + g * w_tap[ky * d.k + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

/// Gradient w.r.t. the weights.
pub fn backward_weight<T: Scalar>(grad_out: &[T], x: &[T], d: ConvDims) -> Vec<T> {
    let (oh, ow) = (d.out_h(), d.out_w());
    let p = d.padding as isize;
    let mut dw = vec![T::zero(); d.c_out * d.c_in * d.k * d.k];
    if d.stride == 1 {
        for co in 0..d.c_out {
            for ci in 0..d.c_in {
                let dw_tap = &mut dw[(co * d.c_in + ci) * d.k * d.k..][..d.k * d.k];
                for n in 0..d.batch {
                    let g_plane = &grad_out[(n * d.c_out + co) * oh * ow..][..oh * ow];
                    let x_plane = &x[(n * d.c_in + ci) * d.h * d.w..][..d.h * d.w];
                    for ky in 0..d.k {
                        for kx in 0..d.k {
                            let shift = kx as isize - p;
                            let lo = (-shift).max(0) as usize;
                            let hi = (d.w as isize - shift).min(ow as isize).max(0) as usize;
                            if lo >= hi {
                                continue;
                            }
                            let src = (lo as isize + shift) as usize;
                            let mut acc = T::zero();
                            for oy in 0..oh {
                                let iy = oy as isize + ky as isize - p;
                                if iy < 0 || iy >= d.h as isize {
                                    continue;
                                }
                                acc = acc
                                    + dot(
                                        &g_plane[oy * ow + lo..oy * ow + hi],
                                        &x_plane[iy as usize * d.w + src
                                            ..iy as usize * d.w + src + (hi - lo)],
                                    );
                            }
                            dw_tap[ky * d.k + kx] = dw_tap[ky * d.k + kx] + acc;
                        }
                    }
                }
            }
        }
    } else {
        for co in 0..d.c_out {
            for ci in 0..d.c_in {
                let dw_tap = &mut dw[(co * d.c_in + ci) * d.k * d.k..][..d.k * d.k];
                for n in 0..d.batch {
                    let g_plane = &grad_out[(n * d.c_out + co) * oh * ow..][..oh * ow];
                    let x_plane = &x[(n * d.c_in + ci) * d.h * d.w..][..d.h * d.w];
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let g = g_plane[oy * ow + ox];
                            for ky in 0..d.k {
                                let iy = (oy * d.stride + ky) as isize - p;
                                if iy < 0 || iy >= d.h as isize {
                                    continue;
                                }
                                for kx in 0..d.k {
                                    let ix = (ox * d.stride + kx) as isize - p;
                                    if ix < 0 || ix >= d.w as isize {
                                        continue;
                                    }
                                    let wi = ky * d.k + kx;
                                    dw_tap[wi] = dw_tap[wi]
                                        + g * x_plane[iy as usize * d.w + ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    dw
}

/// Gradient w.r.t. the bias.
pub fn backward_bias<T: Scalar>(grad_out: &[T], d: ConvDims) -> Vec<T> {
    let (oh, ow) = (d.out_h(), d.out_w());
    let plane = oh * ow;
    let mut db = vec![T::zero(); d.c_out];
    for n in 0..d.batch {
        for co in 0..d.c_out {
            let g_plane = &grad_out[(n * d.c_out + co) * plane..][..plane];
            db[co] = db[co] + sum_lanes(g_plane);
        }
    }
    db
}
