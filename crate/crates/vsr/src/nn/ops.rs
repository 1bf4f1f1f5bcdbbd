//! Activations and differentiable geometry ops.

use crate::tensor::{Scalar, Shape, Tensor, TensorError};

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    leaky_relu(x, T::zero())
}

/// max(x, slope * x). The subgradient at 0 takes the positive branch
/// (slope 1).
pub fn leaky_relu<T: Scalar>(x: &Tensor<T>, slope: T) -> Tensor<T> {
    let data: Vec<T> =
        x.data().iter().map(|&v| if v >= T::zero() { v } else { slope * v }).collect();
    Tensor::from_op(
        data,
        x.shape().clone(),
        vec![x.clone()],
        Box::new(move |parents, _, g, sink| {
            let dg = parents[0]
                .data()
                .iter()
                .zip(g)
                .map(|(&v, &gv)| if v >= T::zero() { gv } else { slope * gv })
                .collect();
            sink(0, dg);
        }),
    )
}

fn shuffle_data<T: Scalar>(
    x: &[T],
    (n, c_out, h, w): (usize, usize, usize, usize),
    r: usize,
) -> Vec<T> {
    // x is (n, c_out*r^2, h, w); result is (n, c_out, h*r, w*r).
    let mut out = vec![T::zero(); x.len()];
    let (oh, ow) = (h * r, w * r);
    for b in 0..n {
        for c in 0..c_out {
            for a in 0..r {
                for bb in 0..r {
                    let src_plane = &x[((b * c_out + c) * r * r + a * r + bb) * h * w..][..h * w];
                    for y in 0..h {
                        let out_base = ((b * c_out + c) * oh + (y * r + a)) * ow;
                        let src_row = &src_plane[y * w..][..w];
                        for xx in 0..w {
                            out[out_base + xx * r + bb] = src_row[xx];
                        }
                    }
                }
            }
        }
    }
    out
}

fn unshuffle_data<T: Scalar>(
    x: &[T],
    (n, c_out, h, w): (usize, usize, usize, usize),
    r: usize,
) -> Vec<T> {
    // x is (n, c_out, h*r, w*r); result is (n, c_out*r^2, h, w).
    let mut out = vec![T::zero(); x.len()];
    let (ih, iw) = (h * r, w * r);
    for b in 0..n {
        for c in 0..c_out {
            let src_plane = &x[(b * c_out + c) * ih * iw..][..ih * iw];
            for a in 0..r {
                for bb in 0..r {
                    let dst_base = ((b * c_out + c) * r * r + a * r + bb) * h * w;
                    for y in 0..h {
                        let src_row = &src_plane[(y * r + a) * iw..][..iw];
                        for xx in 0..w {
                            out[dst_base + y * w + xx] = src_row[xx * r + bb];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Rearrange (N, C*r^2, H, W) into (N, C, rH, rW). Pure permutation, no
/// arithmetic.
pub fn pixel_shuffle<T: Scalar>(x: &Tensor<T>, r: usize) -> Result<Tensor<T>, TensorError> {
    let (n, c, h, w) = x.shape().dims4()?;
    assert!(r >= 1);
    if c % (r * r) != 0 {
        return Err(TensorError::Invalid {
            op: "pixel_shuffle",
            detail: format!("{c} channels not divisible by r^2 = {}", r * r),
        });
    }
    let c_out = c / (r * r);
    let data = shuffle_data(x.data(), (n, c_out, h, w), r);
    Ok(Tensor::from_op(
        data,
        Shape::new(vec![n, c_out, h * r, w * r]),
        vec![x.clone()],
        Box::new(move |_, _, g, sink| sink(0, unshuffle_data(g, (n, c_out, h, w), r))),
    ))
}

/// Inverse of [`pixel_shuffle`]: (N, C, rH, rW) into (N, C*r^2, H, W).
pub fn pixel_unshuffle<T: Scalar>(x: &Tensor<T>, r: usize) -> Result<Tensor<T>, TensorError> {
    let (n, c, ih, iw) = x.shape().dims4()?;
    assert!(r >= 1);
    if ih % r != 0 || iw % r != 0 {
        return Err(TensorError::Invalid {
            op: "pixel_unshuffle",
            detail: format!("extents {ih}x{iw} not divisible by r = {r}"),
        });
    }
    let (h, w) = (ih / r, iw / r);
    let data = unshuffle_data(x.data(), (n, c, h, w), r);
    Ok(Tensor::from_op(
        data,
        Shape::new(vec![n, c * r * r, h, w]),
        vec![x.clone()],
        Box::new(move |_, _, g, sink| sink(0, shuffle_data(g, (n, c, h, w), r))),
    ))
}

/// One axis of the align-corners=false sampling grid: for each output
/// index, the two source indices (clamped to the edge) and the blend
/// weight of the second one.
fn resize_axis(n_in: usize, n_out: usize, scale: f64) -> Vec<(usize, usize, f64)> {
    (0..n_out)
        .map(|d| {
            let src = (d as f64 + 0.5) / scale - 0.5;
            let floor = src.floor();
            let frac = src - floor;
            let i0 = (floor as isize).clamp(0, n_in as isize - 1) as usize;
            let i1 = (floor as isize + 1).clamp(0, n_in as isize - 1) as usize;
            (i0, i1, frac)
        })
        .collect()
}

/// Bilinear resampling with align-corners=false coordinates and edge
/// clamping. `scale` applies to both spatial axes.
pub fn bilinear_resize<T: Scalar>(x: &Tensor<T>, scale: f64) -> Result<Tensor<T>, TensorError> {
    assert!(scale > 0.0, "scale must be positive");
    let (n, c, h, w) = x.shape().dims4()?;
    let oh = ((h as f64 * scale).round() as usize).max(1);
    let ow = ((w as f64 * scale).round() as usize).max(1);

    let ys = resize_axis(h, oh, scale);
    let xs = resize_axis(w, ow, scale);

    let mut data = vec![T::zero(); n * c * oh * ow];
    for plane_idx in 0..n * c {
        let src = &x.data()[plane_idx * h * w..][..h * w];
        let dst = &mut data[plane_idx * oh * ow..][..oh * ow];
        for (oy, &(y0, y1, wy)) in ys.iter().enumerate() {
            let row0 = &src[y0 * w..][..w];
            let row1 = &src[y1 * w..][..w];
            let out_row = &mut dst[oy * ow..][..ow];
            let wy = T::from_f64(wy);
            let one = T::one();
            for (ox, &(x0, x1, wx)) in xs.iter().enumerate() {
                let wx = T::from_f64(wx);
                let top = row0[x0] * (one - wx) + row0[x1] * wx;
                let bot = row1[x0] * (one - wx) + row1[x1] * wx;
                out_row[ox] = top * (one - wy) + bot * wy;
            }
        }
    }

    Ok(Tensor::from_op(
        data,
        Shape::new(vec![n, c, oh, ow]),
        vec![x.clone()],
        Box::new(move |_, _, g, sink| {
            let mut dx = vec![T::zero(); n * c * h * w];
            let one = T::one();
            for plane_idx in 0..n * c {
                let dsrc = &mut dx[plane_idx * h * w..][..h * w];
                let gplane = &g[plane_idx * oh * ow..][..oh * ow];
                for (oy, &(y0, y1, wy)) in ys.iter().enumerate() {
                    let wy = T::from_f64(wy);
                    for (ox, &(x0, x1, wx)) in xs.iter().enumerate() {
                        let wx = T::from_f64(wx);
                        let gv = gplane[oy * ow + ox];
                        dsrc[y0 * w + x0] = dsrc[y0 * w + x0] + gv * (one - wy) * (one - wx);
                        dsrc[y0 * w + x1] = dsrc[y0 * w + x1] + gv * (one - wy) * wx;
                        dsrc[y1 * w + x0] = dsrc[y1 * w + x0] + gv * wy * (one - wx);
                        dsrc[y1 * w + x1] = dsrc[y1 * w + x1] + gv * wy * wx;
                    }
                }
            }
            sink(0, dx);
        }),
    ))
}

/// Per-pixel bilinear tap table for one batch item of a warp.
struct WarpTap {
    // Indices into an (H*W) plane; usize::MAX marks out-of-frame taps,
    // which contribute zero.
    idx: [usize; 4],
    wgt: [f64; 4],
}

fn warp_taps<T: Scalar>(flow: &[T], h: usize, w: usize) -> Vec<WarpTap> {
    let plane = h * w;
    let (u, v) = (&flow[..plane], &flow[plane..2 * plane]);
    let mut taps = Vec::with_capacity(plane);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let xs = x as f64 + u[i].to_f64_val();
            let ys = y as f64 + v[i].to_f64_val();
            let x0 = xs.floor();
            let y0 = ys.floor();
            let wx = xs - x0;
            let wy = ys - y0;
            let (x0, y0) = (x0 as isize, y0 as isize);
            let inside = |yy: isize, xx: isize| -> usize {
                if yy < 0 || xx < 0 || yy >= h as isize || xx >= w as isize {
                    usize::MAX
                } else {
                    yy as usize * w + xx as usize
                }
            };
            taps.push(WarpTap {
                idx: [
                    inside(y0, x0),
                    inside(y0, x0 + 1),
                    inside(y0 + 1, x0),
                    inside(y0 + 1, x0 + 1),
                ],
                wgt: [
                    (1.0 - wy) * (1.0 - wx),
                    (1.0 - wy) * wx,
                    wy * (1.0 - wx),
                    wy * wx,
                ],
            });
        }
    }
    taps
}

/// Backward-warp `feat` along `flow`: out(y, x) samples feat at
/// (x + u, y + v) bilinearly. Samples falling outside the frame contribute
/// zero. Differentiable w.r.t. both the features and the flow.
///
/// `feat` is (N, C, H, W); `flow` is (N, 2, H, W) with channel 0 the
/// horizontal displacement u and channel 1 the vertical displacement v, in
/// pixels.
pub fn flow_warp<T: Scalar>(feat: &Tensor<T>, flow: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (n, c, h, w) = feat.shape().dims4()?;
    let (fn_, fc, fh, fw) = flow.shape().dims4()?;
    if fn_ != n || fc != 2 || fh != h || fw != w {
        return Err(TensorError::ShapeMismatch {
            op: "flow_warp",
            lhs: feat.shape().clone(),
            rhs: flow.shape().clone(),
        });
    }

    let plane = h * w;
    let mut data = vec![T::zero(); n * c * plane];
    for b in 0..n {
        let taps = warp_taps(&flow.data()[b * 2 * plane..][..2 * plane], h, w);
        for ch in 0..c {
            let src = &feat.data()[(b * c + ch) * plane..][..plane];
            let dst = &mut data[(b * c + ch) * plane..][..plane];
            for (i, tap) in taps.iter().enumerate() {
                let mut acc = T::zero();
                for t in 0..4 {
                    if tap.idx[t] != usize::MAX {
                        acc = acc + T::from_f64(tap.wgt[t]) * src[tap.idx[t]];
                    }
                }
                dst[i] = acc;
            }
        }
    }

    Ok(Tensor::from_op(
        data,
        feat.shape().clone(),
        vec![feat.clone(), flow.clone()],
        Box::new(move |parents, _, g, sink| {
            let feat_p = &parents[0];
            let flow_p = &parents[1];
            let want_feat = feat_p.is_tracked();
            let want_flow = flow_p.is_tracked();
            let mut dfeat = vec![T::zero(); n * c * plane];
            let mut dflow = vec![T::zero(); n * 2 * plane];

            for b in 0..n {
                let taps = warp_taps(&flow_p.data()[b * 2 * plane..][..2 * plane], h, w);
                for ch in 0..c {
                    let gplane = &g[(b * c + ch) * plane..][..plane];
                    let src = &feat_p.data()[(b * c + ch) * plane..][..plane];
                    if want_feat {
                        let dplane = &mut dfeat[(b * c + ch) * plane..][..plane];
                        for (i, tap) in taps.iter().enumerate() {
                            let gv = gplane[i];
                            for t in 0..4 {
                                if tap.idx[t] != usize::MAX {
                                    dplane[tap.idx[t]] =
                                        dplane[tap.idx[t]] + gv * T::from_f64(tap.wgt[t]);
                                }
                            }
                        }
                    }
                    if want_flow {
                        let (du, dv) = dflow[b * 2 * plane..][..2 * plane].split_at_mut(plane);
                        for (i, tap) in taps.iter().enumerate() {
                            let gv = gplane[i].to_f64_val();
                            let val = |t: usize| -> f64 {
                                if tap.idx[t] == usize::MAX {
                                    0.0
                                } else {
                                    src[tap.idx[t]].to_f64_val()
                                }
                            };
                            // Weights are (1-wy)(1-wx), (1-wy)wx, wy(1-wx),
                            // wy*wx; their derivative w.r.t. the sample
                            // position reduces to tap differences.
                            let wy = tap.wgt[2] + tap.wgt[3];
                            let wx = tap.wgt[1] + tap.wgt[3];
                            let d_dx =
                                (1.0 - wy) * (val(1) - val(0)) + wy * (val(3) - val(2));
                            let d_dy =
                                (1.0 - wx) * (val(2) - val(0)) + wx * (val(3) - val(1));
                            du[i] = du[i] + T::from_f64(gv * d_dx);
                            dv[i] = dv[i] + T::from_f64(gv * d_dy);
                        }
                    }
                }
            }
            if want_feat {
                sink(0, dfeat);
            }
            if want_flow {
                sink(1, dflow);
            }
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::finite_diff_check;
    use crate::tensor::rng::Rng;

    #[test]
    fn leaky_relu_values() {
        let x = Tensor::from_vec(vec![-2.0f64, 0.0, 3.0], [3]).unwrap();
        let y = leaky_relu(&x, 0.1);
        assert_eq!(y.data(), &[-0.2, 0.0, 3.0]);
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 3.0]);
    }

    #[test]
    fn activation_subgradient_at_zero_is_positive_branch() {
        let x = Tensor::from_vec(vec![0.0f64], [1]).unwrap().requires_grad();
        leaky_relu(&x, 0.1).sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0]);
        x.zero_grad();
        relu(&x).sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0]);
    }

    #[test]
    fn activation_gradcheck() {
        let mut rng = Rng::new(11);
        // Keep inputs away from the kink so finite differences are valid.
        let data: Vec<f64> =
            (0..24).map(|_| {
                let v = rng.normal();
                if v.abs() < 0.05 { v + 0.2 } else { v }
            }).collect();
        let x = Tensor::from_vec(data, [24]).unwrap().requires_grad();
        let report = finite_diff_check(&[x], |inp| {
            let y = leaky_relu(&inp[0], 0.1);
            y.mul(&y).unwrap().mean()
        });
        assert!(report.max_rel_err < 1e-4, "rel err {}", report.max_rel_err);
    }

    #[test]
    fn pixel_shuffle_2x2_block() {
        let x = Tensor::from_vec(vec![1.0f64, 2.0, 3.0, 4.0], [1, 4, 1, 1]).unwrap();
        let y = pixel_shuffle(&x, 2).unwrap();
        assert_eq!(y.shape().extents(), &[1, 1, 2, 2]);
        assert_eq!(y.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn pixel_shuffle_r1_is_identity() {
        let x = Tensor::from_vec((0..12).map(|v| v as f64).collect(), [1, 3, 2, 2]).unwrap();
        let y = pixel_shuffle(&x, 1).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn pixel_shuffle_matches_index_oracle() {
        let mut rng = Rng::new(13);
        let (n, c, h, w, r) = (2, 8, 3, 4, 2);
        let data: Vec<f64> = (0..n * c * h * w).map(|_| rng.normal()).collect();
        let x = Tensor::from_vec(data.clone(), [n, c, h, w]).unwrap();
        let y = pixel_shuffle(&x, r).unwrap();
        let c_out = c / (r * r);
        for b in 0..n {
            for co in 0..c_out {
                for oy in 0..h * r {
                    for ox in 0..w * r {
                        let (hh, a) = (oy / r, oy % r);
                        let (ww, bb) = (ox / r, ox % r);
                        let src = data[((b * c + co * r * r + a * r + bb) * h + hh) * w + ww];
                        let got = y.data()[((b * c_out + co) * h * r + oy) * w * r + ox];
                        assert_eq!(got.to_bits(), src.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn pixel_shuffle_preserves_sum_and_inverts() {
        let mut rng = Rng::new(14);
        let data: Vec<f64> = (0..1 * 8 * 3 * 3).map(|_| rng.normal()).collect();
        let x = Tensor::from_vec(data.clone(), [1, 8, 3, 3]).unwrap();
        let y = pixel_shuffle(&x, 2).unwrap();
        assert!((y.data().iter().sum::<f64>() - data.iter().sum::<f64>()).abs() < 1e-12);
        let back = pixel_unshuffle(&y, 2).unwrap();
        assert_eq!(back.data(), &data[..]);
    }

    #[test]
    fn pixel_shuffle_rejects_indivisible_channels() {
        let x = Tensor::<f32>::zeros([1, 6, 2, 2]);
        assert!(pixel_shuffle(&x, 2).is_err());
    }

    #[test]
    fn pixel_shuffle_gradcheck() {
        let mut rng = Rng::new(15);
        let data: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
        let x = Tensor::from_vec(data, [1, 4, 2, 2]).unwrap().requires_grad();
        let report = finite_diff_check(&[x], |inp| {
            let y = pixel_shuffle(&inp[0], 2).unwrap();
            y.mul(&y).unwrap().mean()
        });
        assert!(report.max_rel_err < 1e-4, "rel err {}", report.max_rel_err);
    }

    #[test]
    fn bilinear_constant_stays_constant() {
        for scale in [0.5, 2.0, 4.0, 3.0] {
            let x = Tensor::full([1, 1, 4, 4], 0.7f64);
            let y = bilinear_resize(&x, scale).unwrap();
            for &v in y.data() {
                assert!((v - 0.7).abs() < 1e-12, "scale {scale}: {v}");
            }
        }
    }

    #[test]
    fn bilinear_scale_one_is_identity() {
        let mut rng = Rng::new(16);
        let data: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
        let x = Tensor::from_vec(data.clone(), [1, 1, 4, 4]).unwrap();
        let y = bilinear_resize(&x, 1.0).unwrap();
        assert_eq!(y.data(), &data[..]);
    }

    #[test]
    fn bilinear_1d_row_matches_sampling_formula() {
        let x = Tensor::from_vec(vec![0.0f64, 1.0], [1, 1, 1, 2]).unwrap();
        let y = bilinear_resize(&x, 2.0).unwrap();
        // Oracle: sample source coordinate (d + 0.5) / 2 - 0.5 with edge
        // clamping, computed directly.
        let src = [0.0f64, 1.0];
        let expect: Vec<f64> = (0..4)
            .map(|d| {
                let s = (d as f64 + 0.5) / 2.0 - 0.5;
                let i0 = (s.floor() as isize).clamp(0, 1) as usize;
                let i1 = (s.floor() as isize + 1).clamp(0, 1) as usize;
                let frac = s - s.floor();
                src[i0] * (1.0 - frac) + src[i1] * frac
            })
            .collect();
        // The last row of y is (0, 0.25, 0.75, 1).
        assert_eq!(y.shape().extents(), &[1, 1, 2, 4]);
        for (a, e) in y.data()[..4].iter().zip(&expect) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn bilinear_gradcheck() {
        let mut rng = Rng::new(17);
        let data: Vec<f64> = (0..2 * 4 * 4).map(|_| rng.normal()).collect();
        let x = Tensor::from_vec(data, [1, 2, 4, 4]).unwrap().requires_grad();
        for scale in [0.5, 2.0, 4.0] {
            let report = finite_diff_check(&[x.clone()], |inp| {
                let y = bilinear_resize(&inp[0], scale).unwrap();
                y.mul(&y).unwrap().mean()
            });
            assert!(report.max_rel_err < 1e-4, "scale {scale}: {}", report.max_rel_err);
            x.zero_grad();
        }
    }

    #[test]
    fn warp_zero_flow_is_bit_identity() {
        let mut rng = Rng::new(18);
        let data: Vec<f64> = (0..3 * 5 * 5).map(|_| rng.uniform()).collect();
        let feat = Tensor::from_vec(data.clone(), [1, 3, 5, 5]).unwrap();
        let flow = Tensor::zeros([1, 2, 5, 5]);
        let out = flow_warp(&feat, &flow).unwrap();
        let same = out.data().iter().zip(&data).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }

    #[test]
    fn warp_unit_shift_with_zero_fill() {
        let feat = Tensor::from_vec(vec![3.0f64, 7.0], [1, 1, 1, 2]).unwrap();
        let flow = Tensor::from_vec(vec![1.0f64, 1.0, 0.0, 0.0], [1, 2, 1, 2]).unwrap();
        let out = flow_warp(&feat, &flow).unwrap();
        assert_eq!(out.data(), &[7.0, 0.0]);
    }

    #[test]
    fn warp_half_shift_blends_with_zero_pad() {
        let feat = Tensor::from_vec(vec![3.0f64, 7.0], [1, 1, 1, 2]).unwrap();
        let flow = Tensor::from_vec(vec![0.5f64, 0.5, 0.0, 0.0], [1, 2, 1, 2]).unwrap();
        let out = flow_warp(&feat, &flow).unwrap();
        assert_eq!(out.data(), &[5.0, 3.5]);
    }

    #[test]
    fn warp_integer_flow_equals_shift() {
        let mut rng = Rng::new(19);
        let (h, w) = (6, 7);
        let data: Vec<f64> = (0..2 * h * w).map(|_| rng.uniform()).collect();
        let feat = Tensor::from_vec(data.clone(), [1, 2, h, w]).unwrap();
        let (du, dv) = (2.0, -1.0);
        let mut flow_data = vec![du; h * w];
        flow_data.extend(vec![dv; h * w]);
        let flow = Tensor::from_vec(flow_data, [1, 2, h, w]).unwrap();
        let out = flow_warp(&feat, &flow).unwrap();
        for c in 0..2 {
            for y in 0..h {
                for x in 0..w {
                    let sy = y as isize + dv as isize;
                    let sx = x as isize + du as isize;
                    let expect = if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                        0.0
                    } else {
                        data[(c * h + sy as usize) * w + sx as usize]
                    };
                    let got = out.data()[(c * h + y) * w + x];
                    assert_eq!(got.to_bits(), expect.to_bits(), "c={c} y={y} x={x}");
                }
            }
        }
    }

    #[test]
    fn warp_of_ones_shows_boundary_fade() {
        let feat = Tensor::full([1, 1, 4, 4], 1.0f64);
        let mut flow_data = vec![0.5; 16];
        flow_data.extend(vec![0.0; 16]);
        let flow = Tensor::from_vec(flow_data, [1, 2, 4, 4]).unwrap();
        let out = flow_warp(&feat, &flow).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let v = out.data()[y * 4 + x];
                assert!((0.0..=1.0).contains(&v));
                if x < 3 {
                    assert_eq!(v, 1.0, "interior pixel ({y},{x})");
                } else {
                    assert!(v < 1.0, "boundary pixel ({y},{x}) = {v}");
                }
            }
        }
    }

    #[test]
    fn warp_gradcheck_wrt_features_and_flow() {
        let mut rng = Rng::new(20);
        let (h, w) = (5, 5);
        let feat_data: Vec<f64> = (0..2 * h * w).map(|_| rng.normal()).collect();
        // Flow values kept away from integers so the warp is smooth at the
        // probe points.
        let flow_data: Vec<f64> = (0..2 * h * w)
            .map(|_| {
                let v = rng.uniform_in(-1.4, 1.4);
                let frac = (v - v.floor()).abs();
                if frac < 0.1 || frac > 0.9 { v + 0.3 } else { v }
            })
            .collect();
        let feat = Tensor::from_vec(feat_data, [1, 2, h, w]).unwrap().requires_grad();
        let flow = Tensor::from_vec(flow_data, [1, 2, h, w]).unwrap().requires_grad();
        let report = finite_diff_check(&[feat, flow], |inp| {
            let y = flow_warp(&inp[0], &inp[1]).unwrap();
            y.mul(&y).unwrap().mean()
        });
        assert!(report.max_rel_err < 1e-4, "rel err {}", report.max_rel_err);
    }

    #[test]
    fn warp_shape_mismatch_is_an_error() {
        let feat = Tensor::<f32>::zeros([1, 3, 4, 4]);
        let flow = Tensor::<f32>::zeros([1, 2, 5, 4]);
        assert!(flow_warp(&feat, &flow).is_err());
    }
}
