//! Elementwise, reduction and layout ops on tensors.
//!
//! Elementwise binary ops require identical shapes; the only broadcasting in
//! this engine is tensor-by-scalar. Reductions run in a fixed left-to-right
//! order so results are reproducible bit for bit.

use super::{Scalar, Shape, Tensor, TensorError};

impl<T: Scalar> Tensor<T> {
    fn check_same_shape(&self, other: &Tensor<T>, op: &'static str) -> Result<(), TensorError> {
        if self.shape() != other.shape() {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: self.shape().clone(),
                rhs: other.shape().clone(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        self.check_same_shape(other, "add")?;
        let data = self.data().iter().zip(other.data()).map(|(&a, &b)| a + b).collect();
        Ok(Tensor::from_op(
            data,
            self.shape().clone(),
            vec![self.clone(), other.clone()],
            Box::new(|_, _, g, sink| {
                sink(0, g.to_vec());
                sink(1, g.to_vec());
            }),
        ))
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        self.check_same_shape(other, "sub")?;
        let data = self.data().iter().zip(other.data()).map(|(&a, &b)| a - b).collect();
        Ok(Tensor::from_op(
            data,
            self.shape().clone(),
            vec![self.clone(), other.clone()],
            Box::new(|_, _, g, sink| {
                sink(0, g.to_vec());
                sink(1, g.iter().map(|&v| -v).collect());
            }),
        ))
    }

    pub fn mul(&self, other: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        self.check_same_shape(other, "mul")?;
        let data = self.data().iter().zip(other.data()).map(|(&a, &b)| a * b).collect();
        Ok(Tensor::from_op(
            data,
            self.shape().clone(),
            vec![self.clone(), other.clone()],
            Box::new(|parents, _, g, sink| {
                if parents[0].is_tracked() {
                    sink(0, g.iter().zip(parents[1].data()).map(|(&gv, &b)| gv * b).collect());
                }
                if parents[1].is_tracked() {
                    sink(1, g.iter().zip(parents[0].data()).map(|(&gv, &a)| gv * a).collect());
                }
            }),
        ))
    }

    /// Multiply every element by a scalar.
    pub fn scale(&self, factor: T) -> Tensor<T> {
        let data = self.data().iter().map(|&a| a * factor).collect();
        Tensor::from_op(
            data,
            self.shape().clone(),
            vec![self.clone()],
            Box::new(move |_, _, g, sink| sink(0, g.iter().map(|&v| v * factor).collect())),
        )
    }

    /// Add a scalar to every element.
    pub fn add_scalar(&self, offset: T) -> Tensor<T> {
        let data = self.data().iter().map(|&a| a + offset).collect();
        Tensor::from_op(
            data,
            self.shape().clone(),
            vec![self.clone()],
            Box::new(|_, _, g, sink| sink(0, g.to_vec())),
        )
    }

    /// Elementwise square root.
    pub fn sqrt(&self) -> Tensor<T> {
        let data: Vec<T> = self.data().iter().map(|&a| a.sqrt()).collect();
        Tensor::from_op(
            data,
            self.shape().clone(),
            vec![self.clone()],
            Box::new(|_, out, g, sink| {
                let half = T::from_f64(0.5);
                sink(0, g.iter().zip(out).map(|(&gv, &o)| gv * half / o).collect());
            }),
        )
    }

    /// Sum of all elements, left to right, as a (1,) tensor.
    pub fn sum(&self) -> Tensor<T> {
        let mut acc = T::zero();
        for &v in self.data() {
            acc = acc + v;
        }
        let n = self.numel();
        Tensor::from_op(
            vec![acc],
            Shape::new(vec![1]),
            vec![self.clone()],
            Box::new(move |_, _, g, sink| sink(0, vec![g[0]; n])),
        )
    }

    /// Mean of all elements as a (1,) tensor.
    pub fn mean(&self) -> Tensor<T> {
        let n = self.numel();
        let inv = T::from_f64(1.0 / n as f64);
        let mut acc = T::zero();
        for &v in self.data() {
            acc = acc + v;
        }
        Tensor::from_op(
            vec![acc * inv],
            Shape::new(vec![1]),
            vec![self.clone()],
            Box::new(move |_, _, g, sink| sink(0, vec![g[0] * inv; n])),
        )
    }

    /// Concatenate 4-d tensors along the channel axis. All other extents
    /// must agree.
    pub fn concat_channels(parts: &[&Tensor<T>]) -> Result<Tensor<T>, TensorError> {
        assert!(!parts.is_empty(), "concat_channels needs at least one input");
        let (n, _, h, w) = parts[0].shape().dims4()?;
        let mut c_total = 0;
        for p in parts {
            let (pn, pc, ph, pw) = p.shape().dims4()?;
            if (pn, ph, pw) != (n, h, w) {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_channels",
                    lhs: parts[0].shape().clone(),
                    rhs: p.shape().clone(),
                });
            }
            c_total += pc;
        }

        let plane = h * w;
        let mut data = vec![T::zero(); n * c_total * plane];
        for b in 0..n {
            let mut c_off = 0;
            for p in parts {
                let pc = p.shape()[1];
                let src = &p.data()[b * pc * plane..(b + 1) * pc * plane];
                let dst_start = (b * c_total + c_off) * plane;
                data[dst_start..dst_start + pc * plane].copy_from_slice(src);
                c_off += pc;
            }
        }

        let channels: Vec<usize> = parts.iter().map(|p| p.shape()[1]).collect();
        let parents: Vec<Tensor<T>> = parts.iter().map(|p| (*p).clone()).collect();
        Ok(Tensor::from_op(
            data,
            Shape::new(vec![n, c_total, h, w]),
            parents,
            Box::new(move |parents, _, g, sink| {
                for (idx, parent) in parents.iter().enumerate() {
                    if !parent.is_tracked() {
                        continue;
                    }
                    let pc = channels[idx];
                    let c_off: usize = channels[..idx].iter().sum();
                    let mut pg = vec![T::zero(); n * pc * plane];
                    for b in 0..n {
                        let src_start = (b * c_total + c_off) * plane;
                        pg[b * pc * plane..(b + 1) * pc * plane]
                            .copy_from_slice(&g[src_start..src_start + pc * plane]);
                    }
                    sink(idx, pg);
                }
            }),
        ))
    }

    /// Contiguous slice along one axis.
    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Result<Tensor<T>, TensorError> {
        let extents = self.shape().extents();
        if axis >= extents.len() {
            return Err(TensorError::Invalid {
                op: "narrow",
                detail: format!("axis {axis} out of range for shape {}", self.shape()),
            });
        }
        if len == 0 || start + len > extents[axis] {
            return Err(TensorError::Invalid {
                op: "narrow",
                detail: format!(
                    "range {start}..{} out of bounds for extent {} on axis {axis}",
                    start + len,
                    extents[axis]
                ),
            });
        }

        let outer: usize = extents[..axis].iter().product();
        let inner: usize = extents[axis + 1..].iter().product();
        let full = extents[axis];

        let mut out_extents = extents.to_vec();
        out_extents[axis] = len;
        let mut data = vec![T::zero(); outer * len * inner];
        for o in 0..outer {
            let src = (o * full + start) * inner;
            let dst = o * len * inner;
            data[dst..dst + len * inner].copy_from_slice(&self.data()[src..src + len * inner]);
        }

        let parent_numel = self.numel();
        Ok(Tensor::from_op(
            data,
            Shape::new(out_extents),
            vec![self.clone()],
            Box::new(move |_, _, g, sink| {
                let mut pg = vec![T::zero(); parent_numel];
                for o in 0..outer {
                    let dst = (o * full + start) * inner;
                    let src = o * len * inner;
                    pg[dst..dst + len * inner].copy_from_slice(&g[src..src + len * inner]);
                }
                sink(0, pg);
            }),
        ))
    }

    /// Values clamped to [lo, hi]. Plain data transform for evaluation and
    /// output paths; not recorded in the graph.
    pub fn clamp(&self, lo: T, hi: T) -> Tensor<T> {
        let data: Vec<T> = self
            .data()
            .iter()
            .map(|&v| if v < lo { lo } else if v > hi { hi } else { v })
            .collect();
        Tensor::leaf(data, self.shape().clone(), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::no_grad;

    fn param(data: Vec<f64>, shape: impl Into<Shape>) -> Tensor<f64> {
        Tensor::from_vec(data, shape).unwrap().requires_grad()
    }

    #[test]
    fn add_elementwise() {
        let a = Tensor::from_vec(vec![1.0f64, 2.0], [2]).unwrap();
        let b = Tensor::from_vec(vec![3.0f64, 4.0], [2]).unwrap();
        assert_eq!(a.add(&b).unwrap().data(), &[4.0, 6.0]);
    }

    #[test]
    fn add_shape_mismatch_names_both_shapes() {
        let a = Tensor::<f32>::zeros([2, 3]);
        let b = Tensor::<f32>::zeros([3, 2]);
        let err = a.add(&b).unwrap_err().to_string();
        assert!(err.contains("(2, 3)") && err.contains("(3, 2)"), "{err}");
    }

    #[test]
    fn concat_channel_arithmetic() {
        let a = Tensor::<f32>::zeros([1, 3, 4, 4]);
        let b = Tensor::<f32>::zeros([1, 5, 4, 4]);
        let c = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.shape().extents(), &[1, 8, 4, 4]);
    }

    #[test]
    fn concat_interleaves_per_batch_item() {
        let a = Tensor::from_vec(vec![1.0f64, 2.0, 10.0, 20.0], [2, 2, 1, 1]).unwrap();
        let b = Tensor::from_vec(vec![3.0f64, 30.0], [2, 1, 1, 1]).unwrap();
        let c = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.shape().extents(), &[2, 3, 1, 1]);
        assert_eq!(c.data(), &[1.0, 2.0, 3.0, 10.0, 20.0, 30.0]);
    }

    #[test]
    fn sum_backward_is_ones() {
        let x = param(vec![1.0, -2.0, 0.5], [3]);
        x.sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn square_sum_gradient() {
        let x = param(vec![3.0], [1]);
        x.mul(&x).unwrap().sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![6.0]);
    }

    #[test]
    fn mean_gradient() {
        let x = param(vec![1.0, 2.0, 3.0, 4.0], [4]);
        x.mean().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn fan_out_accumulates() {
        let x = param(vec![5.0], [1]);
        x.add(&x).unwrap().sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0]);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let x = param(vec![1.0, 2.0], [2]);
        let y = x.add(&x).unwrap();
        assert!(matches!(y.backward(), Err(TensorError::NonScalarRoot(_))));
    }

    #[test]
    fn backward_on_detached_fails() {
        let x = Tensor::from_vec(vec![1.0f64], [1]).unwrap();
        assert!(matches!(x.backward(), Err(TensorError::DetachedBackward)));
    }

    #[test]
    fn no_grad_suppresses_recording() {
        let x = param(vec![2.0], [1]);
        let y = no_grad(|| x.mul(&x).unwrap());
        assert!(!y.is_tracked());
    }

    #[test]
    fn narrow_slices_and_backscatters() {
        let x = param(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [2, 3]);
        let s = x.narrow(1, 1, 2).unwrap();
        assert_eq!(s.shape().extents(), &[2, 2]);
        assert_eq!(s.data(), &[2.0, 3.0, 5.0, 6.0]);
        s.sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn narrow_out_of_bounds() {
        let x = Tensor::<f32>::zeros([2, 3]);
        assert!(x.narrow(1, 2, 2).is_err());
        assert!(x.narrow(2, 0, 1).is_err());
    }

    #[test]
    fn zero_extent_rejected() {
        assert!(matches!(
            Tensor::<f32>::from_vec(vec![], vec![0, 3]),
            Err(TensorError::ZeroExtent { .. })
        ));
    }
}
