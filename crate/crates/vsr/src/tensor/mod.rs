//! Dense tensors with reverse-mode automatic differentiation.
//!
//! Everything numeric in this crate flows through [`Tensor`]: a row-major
//! contiguous array of `f32` or `f64` values with an optional recorded
//! compute graph. Graph recording happens implicitly whenever an operation
//! touches a tracked tensor and gradient mode is on (see [`no_grad`]).
//! Calling [`Tensor::backward`] on a scalar result fills the `grad` slot of
//! every `requires_grad` leaf that contributed to it.

mod autograd;
pub mod ops;
pub mod rng;
pub mod serial;

pub use autograd::{is_grad_enabled, no_grad};

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use num_traits::Float;
use thiserror::Error;

use autograd::Node;

/// Element type tag used by the serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dtype::F32 => write!(f, "f32"),
            Dtype::F64 => write!(f, "f64"),
        }
    }
}

/// Real element type of a [`Tensor`]. Implemented for `f32` and `f64` only.
pub trait Scalar:
    Float + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    const DTYPE: Dtype;
    const BYTES: usize;

    fn from_f64(x: f64) -> Self;
    fn to_f64_val(self) -> f64;
    fn push_le_bytes(self, out: &mut Vec<u8>);
    fn from_le_slice(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const DTYPE: Dtype = Dtype::F32;
    const BYTES: usize = 4;

    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64_val(self) -> f64 {
        self as f64
    }
    fn push_le_bytes(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn from_le_slice(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("f32 needs 4 bytes"))
    }
}

impl Scalar for f64 {
    const DTYPE: Dtype = Dtype::F64;
    const BYTES: usize = 8;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64_val(self) -> f64 {
        self
    }
    fn push_le_bytes(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn from_le_slice(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("f64 needs 8 bytes"))
    }
}

/// Row-major extents of a tensor. Extents are always >= 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(extents: Vec<usize>) -> Self {
        Shape(extents)
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    pub fn extents(&self) -> &[usize] {
        &self.0
    }

    /// Destructure as (N, C, H, W).
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize), TensorError> {
        match self.0[..] {
            [n, c, h, w] => Ok((n, c, h, w)),
            _ => Err(TensorError::BadRank { expected: 4, shape: self.clone() }),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Vec<usize>> for Shape {
    fn from(v: Vec<usize>) -> Self {
        Shape(v)
    }
}

impl From<&[usize]> for Shape {
    fn from(v: &[usize]) -> Self {
        Shape(v.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for Shape {
    fn from(v: [usize; N]) -> Self {
        Shape(v.to_vec())
    }
}

impl std::ops::Index<usize> for Shape {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    ShapeMismatch { op: &'static str, lhs: Shape, rhs: Shape },
    #[error("data length {len} does not match shape {shape} with {numel} elements")]
    LengthMismatch { len: usize, shape: Shape, numel: usize },
    #[error("shape {shape} has a zero extent")]
    ZeroExtent { shape: Shape },
    #[error("backward root must be a scalar, got shape {0}")]
    NonScalarRoot(Shape),
    #[error("backward called on a tensor detached from any graph")]
    DetachedBackward,
    #[error("expected a {expected}-d tensor, got shape {shape}")]
    BadRank { expected: usize, shape: Shape },
    #[error("{op}: {detail}")]
    Invalid { op: &'static str, detail: String },
}

fn next_id() -> u64 {
    static COUNTER: AtomicU64 = AtomicU64::new(1);
    COUNTER.fetch_add(1, Ordering::Relaxed)
}

pub(crate) struct Inner<T: Scalar> {
    id: u64,
    shape: Shape,
    data: Vec<T>,
    requires_grad: bool,
    grad: RwLock<Option<Vec<T>>>,
    node: Option<Node<T>>,
}

/// Shared handle to an immutable tensor value. Cloning is cheap.
pub struct Tensor<T: Scalar> {
    inner: Arc<Inner<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor { inner: Arc::clone(&self.inner) }
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn from_vec(data: Vec<T>, shape: impl Into<Shape>) -> Result<Self, TensorError> {
        let shape = shape.into();
        if shape.extents().iter().any(|&e| e == 0) {
            return Err(TensorError::ZeroExtent { shape });
        }
        let numel = shape.numel();
        if data.len() != numel {
            return Err(TensorError::LengthMismatch { len: data.len(), shape, numel });
        }
        Ok(Self::leaf(data, shape, false))
    }

    pub fn zeros(shape: impl Into<Shape>) -> Self {
        let shape = shape.into();
        let n = shape.numel();
        Self::leaf(vec![T::zero(); n], shape, false)
    }

    pub fn full(shape: impl Into<Shape>, value: T) -> Self {
        let shape = shape.into();
        let n = shape.numel();
        Self::leaf(vec![value; n], shape, false)
    }

    /// A scalar tensor of shape (1,).
    pub fn scalar(value: T) -> Self {
        Self::leaf(vec![value], Shape::new(vec![1]), false)
    }

    /// Mark this leaf as a trainable parameter. Gradients accumulate into
    /// its `grad` slot on backward.
    pub fn requires_grad(self) -> Self {
        assert!(self.inner.node.is_none(), "requires_grad applies to leaves only");
        let inner = Inner {
            id: self.inner.id,
            shape: self.inner.shape.clone(),
            data: self.inner.data.clone(),
            requires_grad: true,
            grad: RwLock::new(None),
            node: None,
        };
        Tensor { inner: Arc::new(inner) }
    }

    pub(crate) fn leaf(data: Vec<T>, shape: Shape, requires_grad: bool) -> Self {
        Tensor {
            inner: Arc::new(Inner {
                id: next_id(),
                shape,
                data,
                requires_grad,
                grad: RwLock::new(None),
                node: None,
            }),
        }
    }

    pub(crate) fn from_node(data: Vec<T>, shape: Shape, node: Node<T>) -> Self {
        Tensor {
            inner: Arc::new(Inner {
                id: next_id(),
                shape,
                data,
                requires_grad: false,
                grad: RwLock::new(None),
                node: Some(node),
            }),
        }
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &Shape {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.numel()
    }

    pub fn data(&self) -> &[T] {
        &self.inner.data
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.numel(), 1, "item() on non-scalar tensor");
        self.inner.data[0]
    }

    pub fn is_param(&self) -> bool {
        self.inner.requires_grad
    }

    /// True when this tensor participates in gradient recording.
    pub fn is_tracked(&self) -> bool {
        self.inner.requires_grad || self.inner.node.is_some()
    }

    /// Copy of the accumulated gradient, if backward has produced one.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.read().expect("grad lock poisoned").clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.write().expect("grad lock poisoned") = None;
    }

    /// Same values as a fresh untracked leaf.
    pub fn detach(&self) -> Tensor<T> {
        Self::leaf(self.inner.data.clone(), self.inner.shape.clone(), false)
    }

    pub fn all_finite(&self) -> bool {
        self.inner.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn node(&self) -> Option<&Node<T>> {
        self.inner.node.as_ref()
    }

    pub(crate) fn accumulate_grad(&self, g: &[T]) {
        let mut slot = self.inner.grad.write().expect("grad lock poisoned");
        match slot.as_mut() {
            Some(existing) => {
                for (a, b) in existing.iter_mut().zip(g) {
                    *a = *a + *b;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{}[{}", self.inner.shape, T::DTYPE)?;
        if self.inner.requires_grad {
            write!(f, ", param")?;
        }
        if self.inner.node.is_some() {
            write!(f, ", tracked")?;
        }
        write!(f, "]")
    }
}
