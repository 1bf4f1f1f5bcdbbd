//! Graph recording and reverse-mode traversal.

use std::cell::Cell;
use std::collections::{HashMap, HashSet};

use super::{Scalar, Tensor, TensorError};

/// Receives per-parent gradient contributions during backward.
/// The first argument is the parent's position in the node's parent list.
pub(crate) type GradSink<'a, T> = dyn FnMut(usize, Vec<T>) + 'a;

/// Local backward rule of a recorded op: given the parents, the op's output
/// values and the gradient w.r.t. the output, emit gradients w.r.t. each
/// tracked parent through the sink.
pub(crate) type BackwardFn<T> =
    Box<dyn Fn(&[Tensor<T>], &[T], &[T], &mut GradSink<'_, T>) + Send + Sync>;

pub(crate) struct Node<T: Scalar> {
    pub parents: Vec<Tensor<T>>,
    pub backward: BackwardFn<T>,
}

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(|c| c.get())
}

/// Run `f` with graph recording disabled. Ops executed inside produce plain
/// values, keep no parent references, and free their inputs as soon as the
/// handles drop. Restores the previous mode on exit, including on panic.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|c| c.set(self.0));
        }
    }
    let _restore = Restore(GRAD_ENABLED.with(|c| c.replace(false)));
    f()
}

impl<T: Scalar> Tensor<T> {
    /// Record the result of an op. The node (and thus the parent references
    /// and the backward rule) is kept only when gradient mode is on and at
    /// least one parent is tracked.
    pub(crate) fn from_op(
        data: Vec<T>,
        shape: super::Shape,
        parents: Vec<Tensor<T>>,
        backward: BackwardFn<T>,
    ) -> Tensor<T> {
        debug_assert_eq!(data.len(), shape.numel());
        if is_grad_enabled() && parents.iter().any(Tensor::is_tracked) {
            Tensor::from_node(data, shape, Node { parents, backward })
        } else {
            Tensor::leaf(data, shape, false)
        }
    }

    /// Reverse-mode sweep from a scalar root. Fills the `grad` slot of every
    /// `requires_grad` leaf reachable from the root; gradients add up over
    /// fan-out. Consumes the root handle, releasing the recorded graph once
    /// no other handles to it remain.
    pub fn backward(self) -> Result<(), TensorError> {
        if self.numel() != 1 {
            return Err(TensorError::NonScalarRoot(self.shape().clone()));
        }
        if !self.is_tracked() {
            return Err(TensorError::DetachedBackward);
        }

        let order = topo_order(&self);
        let mut grads: HashMap<u64, Vec<T>> = HashMap::new();
        grads.insert(self.id(), vec![T::one()]);

        for t in order.iter().rev() {
            let Some(g) = grads.remove(&t.id()) else { continue };
            if t.is_param() {
                t.accumulate_grad(&g);
            }
            if let Some(node) = t.node() {
                let mut sink = |idx: usize, contrib: Vec<T>| {
                    let parent = &node.parents[idx];
                    if !parent.is_tracked() {
                        return;
                    }
                    debug_assert_eq!(contrib.len(), parent.numel());
                    match grads.entry(parent.id()) {
                        std::collections::hash_map::Entry::Occupied(mut e) => {
                            for (a, b) in e.get_mut().iter_mut().zip(&contrib) {
                                *a = *a + *b;
                            }
                        }
                        std::collections::hash_map::Entry::Vacant(e) => {
                            e.insert(contrib);
                        }
                    }
                };
                (node.backward)(&node.parents, t.data(), &g, &mut sink);
            }
        }
        Ok(())
    }
}

/// Post-order over the recorded graph: every parent appears before any node
/// that consumes it. Iterative so deep recurrent graphs cannot overflow the
/// stack.
fn topo_order<T: Scalar>(root: &Tensor<T>) -> Vec<Tensor<T>> {
    enum Step<T: Scalar> {
        Enter(Tensor<T>),
        Exit(Tensor<T>),
    }

    let mut order = Vec::new();
    let mut entered = HashSet::new();
    let mut stack = vec![Step::Enter(root.clone())];

    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(t) => {
                if !entered.insert(t.id()) {
                    continue;
                }
                stack.push(Step::Exit(t.clone()));
                if let Some(node) = t.node() {
                    for p in &node.parents {
                        if p.is_tracked() && !entered.contains(&p.id()) {
                            stack.push(Step::Enter(p.clone()));
                        }
                    }
                }
            }
            Step::Exit(t) => order.push(t),
        }
    }
    order
}
