//! Reverse-mode automatic differentiation over `ndarray` tensors.
//!
//! A [`Tape`] records every operation of one forward pass; [`Tape::backward`]
//! replays it in reverse and accumulates gradients for every node that was
//! created with [`Tape::leaf`]. Values are `f64` throughout: the gradient
//! checks in the probe suite run central finite differences in double
//! precision and expect relative errors well below 1e-4.
//!
//! The op set is deliberately small. Broadcasting is explicit
//! ([`Var::broadcast_to`]) so every `Add`/`Mul` is same-shape and the
//! backward of a broadcast is a plain axis reduction.

pub mod ops;

pub mod gradcheck;

pub use ops::Op;

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::{ArrayD, Axis, IxDyn};

pub type Value = Arc<ArrayD<f64>>;

pub(crate) struct Node {
    pub value: Value,
    pub op: Op,
    pub requires_grad: bool,
}

/// Records one forward pass.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

/// Gradients produced by [`Tape::backward`], indexed by node.
pub struct Grads {
    by_node: Vec<Option<ArrayD<f64>>>,
}

impl Grads {
    pub fn get(&self, v: Var<'_>) -> Option<&ArrayD<f64>> {
        self.by_node[v.id].as_ref()
    }

    pub fn take(&mut self, v: Var<'_>) -> Option<ArrayD<f64>> {
        self.by_node[v.id].take()
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: RefCell::new(Vec::new()) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn push(&self, value: ArrayD<f64>, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value: Arc::new(value), op, requires_grad });
        Var { tape: self, id: nodes.len() - 1 }
    }

    pub(crate) fn push_shared(&self, value: Value, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, requires_grad });
        Var { tape: self, id: nodes.len() - 1 }
    }

    /// Differentiable input (parameter or activation seed).
    pub fn leaf(&self, value: ArrayD<f64>) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Shared-storage differentiable input; avoids cloning large tables.
    pub fn leaf_shared(&self, value: Value) -> Var<'_> {
        self.push_shared(value, Op::Leaf, true)
    }

    /// Non-differentiable input.
    pub fn constant(&self, value: ArrayD<f64>) -> Var<'_> {
        self.push(value, Op::Constant, false)
    }

    pub fn scalar(&self, x: f64) -> Var<'_> {
        self.constant(ArrayD::from_elem(IxDyn(&[]), x))
    }

    pub(crate) fn value(&self, id: usize) -> Value {
        self.nodes.borrow()[id].value.clone()
    }

    pub(crate) fn requires_grad(&self, id: usize) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    /// Reverse pass from `root`, which must be a scalar (0-d or single-element).
    pub fn backward(&self, root: Var<'_>) -> Grads {
        let nodes = self.nodes.borrow();
        assert_eq!(
            nodes[root.id].value.len(),
            1,
            "backward root must be a scalar, got shape {:?}",
            nodes[root.id].value.shape()
        );
        let mut grads: Vec<Option<ArrayD<f64>>> = vec![None; nodes.len()];
        grads[root.id] = Some(ArrayD::from_elem(nodes[root.id].value.raw_dim(), 1.0));

        for id in (0..=root.id).rev() {
            if !nodes[id].requires_grad {
                grads[id] = None;
                continue;
            }
            let Some(grad) = grads[id].take() else { continue };
            ops::backward_step(&nodes, id, &grad, &mut grads);
            // Leaves keep their gradient; interior nodes may be queried too.
            grads[id] = Some(grad);
        }
        Grads { by_node: grads }
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> Value {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    /// Scalar extraction for single-element tensors.
    pub fn scalar_value(&self) -> f64 {
        let v = self.value();
        assert_eq!(v.len(), 1, "scalar_value on shape {:?}", v.shape());
        *v.iter().next().unwrap()
    }
}

/// Sum `grad` down to `target`'s shape, undoing a broadcast: leading extra
/// axes are summed away, then any axis where the target has size 1.
pub(crate) fn reduce_to_shape(grad: &ArrayD<f64>, target: &[usize]) -> ArrayD<f64> {
    let mut g = grad.clone();
    while g.ndim() > target.len() {
        g = g.sum_axis(Axis(0));
    }
    for (ax, (&gd, &td)) in g.shape().to_vec().iter().zip(target).enumerate() {
        if td == 1 && gd != 1 {
            let summed = g.sum_axis(Axis(ax));
            g = summed.insert_axis(Axis(ax));
        }
    }
    debug_assert_eq!(g.shape(), target);
    g
}
