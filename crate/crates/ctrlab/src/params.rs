//! Named parameter storage shared by every model component.
//!
//! Components allocate parameters at construction time and receive stable
//! [`ParamId`]s; each forward pass binds the current values onto a fresh
//! tape through [`FwdCtx`], and the optimizer reads gradients back per id.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{ArrayD, IxDyn};

use crate::rng::{normal, uniform_sym, ChaCha20Rng};
use crate::tensor::{Grads, Tape, Var};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ParamId(pub usize);

pub struct Parameter {
    pub name: String,
    pub value: Arc<ArrayD<f64>>,
}

#[derive(Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: ArrayD<f64>) -> ParamId {
        self.params.push(Parameter { name: name.into(), value: Arc::new(value) });
        ParamId(self.params.len() - 1)
    }

    pub fn zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, ArrayD::zeros(IxDyn(shape)))
    }

    pub fn ones(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, ArrayD::from_elem(IxDyn(shape), 1.0))
    }

    /// Zero-mean normal entries with the given standard deviation.
    pub fn normal(&mut self, name: impl Into<String>, shape: &[usize], std: f64, rng: &mut ChaCha20Rng) -> ParamId {
        self.add(name, ArrayD::from_shape_fn(IxDyn(shape), |_| normal(rng) * std))
    }

    /// Fan-in scaled uniform: `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn fan_in_uniform(&mut self, name: impl Into<String>, shape: &[usize], fan_in: usize, rng: &mut ChaCha20Rng) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        self.add(name, ArrayD::from_shape_fn(IxDyn(shape), |_| uniform_sym(rng, bound)))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn value(&self, id: ParamId) -> Arc<ArrayD<f64>> {
        self.params[id.0].value.clone()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        self.params[id.0].value.shape()
    }

    pub fn numel(&self, id: ParamId) -> usize {
        self.params[id.0].value.len()
    }

    pub fn total_len(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    /// Mutable access; copies only if a tape still shares the value.
    pub fn value_mut(&mut self, id: ParamId) -> &mut ArrayD<f64> {
        Arc::make_mut(&mut self.params[id.0].value)
    }

    pub fn set(&mut self, id: ParamId, value: ArrayD<f64>) {
        assert_eq!(self.params[id.0].value.shape(), value.shape());
        self.params[id.0].value = Arc::new(value);
    }

    /// Deep snapshot of all values (best-epoch restore).
    pub fn snapshot(&self) -> Vec<ArrayD<f64>> {
        self.params.iter().map(|p| (*p.value).clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[ArrayD<f64>]) {
        assert_eq!(snapshot.len(), self.params.len());
        for (p, s) in self.params.iter_mut().zip(snapshot) {
            p.value = Arc::new(s.clone());
        }
    }
}

/// Whether a forward pass applies dropout.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-pass binding of parameters onto a tape.
pub struct FwdCtx<'t, 's> {
    pub tape: &'t Tape,
    pub mode: Mode,
    store: &'s ParamStore,
    bound: RefCell<HashMap<ParamId, usize>>,
    dropout_rng: Option<RefCell<&'s mut ChaCha20Rng>>,
}

impl<'t, 's> FwdCtx<'t, 's> {
    pub fn eval(tape: &'t Tape, store: &'s ParamStore) -> Self {
        FwdCtx { tape, mode: Mode::Eval, store, bound: RefCell::new(HashMap::new()), dropout_rng: None }
    }

    pub fn train(tape: &'t Tape, store: &'s ParamStore, rng: &'s mut ChaCha20Rng) -> Self {
        FwdCtx { tape, mode: Mode::Train, store, bound: RefCell::new(HashMap::new()), dropout_rng: Some(RefCell::new(rng)) }
    }

    /// Bind (once per pass) and return the tape node for a parameter.
    pub fn param(&self, id: ParamId) -> Var<'t> {
        let mut bound = self.bound.borrow_mut();
        if let Some(&node) = bound.get(&id) {
            return Var { tape: self.tape, id: node };
        }
        let var = self.tape.leaf_shared(self.store.value(id));
        bound.insert(id, var.id);
        var
    }

    /// Inverted-dropout mask application; identity in eval mode or at rate 0.
    pub fn dropout(&self, x: Var<'t>, rate: f64) -> Var<'t> {
        if self.mode == Mode::Eval || rate <= 0.0 {
            return x;
        }
        let rng_cell = self.dropout_rng.as_ref().expect("train ctx requires a dropout rng");
        let mut rng = rng_cell.borrow_mut();
        let keep = 1.0 - rate;
        let shape = x.shape();
        let mask = ArrayD::from_shape_fn(IxDyn(&shape), |_| {
            if rand::Rng::random::<f64>(&mut **rng) < keep {
                1.0 / keep
            } else {
                0.0
            }
        });
        x.mul_mask(Arc::new(mask))
    }

    /// Gradients for every bound parameter, in store order.
    pub fn extract_grads(&self, grads: &mut Grads) -> Vec<Option<ArrayD<f64>>> {
        let bound = self.bound.borrow();
        let mut out: Vec<Option<ArrayD<f64>>> = (0..self.store.len()).map(|_| None).collect();
        for (&pid, &node) in bound.iter() {
            out[pid.0] = grads.take(Var { tape: self.tape, id: node });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn param_binding_is_shared_within_a_pass() {
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(0);
        let w = store.normal("w", &[2, 2], 1.0, &mut rng);

        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let a = ctx.param(w);
        let b = ctx.param(w);
        assert_eq!(a.id, b.id);
    }

    #[test]
    fn grads_reach_params_through_ctx() {
        let mut store = ParamStore::new();
        let w = store.add("w", ndarray::array![2.0, 3.0].into_dyn());

        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let v = ctx.param(w);
        let loss = v.mul(v).sum_all();
        let mut grads = tape.backward(loss);
        let got = ctx.extract_grads(&mut grads);
        let g = got[0].as_ref().unwrap();
        assert_eq!(g[[0]], 4.0);
        assert_eq!(g[[1]], 6.0);
    }

    #[test]
    fn snapshot_restore_roundtrip() {
        let mut store = ParamStore::new();
        let w = store.add("w", ndarray::array![1.0].into_dyn());
        let snap = store.snapshot();
        store.value_mut(w)[[0]] = 9.0;
        store.restore(&snap);
        assert_eq!(store.value(w)[[0]], 1.0);
    }

    #[test]
    fn dropout_eval_is_identity_and_train_masks() {
        let mut store = ParamStore::new();
        let w = store.add("w", ndarray::ArrayD::from_elem(ndarray::IxDyn(&[100]), 1.0));

        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let x = ctx.param(w);
        let y = ctx.dropout(x, 0.5);
        assert_eq!(y.id, x.id);

        let tape2 = Tape::new();
        let mut rng = rng_from_seed(3);
        let ctx2 = FwdCtx::train(&tape2, &store, &mut rng);
        let x2 = ctx2.param(w);
        let y2 = ctx2.dropout(x2, 0.5);
        let vals = y2.value();
        let zeros = vals.iter().filter(|v| **v == 0.0).count();
        let twos = vals.iter().filter(|v| **v == 2.0).count();
        assert_eq!(zeros + twos, 100);
        assert!(zeros > 20 && zeros < 80);
    }
}
