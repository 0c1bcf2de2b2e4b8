//! Cross networks over the flattened embedding vector: the rank-1
//! recurrence (CrossNet) and the full-matrix Hadamard recurrence
//! (CrossNetV2), each with a linear scalar head.

use crate::error::Result;
use crate::fr::common::Linear;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::{Backbone, BackboneKind, FmExtras};

/// `x_{l+1} = x0 * (x_l . w_l) + b_l + x_l`
pub struct CrossNet {
    weights: Vec<ParamId>, // each [n, 1]
    biases: Vec<ParamId>,  // each [n]
    head: Linear,
    n: usize,
}

impl CrossNet {
    pub fn new(store: &mut ParamStore, prefix: &str, n: usize, depth: usize, rng: &mut ChaCha20Rng) -> Self {
        let weights = (0..depth).map(|l| store.fan_in_uniform(format!("{prefix}.w{l}"), &[n, 1], n, rng)).collect();
        let biases = (0..depth).map(|l| store.zeros(format!("{prefix}.b{l}"), &[n])).collect();
        let head = Linear::new(store, &format!("{prefix}.head"), n, 1, true, rng);
        CrossNet { weights, biases, head, n }
    }

    /// The cross recurrence without the head: `[B, n] -> [B, n]`.
    pub fn cross<'t>(&self, ctx: &FwdCtx<'t, '_>, x0: Var<'t>) -> Var<'t> {
        let b = x0.shape()[0];
        let mut x = x0;
        for (w, bias) in self.weights.iter().zip(&self.biases) {
            let t = x.matmul(ctx.param(*w)); // [B, 1]
            let crossed = x0.mul(t.broadcast_to(&[b, self.n]));
            x = crossed.add(ctx.param(*bias).broadcast_to(&[b, self.n])).add(x);
        }
        x
    }
}

impl Backbone for CrossNet {
    fn kind(&self) -> BackboneKind {
        BackboneKind::Cn
    }

    fn logit<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>, _extras: &FmExtras<'t>) -> Result<Var<'t>> {
        let shape = e.shape();
        let b = shape[0];
        let x0 = e.reshape(&[b, self.n]);
        let out = self.cross(ctx, x0);
        Ok(self.head.forward(ctx, out).reshape(&[b]))
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.weights.clone();
        ids.extend(&self.biases);
        ids.extend(self.head.param_ids());
        ids
    }
}

/// `x_{l+1} = x0 .* (W_l x_l + b_l) + x_l`
pub struct CrossNetV2 {
    weights: Vec<ParamId>, // each [n, n]
    biases: Vec<ParamId>,  // each [n]
    head: Linear,
    n: usize,
}

impl CrossNetV2 {
    pub fn new(store: &mut ParamStore, prefix: &str, n: usize, depth: usize, rng: &mut ChaCha20Rng) -> Self {
        let weights = (0..depth).map(|l| store.fan_in_uniform(format!("{prefix}.w{l}"), &[n, n], n, rng)).collect();
        let biases = (0..depth).map(|l| store.zeros(format!("{prefix}.b{l}"), &[n])).collect();
        let head = Linear::new(store, &format!("{prefix}.head"), n, 1, true, rng);
        CrossNetV2 { weights, biases, head, n }
    }

    pub fn cross<'t>(&self, ctx: &FwdCtx<'t, '_>, x0: Var<'t>) -> Var<'t> {
        let b = x0.shape()[0];
        let mut x = x0;
        for (w, bias) in self.weights.iter().zip(&self.biases) {
            let lin = x.matmul(ctx.param(*w)).add(ctx.param(*bias).broadcast_to(&[b, self.n]));
            x = x0.mul(lin).add(x);
        }
        x
    }
}

impl Backbone for CrossNetV2 {
    fn kind(&self) -> BackboneKind {
        BackboneKind::Cn2
    }

    fn logit<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>, _extras: &FmExtras<'t>) -> Result<Var<'t>> {
        let shape = e.shape();
        let b = shape[0];
        let x0 = e.reshape(&[b, self.n]);
        let out = self.cross(ctx, x0);
        Ok(self.head.forward(ctx, out).reshape(&[b]))
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.weights.clone();
        ids.extend(&self.biases);
        ids.extend(self.head.param_ids());
        ids
    }
}
