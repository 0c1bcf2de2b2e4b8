//! Shared building blocks: linear layers, MLP stacks, per-field maps,
//! multi-head attention, the context-vector condenser, and the soft gate.

use crate::error::{Error, Result};
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::{ops, Var};

/// Validate the common refine contract: `E` is `[B, F, D]` and finite.
pub fn check_input(e: &Var<'_>, f: usize, d: usize) -> Result<()> {
    let shape = e.shape();
    if shape.len() != 3 || shape[1] != f || shape[2] != d {
        return Err(Error::Contract(format!(
            "expected embeddings [B, {f}, {d}], got {shape:?}"
        )));
    }
    if !e.value().iter().all(|x| x.is_finite()) {
        return Err(Error::Contract("embedding matrix holds non-finite values".into()));
    }
    Ok(())
}

/// Dense affine map, bias optional.
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, prefix: &str, in_dim: usize, out_dim: usize, bias: bool, rng: &mut ChaCha20Rng) -> Self {
        let w = store.fan_in_uniform(format!("{prefix}.w"), &[in_dim, out_dim], in_dim, rng);
        let b = bias.then(|| store.fan_in_uniform(format!("{prefix}.b"), &[out_dim], in_dim, rng));
        Linear { w, b, in_dim, out_dim }
    }

    /// `[B, in] -> [B, out]`
    pub fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, x: Var<'t>) -> Var<'t> {
        let mut y = x.matmul(ctx.param(self.w));
        if let Some(b) = self.b {
            let shape = y.shape();
            y = y.add(ctx.param(b).broadcast_to(&shape));
        }
        y
    }

    /// Same map applied to every row: `[B, F, in] -> [B, F, out]`.
    pub fn forward_rows<'t>(&self, ctx: &FwdCtx<'t, '_>, x: Var<'t>) -> Var<'t> {
        let shape = x.shape();
        let (b, f) = (shape[0], shape[1]);
        let flat = x.reshape(&[b * f, self.in_dim]);
        self.forward(ctx, flat).reshape(&[b, f, self.out_dim])
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.w];
        ids.extend(self.b);
        ids
    }
}

/// Hidden ReLU stack with dropout between layers (train mode only).
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub dropout: f64,
}

impl Mlp {
    /// `widths = [in, h1, h2, ...]`; every layer ends in ReLU.
    pub fn new(store: &mut ParamStore, prefix: &str, widths: &[usize], dropout: f64, rng: &mut ChaCha20Rng) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{prefix}.{i}"), w[0], w[1], true, rng))
            .collect();
        Mlp { layers, dropout }
    }

    pub fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, mut x: Var<'t>) -> Var<'t> {
        for layer in &self.layers {
            x = ctx.dropout(layer.forward(ctx, x).relu(), self.dropout);
        }
        x
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(Linear::param_ids).collect()
    }
}

/// Independent affine map per field: `[B, F, in] -> [B, F, out]`.
pub struct PerFieldLinear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

impl PerFieldLinear {
    pub fn new(store: &mut ParamStore, prefix: &str, fields: usize, in_dim: usize, out_dim: usize, bias: bool, rng: &mut ChaCha20Rng) -> Self {
        let w = store.fan_in_uniform(format!("{prefix}.w"), &[fields, in_dim, out_dim], in_dim, rng);
        let b = bias.then(|| store.fan_in_uniform(format!("{prefix}.b"), &[fields, out_dim], in_dim, rng));
        PerFieldLinear { w, b }
    }

    pub fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, x: Var<'t>) -> Var<'t> {
        let mut y = x.per_field_matmul(ctx.param(self.w));
        if let Some(b) = self.b {
            let shape = y.shape();
            let f = shape[1];
            let o = shape[2];
            y = y.add(ctx.param(b).reshape(&[1, f, o]).broadcast_to(&shape));
        }
        y
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.w];
        ids.extend(self.b);
        ids
    }
}

/// Condenses the whole instance into a `D`-vector (contextual information):
/// flatten `E`, run an optional hidden ReLU stack, project to `D`.
/// Depth 0 is the plain affine `F*D -> D` condenser.
pub struct ContextVector {
    pub hidden: Mlp,
    pub head: Linear,
    f: usize,
    d: usize,
}

impl ContextVector {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        f: usize,
        d: usize,
        hidden_widths: &[usize],
        dropout: f64,
        rng: &mut ChaCha20Rng,
    ) -> Self {
        let mut widths = vec![f * d];
        widths.extend_from_slice(hidden_widths);
        let last = *widths.last().unwrap();
        let hidden = Mlp::new(store, &format!("{prefix}.hidden"), &widths, dropout, rng);
        let head = Linear::new(store, &format!("{prefix}.head"), last, d, true, rng);
        ContextVector { hidden, head, f, d }
    }

    /// `[B, F, D] -> [B, D]`
    pub fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Var<'t> {
        let shape = e.shape();
        let flat = e.reshape(&[shape[0], self.f * self.d]);
        self.head.forward(ctx, self.hidden.forward(ctx, flat))
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.hidden.param_ids();
        ids.extend(self.head.param_ids());
        ids
    }
}

/// Multi-head scaled dot-product attention over the field axis.
/// Projections carry no biases.
pub struct MultiHeadAttention {
    wq: Vec<ParamId>,
    wk: Vec<ParamId>,
    wv: Vec<ParamId>,
    wo: ParamId,
    pub heads: usize,
    pub head_dim: usize,
    d: usize,
}

impl MultiHeadAttention {
    pub fn new(store: &mut ParamStore, prefix: &str, d: usize, heads: usize, head_dim: usize, rng: &mut ChaCha20Rng) -> Self {
        let mk = |store: &mut ParamStore, name: &str, rng: &mut ChaCha20Rng| {
            (0..heads)
                .map(|h| store.fan_in_uniform(format!("{prefix}.{name}{h}"), &[d, head_dim], d, rng))
                .collect::<Vec<_>>()
        };
        let wq = mk(store, "wq", rng);
        let wk = mk(store, "wk", rng);
        let wv = mk(store, "wv", rng);
        let wo = store.fan_in_uniform(format!("{prefix}.wo"), &[heads * head_dim, d], heads * head_dim, rng);
        MultiHeadAttention { wq, wk, wv, wo, heads, head_dim, d }
    }

    /// `[B, F, D] -> ([B, F, D], per-head scores [B, F, F])`.
    pub fn forward_with_scores<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> (Var<'t>, Vec<Var<'t>>) {
        let shape = e.shape();
        let (b, f) = (shape[0], shape[1]);
        let flat = e.reshape(&[b * f, self.d]);
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let mut head_outs = Vec::with_capacity(self.heads);
        let mut all_scores = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let q = flat.matmul(ctx.param(self.wq[h])).reshape(&[b, f, self.head_dim]);
            let k = flat.matmul(ctx.param(self.wk[h])).reshape(&[b, f, self.head_dim]);
            let v = flat.matmul(ctx.param(self.wv[h])).reshape(&[b, f, self.head_dim]);
            let scores = q.batch_matmul_nt(k).scale(scale).softmax_last();
            all_scores.push(scores);
            head_outs.push(scores.batch_matmul(v));
        }
        let cat = if head_outs.len() == 1 { head_outs[0] } else { ops::concat(e.tape, &head_outs, 2) };
        let out = cat.reshape(&[b * f, self.heads * self.head_dim]).matmul(ctx.param(self.wo)).reshape(&[b, f, self.d]);
        (out, all_scores)
    }

    pub fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Var<'t> {
        self.forward_with_scores(ctx, e).0
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = Vec::new();
        ids.extend(&self.wq);
        ids.extend(&self.wk);
        ids.extend(&self.wv);
        ids.push(self.wo);
        ids
    }
}

/// Soft-gate blend `E_fr = E .* W + E_com .* (1 - W)`.
/// `W` is `[B,F,1]` (vector weights broadcast over `D`) or `[B,F,D]`,
/// and every entry must lie in `[0, 1]`.
pub fn soft_gate_combine<'t>(e: Var<'t>, e_com: Var<'t>, w: Var<'t>) -> Result<Var<'t>> {
    let es = e.shape();
    let cs = e_com.shape();
    if es != cs {
        return Err(Error::Contract(format!("complementary embeddings {cs:?} do not match E {es:?}")));
    }
    let ws = w.shape();
    let vector_ok = ws.len() == 3 && ws[0] == es[0] && ws[1] == es[1] && (ws[2] == 1 || ws[2] == es[2]);
    if !vector_ok {
        return Err(Error::Contract(format!("weight matrix {ws:?} not conformable with E {es:?}")));
    }
    const TOL: f64 = 1e-9;
    if w.value().iter().any(|x| !(-TOL..=1.0 + TOL).contains(x)) {
        return Err(Error::Contract("soft gate weights must lie in [0, 1]".into()));
    }
    let wb = w.broadcast_to(&es);
    let one_minus = wb.neg().add_scalar(1.0);
    Ok(e.mul(wb).add(e_com.mul(one_minus)))
}
