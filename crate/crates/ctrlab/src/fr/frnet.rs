//! Composite refinement with two information-extraction branches, each a
//! single-head self-attention over the fields fused (by broadcast addition)
//! with a condensed context vector. One branch emits complementary
//! embeddings; the other emits gate logits, projected to one scalar per
//! field for the vector variant, then squashed by a sigmoid soft gate.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, soft_gate_combine, ContextVector, Linear, MultiHeadAttention};
use super::descriptor::{FrKind, Granularity, WeightActivation};
use super::{FrConfig, FrModule, FrOutput};

struct Ieu {
    attention: MultiHeadAttention,
    context: ContextVector,
}

impl Ieu {
    fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        // Single-head QKVO attention at full width: 4*D^2 weights.
        let attention = MultiHeadAttention::new(store, &format!("{prefix}.att"), d, 1, d, rng);
        let hidden = vec![cfg.hidden; cfg.depth + 1];
        let context = ContextVector::new(store, &format!("{prefix}.ctx"), f, d, &hidden, 0.0, rng);
        Ieu { attention, context }
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Var<'t> {
        let shape = e.shape();
        let (b, f, d) = (shape[0], shape[1], shape[2]);
        let cross = self.attention.forward(ctx, e);
        let v_c = self.context.forward(ctx, e).reshape(&[b, 1, d]).broadcast_to(&[b, f, d]);
        cross.add(v_c)
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.attention.param_ids();
        ids.extend(self.context.param_ids());
        ids
    }
}

pub struct FrNet {
    complement: Ieu,
    gate: Ieu,
    /// Projects gate logits to one scalar per field (vector variant only).
    vector_head: Option<Linear>,
    granularity: Granularity,
    f: usize,
    d: usize,
}

impl FrNet {
    pub fn bit(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        Self::build(store, prefix, f, d, cfg, Granularity::Bit, rng)
    }

    pub fn vector(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        Self::build(store, prefix, f, d, cfg, Granularity::Vector, rng)
    }

    fn build(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, granularity: Granularity, rng: &mut ChaCha20Rng) -> Self {
        let complement = Ieu::new(store, &format!("{prefix}.com"), f, d, cfg, rng);
        let gate = Ieu::new(store, &format!("{prefix}.gate"), f, d, cfg, rng);
        let vector_head = (granularity == Granularity::Vector)
            .then(|| Linear::new(store, &format!("{prefix}.vhead"), d, 1, true, rng));
        FrNet { complement, gate, vector_head, granularity, f, d }
    }
}

impl FrModule for FrNet {
    fn kind(&self) -> FrKind {
        match self.granularity {
            Granularity::Vector => FrKind::FrNetV,
            _ => FrKind::FrNetB,
        }
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let e_com = self.complement.forward(ctx, e);
        let logits = self.gate.forward(ctx, e);
        let w = match &self.vector_head {
            Some(head) => head.forward_rows(ctx, logits).sigmoid(), // [B,F,1]
            None => logits.sigmoid(),                               // [B,F,D]
        };
        let refined = soft_gate_combine(e, e_com, w)?;
        Ok(FrOutput { refined, weights: Some(w) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.complement.param_ids();
        ids.extend(self.gate.param_ids());
        if let Some(h) = &self.vector_head {
            ids.extend(h.param_ids());
        }
        ids
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Sigmoid)
    }
}
