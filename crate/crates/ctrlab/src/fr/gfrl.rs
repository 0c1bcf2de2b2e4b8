//! Gated feature refinement: two structurally identical branches integrate
//! each row with the instance's condensed context through per-field maps.
//! One branch emits complementary embeddings, the other a sigmoid bit gate;
//! the soft gate blends them.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, soft_gate_combine, ContextVector, PerFieldLinear};
use super::descriptor::{FrKind, WeightActivation};
use super::{FrConfig, FrModule, FrOutput};

struct Branch {
    context: ContextVector,
    per_field: PerFieldLinear,
}

impl Branch {
    fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, hidden: usize, rng: &mut ChaCha20Rng) -> Self {
        Branch {
            context: ContextVector::new(store, &format!("{prefix}.ctx"), f, d, &[hidden], 0.0, rng),
            per_field: PerFieldLinear::new(store, &format!("{prefix}.field"), f, d, d, true, rng),
        }
    }

    /// `[B,F,D] -> [B,F,D]`: per-field map over (row + broadcast context).
    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Var<'t> {
        let shape = e.shape();
        let (b, f, d) = (shape[0], shape[1], shape[2]);
        let v_c = self.context.forward(ctx, e).reshape(&[b, 1, d]).broadcast_to(&[b, f, d]);
        self.per_field.forward(ctx, e.add(v_c))
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.context.param_ids();
        ids.extend(self.per_field.param_ids());
        ids
    }
}

pub struct Gfrl {
    complement: Branch,
    gate: Branch,
    f: usize,
    d: usize,
}

impl Gfrl {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        Gfrl {
            complement: Branch::new(store, &format!("{prefix}.com"), f, d, cfg.hidden, rng),
            gate: Branch::new(store, &format!("{prefix}.gate"), f, d, cfg.hidden, rng),
            f,
            d,
        }
    }

    /// Test hook: saturate the gate so `W -> 1` (or `-> 0` with negative bias).
    #[cfg(test)]
    fn saturate_gate(&self, store: &mut ParamStore, logit: f64) {
        store.value_mut(self.gate.per_field.w).fill(0.0);
        store.value_mut(self.gate.per_field.b.unwrap()).fill(logit);
    }
}

impl FrModule for Gfrl {
    fn kind(&self) -> FrKind {
        FrKind::Gfrl
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let e_com = self.complement.forward(ctx, e);
        let w = self.gate.forward(ctx, e).sigmoid();
        let refined = soft_gate_combine(e, e_com, w)?;
        Ok(FrOutput { refined, weights: Some(w) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.complement.param_ids();
        ids.extend(self.gate.param_ids());
        ids
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Sigmoid)
    }
}
