//! Contextual refinement stacked with per-field position-wise feed-forward
//! blocks: TCE first, then `L_d` blocks of (FFN, residual, layer norm).

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, PerFieldLinear};
use super::descriptor::{FrKind, WeightActivation};
use super::tce::Tce;
use super::{FrConfig, FrModule, FrOutput};

struct Block {
    ff1: PerFieldLinear,
    ff2: PerFieldLinear,
    gamma: ParamId,
    beta: ParamId,
}

pub struct Pffn {
    tce: Tce,
    blocks: Vec<Block>,
    f: usize,
    d: usize,
}

impl Pffn {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        let tce = Tce::new(store, &format!("{prefix}.tce"), f, d, cfg.hidden, rng);
        let blocks = (0..cfg.depth)
            .map(|i| Block {
                ff1: PerFieldLinear::new(store, &format!("{prefix}.block{i}.ff1"), f, d, d, true, rng),
                ff2: PerFieldLinear::new(store, &format!("{prefix}.block{i}.ff2"), f, d, d, true, rng),
                gamma: store.ones(format!("{prefix}.block{i}.ln.gamma"), &[d]),
                beta: store.zeros(format!("{prefix}.block{i}.ln.beta"), &[d]),
            })
            .collect();
        Pffn { tce, blocks, f, d }
    }
}

impl FrModule for Pffn {
    fn kind(&self) -> FrKind {
        FrKind::Pffn
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let mut x = self.tce.forward(ctx, e)?.refined;
        for block in &self.blocks {
            let h = block.ff2.forward(ctx, block.ff1.forward(ctx, x).relu());
            x = x.add(h).layer_norm(ctx.param(block.gamma), ctx.param(block.beta), 1e-5);
        }
        Ok(FrOutput { refined: x, weights: None })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.tce.param_ids();
        for b in &self.blocks {
            ids.extend(b.ff1.param_ids());
            ids.extend(b.ff2.param_ids());
            ids.push(b.gamma);
            ids.push(b.beta);
        }
        ids
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        None
    }
}
