//! Plain DNN tower over the flattened embeddings.

use crate::error::Result;
use crate::fr::common::{Linear, Mlp};
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::{Backbone, BackboneKind, FmExtras};

pub struct MlpTower {
    tower: Mlp,
    head: Linear,
    n: usize,
}

impl MlpTower {
    pub fn new(store: &mut ParamStore, prefix: &str, n: usize, widths: &[usize], dropout: f64, rng: &mut ChaCha20Rng) -> Self {
        assert!(!widths.is_empty(), "mlp needs at least one hidden layer");
        let mut all = vec![n];
        all.extend_from_slice(widths);
        let tower = Mlp::new(store, &format!("{prefix}.tower"), &all, dropout, rng);
        let head = Linear::new(store, &format!("{prefix}.head"), *widths.last().unwrap(), 1, true, rng);
        MlpTower { tower, head, n }
    }

    /// Final hidden vector `[B, widths.last()]`.
    pub fn hidden<'t>(&self, ctx: &FwdCtx<'t, '_>, x: Var<'t>) -> Var<'t> {
        self.tower.forward(ctx, x)
    }
}

impl Backbone for MlpTower {
    fn kind(&self) -> BackboneKind {
        BackboneKind::Dnn
    }

    fn logit<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>, _extras: &FmExtras<'t>) -> Result<Var<'t>> {
        let b = e.shape()[0];
        let x = e.reshape(&[b, self.n]);
        let h = self.hidden(ctx, x);
        Ok(self.head.forward(ctx, h).reshape(&[b]))
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.tower.param_ids();
        ids.extend(self.head.param_ids());
        ids
    }
}
