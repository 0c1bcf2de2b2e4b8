//! Dimension relation module: single-head self-attention along the latent
//! dimension axis. `E` is transposed to `D x F`, attended with three
//! learned `F x F` maps (scale `1/sqrt(F)`), and transposed back.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::check_input;
use super::descriptor::{FrKind, WeightActivation};
use super::{FrModule, FrOutput};

pub struct Drm {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    f: usize,
    d: usize,
}

impl Drm {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, rng: &mut ChaCha20Rng) -> Self {
        // Three bias-free F x F maps: 3F^2 parameters.
        let wq = store.fan_in_uniform(format!("{prefix}.wq"), &[f, f], f, rng);
        let wk = store.fan_in_uniform(format!("{prefix}.wk"), &[f, f], f, rng);
        let wv = store.fan_in_uniform(format!("{prefix}.wv"), &[f, f], f, rng);
        Drm { wq, wk, wv, f, d }
    }
}

impl FrModule for Drm {
    fn kind(&self) -> FrKind {
        FrKind::Drm
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let b = e.shape()[0];
        let t = e.permute(&[0, 2, 1]); // [B, D, F]
        let flat = t.reshape(&[b * self.d, self.f]);
        let q = flat.matmul(ctx.param(self.wq)).reshape(&[b, self.d, self.f]);
        let k = flat.matmul(ctx.param(self.wk)).reshape(&[b, self.d, self.f]);
        let v = flat.matmul(ctx.param(self.wv)).reshape(&[b, self.d, self.f]);
        let scores = q.batch_matmul_nt(k).scale(1.0 / (self.f as f64).sqrt()).softmax_last(); // [B, D, D]
        let out = scores.batch_matmul(v); // [B, D, F]
        let refined = out.permute(&[0, 2, 1]);
        Ok(FrOutput { refined, weights: None })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        vec![self.wq, self.wk, self.wv]
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        None
    }
}
