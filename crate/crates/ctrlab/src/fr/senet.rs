//! Squeeze-excitation re-weighting: mean-pool each field vector to a
//! scalar, run two F->F affine layers (ReLU after each), multiply back.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, Linear};
use super::descriptor::{FrKind, WeightActivation};
use super::{FrModule, FrOutput};

pub struct Senet {
    excite1: Linear,
    excite2: Linear,
    f: usize,
    d: usize,
}

impl Senet {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, rng: &mut ChaCha20Rng) -> Self {
        // Two full F->F layers with bias: 2(F^2 + F) parameters.
        let excite1 = Linear::new(store, &format!("{prefix}.excite1"), f, f, true, rng);
        let excite2 = Linear::new(store, &format!("{prefix}.excite2"), f, f, true, rng);
        Senet { excite1, excite2, f, d }
    }
}

impl FrModule for Senet {
    fn kind(&self) -> FrKind {
        FrKind::Senet
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let b = e.shape()[0];
        let squeezed = e.mean_last(); // [B, F]
        let a = self.excite2.forward(ctx, self.excite1.forward(ctx, squeezed).relu()).relu();
        let w = a.reshape(&[b, self.f, 1]);
        let refined = e.mul(w.broadcast_to(&[b, self.f, self.d]));
        Ok(FrOutput { refined, weights: Some(w) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.excite1.param_ids();
        ids.extend(self.excite2.param_ids());
        ids
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Relu)
    }
}
