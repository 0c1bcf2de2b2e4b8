//! Learnable gates over each field's own embedding: vector-level (one
//! scalar per field) or bit-level (one scalar per element), identity
//! activation, no bias.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, PerFieldLinear};
use super::descriptor::{FrKind, Granularity, WeightActivation};
use super::{FrModule, FrOutput};

pub struct Gate {
    per_field: PerFieldLinear,
    granularity: Granularity,
    f: usize,
    d: usize,
}

impl Gate {
    /// VGate: per-field D->1 map, F*D parameters.
    pub fn vector(store: &mut ParamStore, prefix: &str, f: usize, d: usize, rng: &mut ChaCha20Rng) -> Self {
        let per_field = PerFieldLinear::new(store, &format!("{prefix}.gate"), f, d, 1, false, rng);
        Gate { per_field, granularity: Granularity::Vector, f, d }
    }

    /// BGate: per-field D->D map, F*D^2 parameters.
    pub fn bit(store: &mut ParamStore, prefix: &str, f: usize, d: usize, rng: &mut ChaCha20Rng) -> Self {
        let per_field = PerFieldLinear::new(store, &format!("{prefix}.gate"), f, d, d, false, rng);
        Gate { per_field, granularity: Granularity::Bit, f, d }
    }
}

impl FrModule for Gate {
    fn kind(&self) -> FrKind {
        match self.granularity {
            Granularity::Vector => FrKind::VGate,
            _ => FrKind::BGate,
        }
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let b = e.shape()[0];
        let w = self.per_field.forward(ctx, e); // [B,F,1] or [B,F,D]
        let refined = e.mul(w.broadcast_to(&[b, self.f, self.d]));
        Ok(FrOutput { refined, weights: Some(w) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        self.per_field.param_ids()
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Identity)
    }
}
