//! Identity baseline: `E_fr = E`, zero parameters.

use ndarray::{ArrayD, IxDyn};

use crate::error::Result;
use crate::params::{FwdCtx, ParamId};
use crate::tensor::Var;

use super::common::check_input;
use super::descriptor::{FrKind, WeightActivation};
use super::{FrModule, FrOutput};

pub struct Skip {
    f: usize,
    d: usize,
}

impl Skip {
    pub fn new(f: usize, d: usize) -> Self {
        Skip { f, d }
    }
}

impl FrModule for Skip {
    fn kind(&self) -> FrKind {
        FrKind::Skip
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        // Degenerate selection: constant unit weights, output bit-identical.
        let b = e.shape()[0];
        let ones = ctx.tape.constant(ArrayD::from_elem(IxDyn(&[b, self.f, 1]), 1.0));
        Ok(FrOutput { refined: e, weights: Some(ones) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        Vec::new()
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Identity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamStore;
    use crate::tensor::Tape;

    #[test]
    fn identity_is_bit_exact_with_zero_params() {
        let store = ParamStore::new();
        let skip = Skip::new(3, 2);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let e = tape.leaf(ndarray::array![[[1.0, -2.0], [0.25, 3.5], [0.0, 1e-30]]].into_dyn());
        let out = skip.forward(&ctx, e).unwrap();
        assert_eq!(out.refined.id, e.id, "skip returns the same node");
        assert_eq!(skip.added_param_count(&store), 0);
    }
}
