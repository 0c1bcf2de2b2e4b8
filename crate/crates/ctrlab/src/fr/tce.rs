//! Contextual embedding gate: a shared aggregation of the flattened
//! instance feeds per-field projections that emit bit-level weights with
//! identity activation. Both layers are bias-free (2*F*D*m parameters).

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::check_input;
use super::descriptor::{FrKind, WeightActivation};
use super::{FrModule, FrOutput};

pub struct Tce {
    aggregate: ParamId, // [F*D, m]
    project: ParamId,   // [F, m, D]
    hidden: usize,
    f: usize,
    d: usize,
}

impl Tce {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, hidden: usize, rng: &mut ChaCha20Rng) -> Self {
        let aggregate = store.fan_in_uniform(format!("{prefix}.agg"), &[f * d, hidden], f * d, rng);
        let project = store.fan_in_uniform(format!("{prefix}.proj"), &[f, hidden, d], hidden, rng);
        Tce { aggregate, project, hidden, f, d }
    }

    /// Bit-level weights `[B, F, D]` for an input batch.
    pub fn weights<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Var<'t> {
        let b = e.shape()[0];
        let agg = e.reshape(&[b, self.f * self.d]).matmul(ctx.param(self.aggregate)); // [B, m]
        let spread = agg.reshape(&[b, 1, self.hidden]).broadcast_to(&[b, self.f, self.hidden]);
        spread.per_field_matmul(ctx.param(self.project)) // [B, F, D]
    }
}

impl FrModule for Tce {
    fn kind(&self) -> FrKind {
        FrKind::Tce
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let w = self.weights(ctx, e);
        Ok(FrOutput { refined: e.mul(w), weights: Some(w) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        vec![self.aggregate, self.project]
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Identity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::tensor::Tape;
    use ndarray::{ArrayD, IxDyn};

    #[test]
    fn criteo_param_count_at_m32_is_39936() {
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(1);
        let m = Tce::new(&mut store, "t", 39, 16, 32, &mut rng);
        assert_eq!(m.added_param_count(&store), 39_936);
    }

    #[test]
    fn m16_count_is_19968() {
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(1);
        let m = Tce::new(&mut store, "t", 39, 16, 16, &mut rng);
        assert_eq!(m.added_param_count(&store), 19_968);
    }

    #[test]
    fn zero_aggregation_zeroes_the_output() {
        let (f, d) = (3, 4);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(2);
        let m = Tce::new(&mut store, "t", f, d, 8, &mut rng);
        store.value_mut(m.aggregate).fill(0.0);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(3);
        let e = tape.leaf(ArrayD::from_shape_fn(IxDyn(&[2, f, d]), |_| crate::rng::normal(&mut rr)));
        let out = m.forward(&ctx, e).unwrap();
        assert!(out.refined.value().iter().all(|x| *x == 0.0));
        assert!(out.weights.unwrap().value().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn weights_depend_on_context() {
        let (f, d) = (3, 2);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(4);
        let m = Tce::new(&mut store, "t", f, d, 8, &mut rng);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(5);
        let mut a = ArrayD::from_shape_fn(IxDyn(&[1, f, d]), |_| crate::rng::normal(&mut rr));
        let w_a = m.forward(&ctx, tape.leaf(a.clone())).unwrap().weights.unwrap().value();
        a[[0, 2, 1]] += 1.0; // change another field
        let w_b = m.forward(&ctx, tape.leaf(a)).unwrap().weights.unwrap().value();
        let moved: f64 = (0..d).map(|di| (w_a[[0, 0, di]] - w_b[[0, 0, di]]).abs()).sum();
        assert!(moved > 1e-9, "field-0 weights must react to field-2 changes");
    }
}
