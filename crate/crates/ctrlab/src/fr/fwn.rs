//! Field-wise network: each field owns an affine D->D map with ReLU,
//! capturing intra-field structure. No cross-row information flows, so the
//! refinement is not context-aware.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, PerFieldLinear};
use super::descriptor::{FrKind, WeightActivation};
use super::{FrModule, FrOutput};

pub struct Fwn {
    per_field: PerFieldLinear,
    f: usize,
    d: usize,
}

impl Fwn {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, rng: &mut ChaCha20Rng) -> Self {
        // F x (D^2 + D) parameters.
        let per_field = PerFieldLinear::new(store, &format!("{prefix}.field"), f, d, d, true, rng);
        Fwn { per_field, f, d }
    }
}

impl FrModule for Fwn {
    fn kind(&self) -> FrKind {
        FrKind::Fwn
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let refined = self.per_field.forward(ctx, e).relu();
        // The ReLU outputs are the bit-level weights the taxonomy sees.
        Ok(FrOutput { refined, weights: Some(refined) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        self.per_field.param_ids()
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Relu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::tensor::Tape;
    use ndarray::{ArrayD, IxDyn};

    #[test]
    fn criteo_param_count_is_10608() {
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(1);
        let m = Fwn::new(&mut store, "t", 39, 16, &mut rng);
        assert_eq!(m.added_param_count(&store), 10_608);
    }

    #[test]
    fn identity_weights_pass_nonnegative_inputs_through() {
        let (f, d) = (3, 4);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(2);
        let m = Fwn::new(&mut store, "t", f, d, &mut rng);
        // identity per-field maps, zero biases
        {
            let w = store.value_mut(m.per_field.w);
            w.fill(0.0);
            for fi in 0..f {
                for i in 0..d {
                    w[[fi, i, i]] = 1.0;
                }
            }
            store.value_mut(m.per_field.b.unwrap()).fill(0.0);
        }
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let ev = ArrayD::from_shape_fn(IxDyn(&[2, f, d]), |ix| 0.1 + (ix[1] + ix[2]) as f64);
        let e = tape.leaf(ev.clone());
        let out = m.forward(&ctx, e).unwrap();
        for (a, b) in out.refined.value().iter().zip(ev.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rows_depend_only_on_their_own_field() {
        let (f, d) = (3, 2);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(3);
        let m = Fwn::new(&mut store, "t", f, d, &mut rng);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(4);
        let mut a = ArrayD::from_shape_fn(IxDyn(&[1, f, d]), |_| crate::rng::normal(&mut rr));
        let out_a = m.forward(&ctx, tape.leaf(a.clone())).unwrap().refined.value();
        // perturb every field except 0
        for fi in 1..f {
            for di in 0..d {
                a[[0, fi, di]] += 1.0;
            }
        }
        let out_b = m.forward(&ctx, tape.leaf(a)).unwrap().refined.value();
        for di in 0..d {
            assert_eq!(out_a[[0, 0, di]], out_b[[0, 0, di]], "row 0 must not move");
        }
    }
}
