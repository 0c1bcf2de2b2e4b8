//! Multi-head self-attention refinement: per-head scaled dot-product
//! attention, head concatenation through an output projection, then a
//! row-wise feed-forward with ReLU.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, Linear, MultiHeadAttention};
use super::descriptor::{FrKind, WeightActivation};
use super::{FrConfig, FrModule, FrOutput};

pub struct SelfAtt {
    attention: MultiHeadAttention,
    feed_forward: Linear,
    f: usize,
    d: usize,
}

impl SelfAtt {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        let attention = MultiHeadAttention::new(store, &format!("{prefix}.att"), d, cfg.heads, cfg.head_dim, rng);
        let feed_forward = Linear::new(store, &format!("{prefix}.ff"), d, d, true, rng);
        SelfAtt { attention, feed_forward, f, d }
    }

    /// Per-head attention scores for normalization checks.
    pub fn scores<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<Vec<Var<'t>>> {
        check_input(&e, self.f, self.d)?;
        Ok(self.attention.forward_with_scores(ctx, e).1)
    }
}

impl FrModule for SelfAtt {
    fn kind(&self) -> FrKind {
        FrKind::SelfAtt
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let att = self.attention.forward(ctx, e);
        let refined = self.feed_forward.forward_rows(ctx, att).relu();
        Ok(FrOutput { refined, weights: None })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.attention.param_ids();
        ids.extend(self.feed_forward.param_ids());
        ids
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::tensor::Tape;
    use ndarray::{ArrayD, IxDyn};

    #[test]
    fn attention_rows_sum_to_one_for_every_head() {
        let (f, d) = (6, 4);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(1);
        let cfg = FrConfig::default_for(FrKind::SelfAtt);
        let m = SelfAtt::new(&mut store, "t", f, d, &cfg, &mut rng);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(2);
        let e = tape.leaf(ArrayD::from_shape_fn(IxDyn(&[3, f, d]), |_| crate::rng::normal(&mut rr)));
        for s in m.scores(&ctx, e).unwrap() {
            let v = s.value();
            for b in 0..3 {
                for r in 0..f {
                    let sum: f64 = (0..f).map(|c| v[[b, r, c]]).sum();
                    assert!((sum - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn output_is_nonnegative_after_relu() {
        let (f, d) = (4, 4);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(3);
        let cfg = FrConfig::default_for(FrKind::SelfAtt);
        let m = SelfAtt::new(&mut store, "t", f, d, &cfg, &mut rng);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(4);
        let e = tape.leaf(ArrayD::from_shape_fn(IxDyn(&[2, f, d]), |_| crate::rng::normal(&mut rr)));
        let out = m.forward(&ctx, e).unwrap();
        assert!(out.refined.value().iter().all(|x| *x >= 0.0));
        assert!(out.weights.is_none());
    }
}
