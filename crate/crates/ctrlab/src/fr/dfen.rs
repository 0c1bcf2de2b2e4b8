//! Dual factor estimating net: multi-head attention with a residual
//! connection feeds a FEN-style DNN tail whose head ends in ReLU, giving
//! non-negative vector-level weights.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, Linear, Mlp, MultiHeadAttention};
use super::descriptor::{FrKind, WeightActivation};
use super::{FrConfig, FrModule, FrOutput};

pub struct Dfen {
    attention: MultiHeadAttention,
    mlp: Mlp,
    head: Linear,
    f: usize,
    d: usize,
}

impl Dfen {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        let attention = MultiHeadAttention::new(store, &format!("{prefix}.att"), d, cfg.heads, cfg.head_dim, rng);
        let mut widths = vec![f * d, cfg.hidden];
        widths.extend(std::iter::repeat_n(cfg.hidden, cfg.depth));
        let mlp = Mlp::new(store, &format!("{prefix}.mlp"), &widths, cfg.dropout, rng);
        let head = Linear::new(store, &format!("{prefix}.head"), cfg.hidden, f, true, rng);
        Dfen { attention, mlp, head, f, d }
    }
}

impl FrModule for Dfen {
    fn kind(&self) -> FrKind {
        FrKind::Dfen
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let b = e.shape()[0];
        let residual = e.add(self.attention.forward(ctx, e));
        let flat = residual.reshape(&[b, self.f * self.d]);
        let hidden = self.mlp.forward(ctx, flat);
        let w = self.head.forward(ctx, hidden).relu().reshape(&[b, self.f, 1]);
        let refined = e.mul(w.broadcast_to(&[b, self.f, self.d]));
        Ok(FrOutput { refined, weights: Some(w) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.attention.param_ids();
        ids.extend(self.mlp.param_ids());
        ids.extend(self.head.param_ids());
        ids
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
    fn zeroed_head_kills_the_output() {
        // ReLU(0) = 0 weights -> E_fr is the zero matrix.
        let (f, d) = (4, 3);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(1);
        let cfg = FrConfig::default_for(FrKind::Dfen);
        let m = Dfen::new(&mut store, "t", f, d, &cfg, &mut rng);
        store.value_mut(m.head.w).fill(0.0);
        store.value_mut(m.head.b.unwrap()).fill(0.0);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(2);
        let e = tape.leaf(ArrayD::from_shape_fn(IxDyn(&[2, f, d]), |_| crate::rng::normal(&mut rr)));
        let out = m.forward(&ctx, e).unwrap();
        assert!(out.refined.value().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn weights_are_nonnegative_vector_level() {
        let (f, d) = (5, 4);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(3);
        let cfg = FrConfig::default_for(FrKind::Dfen);
        let m = Dfen::new(&mut store, "t", f, d, &cfg, &mut rng);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(4);
        let e = tape.leaf(ArrayD::from_shape_fn(IxDyn(&[8, f, d]), |_| crate::rng::normal(&mut rr)));
        let out = m.forward(&ctx, e).unwrap();
        let w = out.weights.unwrap();
        assert_eq!(w.shape(), vec![8, f, 1]);
        assert!(w.value().iter().all(|x| *x >= 0.0));
    }
}
