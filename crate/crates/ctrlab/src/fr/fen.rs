//! Factor estimating net: a DNN over the flattened instance learns one
//! softmax weight per field, rescaled so the mean weight is 1.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

use super::common::{check_input, Linear, Mlp};
use super::descriptor::{FrKind, WeightActivation};
use super::{FrConfig, FrModule, FrOutput};

pub struct Fen {
    mlp: Mlp,
    head: Linear,
    f: usize,
    d: usize,
}

impl Fen {
    pub fn new(store: &mut ParamStore, prefix: &str, f: usize, d: usize, cfg: &FrConfig, rng: &mut ChaCha20Rng) -> Self {
        let mut widths = vec![f * d, cfg.hidden];
        widths.extend(std::iter::repeat_n(cfg.hidden, cfg.depth));
        let mlp = Mlp::new(store, &format!("{prefix}.mlp"), &widths, cfg.dropout, rng);
        let head = Linear::new(store, &format!("{prefix}.head"), cfg.hidden, f, true, rng);
        Fen { mlp, head, f, d }
    }
}

impl FrModule for Fen {
    fn kind(&self) -> FrKind {
        FrKind::Fen
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.f, self.d)
    }

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>> {
        check_input(&e, self.f, self.d)?;
        let b = e.shape()[0];
        let flat = e.reshape(&[b, self.f * self.d]);
        let hidden = self.mlp.forward(ctx, flat);
        let logits = self.head.forward(ctx, hidden);
        // Softmax weights over fields; these are the probe-visible weights.
        let w = logits.softmax_last().reshape(&[b, self.f, 1]);
        // Rescale by F so the mean weight is 1 and activation scale matches SKIP.
        let refined = e.mul(w.scale(self.f as f64).broadcast_to(&[b, self.f, self.d]));
        Ok(FrOutput { refined, weights: Some(w) })
    }

    fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.mlp.param_ids();
        ids.extend(self.head.param_ids());
        ids
    }

    fn weight_activation(&self) -> Option<WeightActivation> {
        Some(WeightActivation::Softmax)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::tensor::Tape;
    use ndarray::{ArrayD, IxDyn};

    #[test]
    fn zero_head_yields_identity_refinement() {
        // Zero final layer -> uniform softmax 1/F -> x F rescale -> E_fr = E.
        let (f, d) = (4, 3);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(1);
        let cfg = FrConfig::default_for(FrKind::Fen);
        let fen = Fen::new(&mut store, "t", f, d, &cfg, &mut rng);
        store.value_mut(fen.head.w).fill(0.0);
        store.value_mut(fen.head.b.unwrap()).fill(0.0);

        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(2);
        let ev = ArrayD::from_shape_fn(IxDyn(&[2, f, d]), |_| crate::rng::normal(&mut rr));
        let e = tape.leaf(ev.clone());
        let out = fen.forward(&ctx, e).unwrap();
        for (a, b) in out.refined.value().iter().zip(ev.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_are_a_field_distribution() {
        let (f, d) = (5, 2);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(3);
        let cfg = FrConfig::default_for(FrKind::Fen);
        let fen = Fen::new(&mut store, "t", f, d, &cfg, &mut rng);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let mut rr = rng_from_seed(4);
        let e = tape.leaf(ArrayD::from_shape_fn(IxDyn(&[3, f, d]), |_| crate::rng::normal(&mut rr)));
        let out = fen.forward(&ctx, e).unwrap();
        let w = out.weights.unwrap().value();
        for b in 0..3 {
            let sum: f64 = (0..f).map(|i| w[[b, i, 0]]).sum();
            assert!((sum - 1.0).abs() < 1e-9, "softmax weights sum to {sum}");
            for i in 0..f {
                assert!((0.0..=1.0).contains(&w[[b, i, 0]]));
            }
        }
    }

    #[test]
    fn param_count_formula() {
        let (f, d) = (39, 16);
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(5);
        let cfg = FrConfig { hidden: 64, depth: 1, heads: 2, head_dim: 16, dropout: 0.5 };
        let fen = Fen::new(&mut store, "t", f, d, &cfg, &mut rng);
        let m = 64u64;
        let fd = (f * d) as u64;
        let expect = (fd * m + m) + (m * m + m) + (m * f as u64 + f as u64);
        assert_eq!(fen.added_param_count(&store), expect);
    }
}
