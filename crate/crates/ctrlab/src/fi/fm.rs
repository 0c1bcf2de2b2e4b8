//! Factorization machine: bias + first-order sum + pairwise inner
//! products, computed with the square-of-sum identity.

use crate::error::Result;
use crate::params::{FwdCtx, ParamId};
use crate::tensor::Var;

use super::{Backbone, BackboneKind, FmExtras};

pub struct Fm {
    f: usize,
    d: usize,
}

impl Fm {
    pub fn new(f: usize, d: usize) -> Self {
        Fm { f, d }
    }

    /// `sum_{i<j} <e_i, e_j>` per instance: `0.5 * ((sum_i e_i)^2 - sum_i e_i^2)`.
    pub fn pairwise<'t>(e: Var<'t>) -> Var<'t> {
        let sum = e.sum_axis(1); // [B, D]
        let sum_sq = e.mul(e).sum_axis(1); // [B, D]
        sum.mul(sum).sub(sum_sq).sum_axis(1).scale(0.5) // [B]
    }
}

impl Backbone for Fm {
    fn kind(&self) -> BackboneKind {
        BackboneKind::Fm
    }

    fn logit<'t>(&self, _ctx: &FwdCtx<'t, '_>, e: Var<'t>, extras: &FmExtras<'t>) -> Result<Var<'t>> {
        debug_assert_eq!(e.shape()[1..], [self.f, self.d]);
        let b = e.shape()[0];
        let mut logit = Self::pairwise(e);
        if let Some(fo) = extras.first_order_sum {
            logit = logit.add(fo);
        }
        if let Some(bias) = extras.bias {
            logit = logit.add(bias.broadcast_to(&[b]));
        }
        Ok(logit)
    }

    fn param_ids(&self) -> Vec<ParamId> {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamStore;
    use crate::rng::rng_from_seed;
    use crate::tensor::Tape;
    use ndarray::{ArrayD, IxDyn};

    /// Brute-force pairwise enumeration; the independent oracle for the
    /// square-of-sum identity.
    fn brute_force_pairwise(e: &ArrayD<f64>) -> Vec<f64> {
        let (b, f, d) = (e.shape()[0], e.shape()[1], e.shape()[2]);
        (0..b)
            .map(|bi| {
                let mut acc = 0.0;
                for i in 0..f {
                    for j in i + 1..f {
                        for k in 0..d {
                            acc += e[[bi, i, k]] * e[[bi, j, k]];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn hand_computed_single_pair() {
        // rows (1,2) and (3,4): 1*3 + 2*4 = 11
        let tape = Tape::new();
        let e = tape.leaf(ndarray::array![[[1.0, 2.0], [3.0, 4.0]]].into_dyn());
        let p = Fm::pairwise(e);
        assert!((p.value()[[0]] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn identical_rows_count_all_pairs() {
        // F = 3 identical rows r: pairwise sum = C(3,2) * <r,r> = 3s
        let r = [0.5, -1.5, 2.0];
        let s: f64 = r.iter().map(|x| x * x).sum();
        let tape = Tape::new();
        let e = tape.leaf(ndarray::ArrayD::from_shape_fn(IxDyn(&[1, 3, 3]), |ix| r[ix[2]]));
        let p = Fm::pairwise(e);
        assert!((p.value()[[0]] - 3.0 * s).abs() < 1e-12);
    }

    #[test]
    fn square_of_sum_matches_brute_force_on_random_instances() {
        let mut rng = rng_from_seed(77);
        for case in 0..100 {
            let f = 2 + (case % 5); // F <= 6
            let d = 1 + (case % 4);
            let ev = ArrayD::from_shape_fn(IxDyn(&[2, f, d]), |_| crate::rng::normal(&mut rng));
            let expect = brute_force_pairwise(&ev);
            let tape = Tape::new();
            let p = Fm::pairwise(tape.leaf(ev));
            for (bi, want) in expect.iter().enumerate() {
                let got = p.value()[[bi]];
                let rel = (got - want).abs() / want.abs().max(1.0);
                assert!(rel < 1e-10, "case {case}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn zero_everything_gives_logit_zero() {
        let store = ParamStore::new();
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let fm = Fm::new(3, 2);
        let e = tape.leaf(ArrayD::zeros(IxDyn(&[2, 3, 2])));
        let extras = FmExtras {
            first_order_sum: Some(tape.constant(ArrayD::zeros(IxDyn(&[2])))),
            bias: Some(tape.constant(ArrayD::zeros(IxDyn(&[])))),
        };
        let logit = fm.logit(&ctx, e, &extras).unwrap();
        assert!(logit.value().iter().all(|x| *x == 0.0));
        // sigma(0) = 0.5
        assert_eq!(crate::metrics::predict(logit.value()[[0]]), 0.5);
    }
}
