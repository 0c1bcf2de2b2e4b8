//! Feature embedding layer: sparse ids to the dense `F x D` matrix `E`,
//! plus first-order weights and a global bias for FM-style backbones.

use std::sync::Arc;

use ndarray::Array2;

use crate::data::encode::EncodedInstance;
use crate::error::{Error, Result};
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

/// Embedding initialization: zero-mean normal, std 0.01. First-order
/// weights and the global bias start at zero so initial logits sit near 0.
pub const EMBED_INIT_STD: f64 = 0.01;

pub struct EmbeddingTable {
    pub table: ParamId,
    pub first_order: Option<ParamId>,
    pub bias: Option<ParamId>,
    m: u32,
    d: usize,
}

impl EmbeddingTable {
    pub fn new(
        store: &mut ParamStore,
        total_features: u32,
        d: usize,
        include_first_order: bool,
        rng: &mut ChaCha20Rng,
    ) -> Self {
        let table = store.normal("embedding.table", &[total_features as usize, d], EMBED_INIT_STD, rng);
        let (first_order, bias) = if include_first_order {
            (
                Some(store.zeros("embedding.first_order", &[total_features as usize])),
                Some(store.zeros("embedding.bias", &[])),
            )
        } else {
            (None, None)
        };
        EmbeddingTable { table, first_order, bias, m: total_features, d }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn total_features(&self) -> u32 {
        self.m
    }

    /// `E` for a batch: ids `[B,F]` -> `[B,F,D]`. Gradients flow to exactly
    /// the looked-up rows.
    pub fn embed<'t>(&self, ctx: &FwdCtx<'t, '_>, ids: &Arc<Array2<usize>>) -> Result<Var<'t>> {
        self.validate(ids)?;
        Ok(ctx.param(self.table).gather(ids.clone()))
    }

    /// Sum of first-order weights per instance: `[B]`.
    pub fn first_order_sum<'t>(&self, ctx: &FwdCtx<'t, '_>, ids: &Arc<Array2<usize>>) -> Result<Var<'t>> {
        let fo = self.first_order.ok_or_else(|| Error::Contract("table built without first-order weights".into()))?;
        self.validate(ids)?;
        Ok(ctx.param(fo).gather_vec(ids.clone()).sum_axis(1))
    }

    pub fn bias_var<'t>(&self, ctx: &FwdCtx<'t, '_>) -> Result<Var<'t>> {
        let b = self.bias.ok_or_else(|| Error::Contract("table built without a bias".into()))?;
        Ok(ctx.param(b))
    }

    fn validate(&self, ids: &Array2<usize>) -> Result<()> {
        for &id in ids.iter() {
            if id >= self.m as usize {
                return Err(Error::Lookup { id: id as u32, m: self.m });
            }
        }
        Ok(())
    }

    pub fn param_count(&self, store: &ParamStore) -> u64 {
        let mut n = store.numel(self.table) as u64;
        if let Some(fo) = self.first_order {
            n += store.numel(fo) as u64;
        }
        if let Some(b) = self.bias {
            n += store.numel(b) as u64;
        }
        n
    }
}

/// Parameter count for a table of `M` features at dimension `d`:
/// `M*d`, plus `M + 1` when first-order weights and bias are enabled.
pub fn count_embedding_params(total_features: u64, d: u64, include_first_order: bool) -> u64 {
    total_features * d + if include_first_order { total_features + 1 } else { 0 }
}

/// Pack encoded instances into the id matrix and label vector a batch needs.
pub fn batch_ids(instances: &[EncodedInstance]) -> (Arc<Array2<usize>>, Vec<u8>) {
    let b = instances.len();
    let f = if b == 0 { 0 } else { instances[0].ids.len() };
    let mut ids = Array2::<usize>::zeros((b, f));
    let mut labels = Vec::with_capacity(b);
    for (i, inst) in instances.iter().enumerate() {
        for (j, &id) in inst.ids.iter().enumerate() {
            ids[[i, j]] = id as usize;
        }
        labels.push(inst.label);
    }
    (Arc::new(ids), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{FwdCtx, ParamStore};
    use crate::rng::rng_from_seed;
    use crate::tensor::Tape;
    use ndarray::array;

    fn setup(m: u32, d: usize, fo: bool) -> (ParamStore, EmbeddingTable) {
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(1);
        let table = EmbeddingTable::new(&mut store, m, d, fo, &mut rng);
        (store, table)
    }

    #[test]
    fn shapes_match_criteo_defaults() {
        let (store, table) = setup(100, 16, false);
        let ids = Arc::new(Array2::from_shape_fn((1, 39), |(_, f)| f));
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let e = table.embed(&ctx, &ids).unwrap();
        assert_eq!(e.shape(), vec![1, 39, 16]);
    }

    #[test]
    fn zero_table_embeds_to_zero() {
        let mut store = ParamStore::new();
        let table_id = store.zeros("embedding.table", &[10, 4]);
        let table = EmbeddingTable { table: table_id, first_order: None, bias: None, m: 10, d: 4 };
        let ids = Arc::new(array![[0usize, 3, 9]]);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let e = table.embed(&ctx, &ids).unwrap();
        assert!(e.value().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn shared_feature_shares_rows() {
        let (store, table) = setup(20, 3, false);
        let ids = Arc::new(array![[5usize, 7], [5, 9]]);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let e = table.embed(&ctx, &ids).unwrap();
        let v = e.value();
        for d in 0..3 {
            assert_eq!(v[[0, 0, d]], v[[1, 0, d]]);
        }
    }

    #[test]
    fn out_of_range_id_is_lookup_error() {
        let (store, table) = setup(10, 2, false);
        let ids = Arc::new(array![[10usize, 0]]);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        assert!(matches!(table.embed(&ctx, &ids), Err(Error::Lookup { id: 10, m: 10 })));
    }

    #[test]
    fn gradient_reaches_exactly_looked_up_rows() {
        let (store, table) = setup(10, 2, false);
        let ids = Arc::new(array![[2usize, 4]]);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let e = table.embed(&ctx, &ids).unwrap();
        let loss = e.sum_all();
        let mut grads = tape.backward(loss);
        let got = ctx.extract_grads(&mut grads);
        let g = got[table.table.0].as_ref().unwrap();
        for r in 0..10 {
            let touched = r == 2 || r == 4;
            for c in 0..2 {
                assert_eq!(g[[r, c]] != 0.0, touched, "row {r}");
            }
        }
    }

    #[test]
    fn param_count_matches_table_3_baseline() {
        // Criteo: M = 1,086,784, D = 16, with first order -> 18,475,329
        assert_eq!(count_embedding_params(1_086_784, 16, true), 18_475_329);
        assert_eq!(count_embedding_params(0, 16, false), 0);
        assert_eq!(count_embedding_params(0, 16, true), 1);
        assert_eq!(count_embedding_params(6, 2, false), 12);

        let (store, table) = setup(6, 2, false);
        assert_eq!(table.param_count(&store), 12);
        let (store2, table2) = setup(6, 2, true);
        assert_eq!(table2.param_count(&store2), 12 + 6 + 1);
    }

    #[test]
    fn first_order_sum_and_bias() {
        let mut store = ParamStore::new();
        let mut rng = rng_from_seed(2);
        let table = EmbeddingTable::new(&mut store, 5, 2, true, &mut rng);
        store.value_mut(table.first_order.unwrap()).assign(&array![1.0, 2.0, 3.0, 4.0, 5.0].into_dyn());
        let ids = Arc::new(array![[0usize, 2], [1, 4]]);
        let tape = Tape::new();
        let ctx = FwdCtx::eval(&tape, &store);
        let s = table.first_order_sum(&ctx, &ids).unwrap();
        let v = s.value();
        assert_eq!(v[[0]], 1.0 + 3.0);
        assert_eq!(v[[1]], 2.0 + 5.0);
        assert_eq!(table.bias_var(&ctx).unwrap().value().len(), 1);
    }
}
