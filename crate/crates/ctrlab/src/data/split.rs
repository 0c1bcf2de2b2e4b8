//! Seeded train/validation/test splitting.

use crate::data::encode::EncodedInstance;
use crate::data::schema::FieldSchema;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, shuffle};

/// The three encoded splits plus the schema they were encoded against.
pub struct DatasetBundle {
    pub schema: FieldSchema,
    pub train: Vec<EncodedInstance>,
    pub validation: Vec<EncodedInstance>,
    pub test: Vec<EncodedInstance>,
    pub seed: u64,
}

impl DatasetBundle {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffled index partition: validation and test take the floor of their
/// ratios, the remainder goes to train. Deterministic in `seed`.
pub fn split_indices(n: usize, ratios: (f64, f64, f64), seed: u64) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let (rt, rv, rs) = ratios;
    if (rt + rv + rs - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must sum to 1, got {}", rt + rv + rs)));
    }
    if rt < 0.0 || rv < 0.0 || rs < 0.0 {
        return Err(Error::Config("split ratios must be non-negative".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut rng_from_seed(seed), &mut idx);
    let n_val = (n as f64 * rv).floor() as usize;
    let n_test = (n as f64 * rs).floor() as usize;
    let n_train = n - n_val - n_test;
    let test_block = idx.split_off(n_train + n_val);
    let (train, valid) = idx.split_at(n_train);
    Ok((train.to_vec(), valid.to_vec(), test_block))
}

/// Split encoded instances 8:1:1 (or any configured ratios) with a seeded
/// shuffle; identical `(instances, ratios, seed)` produce identical bundles.
pub fn split(
    schema: FieldSchema,
    instances: Vec<EncodedInstance>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetBundle> {
    let (train_idx, val_idx, test_idx) = split_indices(instances.len(), ratios, seed)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| instances[i].clone()).collect::<Vec<_>>();
    Ok(DatasetBundle {
        train: pick(&train_idx),
        validation: pick(&val_idx),
        test: pick(&test_idx),
        schema,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::FieldSchema;

    fn toy_instances(n: usize) -> Vec<EncodedInstance> {
        (0..n).map(|i| EncodedInstance { ids: vec![i as u32 % 3, 3 + i as u32 % 3], label: (i % 2) as u8 }).collect()
    }

    #[test]
    fn ten_records_split_8_1_1() {
        let s = FieldSchema::from_sizes(&[3, 3]);
        let b = split(s, toy_instances(10), (0.8, 0.1, 0.1), 2022).unwrap();
        assert_eq!(b.train.len(), 8);
        assert_eq!(b.validation.len(), 1);
        assert_eq!(b.test.len(), 1);
    }

    #[test]
    fn frappe_sized_split_matches_published_counts() {
        // 288,609 rows at 8:1:1 -> 230,889 / 28,860 / 28,860 (floor for val/test).
        let (tr, va, te) = split_indices(288_609, (0.8, 0.1, 0.1), 2022).unwrap();
        assert!((tr.len() as i64 - 230_889).abs() <= 1);
        assert!((va.len() as i64 - 28_860).abs() <= 1);
        assert!((te.len() as i64 - 28_860).abs() <= 1);
        assert_eq!(tr.len() + va.len() + te.len(), 288_609);
    }

    #[test]
    fn same_seed_same_split_twice() {
        let a = split_indices(1000, (0.8, 0.1, 0.1), 2022).unwrap();
        let b = split_indices(1000, (0.8, 0.1, 0.1), 2022).unwrap();
        assert_eq!(a, b);
        let c = split_indices(1000, (0.8, 0.1, 0.1), 2023).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn splits_are_disjoint_and_cover() {
        let (tr, va, te) = split_indices(501, (0.8, 0.1, 0.1), 7).unwrap();
        let mut all: Vec<usize> = tr.iter().chain(&va).chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..501).collect::<Vec<_>>());
    }

    #[test]
    fn bad_ratios_rejected() {
        assert!(split_indices(10, (0.8, 0.1, 0.2), 1).is_err());
        assert!(split_indices(10, (1.2, -0.1, -0.1), 1).is_err());
    }
}
