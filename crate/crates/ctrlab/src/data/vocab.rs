//! Frequency-thresholded vocabulary construction.

use std::collections::HashMap;

use crate::data::raw::RawRecord;
use crate::data::schema::{FieldSchema, FieldVocab};
use crate::error::{Error, Result};

/// Streaming token counter; feed every record, then [`VocabBuilder::build`].
pub struct VocabBuilder {
    names: Vec<String>,
    counts: Vec<HashMap<String, u64>>,
    order: Vec<Vec<String>>,
}

impl VocabBuilder {
    pub fn new(field_names: &[String]) -> Self {
        VocabBuilder {
            names: field_names.to_vec(),
            counts: field_names.iter().map(|_| HashMap::new()).collect(),
            order: field_names.iter().map(|_| Vec::new()).collect(),
        }
    }

    pub fn observe(&mut self, record: &RawRecord) -> Result<()> {
        if record.tokens.len() != self.names.len() {
            return Err(Error::Contract(format!(
                "record has {} tokens, schema expects {}",
                record.tokens.len(),
                self.names.len()
            )));
        }
        for (f, tok) in record.tokens.iter().enumerate() {
            let entry = self.counts[f].entry(tok.clone()).or_insert(0);
            if *entry == 0 {
                self.order[f].push(tok.clone());
            }
            *entry += 1;
        }
        Ok(())
    }

    /// Keep tokens seen at least `min_count` times, in first-seen order;
    /// everything else folds into the per-field unknown token.
    pub fn build(self, min_count: u64) -> Result<FieldSchema> {
        if min_count < 1 {
            return Err(Error::Config("data.min_count must be >= 1".into()));
        }
        let fields = self
            .names
            .into_iter()
            .zip(self.order)
            .zip(self.counts)
            .map(|((name, order), counts)| {
                let kept: Vec<String> = order.into_iter().filter(|t| counts[t] >= min_count).collect();
                FieldVocab::new(name, kept)
            })
            .collect();
        Ok(FieldSchema::new(fields))
    }
}

/// Convenience: schema from an in-memory record slice.
pub fn build_vocabulary(field_names: &[String], records: &[RawRecord], min_count: u64) -> Result<FieldSchema> {
    let mut b = VocabBuilder::new(field_names);
    for r in records {
        b.observe(r)?;
    }
    b.build(min_count)
}
