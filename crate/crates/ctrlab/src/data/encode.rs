//! Instance encoding: raw tokens to per-field feature ids.

use crate::data::raw::RawRecord;
use crate::data::schema::FieldSchema;
use crate::error::{Error, Result};

/// One-hot-equivalent encoding: exactly one feature id per field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedInstance {
    pub ids: Vec<u32>,
    pub label: u8,
}

/// Encode a record against a schema; unseen tokens fall back to the
/// field's unknown id.
pub fn encode(record: &RawRecord, schema: &FieldSchema) -> Result<EncodedInstance> {
    if record.tokens.len() != schema.field_count() {
        return Err(Error::Contract(format!(
            "record has {} fields, schema has {}",
            record.tokens.len(),
            schema.field_count()
        )));
    }
    let ids = record
        .tokens
        .iter()
        .enumerate()
        .map(|(f, tok)| schema.feature_id(f, tok))
        .collect();
    Ok(EncodedInstance { ids, label: record.label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::vocab::build_vocabulary;

    fn rec(label: u8, toks: &[&str]) -> RawRecord {
        RawRecord { label, tokens: toks.iter().map(|t| t.to_string()).collect() }
    }

    fn toy_schema() -> FieldSchema {
        let names = vec!["A".to_string(), "B".to_string()];
        let records = vec![rec(1, &["a1", "b1"]), rec(0, &["a1", "b2"]), rec(1, &["a2", "b2"])];
        build_vocabulary(&names, &records, 1).unwrap()
    }

    #[test]
    fn known_values_map_in_range() {
        let s = toy_schema();
        let e = encode(&rec(1, &["a1", "b1"]), &s).unwrap();
        assert_eq!(e.ids.len(), 2);
        for (f, id) in e.ids.iter().enumerate() {
            assert!(*id >= s.offset(f));
            assert!(*id < s.offset(f) + s.field(f).size());
        }
        assert!(e.ids.iter().all(|id| *id < s.total_features()));
    }

    #[test]
    fn toy_row_matches_hand_enumeration() {
        // vocab: A = [<unk>, a1, a2] at offset 0; B = [<unk>, b1, b2] at offset 3.
        // (a1, b2) -> (offset_A + 1, offset_B + 2) = (1, 5)
        let s = toy_schema();
        let e = encode(&rec(0, &["a1", "b2"]), &s).unwrap();
        assert_eq!(e.ids, vec![1, 5]);
    }

    #[test]
    fn unseen_value_hits_unknown() {
        let s = toy_schema();
        let e = encode(&rec(1, &["a1", "mystery"]), &s).unwrap();
        assert_eq!(e.ids[1], s.unknown_id(1));
    }

    #[test]
    fn wrong_arity_is_contract_error() {
        let s = toy_schema();
        assert!(encode(&rec(1, &["a1"]), &s).is_err());
    }
}
