//! Multi-field categorical vocabulary.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved local index for the per-field unknown token.
pub const UNKNOWN_LOCAL: u32 = 0;

/// One field's kept vocabulary. Local id 0 is always the unknown token;
/// kept values occupy 1..=values.len() in first-seen order.
#[derive(Clone, Debug)]
pub struct FieldVocab {
    pub name: String,
    values: Vec<String>,
    index: HashMap<String, u32>,
    size: u32,
}

impl FieldVocab {
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Self {
        let index = values.iter().enumerate().map(|(i, v)| (v.clone(), i as u32 + 1)).collect();
        let size = values.len() as u32 + 1;
        FieldVocab { name: name.into(), values, index, size }
    }

    /// A field with a declared size but no stored tokens. Used for
    /// parameter audits at a target shape (e.g. the Criteo-scale schema).
    pub fn placeholder(name: impl Into<String>, size: u32) -> Self {
        assert!(size >= 1, "field size includes the unknown token");
        FieldVocab { name: name.into(), values: Vec::new(), index: HashMap::new(), size }
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn local_id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNKNOWN_LOCAL)
    }

    pub fn value(&self, local: u32) -> Option<&str> {
        if local == UNKNOWN_LOCAL {
            None
        } else {
            self.values.get(local as usize - 1).map(String::as_str)
        }
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }
}

/// The full multi-field vocabulary: `F` fields, `M` features, offsets.
#[derive(Clone, Debug)]
pub struct FieldSchema {
    fields: Vec<FieldVocab>,
    offsets: Vec<u32>,
    total: u32,
}

impl FieldSchema {
    pub fn new(fields: Vec<FieldVocab>) -> Self {
        assert!(!fields.is_empty(), "schema needs at least one field");
        let mut offsets = Vec::with_capacity(fields.len());
        let mut acc = 0u32;
        for f in &fields {
            offsets.push(acc);
            acc = acc.checked_add(f.size()).expect("feature space overflows u32");
        }
        FieldSchema { fields, offsets, total: acc }
    }

    /// Placeholder schema from per-field sizes (each including its unknown slot).
    pub fn from_sizes(sizes: &[u32]) -> Self {
        Self::new(
            sizes
                .iter()
                .enumerate()
                .map(|(i, &s)| FieldVocab::placeholder(format!("f{i}"), s))
                .collect(),
        )
    }

    /// Shape of the Criteo schema used by the parameter audits:
    /// 39 fields, 1,086,784 features.
    pub fn criteo_audit() -> Self {
        let mut sizes = vec![50u32; 13];
        // Split the remaining mass over the 26 categorical fields.
        let remaining = 1_086_784 - 13 * 50;
        let per = remaining / 26;
        let mut cat = vec![per; 26];
        cat[25] += remaining - per * 26;
        sizes.extend(cat);
        let s = Self::from_sizes(&sizes);
        debug_assert_eq!(s.total_features(), 1_086_784);
        debug_assert_eq!(s.field_count(), 39);
        s
    }

    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn total_features(&self) -> u32 {
        self.total
    }

    pub fn fields(&self) -> &[FieldVocab] {
        &self.fields
    }

    pub fn field(&self, f: usize) -> &FieldVocab {
        &self.fields[f]
    }

    pub fn vocab_sizes(&self) -> Vec<u32> {
        self.fields.iter().map(|f| f.size()).collect()
    }

    pub fn offset(&self, f: usize) -> u32 {
        self.offsets[f]
    }

    pub fn unknown_id(&self, f: usize) -> u32 {
        self.offsets[f] + UNKNOWN_LOCAL
    }

    /// Global feature id for a token, falling back to the field's unknown.
    pub fn feature_id(&self, f: usize, token: &str) -> u32 {
        self.offsets[f] + self.fields[f].local_id(token)
    }

    /// Map a global feature id back to `(field, Some(token))`, or
    /// `(field, None)` for the unknown token. Total over ids `< M`.
    pub fn decode(&self, id: u32) -> Result<(usize, Option<&str>)> {
        if id >= self.total {
            return Err(Error::Lookup { id, m: self.total });
        }
        let f = match self.offsets.binary_search(&id) {
            Ok(exact) => exact,
            Err(ins) => ins - 1,
        };
        Ok((f, self.fields[f].value(id - self.offsets[f])))
    }

    pub fn to_manifest(&self) -> SchemaManifest {
        SchemaManifest {
            fields: self
                .fields
                .iter()
                .map(|f| FieldManifest { name: f.name.clone(), values: f.values.clone(), size: f.size() })
                .collect(),
        }
    }

    pub fn from_manifest(manifest: &SchemaManifest) -> Result<Self> {
        if manifest.fields.is_empty() {
            return Err(Error::Cache("schema manifest has no fields".into()));
        }
        let mut total = 0u64;
        let mut fields = Vec::with_capacity(manifest.fields.len());
        for fm in &manifest.fields {
            if fm.size == 0 {
                return Err(Error::Cache(format!("field {} declares size 0", fm.name)));
            }
            if !fm.values.is_empty() && fm.size as usize != fm.values.len() + 1 {
                return Err(Error::Cache(format!(
                    "field {} declares size {} but stores {} values",
                    fm.name,
                    fm.size,
                    fm.values.len()
                )));
            }
            total += fm.size as u64;
            if total > u32::MAX as u64 {
                return Err(Error::Cache("feature space exceeds u32 range".into()));
            }
            if fm.values.is_empty() {
                fields.push(FieldVocab::placeholder(&fm.name, fm.size));
            } else {
                fields.push(FieldVocab::new(&fm.name, fm.values.clone()));
            }
        }
        Ok(Self::new(fields))
    }
}

/// Serializable form embedded in cache and checkpoint headers.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct SchemaManifest {
    pub fields: Vec<FieldManifest>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct FieldManifest {
    pub name: String,
    pub values: Vec<String>,
    pub size: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> FieldSchema {
        FieldSchema::new(vec![
            FieldVocab::new("A", vec!["a1".into(), "a2".into()]),
            FieldVocab::new("B", vec!["b1".into(), "b2".into()]),
        ])
    }

    #[test]
    fn offsets_and_total() {
        let s = toy();
        assert_eq!(s.field_count(), 2);
        assert_eq!(s.vocab_sizes(), vec![3, 3]);
        assert_eq!(s.total_features(), 6);
        assert_eq!(s.offset(0), 0);
        assert_eq!(s.offset(1), 3);
        // offsets strictly increasing with offset[i+1] - offset[i] = size[i]
        assert_eq!(s.offset(1) - s.offset(0), s.field(0).size());
    }

    #[test]
    fn feature_ids_and_unknown_fallback() {
        let s = toy();
        assert_eq!(s.feature_id(0, "a1"), 1);
        assert_eq!(s.feature_id(0, "a2"), 2);
        assert_eq!(s.feature_id(1, "b2"), 5);
        assert_eq!(s.feature_id(1, "never-seen"), s.unknown_id(1));
        assert_eq!(s.unknown_id(1), 3);
    }

    #[test]
    fn decode_is_total_over_valid_ids() {
        let s = toy();
        for id in 0..s.total_features() {
            let (f, tok) = s.decode(id).unwrap();
            assert!(f < 2);
            if id == s.unknown_id(f) {
                assert!(tok.is_none());
            }
        }
        assert!(s.decode(6).is_err());
    }

    #[test]
    fn decode_inverts_feature_id() {
        let s = toy();
        for (f, tok) in [(0usize, "a1"), (0, "a2"), (1, "b1"), (1, "b2")] {
            let id = s.feature_id(f, tok);
            let (df, dtok) = s.decode(id).unwrap();
            assert_eq!(df, f);
            assert_eq!(dtok, Some(tok));
        }
    }

    #[test]
    fn criteo_audit_shape() {
        let s = FieldSchema::criteo_audit();
        assert_eq!(s.field_count(), 39);
        assert_eq!(s.total_features(), 1_086_784);
    }

    #[test]
    fn manifest_roundtrip() {
        let s = toy();
        let json = serde_json::to_string(&s.to_manifest()).unwrap();
        let m: SchemaManifest = serde_json::from_str(&json).unwrap();
        let s2 = FieldSchema::from_manifest(&m).unwrap();
        assert_eq!(s2.total_features(), s.total_features());
        assert_eq!(s2.feature_id(1, "b2"), s.feature_id(1, "b2"));
    }
}
