//! On-disk encoded dataset cache.
//!
//! Layout: a human-readable header (magic line + one JSON manifest line +
//! a `BINARY` sentinel), then fixed-width records for the train, validation
//! and test splits in order. Each record is `1` label byte followed by `F`
//! little-endian `u32` feature ids. The decoder validates magic, manifest,
//! id ranges and exact length; it is fuzzed on arbitrary bytes.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::encode::EncodedInstance;
use crate::data::schema::{FieldSchema, SchemaManifest};
use crate::data::split::DatasetBundle;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &str = "CTRLAB-CACHE v1";
const BINARY_SENTINEL: &str = "BINARY";

#[derive(Serialize, Deserialize, Debug)]
pub struct CacheManifest {
    pub seed: u64,
    pub min_count: u64,
    pub ratios: (f64, f64, f64),
    pub counts: SplitCounts,
    pub schema: SchemaManifest,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct SplitCounts {
    pub train: u64,
    pub validation: u64,
    pub test: u64,
}

pub fn write_cache(path: &Path, bundle: &DatasetBundle, min_count: u64, ratios: (f64, f64, f64)) -> Result<()> {
    let manifest = CacheManifest {
        seed: bundle.seed,
        min_count,
        ratios,
        counts: SplitCounts {
            train: bundle.train.len() as u64,
            validation: bundle.validation.len() as u64,
            test: bundle.test.len() as u64,
        },
        schema: bundle.schema.to_manifest(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{CACHE_MAGIC}")?;
    serde_json::to_writer(&mut w, &manifest)?;
    writeln!(w)?;
    writeln!(w, "{BINARY_SENTINEL}")?;
    for split in [&bundle.train, &bundle.validation, &bundle.test] {
        for inst in split {
            w.write_all(&[inst.label])?;
            for id in &inst.ids {
                w.write_all(&id.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<(DatasetBundle, CacheManifest)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_cache(&bytes)
}

fn take_line<'a>(bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a [u8]> {
    let rest = &bytes[*pos..];
    let nl = rest
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Cache(format!("missing newline after {what}")))?;
    *pos += nl + 1;
    Ok(&rest[..nl])
}

/// Decode a cache blob from raw bytes.
pub fn decode_cache(bytes: &[u8]) -> Result<(DatasetBundle, CacheManifest)> {
    let mut pos = 0usize;
    let magic = take_line(bytes, &mut pos, "magic")?;
    if magic != CACHE_MAGIC.as_bytes() {
        return Err(Error::Cache("bad magic line".into()));
    }
    let manifest_line = take_line(bytes, &mut pos, "manifest")?;
    let manifest: CacheManifest =
        serde_json::from_slice(manifest_line).map_err(|e| Error::Cache(format!("manifest: {e}")))?;
    let sentinel = take_line(bytes, &mut pos, "sentinel")?;
    if sentinel != BINARY_SENTINEL.as_bytes() {
        return Err(Error::Cache("missing BINARY sentinel".into()));
    }

    let schema = FieldSchema::from_manifest(&manifest.schema)?;
    let f = schema.field_count();
    let m = schema.total_features();
    let rec_len = 1 + 4 * f;
    let total = manifest
        .counts
        .train
        .checked_add(manifest.counts.validation)
        .and_then(|t| t.checked_add(manifest.counts.test))
        .ok_or_else(|| Error::Cache("record counts overflow".into()))?;
    let body = &bytes[pos..];
    let expected = (total as usize).checked_mul(rec_len).ok_or_else(|| Error::Cache("body size overflows".into()))?;
    if body.len() != expected {
        return Err(Error::Cache(format!("body holds {} bytes, manifest implies {}", body.len(), expected)));
    }

    let read_split = |count: u64, offset: &mut usize| -> Result<Vec<EncodedInstance>> {
        let mut out = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let rec = &body[*offset..*offset + rec_len];
            *offset += rec_len;
            let label = rec[0];
            if label > 1 {
                return Err(Error::Cache(format!("label byte {label} is not 0/1")));
            }
            let mut ids = Vec::with_capacity(f);
            for k in 0..f {
                let id = u32::from_le_bytes(rec[1 + 4 * k..5 + 4 * k].try_into().unwrap());
                if id >= m {
                    return Err(Error::Cache(format!("feature id {id} out of range (M = {m})")));
                }
                ids.push(id);
            }
            out.push(EncodedInstance { ids, label });
        }
        Ok(out)
    };

    let mut offset = 0usize;
    let train = read_split(manifest.counts.train, &mut offset)?;
    let validation = read_split(manifest.counts.validation, &mut offset)?;
    let test = read_split(manifest.counts.test, &mut offset)?;
    let bundle = DatasetBundle { schema, train, validation, test, seed: manifest.seed };
    Ok((bundle, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::FieldVocab;

    fn toy_bundle() -> DatasetBundle {
        let schema = FieldSchema::new(vec![
            FieldVocab::new("A", vec!["a1".into(), "a2".into()]),
            FieldVocab::new("B", vec!["b1".into()]),
        ]);
        let inst = |a: u32, b: u32, y: u8| EncodedInstance { ids: vec![a, 3 + b], label: y };
        DatasetBundle {
            schema,
            train: vec![inst(1, 1, 1), inst(2, 0, 0), inst(0, 1, 1)],
            validation: vec![inst(1, 0, 0)],
            test: vec![inst(2, 1, 1)],
            seed: 2022,
        }
    }

    #[test]
    fn roundtrip_preserves_everything() {
        let dir = std::env::temp_dir().join(format!("ctrlab-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("toy.cache");
        let bundle = toy_bundle();
        write_cache(&path, &bundle, 10, (0.8, 0.1, 0.1)).unwrap();
        let (back, manifest) = read_cache(&path).unwrap();
        assert_eq!(back.train, bundle.train);
        assert_eq!(back.validation, bundle.validation);
        assert_eq!(back.test, bundle.test);
        assert_eq!(back.seed, 2022);
        assert_eq!(manifest.min_count, 10);
        assert_eq!(back.schema.total_features(), bundle.schema.total_features());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncated_and_corrupt_blobs_are_rejected() {
        let dir = std::env::temp_dir().join(format!("ctrlab-cache2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("toy.cache");
        write_cache(&path, &toy_bundle(), 10, (0.8, 0.1, 0.1)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::remove_dir_all(&dir).ok();

        assert!(decode_cache(&bytes[..bytes.len() - 1]).is_err(), "truncated body");
        assert!(decode_cache(&bytes[1..]).is_err(), "bad magic");
        assert!(decode_cache(b"CTRLAB-CACHE v1\n{}\nBINARY\n").is_err(), "empty manifest");

        // out-of-range feature id in the last record
        let mut corrupt = bytes.clone();
        let n = corrupt.len();
        corrupt[n - 4..].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_cache(&corrupt).is_err());
    }

    #[test]
    fn decoder_never_panics_on_junk() {
        for seed in 0..50u8 {
            let junk: Vec<u8> = (0..200).map(|i| seed.wrapping_mul(31).wrapping_add(i as u8)).collect();
            let _ = decode_cache(&junk);
        }
        let _ = decode_cache(b"");
        let _ = decode_cache(CACHE_MAGIC.as_bytes());
    }
}
