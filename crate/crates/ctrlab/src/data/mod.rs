//! Dataset pipeline: raw delimited files in, seeded encoded splits out.
//!
//! Flow: [`raw`] parses rows, [`vocab`] builds the frequency-thresholded
//! [`schema::FieldSchema`] (numeric Criteo columns are bucketed by
//! [`discretize`]), [`encode`] maps rows to feature ids, [`split`] produces
//! the seeded 8:1:1 bundle, and [`cache`] persists it with an embedded
//! schema manifest. [`synth`] generates seeded datasets with a known
//! ground truth for tests and benchmarks.

pub mod cache;
pub mod discretize;
pub mod encode;
pub mod raw;
pub mod schema;
pub mod split;
pub mod synth;
pub mod vocab;

use std::path::Path;

use crate::error::Result;

/// Two-pass ingestion: build the vocabulary, then encode every record.
/// Streaming, so the file is read twice and never held in memory.
pub fn ingest(
    path: &Path,
    format: &raw::RawFormat,
    min_count: u64,
) -> Result<(schema::FieldSchema, Vec<encode::EncodedInstance>)> {
    let mut reader = raw::open_records(path, format)?;
    let names = reader.field_names().to_vec();
    let mut builder = vocab::VocabBuilder::new(&names);
    for rec in &mut reader {
        builder.observe(&rec?)?;
    }
    let schema = builder.build(min_count)?;

    let mut instances = Vec::new();
    for rec in raw::open_records(path, format)? {
        instances.push(encode::encode(&rec?, &schema)?);
    }
    Ok((schema, instances))
}

/// Full pipeline: ingest, split, return the bundle.
pub fn prepare(
    path: &Path,
    format: &raw::RawFormat,
    min_count: u64,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<split::DatasetBundle> {
    let (schema, instances) = ingest(path, format, min_count)?;
    split::split(schema, instances, ratios, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_end_to_end_on_synthetic_text() {
        let cfg = synth::SynthConfig { rows: 400, ..Default::default() };
        let d = synth::generate(&cfg);
        let dir = std::env::temp_dir().join(format!("ctrlab-pipe-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("synth.csv");
        std::fs::write(&path, d.to_delimited()).unwrap();

        let bundle = prepare(&path, &raw::RawFormat::frappe(), 1, (0.8, 0.1, 0.1), 2022).unwrap();
        assert_eq!(bundle.len(), 400);
        assert_eq!(bundle.train.len(), 320);
        assert_eq!(bundle.validation.len(), 40);
        assert_eq!(bundle.test.len(), 40);
        let m = bundle.schema.total_features();
        for inst in bundle.train.iter().chain(&bundle.validation).chain(&bundle.test) {
            assert!(inst.ids.iter().all(|id| *id < m));
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
